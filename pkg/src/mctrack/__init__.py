"""Multi-person tracking by minimum-cost multicut.

Detections become nodes of a spatio-temporal graph, learned logistic
models turn pairwise features into signed edge costs, a Kernighan-Lin
multicut solver decomposes the graph, and surviving clusters become
evaluated tracks.
"""

from .graph import BoundingBox, Detection, TrackingGraph, build_graph, iou
from .features import (
    SCHEME_DM,
    SCHEME_ST,
    CorrespondenceSet,
    FeatureVector,
    PointMatch,
    dm_features,
    edge_features,
    match_sets,
    st_features,
    synth_matches,
)
from .costs import (
    BinModel,
    LabeledPair,
    PairModel,
    TrainConfig,
    edge_cost,
    fit_pair_model,
    harvest_pairs,
    join_probability,
    load_model,
    loss_and_gradient,
    save_model,
    train,
)
from .multicut import (
    EdgeLabeling,
    MulticutInstance,
    Partition,
    brute_force,
    greedy_contract,
    induced_labeling,
    is_feasible,
    klj_solve,
    objective,
)
from .tracks import Track, clusters_to_tracks, filter_clusters
from .evaluation import AccuracyTable, EvalReport, clear_mot, pair_accuracy
from .pipeline import (
    Diagnostics,
    PipelineConfig,
    SequenceBundle,
    SynthConfig,
    run_tracking,
    synth_sequence,
)

__version__ = "0.1.0"
