import pytest

from mctrack.costs import fit_pair_model, harvest_pairs
from mctrack.pipeline import SynthConfig, synth_sequence


@pytest.fixture(scope="session")
def train_bundle():
    """A noisy 5-person training sequence shared across tests."""
    return synth_sequence(SynthConfig(persons=5, frames=120), seed=7)


@pytest.fixture(scope="session")
def train_pairs(train_bundle):
    return harvest_pairs(
        train_bundle.detections,
        train_bundle.gt_tracks,
        10,
        scheme="dm",
        corr=train_bundle.matches,
    )


@pytest.fixture(scope="session")
def dm_model(train_pairs):
    return fit_pair_model(train_pairs, "dm", 10)
