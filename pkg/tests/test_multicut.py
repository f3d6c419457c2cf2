import itertools

import numpy as np
import pytest

from mctrack.multicut import (
    EdgeLabeling,
    MulticutInstance,
    Partition,
    brute_force,
    dump_instance,
    greedy_contract,
    induced_labeling,
    is_feasible,
    klj_solve,
    load_instance,
    objective,
    solve,
)


def enumerate_cycles(num_nodes, edge_set):
    """Oracle: all simple cycles as edge sets (every cycle length >= 3)."""
    cycles = []
    for size in range(3, num_nodes + 1):
        for subset in itertools.combinations(range(num_nodes), size):
            first = subset[0]
            for perm in itertools.permutations(subset[1:]):
                order = (first,) + perm
                if size > 2 and order[1] > order[-1]:
                    continue  # each cycle once, up to direction
                ring = list(zip(order, order[1:] + (first,)))
                if all((min(u, v), max(u, v)) in edge_set for u, v in ring):
                    cycles.append(tuple(sorted((min(u, v), max(u, v)) for u, v in ring)))
    return set(cycles)


def cycle_oracle_feasible(instance, labeling):
    """Oracle: no cycle may contain exactly one cut edge."""
    edge_set = {(u, v) for u, v, _ in instance.edges}
    bits = {(u, v): b for (u, v, _), b in zip(instance.edges, labeling.bits)}
    for cycle in enumerate_cycles(instance.num_nodes, edge_set):
        if sum(bits[e] for e in cycle) == 1:
            return False
    return True


def enumerate_partitions(n):
    """Oracle: all canonical labelings of n nodes, lexicographically."""
    def rec(prefix, mx):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(mx + 2):
            yield from rec(prefix + [v], max(mx, v))
    yield from rec([0], 0)


def exhaustive_optimum(instance):
    best_value, best_labels = None, None
    for labels in enumerate_partitions(instance.num_nodes):
        value = objective(instance, Partition(labels=labels))
        if best_value is None or value < best_value:
            best_value, best_labels = value, labels
    return best_value, best_labels


def triangle():
    return MulticutInstance.build(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, -3.0)])


def random_instance(rng, n_max=8, edge_prob=0.9):
    n = int(rng.integers(2, n_max + 1))
    edges = [
        (i, j, float(rng.uniform(-1, 1)))
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < edge_prob
    ]
    return MulticutInstance.build(n, edges)


def test_instance_validation():
    with pytest.raises(ValueError):
        MulticutInstance.build(3, [(0, 0, 1.0)])
    with pytest.raises(ValueError):
        MulticutInstance.build(3, [(0, 1, 1.0), (1, 0, 2.0)])
    with pytest.raises(ValueError):
        MulticutInstance.build(2, [(0, 5, 1.0)])
    with pytest.raises(ValueError):
        MulticutInstance.build(2, [(0, 1, float("inf"))])


def test_partition_canonicalization():
    p = Partition.from_labels([7, 7, 3, 7, 3, 9])
    assert p.labels == (0, 0, 1, 0, 1, 2)
    assert p.num_clusters == 3
    assert p.clusters() == [[0, 1, 3], [2, 4], [5]]


def test_induced_labeling_single_cluster():
    inst = triangle()
    lab = induced_labeling(inst, Partition(labels=(0, 0, 0)))
    assert lab.bits == (0, 0, 0)


def test_induced_labeling_singletons():
    inst = triangle()
    lab = induced_labeling(inst, Partition(labels=(0, 1, 2)))
    assert lab.bits == (1, 1, 1)


def test_induced_labeling_matches_per_edge_recomputation():
    rng = np.random.default_rng(21)
    for _ in range(50):
        inst = random_instance(rng)
        labels = tuple(int(rng.integers(0, inst.num_nodes)) for _ in range(inst.num_nodes))
        part = Partition.from_labels(labels)
        lab = induced_labeling(inst, part)
        for (u, v, _), bit in zip(inst.edges, lab.bits):
            assert bit == (0 if part.labels[u] == part.labels[v] else 1)


def test_induced_labeling_requires_cover():
    inst = triangle()
    with pytest.raises(ValueError):
        induced_labeling(inst, Partition(labels=(0, 0)))


def test_partition_labelings_always_feasible():
    rng = np.random.default_rng(22)
    for _ in range(200):
        inst = random_instance(rng)
        labels = tuple(int(rng.integers(0, inst.num_nodes)) for _ in range(inst.num_nodes))
        part = Partition.from_labels(labels)
        assert is_feasible(inst, induced_labeling(inst, part))


def test_triangle_single_cut_infeasible():
    inst = triangle()
    assert not is_feasible(inst, EdgeLabeling(bits=(1, 0, 0)))
    assert not is_feasible(inst, EdgeLabeling(bits=(0, 1, 0)))
    assert not is_feasible(inst, EdgeLabeling(bits=(0, 0, 1)))
    assert is_feasible(inst, EdgeLabeling(bits=(1, 1, 0)))
    assert is_feasible(inst, EdgeLabeling(bits=(1, 1, 1)))


def test_feasibility_matches_cycle_oracle_on_k4():
    inst = MulticutInstance.build(
        4, [(i, j, 1.0) for i in range(4) for j in range(i + 1, 4)]
    )
    rng = np.random.default_rng(23)
    for _ in range(200):
        bits = tuple(int(b) for b in rng.integers(0, 2, len(inst.edges)))
        labeling = EdgeLabeling(bits=bits)
        assert is_feasible(inst, labeling) == cycle_oracle_feasible(inst, labeling)


def test_objective_examples():
    inst = triangle()
    assert objective(inst, Partition(labels=(0, 0, 0))) == 0.0
    assert objective(inst, Partition(labels=(0, 1, 2))) == pytest.approx(-1.0)
    # {a,b}{c} cuts bc and ac
    assert objective(inst, Partition(labels=(0, 0, 1))) == pytest.approx(-2.0)
    value, labels = exhaustive_optimum(inst)
    assert value == pytest.approx(-2.0)
    assert labels == (0, 0, 1)


def test_brute_force_all_positive_costs():
    inst = MulticutInstance.build(4, [(i, j, 0.5) for i in range(4) for j in range(i + 1, 4)])
    part = brute_force(inst)
    assert part.num_clusters == 1
    assert objective(inst, part) == 0.0


def test_brute_force_all_negative_costs():
    inst = MulticutInstance.build(4, [(i, j, -0.5) for i in range(4) for j in range(i + 1, 4)])
    part = brute_force(inst)
    assert part.num_clusters == 4


def test_brute_force_triangle_tie_break():
    # two optima at -2: {a,b}{c} and {b,c}{a}; lexicographically smaller
    # canonical labeling is (0,0,1)
    part = brute_force(triangle())
    assert part.labels == (0, 0, 1)


def test_brute_force_refuses_large_instances():
    inst = MulticutInstance.build(13, [(0, 1, 1.0)])
    with pytest.raises(ValueError):
        brute_force(inst)


def test_brute_force_matches_exhaustive_enumeration():
    rng = np.random.default_rng(24)
    for _ in range(20):
        inst = random_instance(rng, n_max=6)
        value, labels = exhaustive_optimum(inst)
        part = brute_force(inst)
        assert objective(inst, part) == pytest.approx(value)
        assert part.labels == labels  # identical tie-breaking


def test_brute_force_beats_random_partitions():
    rng = np.random.default_rng(25)
    inst = random_instance(rng, n_max=8)
    best = objective(inst, brute_force(inst))
    for _ in range(1000):
        labels = tuple(int(rng.integers(0, inst.num_nodes)) for _ in range(inst.num_nodes))
        assert best <= objective(inst, Partition.from_labels(labels)) + 1e-12


def test_greedy_contract_all_negative_keeps_singletons():
    inst = MulticutInstance.build(4, [(i, j, -0.5) for i in range(4) for j in range(i + 1, 4)])
    assert greedy_contract(inst).num_clusters == 4


def test_greedy_contract_single_positive_edge():
    inst = MulticutInstance.build(2, [(0, 1, 2.0)])
    part = greedy_contract(inst)
    assert part.num_clusters == 1


def test_greedy_contract_triangle_trace():
    # merges one +1 pair, then stops: the remaining merge would add 1-3 < 0
    part = greedy_contract(triangle())
    assert part.labels == (0, 0, 1)
    assert objective(triangle(), part) == pytest.approx(-2.0)


def test_greedy_contract_isolated_nodes():
    inst = MulticutInstance.build(5, [(0, 1, 1.0)])
    part = greedy_contract(inst)
    assert part.labels == (0, 0, 1, 2, 3)


def test_klj_preserves_optimum():
    rng = np.random.default_rng(26)
    for _ in range(30):
        inst = random_instance(rng, n_max=6)
        opt = brute_force(inst)
        result = klj_solve(inst, opt)
        assert result.labels == opt.labels


def test_klj_single_join():
    inst = MulticutInstance.build(2, [(0, 1, 2.0)])
    part = klj_solve(inst, Partition.singletons(2))
    assert part.num_clusters == 1
    assert objective(inst, part) == 0.0


def test_klj_never_worse_than_init():
    rng = np.random.default_rng(27)
    for _ in range(100):
        inst = random_instance(rng)
        labels = tuple(int(rng.integers(0, inst.num_nodes)) for _ in range(inst.num_nodes))
        init = Partition.from_labels(labels)
        result = klj_solve(inst, init)
        assert objective(inst, result) <= objective(inst, init) + 1e-9


def test_klj_matches_brute_force_mostly():
    rng = np.random.default_rng(28)
    hits = 0
    for _ in range(50):
        inst = random_instance(rng)
        best = objective(inst, brute_force(inst))
        got = objective(inst, klj_solve(inst, greedy_contract(inst)))
        assert got >= best - 1e-9
        if abs(got - best) <= 1e-9:
            hits += 1
    assert hits >= 45


def test_klj_rejects_bad_max_passes():
    with pytest.raises(ValueError):
        klj_solve(triangle(), Partition.singletons(3), max_passes=0)


def test_klj_deterministic():
    rng = np.random.default_rng(29)
    for _ in range(20):
        inst = random_instance(rng)
        init = greedy_contract(inst)
        a = klj_solve(inst, init)
        b = klj_solve(inst, init)
        assert a.labels == b.labels


def test_klj_split_recovers_bad_init():
    # two groups glued together by a strongly negative bridge: the split
    # proposal must separate them from a single-cluster init
    edges = [(0, 1, 2.0), (2, 3, 2.0), (1, 2, -5.0), (0, 3, -5.0)]
    inst = MulticutInstance.build(4, edges)
    init = Partition(labels=(0, 0, 0, 0))
    part = klj_solve(inst, init)
    assert objective(inst, part) == pytest.approx(objective(inst, brute_force(inst)))
    assert part.num_clusters == 2


def test_klj_empty_instance():
    inst = MulticutInstance.build(0, [])
    part = klj_solve(inst, Partition(labels=()))
    assert part.labels == ()


def test_solve_wrapper_modes():
    inst = triangle()
    assert solve(inst, "gaec").labels == (0, 0, 1)
    assert solve(inst, "singleton").labels == (0, 0, 1)
    with pytest.raises(ValueError):
        solve(inst, "bogus")


def test_pass_count_bounded_on_tracking_instance():
    # synthetic association-style instance: three identities over 60 frames
    rng = np.random.default_rng(30)
    persons, frames, tau = 3, 60, 8
    nodes = [(p, f) for f in range(frames) for p in range(persons)]
    idx = {pf: i for i, pf in enumerate(nodes)}
    edges = []
    for (p, f), u in idx.items():
        for (q, g), v in idx.items():
            if u < v and 0 <= g - f <= tau:
                base = 1.0 if p == q and g > f else -1.0
                edges.append((u, v, float(base + rng.normal(0, 0.3))))
    inst = MulticutInstance.build(len(nodes), edges)
    stats = {}
    part = klj_solve(inst, greedy_contract(inst), max_passes=100, stats=stats)
    assert stats["passes"] <= 100
    assert part.num_clusters >= persons


def test_instance_dump_round_trip(tmp_path):
    rng = np.random.default_rng(31)
    inst = random_instance(rng)
    path = tmp_path / "instance.txt"
    dump_instance(inst, str(path))
    loaded = load_instance(str(path))
    assert loaded.num_nodes == inst.num_nodes
    assert loaded.edges == inst.edges
