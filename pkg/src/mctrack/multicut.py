"""Minimum-cost multicut: instance representation and solvers.

The problem: given a graph with signed edge costs, find the node partition
minimizing the total cost of edges whose endpoints end up in different
clusters. Cluster count is free; it falls out of the solution. Three
solvers live here: exact enumeration for tiny instances (the oracle),
greedy additive edge contraction (the initializer), and Kernighan-Lin
local search with joins (the workhorse).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Gains below this threshold are treated as zero; keeps float drift from
# committing no-op moves or spinning extra passes.
GAIN_EPS = 1e-10

BRUTE_FORCE_MAX_NODES = 12
DISCARDED = -1


@dataclass(frozen=True)
class MulticutInstance:
    """A signed-cost edge list over nodes ``0..num_nodes-1``.

    Edges are normalized to ``(u, v, cost)`` with ``u < v``, deduplicated
    and sorted. Instances are immutable and safe to share between solves.
    """

    num_nodes: int
    edges: tuple[tuple[int, int, float], ...]

    @classmethod
    def build(cls, num_nodes: int, edges: Iterable[tuple[int, int, float]]) -> "MulticutInstance":
        normalized: list[tuple[int, int, float]] = []
        seen: set[tuple[int, int]] = set()
        for u, v, c in edges:
            if u == v:
                raise ValueError(f"self-edge at node {u}")
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise ValueError(f"edge ({u}, {v}) outside node range")
            if not np.isfinite(c):
                raise ValueError(f"non-finite cost on edge ({u}, {v})")
            a, b = (u, v) if u < v else (v, u)
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))
            normalized.append((a, b, float(c)))
        normalized.sort(key=lambda e: (e[0], e[1]))
        return cls(num_nodes=num_nodes, edges=tuple(normalized))

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.edges:
            return (np.zeros(0, dtype=np.int64),) * 2 + (np.zeros(0),)
        eu = np.array([e[0] for e in self.edges], dtype=np.int64)
        ev = np.array([e[1] for e in self.edges], dtype=np.int64)
        ec = np.array([e[2] for e in self.edges], dtype=np.float64)
        return eu, ev, ec


@dataclass(frozen=True)
class Partition:
    """Node -> cluster labeling, canonicalized by first appearance.

    Labels run ``0..k-1`` in order of first occurrence; ``DISCARDED`` (-1)
    marks nodes dropped by post-processing and survives canonicalization.
    """

    labels: tuple[int, ...]

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        remap: dict[int, int] = {}
        out: list[int] = []
        for lab in labels:
            if lab == DISCARDED:
                out.append(DISCARDED)
                continue
            if lab not in remap:
                remap[lab] = len(remap)
            out.append(remap[lab])
        return cls(labels=tuple(out))

    @classmethod
    def singletons(cls, num_nodes: int) -> "Partition":
        return cls(labels=tuple(range(num_nodes)))

    @property
    def num_nodes(self) -> int:
        return len(self.labels)

    @property
    def num_clusters(self) -> int:
        return len({lab for lab in self.labels if lab != DISCARDED})

    def clusters(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for node, lab in enumerate(self.labels):
            if lab != DISCARDED:
                groups.setdefault(lab, []).append(node)
        return [groups[lab] for lab in sorted(groups)]


@dataclass(frozen=True)
class EdgeLabeling:
    """Per-edge cut bits aligned with an instance's edge list (1 = cut)."""

    bits: tuple[int, ...]


def induced_labeling(instance: MulticutInstance, partition: Partition) -> EdgeLabeling:
    """Edge bits induced by a partition: 0 iff the endpoints share a cluster."""
    _check_cover(instance, partition)
    labs = partition.labels
    return EdgeLabeling(bits=tuple(0 if labs[u] == labs[v] else 1 for u, v, _ in instance.edges))


def is_feasible(instance: MulticutInstance, labeling: EdgeLabeling) -> bool:
    """True iff the edge bits describe a valid decomposition.

    Equivalent to the cycle condition that no cycle contains exactly one
    cut edge: compute connected components over the joined (bit 0) edges,
    then reject any cut edge living inside a single component.
    """
    if len(labeling.bits) != len(instance.edges):
        raise ValueError("labeling does not cover all edges")
    parent = list(range(instance.num_nodes))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for (u, v, _), bit in zip(instance.edges, labeling.bits):
        if bit == 0:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
    return all(
        find(u) != find(v)
        for (u, v, _), bit in zip(instance.edges, labeling.bits)
        if bit == 1
    )


def objective(instance: MulticutInstance, partition: Partition) -> float:
    """Total cost of the edges cut by a partition."""
    _check_cover(instance, partition)
    labs = partition.labels
    return float(sum(c for u, v, c in instance.edges if labs[u] != labs[v]))


def _check_cover(instance: MulticutInstance, partition: Partition) -> None:
    if len(partition.labels) != instance.num_nodes:
        raise ValueError("partition does not cover all nodes")
    if any(lab == DISCARDED for lab in partition.labels):
        raise ValueError("partition has unlabeled (discarded) nodes")


def _restricted_growth_chunks(n: int, chunk: int = 200_000):
    """All canonical labelings of n nodes, lexicographically, in chunks."""
    labels = np.zeros(n, dtype=np.int8)
    prefix_max = np.zeros(n + 1, dtype=np.int8)
    prefix_max[0] = -1
    buf = np.empty((chunk, n), dtype=np.int8)
    fill = 0
    while True:
        buf[fill] = labels
        fill += 1
        if fill == chunk:
            yield buf[:fill]
            fill = 0
        # next labeling in lexicographic order
        i = n - 1
        while i > 0 and labels[i] > prefix_max[i]:
            i -= 1
        if i == 0:
            break
        labels[i] += 1
        labels[i + 1:] = 0
        for j in range(i, n):
            prefix_max[j + 1] = max(prefix_max[j], labels[j])
    if fill:
        yield buf[:fill]


def brute_force(instance: MulticutInstance) -> Partition:
    """Exact minimum by enumerating every set partition.

    Only for small instances; ties break to the lexicographically smallest
    canonical labeling, which is simply the first optimum in enumeration
    order.
    """
    n = instance.num_nodes
    if n > BRUTE_FORCE_MAX_NODES:
        raise ValueError(f"brute force refuses instances with more than {BRUTE_FORCE_MAX_NODES} nodes")
    if n == 0:
        return Partition(labels=())
    eu, ev, ec = instance.edge_arrays()
    best_value = np.inf
    best_labels: np.ndarray | None = None
    for block in _restricted_growth_chunks(n):
        if len(ec):
            cut = block[:, eu] != block[:, ev]
            values = cut @ ec
        else:
            values = np.zeros(len(block))
        k = int(np.argmin(values))
        if values[k] < best_value:
            best_value = float(values[k])
            best_labels = block[k].copy()
    assert best_labels is not None
    return Partition.from_labels(best_labels.tolist())


def greedy_contract(instance: MulticutInstance) -> Partition:
    """Greedy additive edge contraction.

    Repeatedly merges the cluster pair with the largest positive connecting
    cost until none remains; ties break to the smallest label pair. Serves
    as the Kernighan-Lin initializer.
    """
    n = instance.num_nodes
    weight: dict[tuple[int, int], float] = {}
    nbrs: dict[int, set[int]] = {i: set() for i in range(n)}
    for u, v, c in instance.edges:
        weight[(u, v)] = c
        nbrs[u].add(v)
        nbrs[v].add(u)
    heap = [(-c, u, v) for (u, v), c in weight.items() if c > 0]
    heapq.heapify(heap)
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    alive = [True] * n
    while heap:
        negw, a, b = heapq.heappop(heap)
        w = -negw
        if w <= 0:
            break
        if not (alive[a] and alive[b]) or weight.get((a, b)) != w:
            continue  # stale entry
        # merge b into a (a < b keeps the smaller label)
        parent[b] = a
        alive[b] = False
        nbrs[a].discard(b)
        nbrs[b].discard(a)
        del weight[(a, b)]
        for c_ in nbrs[b]:
            key_bc = (b, c_) if b < c_ else (c_, b)
            key_ac = (a, c_) if a < c_ else (c_, a)
            wbc = weight.pop(key_bc)
            nbrs[c_].discard(b)
            new = weight.get(key_ac, 0.0) + wbc
            weight[key_ac] = new
            nbrs[a].add(c_)
            nbrs[c_].add(a)
            if new > 0:
                heapq.heappush(heap, (-new, key_ac[0], key_ac[1]))
        nbrs[b] = set()
    return Partition.from_labels([find(i) for i in range(n)])


class _Adjacency:
    """CSR-style neighbor/cost arrays for fast subgraph extraction."""

    def __init__(self, num_nodes: int, eu: np.ndarray, ev: np.ndarray, ec: np.ndarray):
        src = np.concatenate([eu, ev])
        dst = np.concatenate([ev, eu])
        cst = np.concatenate([ec, ec])
        order = np.argsort(src, kind="stable")
        self.nbr = dst[order]
        self.cost = cst[order]
        counts = np.bincount(src, minlength=num_nodes)
        self.offset = np.concatenate([[0], np.cumsum(counts)])

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.offset[u], self.offset[u + 1]
        return self.nbr[lo:hi], self.cost[lo:hi]


def _kl_exchange(
    local_nbrs: list[np.ndarray],
    local_costs: list[np.ndarray],
    side: np.ndarray,
    all_eligible: bool,
) -> tuple[float, list[int]]:
    """One Kernighan-Lin bipartition update on a local subgraph.

    Greedily moves the best-gain boundary node across the bipartition,
    allowing negative interim gains, each node at most once, and returns
    the best positive-prefix move sequence (empty if none is positive).
    ``side`` is modified in place during simulation; callers must treat it
    as scratch.
    """
    m = len(side)
    gain = np.zeros(m)
    boundary = np.zeros(m, dtype=bool)
    for i in range(m):
        if len(local_nbrs[i]) == 0:
            continue
        other = side[local_nbrs[i]] != side[i]
        gain[i] = local_costs[i][other].sum() - local_costs[i][~other].sum()
        boundary[i] = bool(other.any())
    if all_eligible:
        boundary[:] = True
    moved = np.zeros(m, dtype=bool)
    neg_inf = -np.inf
    moves: list[int] = []
    cum = 0.0
    best = 0.0
    best_len = 0
    for _ in range(m):
        masked = np.where(~moved & boundary, gain, neg_inf)
        i = int(np.argmax(masked))
        if masked[i] == neg_inf:
            break
        cum += float(gain[i])
        moves.append(i)
        if cum > best:
            best = cum
            best_len = len(moves)
        new_side = not side[i]
        side[i] = new_side
        moved[i] = True
        nb, cs = local_nbrs[i], local_costs[i]
        if len(nb):
            delta = np.where(side[nb] == new_side, -2.0, 2.0) * cs
            gain[nb] += delta
            boundary[nb] = True
    if best > GAIN_EPS:
        return best, moves[:best_len]
    return 0.0, []


def klj_solve(
    instance: MulticutInstance,
    init: Partition,
    max_passes: int = 100,
    stats: dict | None = None,
) -> Partition:
    """Kernighan-Lin local search with joins.

    Each pass visits every adjacent cluster pair and (a) merges it outright
    when the connecting cost is positive, or (b) runs a KL bipartition
    update on it; afterwards every cluster gets a bipartition update
    against an empty cluster, which lets the search split clusters. Passes
    repeat until one completes without improvement. The result never has a
    worse objective than the initial partition.
    """
    if max_passes < 1:
        raise ValueError("max_passes must be >= 1")
    _check_cover(instance, init)
    n = instance.num_nodes
    if n == 0:
        if stats is not None:
            stats["passes"] = 0
            stats["objective"] = 0.0
        return Partition(labels=())
    eu, ev, ec = instance.edge_arrays()
    adj = _Adjacency(n, eu, ev, ec)
    cid = np.array(Partition.from_labels(init.labels).labels, dtype=np.int64)
    members: dict[int, list[int]] = {}
    for node, c in enumerate(cid.tolist()):
        members.setdefault(c, []).append(node)
    next_id = max(members) + 1
    local_index = np.zeros(n, dtype=np.int64)

    def extract(nodes_loc: list[int], a: int, b: int):
        """Local adjacency restricted to clusters a and b."""
        local_index[nodes_loc] = np.arange(len(nodes_loc))
        lns: list[np.ndarray] = []
        lcs: list[np.ndarray] = []
        cross = 0.0
        n_a = len(members[a])
        for k, u in enumerate(nodes_loc):
            nb, cs = adj.neighbors(u)
            keep = (cid[nb] == a) if b is None else (cid[nb] == a) | (cid[nb] == b)
            nb, cs = nb[keep], cs[keep]
            loc = local_index[nb]
            lns.append(loc)
            lcs.append(cs)
            if b is not None and k < n_a:
                cross += cs[loc >= n_a].sum()
        return lns, lcs, cross

    passes = 0
    improved = True
    while improved and passes < max_passes:
        improved = False
        passes += 1
        # schedule: adjacent cluster pairs at the start of the pass
        cu, cv = cid[eu], cid[ev]
        crossing = cu != cv
        if crossing.any():
            a_arr = np.minimum(cu[crossing], cv[crossing])
            b_arr = np.maximum(cu[crossing], cv[crossing])
            base = int(cid.max()) + 1
            keys = np.unique(a_arr * base + b_arr)
            schedule = [(int(k // base), int(k % base)) for k in keys]
        else:
            schedule = []
        for a, b in schedule:
            if a not in members or b not in members:
                continue
            nodes_loc = members[a] + members[b]
            lns, lcs, w_ab = extract(nodes_loc, a, b)
            if w_ab > GAIN_EPS:
                # join: un-cutting the connecting edges pays their cost
                cid[members[b]] = a
                members[a] = sorted(nodes_loc)
                del members[b]
                improved = True
                continue
            n_a = len(members[a])
            side = np.zeros(len(nodes_loc), dtype=bool)
            side[n_a:] = True
            orig = side.copy()
            gain, moves = _kl_exchange(lns, lcs, side, all_eligible=False)
            if moves:
                for i in moves:
                    cid[nodes_loc[i]] = b if not orig[i] else a
                members[a] = sorted(u for u in nodes_loc if cid[u] == a)
                members[b] = sorted(u for u in nodes_loc if cid[u] == b)
                if not members[b]:
                    del members[b]
                if not members[a]:
                    del members[a]
                improved = True
        # split proposals: each cluster against an empty one
        for a in sorted(members):
            nodes_loc = members[a]
            if len(nodes_loc) < 2:
                continue
            lns, lcs, _ = extract(nodes_loc, a, None)
            side = np.zeros(len(nodes_loc), dtype=bool)
            gain, moves = _kl_exchange(lns, lcs, side, all_eligible=True)
            if moves:
                fresh = next_id
                next_id += 1
                for i in moves:
                    cid[nodes_loc[i]] = fresh
                members[fresh] = sorted(u for u in nodes_loc if cid[u] == fresh)
                members[a] = sorted(u for u in nodes_loc if cid[u] == a)
                if not members[a]:
                    del members[a]
                improved = True
    result = Partition.from_labels(cid.tolist())
    if stats is not None:
        stats["passes"] = passes
        stats["objective"] = objective(instance, result)
    return result


def solve(
    instance: MulticutInstance,
    init_mode: str = "gaec",
    max_passes: int = 100,
    stats: dict | None = None,
) -> Partition:
    """Convenience wrapper: initialize, then run the local search."""
    if init_mode == "gaec":
        init = greedy_contract(instance)
    elif init_mode == "singleton":
        init = Partition.singletons(instance.num_nodes)
    else:
        raise ValueError(f"unknown init mode {init_mode!r}")
    return klj_solve(instance, init, max_passes=max_passes, stats=stats)


def dump_instance(instance: MulticutInstance, path: str) -> None:
    """Debug dump: node count, then one `u v cost` line per edge."""
    with open(path, "w") as fh:
        fh.write(f"{instance.num_nodes}\n")
        for u, v, c in instance.edges:
            fh.write(f"{u} {v} {repr(c)}\n")


def load_instance(path: str) -> MulticutInstance:
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    num_nodes = int(lines[0])
    edges = []
    for line in lines[1:]:
        u, v, c = line.split()
        edges.append((int(u), int(v), float(c)))
    return MulticutInstance.build(num_nodes, edges)
