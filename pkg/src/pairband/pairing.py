"""Pairing: cost matrix, minimum-weight perfect matching, k-best lists.

Pairing all N users into N/2 disjoint pairs at minimum total distortion
is a minimum-weight perfect matching problem on the complete graph with
edge weights C_ij (infinite where either user would exceed the
distortion cap).  The kernel is an Edmonds blossom solver (networkx),
run on max-transformed weights so that a max-cardinality/max-weight
matching of the finite-edge subgraph is exactly the min-cost perfect
matching; a double-factorial brute-force enumerator serves as the
exactness oracle.

Candidate lists for the feasibility search are produced by Lawler-style
partitioning: pop the best matching, split its cell into subproblems
that each include a prefix of its edges and exclude the next one,
re-solve each subproblem, and keep a priority queue.  Cells partition
the matching space, so the enumeration is exact and duplicate-free.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

__all__ = [
    "INFEASIBLE",
    "PairCostMatrix",
    "Matching",
    "build_cost_matrix",
    "mwpm",
    "brute_force_mwpm",
    "k_best_matchings",
    "all_matchings",
]

# Sentinel for pairs that may never be matched.  +inf (not a big finite
# number) so "no finite perfect matching" is detected exactly.
INFEASIBLE = math.inf

Pair = tuple[int, int]


@dataclass(frozen=True)
class PairCostMatrix:
    """Symmetric pairwise cost matrix with INFEASIBLE markers.

    The diagonal is INFEASIBLE (a user cannot pair with itself); finite
    entries are non-negative distortions.
    """

    n: int
    costs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.costs, dtype=float)
        if c.shape != (self.n, self.n):
            raise ValueError(f"cost matrix must be {self.n}x{self.n}, got {c.shape}")
        if not np.array_equal(c, c.T):
            raise ValueError("cost matrix must be symmetric")
        if not np.all(np.isinf(np.diag(c))):
            raise ValueError("diagonal entries must be INFEASIBLE")
        finite = c[np.isfinite(c)]
        if finite.size and finite.min() < 0:
            raise ValueError("finite costs must be non-negative")
        object.__setattr__(self, "costs", c)

    def cost(self, i: int, j: int) -> float:
        return float(self.costs[i, j])


@dataclass(frozen=True)
class Matching:
    """A perfect matching: K unordered index pairs covering 0..N-1."""

    pairs: tuple[Pair, ...]
    total_cost: float

    def __post_init__(self) -> None:
        seen = [i for p in self.pairs for i in p]
        if len(set(seen)) != len(seen):
            raise ValueError("matching reuses an index")

    @property
    def n(self) -> int:
        return 2 * len(self.pairs)


def _canonical(pairs) -> tuple[Pair, ...]:
    return tuple(sorted((min(i, j), max(i, j)) for i, j in pairs))


def _total(costs: np.ndarray, pairs) -> float:
    return float(math.fsum(costs[i, j] for i, j in pairs))


def build_cost_matrix(pair_sums, per_user, d_max: float) -> PairCostMatrix:
    """Edge weights C_ij = d_ij where both users meet the quality cap.

    ``pair_sums[i][j]`` is the summed pair distortion d_ij and
    ``per_user[i][j]`` is user i's own distortion when paired with j;
    the entry is INFEASIBLE when either per-user distortion exceeds
    ``d_max``.  Missing (NaN) entries are reported by pair.
    """
    ps = np.asarray(pair_sums, dtype=float)
    pu = np.asarray(per_user, dtype=float)
    n = ps.shape[0]
    if ps.shape != (n, n) or pu.shape != (n, n):
        raise ValueError("distortion tables must be square and same-shaped")

    missing = [
        (i, j)
        for i in range(n)
        for j in range(n)
        if i != j and (math.isnan(ps[i, j]) or math.isnan(pu[i, j]))
    ]
    if missing:
        raise ValueError(f"missing distortion entries for pairs: {missing}")

    off = ~np.eye(n, dtype=bool)
    if np.any(ps[off] < 0) or np.any(pu[off] < 0):
        raise ValueError("distortion entries must be non-negative")
    if not np.allclose(ps[off], ps.T[off], rtol=1e-9, atol=0.0):
        raise ValueError("pair distortion table must be symmetric")

    costs = np.full((n, n), INFEASIBLE)
    for i in range(n):
        for j in range(i + 1, n):
            if pu[i, j] <= d_max and pu[j, i] <= d_max:
                costs[i, j] = costs[j, i] = ps[i, j]
    return PairCostMatrix(n=n, costs=costs)


def _solve_min_cost(costs: np.ndarray) -> tuple[Pair, ...] | None:
    """Min-cost perfect matching over finite edges, or None if none exists."""
    n = costs.shape[0]
    if n == 0:
        return ()
    edges = [
        (i, j, costs[i, j])
        for i in range(n)
        for j in range(i + 1, n)
        if math.isfinite(costs[i, j])
    ]
    if not edges:
        return None
    w_max = max(w for _, _, w in edges)
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for i, j, w in edges:
        graph.add_edge(i, j, weight=w_max - w)
    mate = nx.max_weight_matching(graph, maxcardinality=True)
    if 2 * len(mate) != n:
        return None
    return _canonical(mate)


def mwpm(costs: PairCostMatrix) -> Matching | None:
    """Minimum-weight perfect matching, or None when every perfect
    matching would use an INFEASIBLE edge."""
    if costs.n % 2 != 0:
        raise ValueError("perfect matching needs an even number of users")
    pairs = _solve_min_cost(costs.costs)
    if pairs is None:
        return None
    return Matching(pairs=pairs, total_cost=_total(costs.costs, pairs))


def all_matchings(n: int):
    """Yield every perfect matching of 0..n-1 as a canonical pair tuple.

    There are (n-1)!! of them; always pairs the lowest unmatched index
    first, so the order is deterministic.
    """
    if n % 2 != 0:
        raise ValueError("n must be even")

    def rec(rest: tuple[int, ...]):
        if not rest:
            yield ()
            return
        head, others = rest[0], rest[1:]
        for idx, partner in enumerate(others):
            for tail in rec(others[:idx] + others[idx + 1 :]):
                yield ((head, partner),) + tail

    yield from rec(tuple(range(n)))


def brute_force_mwpm(costs: PairCostMatrix, max_n: int = 12) -> Matching | None:
    """Exhaustive minimum over all (n-1)!! perfect matchings.

    Test oracle only — refuses n above ``max_n`` (10395 matchings at
    n = 12).  Ties resolve to the lexicographically smallest pair list.
    """
    if costs.n > max_n:
        raise ValueError(f"brute force limited to n <= {max_n}, got {costs.n}")
    best: tuple[float, tuple[Pair, ...]] | None = None
    for pairs in all_matchings(costs.n):
        total = _total(costs.costs, pairs)
        if math.isinf(total):
            continue
        key = (total, pairs)
        if best is None or key < best:
            best = key
    if best is None:
        return None
    return Matching(pairs=best[1], total_cost=best[0])


def _solve_cell(
    costs: np.ndarray,
    forced_in: frozenset[Pair],
    forced_out: frozenset[Pair],
) -> tuple[Pair, ...] | None:
    """Best matching containing all forced_in edges and no forced_out edge."""
    n = costs.shape[0]
    fixed = set(i for p in forced_in for i in p)
    free = sorted(set(range(n)) - fixed)
    sub = costs[np.ix_(free, free)].copy()
    back = {local: orig for local, orig in enumerate(free)}
    fwd = {orig: local for local, orig in enumerate(free)}
    for i, j in forced_out:
        if i in fwd and j in fwd:
            sub[fwd[i], fwd[j]] = INFEASIBLE
            sub[fwd[j], fwd[i]] = INFEASIBLE
    solved = _solve_min_cost(sub)
    if solved is None:
        return None
    pairs = list(forced_in) + [(back[i], back[j]) for i, j in solved]
    return _canonical(pairs)


def k_best_matchings(costs: PairCostMatrix, w_count: int) -> list[Matching]:
    """The ``w_count`` cheapest perfect matchings, ascending by cost.

    Ties break lexicographically on the sorted pair list.  Returns
    fewer when fewer finite matchings exist.  Lawler partitioning: each
    popped matching splits its cell by branching on its own free edges,
    and every cell is re-solved exactly, so candidates are distinct and
    each is optimal within its cell.
    """
    if w_count < 1:
        raise ValueError("w_count must be >= 1")
    first = mwpm(costs)
    if first is None:
        return []

    c = costs.costs
    heap: list[tuple[float, tuple[Pair, ...], frozenset, frozenset]] = []
    heapq.heappush(
        heap, (first.total_cost, first.pairs, frozenset(), frozenset())
    )
    emitted: list[tuple[float, tuple[Pair, ...]]] = []
    seen: set[tuple[Pair, ...]] = set()

    while heap:
        # Stop only when the heap cannot contain anything that belongs
        # ahead of what we already have (strictly larger cost).
        if len(emitted) >= w_count and heap[0][0] > emitted[-1][0]:
            break
        total, pairs, f_in, f_out = heapq.heappop(heap)
        if pairs in seen:
            continue
        seen.add(pairs)
        emitted.append((total, pairs))
        emitted.sort()

        free_edges = [p for p in pairs if p not in f_in]
        for t, edge in enumerate(free_edges):
            child_in = f_in | frozenset(free_edges[:t])
            child_out = f_out | frozenset({edge})
            solved = _solve_cell(c, child_in, child_out)
            if solved is not None:
                heapq.heappush(heap, (_total(c, solved), solved, child_in, child_out))

    emitted.sort()
    return [
        Matching(pairs=p, total_cost=t) for t, p in emitted[:w_count]
    ]
