"""End-to-end solving: candidate pairings, feasibility, baselines, sweeps.

The joint problem decomposes cleanly: pairing determines total
distortion (the objective) and bandwidth allocation only decides
whether a pairing can meet the budgets.  So the solver enumerates
perfect matchings in ascending distortion order and returns the first
one whose bandwidth subproblem is feasible — that matching is optimal,
because every cheaper pairing was already proven infeasible.

Candidate enumeration starts with the best ``w_count`` matchings and
doubles the window on exhaustion.  Before enumerating at all, a cheap
sound certificate rules out hopeless instances: the matching that
minimizes the summed per-pair minimum bandwidths is itself a
minimum-weight perfect matching (over b_min weights), so if even that
one overflows B_max — or no latency-and-quality-feasible perfect
matching exists — no pairing whatsoever is feasible and the search
stops immediately instead of enumerating all (N-1)!! matchings.

Four reference strategies mirror the evaluation baselines: random or
heuristic pairings with an equal bandwidth split, and random pairing
with the optimal (KKT) split.  They evaluate feasibility but do not
enforce it, so comparisons can include their infeasible draws.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bandwidth import (
    AllocationReport,
    PairBandwidthBound,
    b_min_pair,
    evaluate_fixed_allocation,
    kkt_allocate,
)
from .latency_energy import SystemConfig, UserProfile
from .pairing import (
    INFEASIBLE,
    Matching,
    PairCostMatrix,
    build_cost_matrix,
    k_best_matchings,
    mwpm,
)
from .scenario import Scenario, ScenarioTemplate, generate_scenario

__all__ = [
    "Scenario",
    "SolveResult",
    "STRATEGIES",
    "solve",
    "solve_proposed",
    "solve_random_equal",
    "solve_greedy_equal",
    "solve_channel_balanced_equal",
    "solve_random_kkt",
    "sweep_bandwidth",
    "random_matching",
]

STRATEGIES = (
    "proposed",
    "random_equal",
    "greedy_equal",
    "channel_balanced_equal",
    "random_kkt",
)


@dataclass(frozen=True)
class SolveResult:
    """Outcome of one strategy on one scenario.

    ``matching`` is None when the strategy could not produce a pairing
    at all (global infeasibility for the proposed strategy, dead-end
    for greedy).  ``total_distortion`` is the matching cost under the
    quality-capped edge weights, so it is +inf whenever the pairing
    violates the per-user distortion cap.
    """

    matching: Matching | None
    allocation: AllocationReport | None
    total_distortion: float
    candidates_tried: int
    strategy: str

    @property
    def feasible(self) -> bool:
        return (
            self.allocation is not None
            and self.allocation.feasible
            and math.isfinite(self.total_distortion)
        )


def _cost_matrix(scenario: Scenario) -> PairCostMatrix:
    return build_cost_matrix(
        scenario.distortions.pair_sum,
        scenario.distortions.per_user,
        scenario.cfg.d_max,
    )


class _BoundCache:
    """Per-pair minimum-bandwidth roots, computed once per (pair, power)."""

    def __init__(self, users: tuple[UserProfile, ...], cfg: SystemConfig):
        self._users = {u.id: u for u in users}
        self._cfg = cfg
        self._cache: dict[tuple[int, int, float], PairBandwidthBound] = {}

    def get(self, i: int, j: int, power: float) -> PairBandwidthBound:
        key = (min(i, j), max(i, j), power)
        if key not in self._cache:
            self._cache[key] = b_min_pair(
                self._users[key[0]], self._users[key[1]], self._cfg, power
            )
        return self._cache[key]

    def for_matching(self, matching: Matching) -> list[PairBandwidthBound]:
        return [
            self.get(i, j, self._cfg.group_powers[k])
            for k, (i, j) in enumerate(matching.pairs)
        ]


def _check_with_bounds(
    scenario: Scenario, matching: Matching, bounds: list[PairBandwidthBound]
) -> AllocationReport:
    if any(not bd.feasible for bd in bounds):
        lower = tuple(bd.b_min for bd in bounds)
        return AllocationReport(
            bandwidths=(),
            theta_star=math.nan,
            lower_bounds=lower,
            objective=math.inf,
            bandwidth_used=math.inf,
            energy_total=math.inf,
            feasible=False,
            infeasibility_reason="latency",
        )
    return kkt_allocate(list(scenario.users), matching, scenario.cfg, bounds)


def _globally_infeasible(scenario: Scenario, costs: PairCostMatrix, cache: _BoundCache) -> bool:
    """Sound certificate: can ANY quality-feasible matching meet latency
    and the bandwidth sum?

    Summed lower bounds are pair-additive, so their minimum over perfect
    matchings is itself a minimum-weight matching with b_min edge
    weights (edges violating quality or latency removed).  Energy is
    not covered here — it is checked per candidate.
    """
    n = costs.n
    uniform = len(set(scenario.cfg.group_powers)) == 1
    if not uniform:
        # With per-group powers the bound depends on slot assignment;
        # fall back to exhaustive candidate checking.
        return False
    power = scenario.cfg.group_powers[0]
    weights = np.full((n, n), INFEASIBLE)
    for i in range(n):
        for j in range(i + 1, n):
            if not math.isfinite(costs.costs[i, j]):
                continue
            bd = cache.get(i, j, power)
            if bd.feasible:
                weights[i, j] = weights[j, i] = bd.b_min
    best = mwpm(PairCostMatrix(n=n, costs=weights))
    if best is None:
        return True
    return best.total_cost > scenario.cfg.b_max * (1.0 + 1e-9)


def solve_proposed(scenario: Scenario, w_count: int = 16) -> SolveResult:
    """First feasible candidate in ascending-distortion order.

    Enumerates the ``w_count`` cheapest matchings, checks each for
    bandwidth/latency/energy feasibility, and doubles the window on
    exhaustion until every finite matching has been tried.
    """
    if w_count < 1:
        raise ValueError("w_count must be >= 1")
    costs = _cost_matrix(scenario)
    cache = _BoundCache(scenario.users, scenario.cfg)

    if _globally_infeasible(scenario, costs, cache):
        return SolveResult(
            matching=None,
            allocation=None,
            total_distortion=math.inf,
            candidates_tried=0,
            strategy="proposed",
        )

    tried = 0
    window = w_count
    while True:
        candidates = k_best_matchings(costs, window)
        for matching in candidates[tried:]:
            bounds = cache.for_matching(matching)
            report = _check_with_bounds(scenario, matching, bounds)
            tried += 1
            if report.feasible:
                return SolveResult(
                    matching=matching,
                    allocation=report,
                    total_distortion=matching.total_cost,
                    candidates_tried=tried,
                    strategy="proposed",
                )
        if len(candidates) < window:
            # Window exceeded the number of finite matchings: everything
            # has been tried.
            return SolveResult(
                matching=None,
                allocation=None,
                total_distortion=math.inf,
                candidates_tried=tried,
                strategy="proposed",
            )
        window *= 2


def random_matching(n: int, rng: np.random.Generator) -> tuple[tuple[int, int], ...]:
    """Uniform random perfect matching: shuffle, pair consecutively."""
    perm = [int(x) for x in rng.permutation(n)]
    return tuple(
        sorted((min(a, b), max(a, b)) for a, b in zip(perm[::2], perm[1::2]))
    )


def _matching_from_pairs(costs: PairCostMatrix, pairs) -> Matching:
    total = float(math.fsum(costs.costs[i, j] for i, j in pairs))
    return Matching(pairs=tuple(pairs), total_cost=total)


def _equal_split_result(scenario: Scenario, matching: Matching, strategy: str) -> SolveResult:
    k = len(matching.pairs)
    share = scenario.cfg.b_max / k
    report = evaluate_fixed_allocation(
        list(scenario.users), matching, scenario.cfg, [share] * k
    )
    return SolveResult(
        matching=matching,
        allocation=report,
        total_distortion=matching.total_cost,
        candidates_tried=1,
        strategy=strategy,
    )


def solve_random_equal(scenario: Scenario, rng: np.random.Generator) -> SolveResult:
    """Uniform random pairing, equal bandwidth split."""
    costs = _cost_matrix(scenario)
    pairs = random_matching(scenario.cfg.n_users, rng)
    return _equal_split_result(
        scenario, _matching_from_pairs(costs, pairs), "random_equal"
    )


def solve_greedy_equal(scenario: Scenario) -> SolveResult:
    """Repeatedly pair the globally cheapest remaining finite edge.

    Dead-ends (remaining users sharing only quality-violating edges)
    yield an infeasible result rather than an error.
    """
    costs = _cost_matrix(scenario)
    n = costs.n
    unmatched = set(range(n))
    pairs = []
    while unmatched:
        best = None
        for i in sorted(unmatched):
            for j in sorted(unmatched):
                if j <= i or not math.isfinite(costs.costs[i, j]):
                    continue
                key = (costs.costs[i, j], i, j)
                if best is None or key < best:
                    best = key
        if best is None:
            return SolveResult(
                matching=None,
                allocation=None,
                total_distortion=math.inf,
                candidates_tried=1,
                strategy="greedy_equal",
            )
        _, i, j = best
        pairs.append((i, j))
        unmatched -= {i, j}
    return _equal_split_result(
        scenario, _matching_from_pairs(costs, sorted(pairs)), "greedy_equal"
    )


def solve_channel_balanced_equal(scenario: Scenario) -> SolveResult:
    """Sort by channel gain, pair strongest with weakest, equal split."""
    costs = _cost_matrix(scenario)
    order = sorted(
        range(scenario.cfg.n_users),
        key=lambda i: -scenario.users[i].channel.gain_linear,
    )
    n = scenario.cfg.n_users
    pairs = sorted(
        (min(order[r], order[n - 1 - r]), max(order[r], order[n - 1 - r]))
        for r in range(n // 2)
    )
    return _equal_split_result(
        scenario, _matching_from_pairs(costs, pairs), "channel_balanced_equal"
    )


def solve_random_kkt(scenario: Scenario, rng: np.random.Generator) -> SolveResult:
    """Uniform random pairing (same draw as random_equal for the same
    generator state), bandwidth optimized by the KKT allocator."""
    costs = _cost_matrix(scenario)
    pairs = random_matching(scenario.cfg.n_users, rng)
    matching = _matching_from_pairs(costs, pairs)
    cache = _BoundCache(scenario.users, scenario.cfg)
    report = _check_with_bounds(scenario, matching, cache.for_matching(matching))
    return SolveResult(
        matching=matching,
        allocation=report,
        total_distortion=matching.total_cost,
        candidates_tried=1,
        strategy="random_kkt",
    )


def solve(
    scenario: Scenario,
    strategy: str,
    w_count: int = 16,
    matching_seed: int | None = None,
) -> SolveResult:
    """Dispatch a strategy by name.

    Random strategies draw their matching from a generator namespaced
    by (matching_seed or scenario.seed), so random_equal and random_kkt
    pick the same pairing for the same seed.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if strategy == "proposed":
        return solve_proposed(scenario, w_count)
    if strategy == "greedy_equal":
        return solve_greedy_equal(scenario)
    if strategy == "channel_balanced_equal":
        return solve_channel_balanced_equal(scenario)
    seed = scenario.seed if matching_seed is None else matching_seed
    rng = np.random.default_rng([seed, 1])
    if strategy == "random_equal":
        return solve_random_equal(scenario, rng)
    return solve_random_kkt(scenario, rng)


# ---------------------------------------------------------------------------
# Bandwidth sweeps


def _sweep_cell_records(args) -> list[dict]:
    """All (b_max, strategy) records for one seed; runs in a worker."""
    template, b_max_values, strategies, w_count, seed = args
    records = []
    for b_max in b_max_values:
        scn = generate_scenario(replace(template, b_max=b_max), seed)
        for strategy in strategies:
            res = solve(scn, strategy, w_count=w_count)
            records.append(
                {
                    "b_max_hz": b_max,
                    "strategy": strategy,
                    "seed": seed,
                    "feasible": res.feasible,
                    "total_distortion": res.total_distortion,
                    "bandwidth_used": (
                        res.allocation.bandwidth_used
                        if res.allocation is not None
                        else math.nan
                    ),
                    "candidates_tried": res.candidates_tried,
                }
            )
    return records


def sweep_bandwidth(
    template: ScenarioTemplate,
    b_max_values: list[float],
    strategies: list[str] = list(STRATEGIES),
    seeds: list[int] = tuple(range(50)),
    w_count: int = 16,
    jobs: int = 1,
) -> list[dict]:
    """Average each strategy over fresh scenarios per seed, for every
    B_max value.

    Returns one aggregate row per (b_max, strategy): mean total
    distortion and mean bandwidth over the feasible draws, feasibility
    rate, and mean candidate count.  Workers split by seed and results
    merge by sorted cell key, so any ``jobs`` count produces the
    identical table.
    """
    if not b_max_values:
        raise ValueError("b_max_values must be non-empty")
    if sorted(b_max_values) != list(b_max_values):
        raise ValueError("b_max_values must be ascending")
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}")

    tasks = [
        (template, tuple(b_max_values), tuple(strategies), w_count, seed)
        for seed in seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_seed = list(pool.map(_sweep_cell_records, tasks))
    else:
        per_seed = [_sweep_cell_records(t) for t in tasks]

    records = [rec for seed_recs in per_seed for rec in seed_recs]
    records.sort(key=lambda r: (r["b_max_hz"], r["strategy"], r["seed"]))

    rows = []
    for b_max in b_max_values:
        for strategy in strategies:
            cell = [
                r
                for r in records
                if r["b_max_hz"] == b_max and r["strategy"] == strategy
            ]
            ok = [r for r in cell if r["feasible"]]
            rows.append(
                {
                    "b_max_hz": b_max,
                    "strategy": strategy,
                    "n_seeds": len(cell),
                    "n_feasible": len(ok),
                    "feasibility_rate": len(ok) / len(cell) if cell else math.nan,
                    "mean_total_distortion": (
                        math.fsum(r["total_distortion"] for r in ok) / len(ok)
                        if ok
                        else math.nan
                    ),
                    "mean_bandwidth_used": (
                        math.fsum(r["bandwidth_used"] for r in ok) / len(ok)
                        if ok
                        else math.nan
                    ),
                    "mean_candidates_tried": (
                        math.fsum(r["candidates_tried"] for r in cell) / len(cell)
                        if cell
                        else math.nan
                    ),
                }
            )
    return rows
