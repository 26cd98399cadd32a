"""Bandwidth feasibility and KKT water-filling allocation.

Given a fixed pairing, the remaining problem is to split B_max across
the K groups so that total transmit energy  sum_k p_k * xi_k(b_k)  is
minimized, where xi_k(b) = max{Q/F_i(b), Q/F_j(b)} is the airtime of the
group's slower user.  Three structural facts make this easy:

* The latency budget turns into a per-group lower bound L_k: the unique
  root of F(b) = Q/Delta for the pair's weaker user (F is strictly
  increasing with a finite asymptote, so the root exists iff
  Q/Delta < f_limit and Delta > 0).

* xi_k is differentiable with -d/db [p*Q/F(b)] = G(b) strictly
  decreasing, so the KKT system reduces to a single multiplier Theta:
  b_k* = max{L_k, b_tilde_k(Theta*)}, with Theta* chosen so the
  bandwidths sum to B_max.

* sum_k b_k(Theta) is non-increasing in Theta, hence Theta* is found by
  plain bisection on (0, Theta_max], Theta_max = max_k max{G_i(L_k),
  G_j(L_k)}.

All root-finding is bracketed bisection: inner roots to 1e-12 relative,
the outer multiplier to 1e-9 relative, so the inner solves always
out-resolve the outer one.  The energy budget is checked after the
allocation rather than dualized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import RateParams, f_limit, f_value, g_value
from .latency_energy import SystemConfig, UserProfile, delta_slack, e_const

__all__ = [
    "PairBandwidthBound",
    "AllocationReport",
    "b_min_user",
    "b_min_pair",
    "g_inverse",
    "tilde_b",
    "kkt_allocate",
    "check_feasibility",
    "evaluate_fixed_allocation",
    "total_bandwidth_at",
]

# Bisection tolerances: inner roots must out-resolve the outer multiplier.
_INNER_REL_TOL = 1e-12
_OUTER_REL_TOL = 1e-9
_MAX_DOUBLINGS = 60
_MAX_BISECT = 400


@dataclass(frozen=True)
class PairBandwidthBound:
    """Minimum bandwidth a pair needs to meet the latency deadline.

    ``feasible`` is False when the deadline cannot be met at any finite
    bandwidth (non-positive slack, or required rate at/above the weaker
    user's saturation rate); then ``b_min`` is +inf.
    """

    pair: tuple[int, int]
    b_min: float
    feasible: bool


@dataclass(frozen=True)
class AllocationReport:
    """Outcome of allocating bandwidth to the groups of one matching.

    ``objective`` is the transmit-energy objective sum_k p_k*xi_k(b_k)
    [J]; ``energy_total`` adds the matching-invariant compute energy so
    it can be compared against E_max directly.  ``infeasibility_reason``
    is one of \"latency\", \"bandwidth_sum\", \"energy\", or None.
    """

    bandwidths: tuple[float, ...]
    theta_star: float
    lower_bounds: tuple[float, ...]
    objective: float
    bandwidth_used: float
    energy_total: float
    feasible: bool
    infeasibility_reason: str | None


def _exceeds(value: float, limit: float) -> bool:
    """True when ``value`` is above ``limit`` beyond floating-point slop."""
    return value - limit > 1e-12 * max(abs(value), abs(limit), 1.0)


def b_min_user(
    delta: float,
    params: RateParams,
    payload_bits: float,
    b_hint: float = 1.0e6,
) -> float:
    """Unique root of F(b) = Q/delta, or +inf when no root exists.

    The root exists iff delta > 0 and Q/delta < f_limit (the required
    rate must sit below the saturation rate).  Found by bracketed
    bisection to 1e-12 relative on b; ``b_hint`` seeds the upper
    bracket (doubled as needed).
    """
    if delta <= 0.0:
        return math.inf
    target = payload_bits / delta
    if target >= f_limit(params):
        return math.inf

    lo, hi = 1.0, max(2.0, b_hint)
    # Expand the bracket: F is strictly increasing, so push hi up until
    # F(hi) clears the target, and lo down if the root sits below 1 Hz.
    for _ in range(_MAX_DOUBLINGS):
        if f_value(hi, params) >= target:
            break
        hi *= 2.0
    else:
        raise RuntimeError(
            f"bracket expansion failed for b_min (target={target!r}, "
            f"f_limit={f_limit(params)!r})"
        )
    for _ in range(_MAX_DOUBLINGS):
        if f_value(lo, params) < target:
            break
        lo *= 0.5
    else:
        return lo  # root below ~1e-18 Hz; lo is an upper bound that tight

    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if f_value(mid, params) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _INNER_REL_TOL * hi:
            break
    return hi


def b_min_pair(
    i: UserProfile,
    j: UserProfile,
    cfg: SystemConfig,
    power: float,
) -> PairBandwidthBound:
    """Pair-level minimum bandwidth max{b_min_i, b_min_j} for (i, j)."""
    delta = delta_slack(i, j, cfg)
    bi = b_min_user(delta, cfg.rate_params(i, 1.0, power), cfg.payload_bits, cfg.b_max)
    bj = b_min_user(delta, cfg.rate_params(j, 1.0, power), cfg.payload_bits, cfg.b_max)
    b_min = max(bi, bj)
    return PairBandwidthBound(
        pair=(i.id, j.id), b_min=b_min, feasible=math.isfinite(b_min)
    )


def g_inverse(
    theta: float,
    power: float,
    payload_bits: float,
    params: RateParams,
    b_hint: float = 1.0e6,
) -> float:
    """Unique b with G(b) = theta (G strictly decreasing), by bisection.

    Raises RuntimeError with a diagnostic if the bracket cannot be
    expanded to contain the root.
    """
    if theta <= 0.0:
        raise ValueError(f"theta must be positive, got {theta}")

    lo, hi = 1.0, max(2.0, b_hint)
    g = lambda b: g_value(b, power, payload_bits, params)
    # G decreasing: want g(lo) >= theta >= g(hi).
    for _ in range(_MAX_DOUBLINGS):
        if g(lo) >= theta:
            break
        lo *= 0.5
    else:
        raise RuntimeError(
            f"g_inverse bracket failure: theta={theta!r} above G({lo!r})"
        )
    for _ in range(_MAX_DOUBLINGS):
        if g(hi) <= theta:
            break
        hi *= 2.0
    else:
        raise RuntimeError(
            f"g_inverse bracket failure: theta={theta!r} below G({hi!r})"
        )

    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if g(mid) >= theta:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _INNER_REL_TOL * hi:
            break
    return 0.5 * (lo + hi)


def tilde_b(
    theta: float,
    pair: tuple[UserProfile, UserProfile],
    power: float,
    cfg: SystemConfig,
) -> float:
    """Unconstrained KKT bandwidth of one pair at multiplier theta.

    Invert G for user i; if user i's airtime dominates there
    (Q/F_i >= Q/F_j, ties to i), keep it, otherwise invert for user j.
    Because which user is slower never changes with b (it is set by the
    gain-to-noise ratio), the branch test picks the slower user's
    inverse.
    """
    i, j = pair
    q = cfg.payload_bits
    params_i = cfg.rate_params(i, 1.0, power)
    params_j = cfg.rate_params(j, 1.0, power)
    b_i = g_inverse(theta, power, q, params_i, cfg.b_max)
    if q / f_value(b_i, params_i) >= q / f_value(b_i, params_j):
        return b_i
    return g_inverse(theta, power, q, params_j, cfg.b_max)


def _xi(pair: tuple[UserProfile, UserProfile], b: float, power: float, cfg: SystemConfig) -> float:
    """Group airtime xi(b) = max{Q/F_i(b), Q/F_j(b)} [s]."""
    i, j = pair
    fi = f_value(b, cfg.rate_params(i, b, power))
    fj = f_value(b, cfg.rate_params(j, b, power))
    if fi <= 0.0 or fj <= 0.0:
        return math.inf
    return max(cfg.payload_bits / fi, cfg.payload_bits / fj)


def total_bandwidth_at(
    theta: float,
    pairs: list[tuple[UserProfile, UserProfile]],
    powers: list[float],
    lower_bounds: list[float],
    cfg: SystemConfig,
) -> float:
    """sum_k max{L_k, b_tilde_k(theta)} — the non-increasing map the
    multiplier bisection searches."""
    return sum(
        max(lb, tilde_b(theta, pair, p, cfg))
        for pair, p, lb in zip(pairs, powers, lower_bounds)
    )


def _infeasible_report(
    reason: str,
    lower_bounds: tuple[float, ...],
    bandwidths: tuple[float, ...],
    objective: float,
    energy_total: float,
) -> AllocationReport:
    return AllocationReport(
        bandwidths=bandwidths,
        theta_star=math.nan,
        lower_bounds=lower_bounds,
        objective=objective,
        bandwidth_used=math.fsum(bandwidths) if bandwidths else math.inf,
        energy_total=energy_total,
        feasible=False,
        infeasibility_reason=reason,
    )


def kkt_allocate(
    users: list[UserProfile],
    matching,
    cfg: SystemConfig,
    bounds: list[PairBandwidthBound],
) -> AllocationReport:
    """Optimal bandwidth split for one matching via multiplier bisection.

    Requires every pair bound to be latency-feasible (see
    :func:`check_feasibility` for the wrapping that handles the latency
    case).  Group k's power is cfg.group_powers[k], keyed by the pair's
    position in the matching.
    """
    if any(not bd.feasible for bd in bounds):
        raise ValueError("kkt_allocate requires latency-feasible bounds for all pairs")

    by_id = {u.id: u for u in users}
    pairs = [(by_id[a], by_id[b]) for a, b in matching.pairs]
    powers = list(cfg.group_powers)
    lower = [bd.b_min for bd in bounds]
    k = len(pairs)
    if len(lower) != k or len(powers) != k:
        raise ValueError("bounds/powers must have one entry per group")

    budget = cfg.e_max - e_const(users, cfg)
    sum_lower = math.fsum(lower)

    if sum_lower > cfg.b_max * (1.0 + _OUTER_REL_TOL):
        obj = math.fsum(
            p * _xi(pair, lb, p, cfg) for pair, p, lb in zip(pairs, powers, lower)
        )
        return _infeasible_report(
            "bandwidth_sum", tuple(lower), tuple(lower), obj,
            e_const(users, cfg) + obj,
        )

    # Theta_max: the largest gradient value any group attains at its
    # lower bound; above it every group sits at L_k.
    q = cfg.payload_bits
    theta_max = 0.0
    for pair, p, lb in zip(pairs, powers, lower):
        for u in pair:
            theta_max = max(
                theta_max, g_value(lb, p, q, cfg.rate_params(u, lb, p))
            )

    if cfg.b_max - sum_lower <= _OUTER_REL_TOL * cfg.b_max:
        # Degenerate corner: the lower bounds already exhaust the band.
        b_star = list(lower)
        theta_star = theta_max
    else:
        total_at = lambda th: total_bandwidth_at(th, pairs, powers, lower, cfg)
        hi = theta_max
        lo = 0.5 * theta_max
        for _ in range(_MAX_BISECT):
            if total_at(lo) >= cfg.b_max:
                break
            lo *= 0.5
        else:
            raise RuntimeError("could not bracket the bandwidth multiplier from below")

        # Invariant: total(hi) <= B_max <= total(lo); shrink until the
        # hi-side allocation uses the band up to tolerance, then return
        # that side so sum(b) never exceeds B_max.
        t_hi = total_at(hi)
        for _ in range(_MAX_BISECT):
            if cfg.b_max - t_hi <= _OUTER_REL_TOL * cfg.b_max:
                break
            mid = 0.5 * (lo + hi)
            t_mid = total_at(mid)
            if t_mid >= cfg.b_max:
                lo = mid
            else:
                hi, t_hi = mid, t_mid
        else:
            raise RuntimeError("bandwidth multiplier bisection did not converge")

        theta_star = hi
        b_star = [
            max(lb, tilde_b(theta_star, pair, p, cfg))
            for pair, p, lb in zip(pairs, powers, lower)
        ]

    obj = math.fsum(p * _xi(pair, b, p, cfg) for pair, p, b in zip(pairs, powers, b_star))
    energy_total = e_const(users, cfg) + obj
    if _exceeds(obj, budget):
        return _infeasible_report(
            "energy", tuple(lower), tuple(b_star), obj, energy_total
        )

    return AllocationReport(
        bandwidths=tuple(b_star),
        theta_star=theta_star,
        lower_bounds=tuple(lower),
        objective=obj,
        bandwidth_used=math.fsum(b_star),
        energy_total=energy_total,
        feasible=True,
        infeasibility_reason=None,
    )


def check_feasibility(users: list[UserProfile], matching, cfg: SystemConfig) -> AllocationReport:
    """Latency bounds + KKT allocation + energy check for one matching.

    Never raises on infeasibility; every failure mode is encoded in the
    report (reason \"latency\" when any pair cannot meet the deadline at
    any bandwidth).
    """
    by_id = {u.id: u for u in users}
    bounds = [
        b_min_pair(by_id[a], by_id[b], cfg, cfg.group_powers[k])
        for k, (a, b) in enumerate(matching.pairs)
    ]
    if any(not bd.feasible for bd in bounds):
        lower = tuple(bd.b_min for bd in bounds)
        return _infeasible_report("latency", lower, (), math.inf, math.inf)
    return kkt_allocate(users, matching, cfg, bounds)


def evaluate_fixed_allocation(
    users: list[UserProfile],
    matching,
    cfg: SystemConfig,
    bandwidths: list[float],
) -> AllocationReport:
    """Score a given bandwidth vector (e.g. an equal split) without
    optimizing it.

    Feasibility is evaluated, not enforced: the report carries the
    first violated budget (latency, then bandwidth_sum, then energy) so
    baseline strategies can still be compared on infeasible draws.
    """
    by_id = {u.id: u for u in users}
    pairs = [(by_id[a], by_id[b]) for a, b in matching.pairs]
    powers = list(cfg.group_powers)
    bounds = [
        b_min_pair(i, j, cfg, p) for (i, j), p in zip(pairs, powers)
    ]
    lower = tuple(bd.b_min for bd in bounds)

    obj = math.fsum(
        p * _xi(pair, b, p, cfg) for pair, p, b in zip(pairs, powers, bandwidths)
    )
    used = math.fsum(bandwidths)
    energy_total = e_const(users, cfg) + obj

    reason = None
    if any(b < bd.b_min * (1.0 - 1e-12) for b, bd in zip(bandwidths, bounds)):
        reason = "latency"  # covers infeasible pairs too (b_min = inf)
    elif used > cfg.b_max * (1.0 + _OUTER_REL_TOL):
        reason = "bandwidth_sum"
    elif _exceeds(obj, cfg.e_max - e_const(users, cfg)):
        reason = "energy"

    return AllocationReport(
        bandwidths=tuple(bandwidths),
        theta_star=math.nan,
        lower_bounds=lower,
        objective=obj,
        bandwidth_used=used,
        energy_total=energy_total,
        feasible=reason is None,
        infeasibility_reason=reason,
    )
