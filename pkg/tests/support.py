"""Shared builders for the test suite.

Everything here constructs small, fully controlled instances: channels
with an exact linear gain, users that differ only where the test says
so, and configs with budgets wide open unless the test tightens them.
"""

from __future__ import annotations

import math

import numpy as np

from pairband.channel import ChannelGain, RateParams, f_value, g_value
from pairband.distortion import DistortionTable
from pairband.latency_energy import SystemConfig, UserProfile, group_time
from pairband.pairing import Matching
from pairband.scenario import Scenario, ScenarioTemplate

NOISE = 10.0 ** (-20.4)  # W/Hz


def gain_channel(gain_linear: float) -> ChannelGain:
    """A channel with an exact linear gain (path loss back-derived)."""
    return ChannelGain(
        pathloss_db=-10.0 * math.log10(gain_linear),
        shadowing_db=0.0,
        gain_linear=gain_linear,
    )


def make_params(
    b: float = 1.0e6,
    power: float = 1.0,
    gain: float = 1.0e-11,
    noise: float = NOISE,
) -> RateParams:
    return RateParams(bandwidth=b, power=power, gain_linear=gain, noise_psd=noise)


def make_user(
    idx: int,
    gain: float = 1.0e-11,
    *,
    q_bits: float = 1.5e6,
    enc: float = 1.0,
    dec: float = 1.0,
    cpu_hz: float = 1.0e9,
    cycles: float = 100.0,
    coeff: float = 1.0e-27,
    noise: float | None = None,
) -> UserProfile:
    return UserProfile(
        id=idx,
        position=(float(idx), 0.0),
        q_bits=q_bits,
        enc_params=enc,
        dec_params=dec,
        cpu_hz=cpu_hz,
        cycles_per_bit=cycles,
        energy_coeff=coeff,
        channel=gain_channel(gain),
        noise_psd=noise,
    )


def make_cfg(
    n: int = 4,
    *,
    b_max: float = 10.0e6,
    t_max: float = 10.0,
    e_max: float = 1.0e9,
    d_max: float = 1.0e9,
    noise: float = NOISE,
    payload: float = 1.3e6,
    powers: tuple[float, ...] | None = None,
) -> SystemConfig:
    return SystemConfig(
        n_users=n,
        b_max=b_max,
        t_max=t_max,
        e_max=e_max,
        d_max=d_max,
        noise_psd=noise,
        payload_bits=payload,
        bs_cpu_hz=3.0e9,
        bs_cycles_per_bit=100.0,
        bs_energy_coeff=4.0e-27,
        group_powers=powers if powers is not None else (1.0,) * (n // 2),
    )


def table_from_per_user(per_user) -> DistortionTable:
    return DistortionTable.from_per_user(np.asarray(per_user, dtype=float))


def uniform_table(n: int, value: float = 1.0) -> DistortionTable:
    per_user = np.full((n, n), value)
    np.fill_diagonal(per_user, 0.0)
    return DistortionTable.from_per_user(per_user)


def make_scenario(
    users: list[UserProfile],
    cfg: SystemConfig,
    table: DistortionTable | None = None,
    seed: int = 0,
) -> Scenario:
    """Hand-built scenario; the template is a placeholder that mirrors
    the config's budgets so sweep-style code can still re-derive it."""
    template = ScenarioTemplate(
        n_users=cfg.n_users,
        b_max=cfg.b_max,
        t_max=cfg.t_max,
        e_max=cfg.e_max,
        d_max=cfg.d_max,
        noise_psd=cfg.noise_psd,
        payload_bits=cfg.payload_bits,
    )
    return Scenario(
        cfg=cfg,
        users=tuple(users),
        distortions=table if table is not None else uniform_table(cfg.n_users),
        seed=seed,
        template=template,
    )


def random_cost_matrix(rng: np.random.Generator, n: int, scale: float = 10.0):
    """Symmetric non-negative cost matrix with +inf diagonal."""
    raw = rng.uniform(0.1, scale, size=(n, n))
    costs = np.triu(raw, 1)
    costs = costs + costs.T
    np.fill_diagonal(costs, math.inf)
    return costs


# ---------------------------------------------------------------------------
# Allocation-instance builders and optimality certificates, shared by the
# unit tests and the end-to-end acceptance checks.


def scenario_from_pair_costs(pair_costs, gains, cfg) -> Scenario:
    """Users with chosen gains plus a distortion table whose pair sums
    equal ``pair_costs`` (split evenly between directions)."""
    n = len(gains)
    per_user = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                per_user[i, j] = pair_costs[i][j] / 2.0
    users = [make_user(i, gain=gains[i]) for i in range(n)]
    return make_scenario(users, cfg, table_from_per_user(per_user))


def exhaustive_first_feasible(scn):
    """Oracle: score every matching, return the cheapest feasible one."""
    from pairband.bandwidth import check_feasibility
    from pairband.pairing import all_matchings

    best = None
    for pairs in all_matchings(scn.cfg.n_users):
        total = math.fsum(scn.distortions.pair_sum[i, j] for i, j in pairs)
        capped = any(
            scn.distortions.per_user[i, j] > scn.cfg.d_max
            or scn.distortions.per_user[j, i] > scn.cfg.d_max
            for i, j in pairs
        )
        if capped or not math.isfinite(total):
            continue
        matching = Matching(pairs=pairs, total_cost=total)
        report = check_feasibility(list(scn.users), matching, scn.cfg)
        if report.feasible:
            key = (total, pairs)
            if best is None or key < best[0]:
                best = (key, matching)
    return None if best is None else best[1]


def paired_users(users, matching):
    by_id = {u.id: u for u in users}
    return [(by_id[a], by_id[b]) for a, b in matching.pairs]


def consecutive_matching(n: int) -> Matching:
    return Matching(
        pairs=tuple((2 * k, 2 * k + 1) for k in range(n // 2)), total_cost=0.0
    )


def random_instance(rng, k=2, b_max=None, t_max=2.0):
    """A latency-feasible instance with room between sum(L) and B_max."""
    n = 2 * k
    users = [
        make_user(
            i,
            gain=float(10.0 ** rng.uniform(-12.5, -10.5)),
            dec=float(rng.uniform(0.6, 1.4)),
            cpu_hz=float(rng.uniform(5.0e8, 1.6e9)),
        )
        for i in range(n)
    ]
    cfg = make_cfg(n, b_max=b_max if b_max is not None else 3.0e6 * k, t_max=t_max)
    return users, cfg, consecutive_matching(n)


def active_gradient(pair, b, power, cfg):
    """Gradient of the binding (slower) user of the pair at bandwidth b."""
    i, j = pair
    fi = f_value(b, cfg.rate_params(i, b, power))
    fj = f_value(b, cfg.rate_params(j, b, power))
    u = i if fi <= fj else j
    return g_value(b, power, cfg.payload_bits, cfg.rate_params(u, b, power))


def group_airtime(pair, b, power, cfg):
    i, j = pair
    return max(
        cfg.payload_bits / f_value(b, cfg.rate_params(i, b, power)),
        cfg.payload_bits / f_value(b, cfg.rate_params(j, b, power)),
    )


def assert_kkt_certificates(users, matching, cfg, report):
    """Stationarity + complementary slackness + primal feasibility."""
    assert report.feasible
    pairs = paired_users(users, matching)
    powers = list(cfg.group_powers)
    theta = report.theta_star
    assert theta > 0

    used = math.fsum(report.bandwidths)
    assert used <= cfg.b_max * (1.0 + 1e-9)
    assert abs(report.bandwidth_used - used) <= 1e-12 * used

    any_interior = False
    for b, lb, pair, p in zip(report.bandwidths, report.lower_bounds, pairs, powers):
        assert b >= lb * (1.0 - 1e-12)
        if b > lb * (1.0 + 1e-9):
            any_interior = True
            # Interior group: gradient balanced at the shared multiplier.
            grad_here = active_gradient(pair, b, p, cfg)
            assert abs(grad_here - theta) <= 1e-6 * theta
        else:
            # At the bound the gradient must already be at or below the
            # multiplier (otherwise growing b would pay off).
            assert active_gradient(pair, lb, p, cfg) <= theta * (1.0 + 1e-6)
        # Latency holds at the returned allocation.
        assert group_time(pair, b, p, cfg) <= cfg.t_max * (1.0 + 1e-9)
    if any_interior:
        # Complementary slackness: an interior group means the bandwidth
        # constraint is tight.
        assert abs(used - cfg.b_max) <= 1e-9 * cfg.b_max
