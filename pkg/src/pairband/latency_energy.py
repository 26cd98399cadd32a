"""Per-user and per-group delay and energy accounting.

Serving one pair (i, j) takes the base station's encode time for both
images, one over-the-air transmit phase (the slower of the two users,
since both payloads ride the same superimposed signal), and both users'
decode times:

    T_k = tau_bs_i + tau_bs_j + max{t_i, t_j} + tau_rx_i + tau_rx_j.

Only the transmit term depends on bandwidth, so the latency budget
T_max reduces to a slack Delta_ij = T_max - (sum of compute delays)
that max{t_i, t_j} must fit into.  Similarly, compute energy is fixed
once the user set is known (it does not depend on the matching), which
lets the solver fold it into a constant offset and budget only the
transmit energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .channel import ChannelGain, RateParams, f_limit, f_value

__all__ = [
    "UserProfile",
    "SystemConfig",
    "tau_bs",
    "tau_rx",
    "delta_slack",
    "transmit_time",
    "group_time",
    "compute_energy_pair",
    "e_const",
    "transmit_energy",
]


@dataclass(frozen=True)
class UserProfile:
    """Static per-user parameters.

    q_bits is the source image size handled at the base station;
    enc_params / dec_params are the (dimensionless) per-bit workload
    scale factors of the encoder and decoder halves of the model;
    cpu_hz, cycles_per_bit and energy_coeff describe the user device.
    noise_psd, if set, overrides the system-wide value for this user.
    """

    id: int
    position: tuple[float, float]
    q_bits: float
    enc_params: float
    dec_params: float
    cpu_hz: float
    cycles_per_bit: float
    energy_coeff: float
    channel: ChannelGain
    noise_psd: float | None = None

    def __post_init__(self) -> None:
        if self.q_bits <= 0:
            raise ValueError("q_bits must be positive")
        if self.cpu_hz <= 0:
            raise ValueError("cpu_hz must be positive")
        if self.cycles_per_bit <= 0:
            raise ValueError("cycles_per_bit must be positive")
        if self.energy_coeff < 0:
            raise ValueError("energy_coeff must be non-negative")


@dataclass(frozen=True)
class SystemConfig:
    """Global budgets and base-station constants.

    group_powers holds p_k for each of the N/2 groups (index = group
    slot); budgets are B^max [Hz], T^max [s], E^max [J], D^max
    [distortion units].
    """

    n_users: int
    b_max: float
    t_max: float
    e_max: float
    d_max: float
    noise_psd: float
    payload_bits: float
    bs_cpu_hz: float
    bs_cycles_per_bit: float
    bs_energy_coeff: float
    group_powers: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.n_users < 2 or self.n_users % 2 != 0:
            raise ValueError("n_users must be even and >= 2")
        for name in ("b_max", "t_max", "e_max", "d_max", "noise_psd"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.payload_bits < 0:
            raise ValueError("payload_bits must be non-negative")
        if len(self.group_powers) != self.n_users // 2:
            raise ValueError("group_powers must have one entry per group (N/2)")
        if any(p <= 0 for p in self.group_powers):
            raise ValueError("group powers must be positive")

    def noise_for(self, user: UserProfile) -> float:
        """Noise PSD seen by ``user`` (per-user override or global)."""
        return user.noise_psd if user.noise_psd is not None else self.noise_psd

    def rate_params(self, user: UserProfile, b: float, power: float) -> RateParams:
        return RateParams(
            bandwidth=b,
            power=power,
            gain_linear=user.channel.gain_linear,
            noise_psd=self.noise_for(user),
        )


def tau_bs(user: UserProfile, cfg: SystemConfig) -> float:
    """BS-side encode delay chi_BS * q_i * Gamma(theta_i) / f_BS [s]."""
    return cfg.bs_cycles_per_bit * user.q_bits * user.enc_params / cfg.bs_cpu_hz


def tau_rx(user: UserProfile, cfg: SystemConfig) -> float:
    """Receiver-side decode delay chi_i * Q * Gamma(phi_i) / f_i [s]."""
    return user.cycles_per_bit * cfg.payload_bits * user.dec_params / user.cpu_hz


def delta_slack(i: UserProfile, j: UserProfile, cfg: SystemConfig) -> float:
    """Latency slack left for the transmit phase of pair (i, j).

    Delta_ij = T^max - tau_bs_i - tau_rx_i - tau_bs_j - tau_rx_j.
    May be <= 0, in which case the pair can never meet the deadline.
    """
    return cfg.t_max - tau_bs(i, cfg) - tau_rx(i, cfg) - tau_bs(j, cfg) - tau_rx(j, cfg)


def transmit_time(b: float, user: UserProfile, power: float, cfg: SystemConfig) -> float:
    """Airtime Q / F_u(b) for one user [s]; inf when the rate is zero."""
    if b <= 0:
        return math.inf
    fv = f_value(b, cfg.rate_params(user, b, power))
    if fv <= 0.0:
        return math.inf
    return cfg.payload_bits / fv


def group_time(
    pair: tuple[UserProfile, UserProfile], b: float, power: float, cfg: SystemConfig
) -> float:
    """End-to-end serving time of a pair at bandwidth b [s]."""
    i, j = pair
    t_air = max(
        transmit_time(b, i, power, cfg),
        transmit_time(b, j, power, cfg),
    )
    return tau_bs(i, cfg) + tau_bs(j, cfg) + t_air + tau_rx(i, cfg) + tau_rx(j, cfg)


def _bs_energy(user: UserProfile, cfg: SystemConfig) -> float:
    return (
        cfg.bs_energy_coeff
        * cfg.bs_cpu_hz**2
        * cfg.bs_cycles_per_bit
        * user.q_bits
        * user.enc_params
    )


def _rx_energy(user: UserProfile, cfg: SystemConfig) -> float:
    return (
        user.energy_coeff
        * user.cpu_hz**2
        * user.cycles_per_bit
        * cfg.payload_bits
        * user.dec_params
    )


def compute_energy_pair(
    pair: tuple[UserProfile, UserProfile], cfg: SystemConfig
) -> float:
    """Compute energy of one pair: both BS encodes plus both decodes [J]."""
    i, j = pair
    return _bs_energy(i, cfg) + _bs_energy(j, cfg) + _rx_energy(i, cfg) + _rx_energy(j, cfg)


def e_const(users: list[UserProfile], cfg: SystemConfig) -> float:
    """Total compute energy over all users [J].

    Every user is encoded once and decodes once no matter how the pairs
    are formed, so this sum is matching-invariant and can be subtracted
    from the energy budget up front.
    """
    return sum(_bs_energy(u, cfg) + _rx_energy(u, cfg) for u in users)


def transmit_energy(
    pair: tuple[UserProfile, UserProfile], b: float, power: float, cfg: SystemConfig
) -> float:
    """Radiated energy p_k * max{t_i, t_j} for one pair [J]."""
    i, j = pair
    t_air = max(
        transmit_time(b, i, power, cfg),
        transmit_time(b, j, power, cfg),
    )
    return power * t_air


def pair_f_limit(
    pair: tuple[UserProfile, UserProfile], power: float, cfg: SystemConfig
) -> float:
    """Saturation rate of the pair's slower user (the binding one)."""
    i, j = pair
    lim_i = f_limit(cfg.rate_params(i, 1.0, power))
    lim_j = f_limit(cfg.rate_params(j, 1.0, power))
    return min(lim_i, lim_j)
