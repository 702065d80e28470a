"""Seeded indoor channel synthesis: breakpoint path loss and Rician fading."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .model import ChannelRealization, SystemParams

__all__ = [
    "SPEED_OF_LIGHT",
    "ChannelConfig",
    "free_space_loss_db",
    "path_loss_db",
    "rician_fading",
    "receiver_rng",
    "trial_seed",
    "draw_channel",
]

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ChannelConfig:
    carrier_hz: float = 470e6
    ref_dist_m: float = 2.0
    max_dist_m: float = 10.0
    antenna_gain_db: float = 10.0
    rician_k_db: float = 6.0
    breakpoint_m: float = 5.0
    exponent_near: float = 2.0
    exponent_far: float = 3.5

    def __post_init__(self):
        if not 0 < self.ref_dist_m < self.max_dist_m:
            raise ValueError("need 0 < ref_dist_m < max_dist_m")
        if self.exponent_near <= 0 or self.exponent_far <= 0:
            raise ValueError("path-loss exponents must be positive")
        if self.breakpoint_m < self.ref_dist_m:
            raise ValueError("breakpoint must not precede the reference distance")

    @property
    def rician_k(self) -> float:
        return 10.0 ** (self.rician_k_db / 10.0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelConfig":
        return cls(**d)


def free_space_loss_db(distance_m: float, carrier_hz: float) -> float:
    return 20.0 * math.log10(4.0 * math.pi * distance_m * carrier_hz / SPEED_OF_LIGHT)


def path_loss_db(config: ChannelConfig, distance_m: float, include_gain: bool = True) -> float:
    """Two-slope loss: ``exponent_near`` from the reference distance (anchored
    at free space there) up to the breakpoint, ``exponent_far`` beyond it.

    The combined antenna gain is subtracted once when ``include_gain``.
    """
    d = float(distance_m)
    if d < config.ref_dist_m:
        warnings.warn(f"distance {d} m below reference distance; clamped", stacklevel=2)
        d = config.ref_dist_m
    ref = free_space_loss_db(config.ref_dist_m, config.carrier_hz)
    near = ref + 10.0 * config.exponent_near * math.log10(min(d, config.breakpoint_m) / config.ref_dist_m)
    loss = near
    if d > config.breakpoint_m:
        loss += 10.0 * config.exponent_far * math.log10(d / config.breakpoint_m)
    if include_gain:
        loss -= config.antenna_gain_db
    return loss


def rician_fading(rng: np.random.Generator, n: int, kappa: float) -> np.ndarray:
    """Unit-mean-power Rician vector: common-phase all-ones LOS plus CN(0, 1) scatter."""
    phase = rng.uniform(0.0, 2.0 * math.pi)
    scatter = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    if math.isinf(kappa):
        return np.full(n, np.exp(1j * phase))
    los = math.sqrt(kappa / (kappa + 1.0))
    nlos = math.sqrt(1.0 / (kappa + 1.0))
    return los * np.exp(1j * phase) * np.ones(n) + nlos * scatter


def trial_seed(base_seed: int, trial: int) -> int:
    """Seed for one Monte Carlo trial, derived from (base, trial)."""
    return int(np.random.SeedSequence([int(base_seed), int(trial)]).generate_state(1, np.uint32)[0])


def receiver_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per receiver so adding receivers leaves earlier ones unchanged."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def draw_channel(params: SystemParams, config: ChannelConfig = ChannelConfig(),
                 rng_seed: int = 0) -> ChannelRealization:
    """Draw the desired channel (receiver 0) and ``K - 1`` idle channels."""
    vectors = []
    for idx in range(params.k_receivers):
        rng = receiver_rng(rng_seed, idx)
        d = rng.uniform(config.ref_dist_m, config.max_dist_m)
        gain = 10.0 ** (-path_loss_db(config, d) / 10.0)
        vectors.append(math.sqrt(gain) * rician_fading(rng, params.n_t, config.rician_k))
    return ChannelRealization(vectors[0], tuple(vectors[1:]), seed=int(rng_seed))
