"""Radio-link primitives: path gain, fading, antenna lobes, link SNR.

Large-scale gain follows a power law with a decade intercept, 10^alpha / d^beta
for the direct link and 10^(2 alpha) / (s r)^beta for a reflected one.  Small
scale fading is exponential (power domain); array gains enter through the
fading means, so the SNR expressions below carry no explicit antenna counts:

    direct link      h_d ~ Exp(mean n_bs * n_u)
    feeder segment   h_s ~ Exp(mean n_bs * n_r)
    drop segment     h_r ~ Exp(mean n_r * n_u)

The sectored lobe model (main gain, side gain, beamwidth) is provided for
completeness of the link sampler; none of the coverage or rate formulas use
it because aligned-beam operation is assumed throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RadioParams",
    "LobePattern",
    "MIN_LINK_DISTANCE_M",
    "pathloss_gain",
    "lobe_pattern",
    "sample_directional_gain",
    "sample_fading",
    "snr_direct",
    "snr_reflected",
]

# Far-field floor used by the scene simulators: link distances below this are
# clamped before the power law is applied.
MIN_LINK_DISTANCE_M = 1.0


@dataclass(frozen=True)
class RadioParams:
    """Scalar radio constants shared by the analytic and simulation engines.

    alpha is the decade intercept of the path-gain law (gain 10^alpha at 1 m),
    beta the path-loss exponent.  Antenna counts scale the fading means and
    the reflected-path power; bandwidth_hz converts rates to bits per second.
    """

    alpha: float = 3.8
    beta: float = 2.2
    p0: float = 1.0
    noise_power: float = 3.2e-12
    n_bs: int = 64
    n_u: int = 4
    n_r: int = 64
    bandwidth_hz: float = 2.0e8

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.p0 <= 0 or self.noise_power <= 0:
            raise ValueError("p0 and noise_power must be positive")
        if min(self.n_bs, self.n_u, self.n_r) < 1:
            raise ValueError("antenna counts must be at least 1")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")


@dataclass(frozen=True)
class LobePattern:
    main_gain: float
    side_gain: float
    beamwidth: float

    def __post_init__(self) -> None:
        if not (self.main_gain >= self.side_gain > 0):
            raise ValueError("require main_gain >= side_gain > 0")
        if not (0 < self.beamwidth < 2 * math.pi):
            raise ValueError("beamwidth must lie in (0, 2pi)")


def pathloss_gain(d: float, alpha: float, beta: float) -> float:
    """Large-scale power gain 10^alpha / d^beta of a length-d link."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return 10.0 ** alpha / d ** beta


def lobe_pattern(n_antennas: int) -> LobePattern:
    """Sectored pattern of a uniform array: main gain equals the element
    count, side gain 1/sin^2(3pi/(2 sqrt(n))), beamwidth 102deg/sqrt(n)."""
    if n_antennas < 1:
        raise ValueError("antenna count must be at least 1")
    root = math.sqrt(n_antennas)
    # below 4 elements the sin^2 side-lobe model exceeds the array gain;
    # saturate so the pattern stays a valid two-level approximation
    side = min(1.0 / math.sin(3.0 * math.pi / (2.0 * root)) ** 2,
               float(n_antennas))
    width = math.radians(102.0) / root
    return LobePattern(main_gain=float(n_antennas), side_gain=side, beamwidth=width)


def sample_directional_gain(tx: LobePattern, rx: LobePattern,
                            rng: np.random.Generator, size: int | None = None):
    """Product of tx/rx lobe gains for a uniformly oriented interferer.

    Each end points its main lobe at the other with probability
    beamwidth/2pi, independently, giving a four-outcome mixture over
    {M M, M m, m M, m m}.  Scalar when size is None, else an array.
    """
    pt = tx.beamwidth / (2 * math.pi)
    pr = rx.beamwidth / (2 * math.pi)
    n = 1 if size is None else int(size)
    gt = np.where(rng.random(n) < pt, tx.main_gain, tx.side_gain)
    gr = np.where(rng.random(n) < pr, rx.main_gain, rx.side_gain)
    out = gt * gr
    return float(out[0]) if size is None else out


def sample_fading(mean: float, rng: np.random.Generator,
                  size: int | None = None):
    """Exponential power-fading draw(s) with the given mean."""
    if mean <= 0:
        raise ValueError("fading mean must be positive")
    out = rng.exponential(mean, size=1 if size is None else size)
    return float(out[0]) if size is None else out


def snr_direct(xi: float, h_d: float, radio: RadioParams) -> float:
    """SNR of the direct link at BS-user distance xi with fading h_d."""
    if xi <= 0:
        raise ValueError("distance must be positive")
    if np.any(np.asarray(h_d) < 0):
        raise ValueError("fading must be nonnegative")
    return 10.0 ** radio.alpha * radio.p0 * h_d / (xi ** radio.beta * radio.noise_power)


def snr_reflected(s: float, r: float, h_s: float, h_r: float,
                  radio: RadioParams) -> float:
    """SNR of a reflected link with feeder length s and drop length r."""
    if s <= 0 or r <= 0:
        raise ValueError("distances must be positive")
    if np.any(np.asarray(h_s) < 0) or np.any(np.asarray(h_r) < 0):
        raise ValueError("fading must be nonnegative")
    return (10.0 ** (2.0 * radio.alpha) * radio.p0 * h_s * h_r
            / ((s * r) ** radio.beta * radio.noise_power))
