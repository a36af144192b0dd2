"""Two-tier Monte Carlo engine for the reflector-assisted cell model.

Tier one, ``model_faithful``, re-samples exactly the probabilistic model
behind the closed-form stack: per-link Bernoulli blockage with the
exponential survival law, reflector availability drawn from the thinned
PPP seen from the user, and the serving path product drawn from the
min-product law with its uniform-cosine convention.  Estimates from this
tier must agree with the analytic engine to within Monte Carlo error;
that equivalence is the validation backbone of the package.

Tier two, ``physical``, builds real scenes: blockage segments with
positions, lengths and orientations, reflector and user point processes,
exact segment-intersection LoS tests shared between all links of a scene,
and max-power association over every usable path.  Differences between
this tier and the analytic engine measure the cost of the model's
independence and degenerate-association approximations; ``gap_report``
tabulates them.

Reproducibility contract: every scene k draws from an independent
counter-based substream (Philox keyed by the seed, counter k * 2**128),
so serial and shard-parallel runs produce bit-identical estimates.
Within a scene the draw order is fixed:

1. blockages (physical tier): count, centers, lengths, orientations
2. users: count, positions (skipped for a tagged user), profile
   acceptance draws when the user density is radial
3. fading: h_d, h_s, h_r blocks for every user
4. reflectors (physical tier): count, positions
5. per-user model draws (model-faithful tier): direct-link survival,
   availability process, path-product process

Threshold sweeps therefore reuse every draw (exact common random
numbers), and reflector-density sweeps share stages 1-3.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .analytic import RadialProfile, SystemParams, ergodic_coverage, eta_cdf
from .channel import MIN_LINK_DISTANCE_M
from .geometry import (
    los_mask,
    sample_blockage_arrays,
    sample_disc_points,
    segment_hit_mask,
)

__all__ = [
    "EmptyEstimateError",
    "McConfig",
    "McEstimate",
    "EtaCdfCheck",
    "scene_rng",
    "oracle_p_los",
    "oracle_reflection_prob",
    "oracle_eta_cdf",
    "oracle_cond_coverage_direct",
    "oracle_cond_coverage_reflected",
    "simulate_coverage",
    "simulate_sum_rate",
    "simulate_cond_coverage",
    "simulate_user_rate",
    "gap_report",
]

_TWO_PI = 2.0 * math.pi
_MODES = ("model_faithful", "physical")


class EmptyEstimateError(RuntimeError):
    """No trials were generated (e.g. zero users in every scene)."""


@dataclass(frozen=True)
class McConfig:
    """Simulation size, seed, engine tier, and parallelism."""

    n_scenes: int = 400
    n_fading_per_scene: int = 8
    seed: int = 0
    mode: str = "model_faithful"
    parallel_shards: int = 1

    def __post_init__(self):
        if self.n_scenes < 1:
            raise ValueError("n_scenes must be at least 1")
        if self.n_fading_per_scene < 1:
            raise ValueError("n_fading_per_scene must be at least 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if self.parallel_shards < 1:
            raise ValueError("parallel_shards must be at least 1")


@dataclass(frozen=True)
class McEstimate:
    """Point estimate with a normal-approximation 95% interval."""

    mean: float
    std_error: float
    ci95_low: float
    ci95_high: float
    n: int

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError("std_error must be nonnegative")
        for got, want in ((self.ci95_low, self.mean - 1.96 * self.std_error),
                          (self.ci95_high, self.mean + 1.96 * self.std_error)):
            if abs(got - want) > 1e-9 * max(1.0, abs(want)):
                raise ValueError("ci95 bounds must equal mean +/- 1.96 SE")

    @classmethod
    def from_mean_se(cls, mean: float, std_error: float, n: int) -> "McEstimate":
        return cls(mean=float(mean), std_error=float(std_error),
                   ci95_low=float(mean - 1.96 * std_error),
                   ci95_high=float(mean + 1.96 * std_error), n=int(n))


@dataclass(frozen=True)
class EtaCdfCheck:
    """Empirical vs analytic CDF of the serving path product."""

    x_grid: np.ndarray
    empirical: np.ndarray
    analytic: np.ndarray
    ks_distance: float
    n_trials: int


def scene_rng(seed: int, scene_index: int) -> np.random.Generator:
    """Deterministic substream for one scene.

    Counter-based (Philox): stream k starts at counter k * 2**128, so
    scenes never overlap regardless of how many draws each consumes, and
    any shard can reproduce any scene without fast-forwarding.
    """
    if scene_index < 0:
        raise ValueError("scene_index must be nonnegative")
    return np.random.Generator(
        np.random.Philox(key=int(seed), counter=int(scene_index) << 128))


def _ratio_estimate(numerators: np.ndarray, counts: np.ndarray) -> McEstimate:
    """Cluster ratio estimator: scenes are the independent units.

    p = sum(c_i) / sum(m_i); the linearized standard error is
    sqrt(n/(n-1) * sum((c_i - p m_i)^2)) / sum(m_i), which reduces to the
    usual binomial SE when every cluster holds one trial.
    """
    numerators = np.asarray(numerators, dtype=float)
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise EmptyEstimateError("no trials in any scene")
    p = numerators.sum() / total
    n = numerators.size
    if n > 1:
        resid = numerators - p * counts
        se = math.sqrt(n / (n - 1) * float(resid @ resid)) / total
    else:
        se = 0.0
    return McEstimate.from_mean_se(p, se, int(total))


def _mean_estimate(values: np.ndarray) -> McEstimate:
    """Equal-weight estimator over per-scene values (e.g. scene sum rates)."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        raise EmptyEstimateError("no scenes")
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McEstimate.from_mean_se(mean, se, n)


def _boundary_distance(user_xy: np.ndarray, point_xy: np.ndarray,
                       cell_radius: float) -> np.ndarray:
    """Distance from each user to the cell edge along the user-to-point ray.

    This is the far edge of the angular sector a reflector occupies as
    seen from the user; the availability law thins reflectors by the
    survival probability at this distance.
    """
    d = point_xy - user_xy
    norm = np.hypot(d[:, 0], d[:, 1])
    norm = np.where(norm > 0, norm, 1.0)
    ux = d[:, 0] / norm
    uy = d[:, 1] / norm
    proj = user_xy[:, 0] * ux + user_xy[:, 1] * uy
    inner = cell_radius ** 2 - (user_xy[:, 0] ** 2 + user_xy[:, 1] ** 2)
    return -proj + np.sqrt(np.maximum(inner + proj ** 2, 0.0))


# ---------------------------------------------------------------------------
# model-faithful oracles: single-stream, vectorized, one formula each


def oracle_p_los(d: float, params: SystemParams, mc: McConfig) -> McEstimate:
    """Physical estimate of the single-link LoS probability.

    Samples the segment process on a disc that covers every segment able
    to reach a link of length d, tests real intersections, and averages
    the survival indicator over mc.n_scenes independent scenes.
    """
    if d < 0:
        raise ValueError("d must be nonnegative")
    rng = scene_rng(mc.seed, 0)
    n = mc.n_scenes
    region = d + params.block_len_max / 2.0
    counts = rng.poisson(params.lambda_b * math.pi * region ** 2, size=n)
    total = int(counts.sum())
    centers = sample_disc_points(total, region, rng)
    lengths = rng.uniform(params.block_len_min, params.block_len_max, total)
    angles = rng.random(total) * _TWO_PI
    half_x = 0.5 * lengths * np.cos(angles)
    half_y = 0.5 * lengths * np.sin(angles)
    seg_a = centers - np.column_stack([half_x, half_y])
    seg_b = centers + np.column_stack([half_x, half_y])
    hits = np.zeros(total, dtype=bool)
    chunk = 2_000_000
    for lo in range(0, total, chunk):
        hits[lo:lo + chunk] = segment_hit_mask(
            (0.0, 0.0), (d, 0.0), seg_a[lo:lo + chunk], seg_b[lo:lo + chunk])
    scene_ids = np.repeat(np.arange(n), counts)
    blocked = np.zeros(n, dtype=bool)
    blocked[scene_ids[hits]] = True
    return _ratio_estimate((~blocked).astype(float), np.ones(n))


def oracle_reflection_prob(xi: float, params: SystemParams,
                           mc: McConfig) -> McEstimate:
    """Availability of at least one usable reflector, re-sampled per trial.

    Per trial: draw the reflector PPP on the disc, thin each point by the
    survival probability at its sector-edge distance from the user, and
    record whether any point survives.
    """
    if not 0 <= xi <= params.cell_radius:
        raise ValueError("xi must lie in [0, cell_radius]")
    rng = scene_rng(mc.seed, 0)
    n = mc.n_scenes
    lam = params.lambda_r * math.pi * params.cell_radius ** 2
    counts = rng.poisson(lam, size=n) if lam > 0 else np.zeros(n, dtype=int)
    total = int(counts.sum())
    points = sample_disc_points(total, params.cell_radius, rng)
    user = np.broadcast_to(np.array([xi, 0.0]), (total, 2))
    r_edge = _boundary_distance(user, points, params.cell_radius)
    kept = rng.random(total) < np.exp(-params.los_decay_rate * r_edge)
    trial_ids = np.repeat(np.arange(n), counts)
    any_kept = np.zeros(n, dtype=bool)
    any_kept[trial_ids[kept]] = True
    return _ratio_estimate(any_kept.astype(float), np.ones(n))


def _sample_eta(xi, params: SystemParams, rng: np.random.Generator,
                n: int) -> np.ndarray:
    """Minimum usable path product per trial (inf when none survives).

    Draws (s, cos theta) exactly as the min-product law assumes: s from
    the disc radial law, the cosine uniform on [-1, 1], survival at the
    resulting reflector-user distance.  xi may be a scalar (n independent
    trials at one user distance) or an (n,) array (one trial per user).
    """
    xi_arr = np.broadcast_to(np.asarray(xi, dtype=float), (n,))
    lam = params.lambda_r * math.pi * params.cell_radius ** 2
    counts = rng.poisson(lam, size=n) if lam > 0 else np.zeros(n, dtype=int)
    total = int(counts.sum())
    s = params.cell_radius * np.sqrt(rng.random(total))
    cos_t = 2.0 * rng.random(total) - 1.0
    xi_rep = np.repeat(xi_arr, counts)
    r = np.sqrt(np.maximum(s * s + xi_rep * xi_rep - 2.0 * s * xi_rep * cos_t,
                           0.0))
    kept = rng.random(total) < np.exp(-params.los_decay_rate * r)
    eta = np.full(n, np.inf)
    trial_ids = np.repeat(np.arange(n), counts)
    np.minimum.at(eta, trial_ids[kept], (s * r)[kept])
    return eta


def oracle_eta_cdf(xi: float, x_grid: np.ndarray, params: SystemParams,
                   mc: McConfig) -> EtaCdfCheck:
    """Empirical CDF of the serving path product vs the analytic CDF.

    The KS distance is the exact supremum over the sample points plus the
    saturation tail (the analytic CDF saturates below one because a trial
    may have no usable reflector at all).
    """
    if not 0 <= xi <= params.cell_radius:
        raise ValueError("xi must lie in [0, cell_radius]")
    x_grid = np.asarray(x_grid, dtype=float)
    rng = scene_rng(mc.seed, 0)
    n = mc.n_scenes
    eta = _sample_eta(xi, params, rng, n)
    finite = np.sort(eta[np.isfinite(eta)])
    k = finite.size

    empirical = np.searchsorted(finite, x_grid, side="right") / n
    analytic = np.atleast_1d(eta_cdf(x_grid, xi, params))

    ks = 0.0
    chunk = 4096
    for lo in range(0, k, chunk):
        vals = finite[lo:lo + chunk]
        f_vals = np.atleast_1d(eta_cdf(vals, xi, params))
        hi_steps = np.arange(lo + 1, lo + 1 + vals.size) / n
        lo_steps = np.arange(lo, lo + vals.size) / n
        ks = max(ks, float(np.max(np.abs(f_vals - hi_steps))),
                 float(np.max(np.abs(f_vals - lo_steps))))
    saturation = params.cell_radius * (params.cell_radius + xi)
    f_inf = float(eta_cdf(saturation, xi, params))
    ks = max(ks, abs(f_inf - k / n))
    return EtaCdfCheck(x_grid=x_grid, empirical=empirical, analytic=analytic,
                       ks_distance=ks, n_trials=n)


def oracle_cond_coverage_direct(xi: float, t: float, params: SystemParams,
                                mc: McConfig) -> McEstimate:
    """Direct-link coverage by raw fading draws (exponential tail check)."""
    if xi <= 0:
        raise ValueError("xi must be positive")
    rng = scene_rng(mc.seed, 0)
    n = mc.n_scenes
    radio = params.radio
    h = rng.exponential(float(radio.n_bs * radio.n_u), size=n)
    snr = radio.p0 * 10.0 ** radio.alpha * h / (xi ** radio.beta
                                                * radio.noise_power)
    covered = (snr > t).astype(float)
    return _ratio_estimate(covered, np.ones(n))


def oracle_cond_coverage_reflected(xi: float, t: float, params: SystemParams,
                                   mc: McConfig) -> McEstimate:
    """Reflected-link coverage: draw the fading pair, average the CDF.

    Estimates E[F(tau2)] by sampling h_s, h_r and evaluating the analytic
    path-product CDF at tau2 = (P0 h_s h_r 10^(2 alpha) / (sigma^2 T))^(1/beta).
    """
    if t <= 0:
        raise ValueError("threshold must be positive")
    rng = scene_rng(mc.seed, 0)
    n = mc.n_scenes
    radio = params.radio
    h_s = rng.exponential(float(radio.n_bs * radio.n_r), size=n)
    h_r = rng.exponential(float(radio.n_r * radio.n_u), size=n)
    tau2 = (radio.p0 * h_s * h_r * 10.0 ** (2.0 * radio.alpha)
            / (radio.noise_power * t)) ** (1.0 / radio.beta)
    vals = np.empty(n)
    chunk = 4096
    for lo in range(0, n, chunk):
        vals[lo:lo + chunk] = np.atleast_1d(
            eta_cdf(tau2[lo:lo + chunk], xi, params))
    return _ratio_estimate(vals, np.ones(n))


# ---------------------------------------------------------------------------
# scene engines


def _sample_users(params: SystemParams, rng: np.random.Generator):
    """Stage-2 draws: user count and positions (radial profile by thinning)."""
    peak = params.peak_user_density
    if peak <= 0:
        return np.zeros((0, 2))
    n0 = int(rng.poisson(peak * math.pi * params.cell_radius ** 2))
    pos = sample_disc_points(n0, params.cell_radius, rng)
    if isinstance(params.lambda_u, RadialProfile):
        xi = np.hypot(pos[:, 0], pos[:, 1])
        accept = rng.random(n0) < params.user_density(xi) / peak
        pos = pos[accept]
    return pos


def _fading_blocks(n: int, n_fading: int, radio, rng: np.random.Generator):
    """Stage-3 draws: (n, n_fading) fading blocks for every user."""
    h_d = rng.exponential(float(radio.n_bs * radio.n_u), size=(n, n_fading))
    h_s = rng.exponential(float(radio.n_bs * radio.n_r), size=(n, n_fading))
    h_r = rng.exponential(float(radio.n_r * radio.n_u), size=(n, n_fading))
    return h_d, h_s, h_r


def _aggregate(snr: np.ndarray, threshold: float, bandwidth: float):
    """Coverage count and draw-averaged scene rate from an SNR block."""
    covered = float(np.count_nonzero(snr > threshold))
    rate = bandwidth / math.log(2.0) * float(np.log1p(snr).sum()) / snr.shape[1]
    return covered, rate


def _model_faithful_scene(rng: np.random.Generator, params: SystemParams,
                          n_fading: int, tagged_xi: float | None):
    """One scene of the model-faithful tier.

    Mirrors the analytic composition term by term: direct association via
    the survival law at the user distance, availability and the serving
    path product drawn as two independent realizations of their
    respective laws (matching the formula, which multiplies the
    availability probability by the unconditional product CDF), and the
    threshold comparison applied to the same SNR expressions.
    """
    radio = params.radio
    decay = params.los_decay_rate
    if tagged_xi is None:
        pos = _sample_users(params, rng)
    else:
        pos = np.array([[tagged_xi, 0.0]])
    n = pos.shape[0]
    if n == 0:
        return 0.0, 0, 0.0
    xi_u = np.hypot(pos[:, 0], pos[:, 1])
    h_d, h_s, h_r = _fading_blocks(n, n_fading, radio, rng)

    direct = rng.random(n) < np.exp(-decay * xi_u)

    lam = params.lambda_r * math.pi * params.cell_radius ** 2
    counts = rng.poisson(lam, size=n) if lam > 0 else np.zeros(n, dtype=int)
    total = int(counts.sum())
    points = sample_disc_points(total, params.cell_radius, rng)
    user_rep = np.repeat(pos, counts, axis=0)
    r_edge = _boundary_distance(user_rep, points, params.cell_radius)
    kept = rng.random(total) < np.exp(-decay * r_edge)
    ids = np.repeat(np.arange(n), counts)
    available = np.zeros(n, dtype=bool)
    available[ids[kept]] = True

    eta = _sample_eta(xi_u, params, rng, n)

    amp_d = radio.p0 * 10.0 ** radio.alpha / radio.noise_power
    amp_r = radio.p0 * 10.0 ** (2.0 * radio.alpha) / radio.noise_power
    snr_d = amp_d * h_d / xi_u[:, None] ** radio.beta
    with np.errstate(over="ignore"):
        snr_r = amp_r * h_s * h_r / eta[:, None] ** radio.beta
    serve_d = direct[:, None]
    serve_r = (~direct & available)[:, None]
    snr = np.where(serve_d, snr_d, np.where(serve_r, snr_r, 0.0))
    covered, rate = _aggregate(snr, params.threshold, radio.bandwidth_hz)
    return covered, n * n_fading, rate


def _physical_scene(rng: np.random.Generator, params: SystemParams,
                    n_fading: int, tagged_xi: float | None):
    """One scene of the physical tier.

    Builds the segment process once and shares it across every link of
    the scene, so the base-to-user, base-to-reflector, and
    reflector-to-user blockage states are geometrically coupled rather
    than independent.  Association picks the strongest usable path by
    mean power: the direct metric 10^alpha / xi^beta against the best
    reflected metric n_r^2 10^(2 alpha) / (s r)^beta.
    """
    radio = params.radio
    cell = params.cell_radius

    region = cell + params.block_len_max / 2.0
    centers, lengths, angles = sample_blockage_arrays(
        params.lambda_b, region, params.block_len_min, params.block_len_max,
        rng)
    half = np.column_stack([0.5 * lengths * np.cos(angles),
                            0.5 * lengths * np.sin(angles)])
    seg_a = centers - half
    seg_b = centers + half

    if tagged_xi is None:
        pos = _sample_users(params, rng)
    else:
        pos = np.array([[tagged_xi, 0.0]])
    n = pos.shape[0]
    if n == 0:
        return 0.0, 0, 0.0
    xi_u = np.hypot(pos[:, 0], pos[:, 1])
    h_d, h_s, h_r = _fading_blocks(n, n_fading, radio, rng)

    lam = params.lambda_r * math.pi * cell ** 2
    m = int(rng.poisson(lam)) if lam > 0 else 0
    ris = sample_disc_points(m, cell, rng)

    base = np.zeros((n, 2))
    direct_los = los_mask(pos, base, seg_a, seg_b)
    xi_eff = np.maximum(xi_u, MIN_LINK_DISTANCE_M)
    metric_d = np.where(direct_los, 10.0 ** radio.alpha / xi_eff ** radio.beta,
                        0.0)

    amp_d = radio.p0 * 10.0 ** radio.alpha / radio.noise_power
    amp_r = radio.p0 * 10.0 ** (2.0 * radio.alpha) / radio.noise_power
    snr_d = amp_d * h_d / xi_eff[:, None] ** radio.beta

    if m > 0:
        # base-to-reflector links are LoS by deployment; only the
        # reflector-to-user leg sees the shared blockage set
        s_l = np.maximum(np.hypot(ris[:, 0], ris[:, 1]), MIN_LINK_DISTANCE_M)
        pair_a = np.repeat(pos, m, axis=0)
        pair_b = np.tile(ris, (n, 1))
        pair_los = los_mask(pair_a, pair_b, seg_a, seg_b).reshape(n, m)
        diff = pos[:, None, :] - ris[None, :, :]
        r_ul = np.maximum(np.hypot(diff[..., 0], diff[..., 1]),
                          MIN_LINK_DISTANCE_M)
        gain = float(radio.n_r) ** 2 * 10.0 ** (2.0 * radio.alpha)
        metric_r = np.where(pair_los, gain / (s_l[None, :] * r_ul)
                            ** radio.beta, 0.0)
        best = np.argmax(metric_r, axis=1)
        best_metric = metric_r[np.arange(n), best]
        product = s_l[best] * r_ul[np.arange(n), best]
    else:
        best_metric = np.zeros(n)
        product = np.ones(n)

    use_direct = (metric_d >= best_metric) & (metric_d > 0)
    use_reflect = best_metric > metric_d

    snr_r = amp_r * h_s * h_r / product[:, None] ** radio.beta
    snr = np.where(use_direct[:, None], snr_d,
                   np.where(use_reflect[:, None], snr_r, 0.0))
    covered, rate = _aggregate(snr, params.threshold, radio.bandwidth_hz)
    return covered, n * n_fading, rate


# ---------------------------------------------------------------------------
# scene loop, sharding, public estimators


def _scene_block(params: SystemParams, mc: McConfig, lo: int, hi: int,
                 tagged_xi: float | None):
    """Run scenes [lo, hi) on their own substreams; return per-scene arrays."""
    engine = (_model_faithful_scene if mc.mode == "model_faithful"
              else _physical_scene)
    k = hi - lo
    cov = np.zeros(k)
    trials = np.zeros(k, dtype=np.int64)
    rates = np.zeros(k)
    for j in range(k):
        rng = scene_rng(mc.seed, lo + j)
        c, t, r = engine(rng, params, mc.n_fading_per_scene, tagged_xi)
        cov[j] = c
        trials[j] = t
        rates[j] = r
    return cov, trials, rates


def _run_scene_blocks(params: SystemParams, mc: McConfig,
                      tagged_xi: float | None = None):
    """All scenes, serial or sharded; reduction order is fixed either way.

    Shards own contiguous scene-index ranges and every scene seeds its own
    substream, so the concatenated per-scene arrays are bit-identical to a
    serial run regardless of shard count.
    """
    shards = min(mc.parallel_shards, mc.n_scenes)
    bounds = np.linspace(0, mc.n_scenes, shards + 1).astype(int)
    if shards <= 1:
        return _scene_block(params, mc, 0, mc.n_scenes, tagged_xi)
    parts = []
    with ProcessPoolExecutor(max_workers=shards) as pool:
        futures = [pool.submit(_scene_block, params, mc, int(lo), int(hi),
                               tagged_xi)
                   for lo, hi in zip(bounds[:-1], bounds[1:])]
        for fut in futures:
            parts.append(fut.result())
    cov = np.concatenate([p[0] for p in parts])
    trials = np.concatenate([p[1] for p in parts])
    rates = np.concatenate([p[2] for p in parts])
    return cov, trials, rates


def simulate_coverage(params: SystemParams, mc: McConfig) -> McEstimate:
    """Network coverage probability for the configured tier.

    Scenes are independent clusters; within a scene every user and fading
    draw contributes one threshold trial.  Raises EmptyEstimateError when
    no scene produced a user.
    """
    cov, trials, _ = _run_scene_blocks(params, mc)
    return _ratio_estimate(cov, trials)


def simulate_sum_rate(params: SystemParams, mc: McConfig) -> McEstimate:
    """Mean cell sum rate (bit/s) for the configured tier.

    Per-scene sum rates average the fading draws within the scene; the
    estimate is the equal-weight mean over scenes, so scenes with no
    users contribute zero rate rather than being dropped.
    """
    _, _, rates = _run_scene_blocks(params, mc)
    return _mean_estimate(rates)


def simulate_cond_coverage(xi: float, params: SystemParams,
                           mc: McConfig) -> McEstimate:
    """Coverage of a single tagged user pinned at distance xi.

    Every scene holds exactly one user at (xi, 0); the rest of the scene
    (blockages, reflectors, fading) is drawn as usual for the tier.
    """
    if not 0 < xi <= params.cell_radius:
        raise ValueError("xi must lie in (0, cell_radius]")
    cov, trials, _ = _run_scene_blocks(params, mc, tagged_xi=float(xi))
    return _ratio_estimate(cov, trials)


def simulate_user_rate(xi: float, params: SystemParams,
                       mc: McConfig) -> McEstimate:
    """Mean rate (bit/s) of a single tagged user pinned at distance xi."""
    if not 0 < xi <= params.cell_radius:
        raise ValueError("xi must lie in (0, cell_radius]")
    _, _, rates = _run_scene_blocks(params, mc, tagged_xi=float(xi))
    return _mean_estimate(rates)


_GAP_GRID = (0.0, 1.59e-4, 3.18e-4, 6.37e-4, 9.55e-4, 1.59e-3)


def gap_report(params: SystemParams, mc: McConfig,
               lambda_r_grid=None) -> str:
    """Coverage from all three engines across a reflector-density grid.

    Returns a fixed-format text table: analytic value, model-faithful and
    physical estimates with 95% intervals, and the physical-minus-analytic
    gap.  Identical inputs produce identical bytes (no timestamps, fixed
    formatting), so the output doubles as a regression artifact.
    """
    grid = _GAP_GRID if lambda_r_grid is None else tuple(lambda_r_grid)
    lines = [
        "coverage model gap report",
        f"seed={mc.seed} scenes={mc.n_scenes} "
        f"fading_per_scene={mc.n_fading_per_scene} "
        f"threshold={params.threshold:.6e}",
        f"lambda_b={params.lambda_b:.6e} cell_radius={params.cell_radius:.1f}",
        "",
        f"{'lambda_r':>12}  {'analytic':>9}  "
        f"{'model_faithful [95% ci]':>30}  "
        f"{'physical [95% ci]':>30}  {'phys-ana':>9}",
    ]
    for lam_r in grid:
        p2 = replace(params, lambda_r=float(lam_r))
        ana = ergodic_coverage(params.threshold, p2)
        mf = simulate_coverage(p2, replace(mc, mode="model_faithful"))
        ph = simulate_coverage(p2, replace(mc, mode="physical"))
        lines.append(
            f"{lam_r:>12.6e}  {ana:>9.6f}  "
            f"{mf.mean:>10.6f} [{mf.ci95_low:.6f},{mf.ci95_high:.6f}]  "
            f"{ph.mean:>10.6f} [{ph.ci95_low:.6f},{ph.ci95_high:.6f}]  "
            f"{ph.mean - ana:>+9.6f}")
    return "\n".join(lines) + "\n"
