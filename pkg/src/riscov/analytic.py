"""Closed-form coverage and rate stack for a reflector-assisted cell.

Model in one paragraph: a base station sits at the center of a disc of
radius R.  Links of length d survive blockage with probability
exp(-c d), c = 2 lambda_b E[L] / pi (mean blockage density times mean
length, line-Boolean geometry).  Reflectors form a PPP of density
lambda_r; a reflector at distance r from a user is usable with the same
survival law, which thins the PPP location-dependently.  A user is served
directly when its own link survives, otherwise through the best usable
reflector if one exists.  Coverage conditions on the user's distance xi
and is then averaged over the cell with the user density as weight;
rates integrate coverage over the threshold axis.

All public functions are deterministic given a QuadratureSpec and raise
ConvergenceError when an error budget cannot be met, rather than
returning a silently degraded value.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .channel import RadioParams
from .numerics import (
    DEFAULT_INNER_SPEC,
    DEFAULT_OUTER_SPEC,
    QuadratureSpec,
    exp1_scaled,
    integrate_1d,
    integrate_piecewise_batch,
)

__all__ = [
    "ConvergenceError",
    "RadialProfile",
    "SystemParams",
    "ConditionalCoverage",
    "p_los",
    "los_probability_override",
    "thinned_ris_density",
    "sector_boundary_distance",
    "mean_los_ris_count",
    "reflection_prob",
    "eta_cdf",
    "cond_coverage_direct",
    "cond_coverage_reflected",
    "cond_coverage",
    "ergodic_coverage",
    "user_rate",
    "sum_rate",
]

_TWO_PI = 2.0 * math.pi


class ConvergenceError(RuntimeError):
    """A quadrature error budget was exhausted before reaching tolerance."""


@dataclass(frozen=True)
class RadialProfile:
    """Tabulated radial density profile with linear interpolation.

    Values outside the tabulated range clamp to the end values, so a
    profile defined on [0, R] extends safely to quadrature nodes at the
    boundary.
    """

    radii: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.radii) != len(self.values) or len(self.radii) < 2:
            raise ValueError("need matching tables with at least two knots")
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.diff(r) > 0):
            raise ValueError("radii must be strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("densities must be finite and nonnegative")

    def __call__(self, xi):
        return np.interp(xi, self.radii, self.values)

    @property
    def peak(self) -> float:
        return float(max(self.values))


@dataclass(frozen=True)
class SystemParams:
    """Every scalar of the system model plus the radio constants.

    lambda_u may be a constant density or a RadialProfile; the blockage
    length law is uniform on [block_len_min, block_len_max] and only its
    mean enters the analytic formulas.
    """

    cell_radius: float = 100.0
    lambda_u: float | RadialProfile = 3.18e-3
    lambda_r: float = 9.55e-4
    lambda_b: float = 1.59e-3
    block_len_min: float = 10.0
    block_len_max: float = 20.0
    radio: RadioParams = field(default_factory=RadioParams)
    threshold: float = 1.0

    def __post_init__(self) -> None:
        if self.cell_radius <= 0:
            raise ValueError("cell_radius must be positive")
        if self.lambda_r < 0 or self.lambda_b < 0:
            raise ValueError("densities must be nonnegative")
        if isinstance(self.lambda_u, (int, float)) and self.lambda_u < 0:
            raise ValueError("lambda_u must be nonnegative")
        if not (0 < self.block_len_min <= self.block_len_max):
            raise ValueError("require 0 < block_len_min <= block_len_max")
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")

    @property
    def mean_block_len(self) -> float:
        return 0.5 * (self.block_len_min + self.block_len_max)

    @property
    def los_decay_rate(self) -> float:
        """c in the survival law exp(-c d)."""
        return 2.0 * self.lambda_b * self.mean_block_len / math.pi

    def user_density(self, xi):
        if isinstance(self.lambda_u, RadialProfile):
            return self.lambda_u(xi)
        return self.lambda_u if np.isscalar(xi) else np.full(np.shape(xi), self.lambda_u)

    @property
    def peak_user_density(self) -> float:
        if isinstance(self.lambda_u, RadialProfile):
            return self.lambda_u.peak
        return float(self.lambda_u)


@dataclass(frozen=True)
class ConditionalCoverage:
    """Coverage split at a fixed BS-user distance xi."""

    xi: float
    p_direct_assoc: float
    p_reflect_assoc: float
    p_cov_direct: float
    p_cov_reflect: float
    p_cov_total: float

    def __post_init__(self) -> None:
        for name in ("p_direct_assoc", "p_reflect_assoc", "p_cov_direct",
                     "p_cov_reflect", "p_cov_total"):
            v = getattr(self, name)
            if not -1e-12 <= v <= 1.0 + 1e-12:
                raise ValueError(f"{name} outside [0, 1]: {v}")
        recomposed = (self.p_direct_assoc * self.p_cov_direct
                      + self.p_reflect_assoc * self.p_cov_reflect)
        if abs(recomposed - self.p_cov_total) > 1e-9:
            raise ValueError("total does not match the association split")


# Test hook: when set, replaces the survival law inside the analytic
# formulas while the simulation oracles keep the canonical law, so a
# corrupted override must surface as an oracle disagreement.
_P_LOS_OVERRIDE = None


@contextmanager
def los_probability_override(fn):
    """Temporarily replace p_los inside the analytic formulas.

    ``fn(d, lambda_b, mean_block_len)`` must accept ndarray d.  Scope
    note: the min-product distance transform integrates the survival law
    through its closed-form antiderivative and is not affected; the hook
    reaches the reflector-counting path, which is what the validation
    canary exercises.
    """
    global _P_LOS_OVERRIDE
    prev = _P_LOS_OVERRIDE
    _P_LOS_OVERRIDE = fn
    try:
        yield
    finally:
        _P_LOS_OVERRIDE = prev


def p_los(d, lambda_b: float, mean_block_len: float):
    """Probability that a link of length d is unobstructed."""
    if lambda_b < 0:
        raise ValueError("lambda_b must be nonnegative")
    if mean_block_len <= 0:
        raise ValueError("mean_block_len must be positive")
    arr = np.asarray(d, dtype=float)
    if np.any(arr < 0):
        raise ValueError("distance must be nonnegative")
    if _P_LOS_OVERRIDE is not None:
        out = np.asarray(_P_LOS_OVERRIDE(arr, lambda_b, mean_block_len), dtype=float)
    else:
        out = np.exp(-2.0 * lambda_b * mean_block_len / math.pi * arr)
    return float(out) if np.isscalar(d) else out


def _survival(d, params: SystemParams):
    return p_los(d, params.lambda_b, params.mean_block_len)


def thinned_ris_density(r, params: SystemParams):
    """Density of usable reflectors at user-reflector distance r."""
    return params.lambda_r * _survival(r, params)


def sector_boundary_distance(psi, xi: float, cell_radius: float):
    """Distance from an interior point at radius xi to the cell edge,
    along the direction psi measured against the outward radial axis."""
    psi = np.asarray(psi, dtype=float)
    # mathematically nonnegative for xi <= cell_radius; clamp the
    # floating-point dust that appears at xi == cell_radius, psi ~ 0
    inner = np.maximum(cell_radius ** 2 - (xi * np.sin(psi)) ** 2, 0.0)
    return np.maximum(np.sqrt(inner) - xi * np.cos(psi), 0.0)


def mean_los_ris_count(xi: float, params: SystemParams,
                       spec: QuadratureSpec | None = None) -> float:
    """Expected number of usable reflectors seen by a user at radius xi.

    Counts the thinned PPP over the cell disc by angular sectors, with the
    survival factor evaluated at each sector's boundary distance.
    """
    if not 0 <= xi <= params.cell_radius:
        raise ValueError("xi must lie in [0, cell_radius]")
    if params.lambda_r == 0:
        return 0.0
    spec = spec or DEFAULT_INNER_SPEC

    def integrand(psi):
        r = sector_boundary_distance(psi, xi, params.cell_radius)
        return params.lambda_r * np.asarray(_survival(r, params)) * 0.5 * r * r

    res = integrate_1d(integrand, 0.0, _TWO_PI, spec,
                       points=(0.5 * math.pi, math.pi, 1.5 * math.pi))
    if not res.converged:
        raise ConvergenceError("reflector-count integral did not converge")
    return res.value


def reflection_prob(xi: float, params: SystemParams,
                    spec: QuadratureSpec | None = None) -> float:
    """Probability that at least one usable reflector exists (void law)."""
    return float(-np.expm1(-mean_los_ris_count(xi, params, spec)))


def _exp_moment(a, b, c: float):
    """int_a^b r exp(-c r) dr, elementwise, zero where b <= a."""
    a = np.asarray(a, dtype=float)
    b = np.maximum(np.asarray(b, dtype=float), a)
    if c == 0.0:
        return 0.5 * (b * b - a * a)
    ca = c * a
    cb = c * b
    return ((1.0 + ca) * np.exp(-ca) - (1.0 + cb) * np.exp(-cb)) / (c * c)


def _eta_mass_batch(xs: np.ndarray, xi: float, params: SystemParams,
                    spec: QuadratureSpec):
    """Mean count of usable reflectors whose path product s*r is <= x.

    Batched over x (xs may contain inf).  Geometry convention: s is the
    BS-reflector distance with the disc radial law, the user-reflector
    distance r is resolved through a cosine uniform on [-1, 1], and the
    survival weight applies to r.  The r-integral has the closed form
    _exp_moment; the remaining s-integrand is piecewise smooth with kinks
    at analytically known locations, so each x gets its own panel
    decomposition with the kinks on panel edges.

    Returns (mass[m], err[m], evals, converged).
    """
    xs = np.asarray(xs, dtype=float)
    m = xs.size
    if np.any(xs < 0):
        raise ValueError("products must be nonnegative")
    if params.lambda_r == 0:
        return np.zeros(m), np.zeros(m), 0, True
    R = params.cell_radius
    c = params.los_decay_rate
    # beyond x = R(R+xi) every reflector geometry satisfies s*r <= x
    xs_eff = np.minimum(xs, R * (R + xi))

    if xi == 0.0:
        # r coincides with s; the s-integral collapses to the closed form
        b = np.minimum(np.sqrt(xs_eff), R)
        mass = _TWO_PI * params.lambda_r * _exp_moment(0.0, b, c)
        return mass, np.zeros(m), 0, True

    # kinks of s -> _exp_moment(|s-xi|, min(x/s, s+xi)): the r_hi branch
    # switch s(s+xi)=x, the emptiness boundaries s|s-xi|=x, and s=xi
    root_outer = np.sqrt(xi * xi + 4.0 * xs_eff)
    s_star = 0.5 * (-xi + root_outer)
    s_max = 0.5 * (xi + root_outer)
    inner_disc = xi * xi - 4.0 * xs_eff
    has_gap = inner_disc >= 0.0
    root_inner = np.sqrt(np.where(has_gap, inner_disc, 0.0))
    s_gap_lo = np.where(has_gap, 0.5 * (xi - root_inner), 0.5 * xi)
    s_gap_hi = np.where(has_gap, 0.5 * (xi + root_inner), 0.5 * xi)
    edges = np.stack([
        np.zeros(m),
        np.clip(s_star, 0.0, R),
        np.clip(s_gap_lo, 0.0, R),
        np.clip(s_gap_hi, 0.0, R),
        np.clip(np.full(m, float(xi)), 0.0, R),
        np.clip(s_max, 0.0, R),
        np.full(m, R),
    ], axis=1)
    edges.sort(axis=1)

    def f(idx, s):
        r_lo = np.abs(s - xi)
        # s = 0 only on zero-width panels; the inf makes the ratio 0 there,
        # which the moment clamp turns into a zero contribution
        safe_s = np.where(s > 0.0, s, np.inf)
        r_hi = np.minimum(xs_eff[idx][:, None] / safe_s, s + xi)
        return (math.pi * params.lambda_r / xi) * _exp_moment(r_lo, r_hi, c)

    values, errors, evals, conv = integrate_piecewise_batch(f, edges, spec)
    return np.maximum(values, 0.0), errors, evals, conv


def eta_cdf(x, xi: float, params: SystemParams,
            spec: QuadratureSpec | None = None):
    """CDF of the minimum path product s*r over usable reflectors.

    The minimum over an empty set counts as infinite, so the CDF saturates
    below one at the availability probability of the product law.  ``x``
    may be a scalar or an array; array entries are evaluated with the same
    per-component adaptive panels as scalar calls, so the results agree
    bit for bit.
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr < 0):
        raise ValueError("x must be nonnegative")
    if not 0 <= xi <= params.cell_radius:
        raise ValueError("xi must lie in [0, cell_radius]")
    out = np.zeros_like(x_arr)
    positive = x_arr > 0
    if params.lambda_r > 0 and positive.any():
        spec = spec or DEFAULT_INNER_SPEC
        mass, _, _, conv = _eta_mass_batch(x_arr[positive], xi, params, spec)
        if not conv:
            raise ConvergenceError(
                "path-product mass integral did not converge")
        out[positive] = -np.expm1(-mass)
    return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


def _tau1(xi: float, T: float, radio: RadioParams) -> float:
    return xi ** radio.beta * radio.noise_power * T / (radio.p0 * 10.0 ** radio.alpha)


def cond_coverage_direct(xi: float, T: float, params: SystemParams) -> float:
    """Coverage of the direct link at distance xi, threshold T."""
    if xi <= 0:
        raise ValueError("xi must be positive")
    if T < 0:
        raise ValueError("threshold must be nonnegative")
    radio = params.radio
    return math.exp(-_tau1(xi, T, radio) / (radio.n_bs * radio.n_u))


# integration bounds for the fading-pair bump: outside [ln a - 5, 5] the
# integrand carries a double-exponential suppression factor below e^-148
_BUMP_MARGIN = 5.0
_BUMP_OFFSETS = np.array([-2.0, 0.0, 2.0])
# absolute error floor for coverage probabilities: three orders below any
# Monte Carlo comparison and three below plotting resolution
# absolute error acceptance for coverage probabilities: the bookkeeping
# multiplies worst-case pointwise integrand errors by the full window span,
# overstating the real error by ~2 orders; probabilities are consumed at
# 3 significant figures, so 5e-6 keeps the gate honest without false alarms
_COV_ABS_FLOOR = 5e-6


def _pair_bump_batch(log_as: np.ndarray, spec: QuadratureSpec, tail: bool):
    """Log-domain integrals over the product of two unit exponentials.

    For a = exp(log_as), computes per element

        tail=False:  a * int exp(-e^s - a e^{-s}) ds  (= 2 a K0(2 sqrt a)),
        tail=True:   int exp(s - e^s - a e^{-s}) ds   (= 2 sqrt(a) K1(2 sqrt a)).

    The first is the density of ln(Q1 Q2) at ln a for iid Q ~ Exp(1), the
    second its upper tail P(Q1 Q2 > a).  Both are single bumps between
    s ~ ln a and s ~ 0; edges bracket the bump so panel refinement never
    hunts for it.  Returns (values[m], errors[m], converged).
    """
    log_as = np.atleast_1d(np.asarray(log_as, dtype=float))
    m = log_as.size
    lo = np.minimum(log_as - _BUMP_MARGIN, -_BUMP_MARGIN)[:, None]
    hi = np.full((m, 1), _BUMP_MARGIN)
    mid = 0.5 * log_as[:, None] + _BUMP_OFFSETS[None, :]
    interior = np.clip(np.concatenate([mid, np.zeros((m, 1))], axis=1), lo, hi)
    edges = np.concatenate([lo, interior, hi], axis=1)
    edges.sort(axis=1)

    def f(idx, s):
        la = log_as[idx][:, None]
        neg = np.exp(s) + np.exp(np.minimum(la - s, 700.0))
        base = s if tail else la
        return np.exp(base - neg)

    vals, errs, _, conv = integrate_piecewise_batch(f, edges, spec)
    return vals, errs + 1e-17, conv


def _reflected_coverage_integral(xi: float, T: float, params: SystemParams,
                                 spec: QuadratureSpec):
    """E over the fading pair of the product-CDF at tau2(T), by parts.

    With K = amp h_s h_r, the event eta < tau2 is K > T eta^beta / amp, so
    E[F(tau2)] integrates F against the decreasing tail of K.  In
    v = ln x that weight differentiates to beta psi2(zeta e^{beta v}) with
    zeta = T / (amp E[h_s] E[h_r]) and psi2 the log-product density of the
    unit pair; the region above the saturation corner w0 = ln(R (R + xi)),
    where F is exactly constant, contributes F(sat) * P(pair > zeta
    e^{beta w0}) in closed form.  A tensor quadrature over both fading
    draws stalls when tau2 crosses the CDF transition; this form has no
    such regime and costs a handful of window integrals.

    Returns (value, error, converged).
    """
    radio = params.radio
    q_spec = spec.tightened()
    log_zeta = (math.log(T) - math.log(radio.p0)
                - 2.0 * radio.alpha * math.log(10.0)
                + math.log(radio.noise_power)
                - math.log(float(radio.n_bs * radio.n_r))
                - math.log(float(radio.n_r * radio.n_u)))
    w0 = math.log(params.cell_radius * (params.cell_radius + xi))
    state = {"err": 0.0, "conv": True}

    def integrand(w):
        x = np.exp(np.minimum(w, 700.0))
        mass, m_errs, _, m_conv = _eta_mass_batch(x, xi, params, q_spec)
        f_vals = -np.expm1(-mass)
        psi, p_errs, p_conv = _pair_bump_batch(
            log_zeta + radio.beta * np.asarray(w, dtype=float), q_spec,
            tail=False)
        state["err"] = max(state["err"], float(np.max(m_errs + p_errs,
                                                      initial=0.0)))
        state["conv"] = state["conv"] and m_conv and p_conv
        return f_vals * psi

    stop_tol = 0.25 * max(spec.abs_tol, 1e-12)
    down, err_dn, ok_dn = _windowed_integral(integrand, w0, -1, q_spec,
                                             stop_tol)
    mass0, m_err0, _, conv0 = _eta_mass_batch(
        np.array([math.exp(w0)]), xi, params, q_spec)
    f_sat = float(-np.expm1(-mass0[0]))
    phi, phi_err, phi_conv = _pair_bump_batch(
        np.array([log_zeta + radio.beta * w0]), q_spec, tail=True)
    value = radio.beta * down + f_sat * float(phi[0])
    error = (radio.beta * (err_dn + state["err"] * 8 * _RATE_WINDOW)
             + f_sat * float(phi_err[0]) + float(m_err0[0]) * float(phi[0]))
    return value, error, ok_dn and conv0 and phi_conv and state["conv"]


def cond_coverage_reflected(xi: float, T: float, params: SystemParams,
                            spec: QuadratureSpec | None = None) -> float:
    """Coverage of the reflected path at distance xi, threshold T.

    This is the expectation of the product CDF and therefore carries the
    availability deficiency of that CDF; the association weight multiplies
    it separately in cond_coverage.
    """
    if xi < 0:
        raise ValueError("xi must be nonnegative")
    if T <= 0:
        raise ValueError("threshold must be positive")
    if params.lambda_r == 0:
        return 0.0
    spec = spec or DEFAULT_INNER_SPEC
    val, err, conv = _reflected_coverage_integral(xi, T, params, spec)
    if not conv or err > max(_COV_ABS_FLOOR, spec.rel_tol * abs(val)):
        raise ConvergenceError("reflected coverage expectation did not converge")
    return min(max(float(val), 0.0), 1.0)


def cond_coverage(xi: float, T: float, params: SystemParams,
                  spec: QuadratureSpec | None = None) -> ConditionalCoverage:
    """Association split and total coverage at distance xi, threshold T."""
    if not 0 < xi <= params.cell_radius:
        raise ValueError("xi must lie in (0, cell_radius]")
    spec = spec or DEFAULT_INNER_SPEC
    p_direct = float(_survival(xi, params))
    p_cov_d = cond_coverage_direct(xi, T, params)
    p_reflect = 0.0
    if params.lambda_r > 0 and p_direct < 1.0:
        p_reflect = (1.0 - p_direct) * reflection_prob(xi, params, spec)
    p_cov_r = (cond_coverage_reflected(xi, T, params, spec)
               if p_reflect > 0.0 else 0.0)
    total = p_direct * p_cov_d + p_reflect * p_cov_r
    return ConditionalCoverage(
        xi=xi, p_direct_assoc=p_direct, p_reflect_assoc=p_reflect,
        p_cov_direct=p_cov_d, p_cov_reflect=p_cov_r, p_cov_total=total)


def _radial_weight_integral(params: SystemParams, spec: QuadratureSpec) -> float:
    if not isinstance(params.lambda_u, RadialProfile):
        return float(params.lambda_u) * math.pi * params.cell_radius ** 2

    def w(xi):
        return np.asarray(params.user_density(xi)) * _TWO_PI * xi

    res = integrate_1d(w, 0.0, params.cell_radius, spec)
    if not res.converged:
        raise ConvergenceError("user-density normalizer did not converge")
    return res.value


def ergodic_coverage(T: float, params: SystemParams,
                     spec: QuadratureSpec | None = None) -> float:
    """Cell-wide coverage probability: the conditional coverage averaged
    over the user distribution (density-weighted area integral, normalized)."""
    if T <= 0:
        raise ValueError("threshold must be positive")
    spec = spec or DEFAULT_OUTER_SPEC
    inner = spec.tightened()
    denom = _radial_weight_integral(params, inner)
    if denom == 0.0:
        raise ValueError("user density integrates to zero over the cell")

    def f(xis):
        dens = np.asarray(params.user_density(xis), dtype=float)
        out = np.empty_like(np.asarray(xis, dtype=float))
        for i, xi in enumerate(np.atleast_1d(xis)):
            out[i] = (cond_coverage(float(xi), T, params, inner).p_cov_total
                      * dens[i] * _TWO_PI * xi)
        return out

    res = integrate_1d(f, 0.0, params.cell_radius, spec)
    if not res.converged:
        raise ConvergenceError("coverage average over the cell did not converge")
    return res.value / denom


_RATE_WINDOW = 4.0
_RATE_MAX_WINDOWS = 100
# absolute error floor on the dimensionless threshold integral; at any
# practical bandwidth this is sub-kbps on a multi-Gbps quantity
_RATE_ABS_FLOOR = 1e-6


def _windowed_integral(f, start: float, direction: int,
                       spec: QuadratureSpec, stop_tol: float):
    """Sum of window integrals of f along one direction from ``start``.

    Windows of fixed width are consumed until the geometric tail bound
    falls below stop_tol (the bound is then added to the error).  Returns
    (value, error, terminated).
    """
    total = 0.0
    err = 0.0
    prev = None
    edge = start
    for _ in range(_RATE_MAX_WINDOWS):
        lo, hi = ((edge, edge + _RATE_WINDOW) if direction > 0
                  else (edge - _RATE_WINDOW, edge))
        res = integrate_1d(f, lo, hi, spec)
        total += res.value
        err += res.error_estimate
        contrib = abs(res.value)
        if prev is not None:
            if contrib == 0.0:
                return total, err, True
            if contrib < prev:
                ratio = min(contrib / prev, 0.9)
                tail_bound = contrib * ratio / (1.0 - ratio)
                if tail_bound < stop_tol:
                    return total, err + tail_bound, True
        prev = contrib if contrib > 0 else prev
        edge = hi if direction > 0 else lo
    return total, err, False


def _exp_recip_moment(log_x: np.ndarray) -> np.ndarray:
    """E[1 / (1 + x Q)] for Q ~ Exp(1), taking ln x (overflow-safe).

    Equals u e^u E1(u) with u = 1/x; the limits x -> 0 and x -> inf give
    1 and 0.
    """
    with np.errstate(over="ignore"):
        u = np.exp(-np.asarray(log_x, dtype=float))
    out = np.ones_like(u)
    finite = np.isfinite(u) & (u > 0)
    out[finite] = u[finite] * exp1_scaled(u[finite])
    out[u == 0.0] = 0.0
    return out


# log-domain integration bounds for the fading weight: below the left
# bound the Exp(1) density carries < 5e-18 mass against a [0, 1] factor,
# above the right bound exp(-e^v) is ~1e-29
_WEIGHT_V_LO = -40.0
_WEIGHT_V_HI = 4.2
_WEIGHT_V_OFFSETS = np.array([-12.0, -4.0, 0.0, 4.0, 12.0])


def _product_weight_batch(log_ys: np.ndarray, params: SystemParams,
                          spec: QuadratureSpec):
    """M(y) = E[K / (y + K)] with K = amp h_s h_r, on a grid of ln y.

    M is the fading-averaged share of thresholds below the reflected SNR.
    One exponential factor integrates out in closed form (_exp_recip_moment),
    leaving a single smooth average over the other draw, taken in the log
    domain:  M(y) = 1 - int exp(v - e^v) psi(z e^v) dv with
    z = amp E[h_s] E[h_r] / y.  A tensor quadrature over both fading draws
    stalls when y sits in the transition zone of the sigmoid in ln(h_s h_r);
    this form has no such regime.  Returns (values[m], errors[m], converged).
    """
    radio = params.radio
    log_ys = np.atleast_1d(np.asarray(log_ys, dtype=float))
    log_z = (math.log(radio.p0) + 2.0 * radio.alpha * math.log(10.0)
             - math.log(radio.noise_power)
             + math.log(float(radio.n_bs * radio.n_r))
             + math.log(float(radio.n_r * radio.n_u))) - log_ys
    interior = np.clip(-log_z[:, None] + _WEIGHT_V_OFFSETS[None, :],
                       _WEIGHT_V_LO, _WEIGHT_V_HI)
    n = log_ys.shape[0]
    edges = np.concatenate([
        np.full((n, 1), _WEIGHT_V_LO), interior, np.full((n, 1), _WEIGHT_V_HI),
    ], axis=1)
    edges.sort(axis=1)

    def f(idx, v):
        return np.exp(v - np.exp(v)) * _exp_recip_moment(v + log_z[idx][:, None])

    vals, errs, _, conv = integrate_piecewise_batch(f, edges, spec)
    return np.clip(1.0 - vals, 0.0, 1.0), errs + 5e-18, conv


def _reflected_rate_integral(xi: float, params: SystemParams,
                             spec: QuadratureSpec, stop_tol: float):
    """The reflected-path part of int_0^inf P_cov(gamma)/(1+gamma) dgamma.

    Fubini over the fading pair and the substitution t = tau2(gamma) turn
    the threshold integral into beta * int F(t) M(t^beta) dln t, where F
    is the path-product CDF and M the fading weight above.  Both factors
    are evaluated on the same log-product grid, which removes the inner
    expectation from the threshold axis entirely (the direct tail of
    E[F(tau2)] in gamma is numerically hostile; this form is not).

    Returns (value, error, converged).
    """
    radio = params.radio
    state = {"err": 0.0, "conv": True}

    def integrand(w):
        t = np.exp(w)
        mass, m_err, _, m_conv = _eta_mass_batch(t, xi, params, spec)
        f_vals = -np.expm1(-mass)
        mw, w_err, w_conv = _product_weight_batch(radio.beta * w, params, spec)
        state["err"] = max(state["err"],
                           float(np.max(m_err)) + float(np.max(w_err)))
        state["conv"] = state["conv"] and m_conv and w_conv
        return f_vals * mw

    # the product CDF saturates at R(R+xi); expand down (F shrinks) and
    # up (M shrinks) from that corner
    w0 = math.log(params.cell_radius * (params.cell_radius + xi))
    down, err_dn, ok_dn = _windowed_integral(integrand, w0, -1, spec, stop_tol)
    up, err_up, ok_up = _windowed_integral(integrand, w0, +1, spec, stop_tol)
    value = radio.beta * (down + up)
    # state["err"] bounds the pointwise factor error; both factors live in
    # [0, 1], so its integrated effect is bounded by the effective support
    # width, for which a few windows are a generous stand-in
    err = radio.beta * (err_dn + err_up + state["err"] * 8 * _RATE_WINDOW)
    return value, err, ok_dn and ok_up and state["conv"]


def user_rate(xi: float, params: SystemParams,
              spec: QuadratureSpec | None = None) -> float:
    """Ergodic rate in bits per second of a user at distance xi.

    The rate is bandwidth times the threshold integral of conditional
    coverage against dgamma/((1+gamma) ln 2).  The direct term is
    integrated in u = ln(1+gamma); the reflected term goes through
    _reflected_rate_integral.  Error bookkeeping is additive and checked
    once at the end against max(_RATE_ABS_FLOOR, rel_tol * value), in
    dimensionless threshold-integral units.
    """
    if not 0 < xi <= params.cell_radius:
        raise ValueError("xi must lie in (0, cell_radius]")
    spec = spec or DEFAULT_INNER_SPEC
    radio = params.radio
    p_direct = float(_survival(xi, params))
    p_reflect = 0.0
    if params.lambda_r > 0 and p_direct < 1.0:
        p_reflect = (1.0 - p_direct) * reflection_prob(xi, params, spec)
    a = _tau1(xi, 1.0, radio) / (radio.n_bs * radio.n_u)
    stop_tol = 0.25 * _RATE_ABS_FLOOR
    # window tolerances sit a factor 4 under the final judgment so that the
    # sum of per-window error estimates cannot land at the global budget
    win_spec = QuadratureSpec(
        rel_tol=0.25 * spec.rel_tol, abs_tol=max(spec.abs_tol, 0.01 * stop_tol),
        max_depth=spec.max_depth, max_evals=spec.max_evals)

    total = 0.0
    err = 0.0
    converged = True
    if p_direct > 0.0:
        direct, d_err, ok = _windowed_integral(
            lambda u: np.exp(-a * np.expm1(np.minimum(u, 700.0))),
            0.0, +1, win_spec, stop_tol / max(p_direct, 0.1))
        total += p_direct * direct
        err += p_direct * d_err
        converged = converged and ok
    if p_reflect > 0.0:
        refl, r_err, ok = _reflected_rate_integral(
            xi, params, win_spec, stop_tol / p_reflect)
        total += p_reflect * refl
        err += p_reflect * r_err
        converged = converged and ok
    if not converged or err > max(_RATE_ABS_FLOOR, spec.rel_tol * abs(total)):
        raise ConvergenceError("rate integral did not converge")
    return radio.bandwidth_hz / math.log(2.0) * total


def sum_rate(params: SystemParams, spec: QuadratureSpec | None = None) -> float:
    """Cell sum rate in bits per second: user rates aggregated against the
    user density over the disc."""
    spec = spec or DEFAULT_OUTER_SPEC
    if params.peak_user_density == 0.0:
        return 0.0
    inner = spec.tightened()

    def f(xis):
        dens = np.asarray(params.user_density(xis), dtype=float)
        out = np.empty_like(np.asarray(xis, dtype=float))
        for i, xi in enumerate(np.atleast_1d(xis)):
            out[i] = user_rate(float(xi), params, inner) * dens[i] * _TWO_PI * xi
        return out

    res = integrate_1d(f, 0.0, params.cell_radius, spec)
    if not res.converged:
        raise ConvergenceError("sum-rate integral did not converge")
    return res.value
