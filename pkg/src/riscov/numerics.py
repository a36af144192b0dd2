"""Adaptive quadrature engine.

Three entry points cover every integral in the analytic stack:

* ``integrate_1d``      -- finite interval, adaptive Gauss-Kronrod 7/15.
* ``integrate_semiinf_expweight`` -- integrals of g against an exponential
  density on [0, inf), via Gauss-Laguerre order escalation with a
  quantile-truncation fallback.
* ``integrate_nested``  -- iterated 1D integration with per-level tolerance
  tightening and additive error propagation.

``exp1_scaled`` supplies the scaled exponential integral e^u E1(u), the
closed form behind the fading-weight reductions in the analytic stack.

All integrands must be numpy-vectorized: f(x: ndarray) -> ndarray of the
same length (batch variants return an extra leading axis).  Everything here
is deterministic: fixed node tables, worst-interval-first refinement with
insertion-order tie breaking, fixed-order summation.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.laguerre import laggauss

__all__ = [
    "QuadratureSpec",
    "QuadratureResult",
    "DEFAULT_INNER_SPEC",
    "DEFAULT_OUTER_SPEC",
    "integrate_1d",
    "integrate_1d_batch",
    "integrate_piecewise_batch",
    "integrate_semiinf_expweight",
    "integrate_nested",
    "exp1_scaled",
    "NestLevel",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Error-control knobs shared by all integration routines."""

    rel_tol: float = 1e-6
    abs_tol: float = 1e-10
    max_depth: int = 48
    max_evals: int = 200_000

    def __post_init__(self) -> None:
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")

    def tightened(self, factor: float = 0.1) -> "QuadratureSpec":
        """Spec for an inner integral: one order below this level."""
        return QuadratureSpec(
            rel_tol=self.rel_tol * factor,
            abs_tol=self.abs_tol * factor,
            max_depth=self.max_depth,
            max_evals=self.max_evals,
        )


# Defaults: analytic curves are consumed at ~3 significant figures, so the
# innermost integrals run at 1e-6 relative and the outermost spatial average
# at 1e-5 (one order looser keeps nesting budgets sane).
DEFAULT_INNER_SPEC = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-10)
DEFAULT_OUTER_SPEC = QuadratureSpec(rel_tol=1e-5, abs_tol=1e-9)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evals: int
    converged: bool


# Gauss-Kronrod 7/15 node and weight tables on [-1, 1], ascending order.
# Odd indices are the embedded 7-point Gauss nodes.
_XK = np.array([
    -0.9914553711208126, -0.9491079123427585, -0.8648644233597691,
    -0.7415311855993944, -0.5860872354676911, -0.4058451513773972,
    -0.2077849550078985, 0.0, 0.2077849550078985, 0.4058451513773972,
    0.5860872354676911, 0.7415311855993944, 0.8648644233597691,
    0.9491079123427585, 0.9914553711208126,
])
_WK = np.array([
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278, 0.2044329400752989,
    0.1903505780647854, 0.1690047266392679, 0.1406532597155259,
    0.1047900103222502, 0.0630920926299785, 0.0229353220105292,
])
_WG = np.array([
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694, 0.3818300505051189, 0.2797053914892767,
    0.1294849661688697,
])
_GAUSS_IDX = np.arange(1, 15, 2)


def _gk_panel(f, a: float, b: float):
    """One Gauss-Kronrod pass over [a, b].

    Returns (value, err, evals) where value/err have the integrand's batch
    shape (scalar integrands give 0-d arrays).  The error follows the
    QUADPACK scaling, which is deliberately conservative near roughness.
    """
    h = 0.5 * (b - a)
    x = 0.5 * (a + b) + h * _XK
    y = np.asarray(f(x), dtype=float)
    if y.shape[-1] != x.size:
        raise ValueError("integrand must return one value per node")
    resk = h * (y @ _WK)
    resg = h * (y[..., _GAUSS_IDX] @ _WG)
    resabs = h * (np.abs(y) @ _WK)
    mean = resk / (b - a) if b > a else resk
    resasc = h * (np.abs(y - mean[..., None]) @ _WK)
    diff = np.abs(resk - resg)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(
            resasc > 0.0,
            np.minimum(1.0, (200.0 * diff / np.where(resasc > 0, resasc, 1.0)) ** 1.5),
            1.0,
        )
    err = np.where(resasc > 0.0, resasc * scale, diff)
    # never report below round-off of the magnitude integral
    err = np.maximum(err, np.abs(resk) * np.finfo(float).eps * 50)
    return resk, err, x.size


def _adaptive_gk(f, a: float, b: float, spec: QuadratureSpec, points=None):
    """Shared core of integrate_1d and its batch variant."""
    if a == b:
        return np.float64(0.0), np.float64(0.0), 0, True
    edges = [a, b]
    if points is not None:
        edges = sorted({a, b, *(float(p) for p in points if a < p < b)})

    total_val = None
    total_err = None
    evals = 0
    heap: list = []
    counter = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e, n = _gk_panel(f, lo, hi)
        evals += n
        total_val = v if total_val is None else total_val + v
        total_err = e if total_err is None else total_err + e
        heapq.heappush(heap, (-float(np.max(e)), counter, lo, hi, 0, v, e))
        counter += 1

    def ok() -> bool:
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total_val))
        return bool(np.all(total_err <= tol))

    frozen: list = []
    while heap and not ok() and evals < spec.max_evals:
        _, _, lo, hi, depth, v, e = heapq.heappop(heap)
        if depth >= spec.max_depth:
            frozen.append((lo, hi, v, e))  # keep contribution, stop refining
            continue
        mid = 0.5 * (lo + hi)
        v1, e1, n1 = _gk_panel(f, lo, mid)
        v2, e2, n2 = _gk_panel(f, mid, hi)
        evals += n1 + n2
        total_val = total_val - v + v1 + v2
        total_err = total_err - e + e1 + e2
        heapq.heappush(heap, (-float(np.max(e1)), counter, lo, mid, depth + 1, v1, e1))
        counter += 1
        heapq.heappush(heap, (-float(np.max(e2)), counter, mid, hi, depth + 1, v2, e2))
        counter += 1

    # fixed-order final assembly: sum panels left to right for bit stability
    panels = [(t[2], t[5], t[6]) for t in heap] + [(p[0], p[2], p[3]) for p in frozen]
    panels.sort(key=lambda t: t[0])
    if panels:
        total_val = panels[0][1]
        total_err = panels[0][2]
        for t in panels[1:]:
            total_val = total_val + t[1]
            total_err = total_err + t[2]
    return total_val, total_err, evals, ok()


def integrate_1d(f, a: float, b: float, spec: QuadratureSpec | None = None,
                 points=None) -> QuadratureResult:
    """Adaptive integral of a scalar integrand over [a, b].

    ``f`` must map an ndarray of abscissae to an ndarray of values.
    ``points`` optionally seeds interior breakpoints (kinks, known
    transitions) as initial panel edges.
    """
    if a > b:
        raise ValueError("require a <= b")
    spec = spec or DEFAULT_INNER_SPEC
    val, err, evals, conv = _adaptive_gk(f, a, b, spec, points)
    return QuadratureResult(float(val), float(np.max(err)), evals, conv)


def integrate_1d_batch(f, a: float, b: float, spec: QuadratureSpec | None = None,
                       points=None):
    """Batch variant: f(x[n]) -> values[m, n]; integrates all m components
    over a shared adaptive grid (refined where any component needs it).

    Returns (values[m], errors[m], evals, converged).
    """
    if a > b:
        raise ValueError("require a <= b")
    spec = spec or DEFAULT_INNER_SPEC
    return _adaptive_gk(f, a, b, spec, points)


def _gk_panels_rows(y: np.ndarray, h: np.ndarray):
    """GK value/error for a (rows, panels, 15) node-value array.

    h is the half-width array (rows, panels).  Returns (values, errors)
    summed over the panel axis, one pair per row.
    """
    resk = (y @ _WK) * h
    resg = (y[..., _GAUSS_IDX] @ _WG) * h
    resabs = (np.abs(y) @ _WK) * h
    width = 2.0 * h
    safe_w = np.where(width > 0.0, width, 1.0)
    mean = np.where(width > 0.0, resk / safe_w, 0.0)
    resasc = (np.abs(y - mean[..., None]) @ _WK) * h
    diff = np.abs(resk - resg)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(
            resasc > 0.0,
            np.minimum(1.0, (200.0 * diff / np.where(resasc > 0, resasc, 1.0)) ** 1.5),
            1.0,
        )
    err = np.where(resasc > 0.0, resasc * scale, diff)
    err = np.maximum(err, np.abs(resk) * np.finfo(float).eps * 50)
    del resabs
    return resk.sum(axis=-1), err.sum(axis=-1)


def integrate_piecewise_batch(f, edges: np.ndarray,
                              spec: QuadratureSpec | None = None):
    """Composite Gauss-Kronrod over per-component panel decompositions.

    ``edges`` is (m, p+1) with nondecreasing rows: row i lists the panel
    boundaries for component i (zero-width panels are allowed and
    contribute nothing).  Intended for batches of integrands that are
    piecewise smooth with known, component-specific kink locations: put
    the kinks on panel edges and a single pass converges.

    ``f(idx, x)`` receives the component indices (k,) currently being
    evaluated and abscissae (k, n); it returns values (k, n), row i
    evaluated for component idx[i].

    Components missing their tolerance get all panels halved and are
    re-evaluated as a group, so each component's result depends only on
    its own refinement path; batch composition never changes the bits.

    Returns (values[m], errors[m], evals, converged).
    """
    spec = spec or DEFAULT_INNER_SPEC
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 2 or edges.shape[1] < 2:
        raise ValueError("edges must be (m, p+1) with at least one panel")
    if np.any(np.diff(edges, axis=1) < 0):
        raise ValueError("edge rows must be nondecreasing")
    m = edges.shape[0]
    values = np.zeros(m)
    errors = np.zeros(m)
    idx = np.arange(m)
    evals = 0
    rounds = 0
    while idx.size:
        a = edges[:, :-1]
        b = edges[:, 1:]
        h = 0.5 * (b - a)
        x = (0.5 * (a + b))[..., None] + h[..., None] * _XK
        k, p, _ = x.shape
        y = np.asarray(f(idx, x.reshape(k, p * 15)), dtype=float)
        if y.shape != (k, p * 15):
            raise ValueError("integrand must return one value per node, per row")
        evals += x.size
        vals, errs = _gk_panels_rows(y.reshape(k, p, 15), h)
        values[idx] = vals
        errors[idx] = errs
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(vals))
        bad = errs > tol
        rounds += 1
        if not bad.any() or rounds > spec.max_depth or evals >= spec.max_evals:
            break
        idx = idx[bad]
        old = edges[bad]
        edges = np.empty((old.shape[0], 2 * old.shape[1] - 1))
        edges[:, ::2] = old
        edges[:, 1::2] = 0.5 * (old[:, :-1] + old[:, 1:])
    converged = bool(np.all(errors <= np.maximum(spec.abs_tol,
                                                 spec.rel_tol * np.abs(values))))
    return values, errors, evals, converged


_LAGUERRE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _laguerre(n: int):
    if n not in _LAGUERRE_CACHE:
        _LAGUERRE_CACHE[n] = laggauss(n)
    return _LAGUERRE_CACHE[n]


_LAGUERRE_ORDERS = (8, 16, 32, 64)
# P(X > x) = 1e-10 for a unit-rate exponential
_TAIL_QUANTILE = -np.log(1e-10)


def integrate_semiinf_expweight(g, rate: float, spec: QuadratureSpec | None = None
                                ) -> QuadratureResult:
    """Integral of g against the Exp(rate) density:
    int_0^inf g(x) * rate * exp(-rate*x) dx.

    Gauss-Laguerre with order escalation; when escalation stalls (e.g. a
    discontinuous g) falls back to adaptive quadrature truncated at the
    1 - 1e-10 quantile, with the truncation mass folded into the error.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    spec = spec or DEFAULT_INNER_SPEC
    evals = 0
    prev = None
    for n in _LAGUERRE_ORDERS:
        y, w = _laguerre(n)
        val = float(np.asarray(g(y / rate), dtype=float) @ w)
        evals += n
        if prev is not None:
            err = abs(val - prev)
            if err <= max(spec.abs_tol, spec.rel_tol * abs(val)):
                return QuadratureResult(val, err, evals, True)
        prev = val

    # escalation stalled: truncate and hand off to the adaptive engine
    x_max = _TAIL_QUANTILE / rate
    r = integrate_1d(lambda x: np.asarray(g(x)) * rate * np.exp(-rate * x),
                     0.0, x_max, spec)
    return QuadratureResult(r.value, r.error_estimate + 1e-10,
                            evals + r.evals, r.converged)


_EULER_GAMMA = 0.5772156649015328606


def exp1_scaled(u):
    """Scaled exponential integral e^u E1(u) for u > 0, vectorized.

    Power series below u = 2, modified Lentz continued fraction above;
    both branches hit full double precision.  The scaling keeps the
    result representable for arbitrarily large u (it decays like 1/u),
    and u = +inf maps to 0.
    """
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u).astype(float)
    if np.any(u <= 0):
        raise ValueError("exp1_scaled requires u > 0")
    out = np.empty_like(u)
    small = u <= 2.0
    if small.any():
        us = u[small]
        acc = np.zeros_like(us)
        term = np.ones_like(us)
        for k in range(1, 41):
            term *= -us / k
            acc -= term / k
        out[small] = np.exp(us) * (-_EULER_GAMMA - np.log(us) + acc)
    big = ~small & np.isfinite(u)
    if big.any():
        ub = u[big]
        b = ub + 1.0
        c = np.full_like(ub, 1e300)
        d = 1.0 / b
        h = d.copy()
        for i in range(1, 300):
            a = -float(i * i)
            b = b + 2.0
            d = 1.0 / (a * d + b)
            c = b + a / c
            delta = c * d
            h = h * delta
            if np.all(np.abs(delta - 1.0) < 1e-16):
                break
        out[big] = h
    out[np.isinf(u)] = 0.0
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class NestLevel:
    """One level of an iterated integral: finite [lo, hi], or an
    exponential-weighted half-line when exp_rate is set (lo/hi ignored)."""

    lo: float = 0.0
    hi: float = 1.0
    exp_rate: float | None = None


def integrate_nested(f, levels, spec: QuadratureSpec | None = None
                     ) -> QuadratureResult:
    """Iterated 1D integration, outermost level first.

    ``f(*coords)`` is evaluated at full coordinate tuples (scalar return).
    Each inner level runs one order tighter than its parent; inner error
    bounds are propagated additively into the reported estimate.
    """
    spec = spec or DEFAULT_OUTER_SPEC
    levels = list(levels)
    if not levels:
        raise ValueError("need at least one level")
    eval_count = 0
    all_converged = True
    inner_err_worst = [0.0] * len(levels)

    def recurse(coords: tuple, depth: int, level_spec: QuadratureSpec) -> float:
        nonlocal eval_count, all_converged
        level = levels[depth]
        if depth == len(levels) - 1:
            def leaf(x):
                nonlocal eval_count
                eval_count += x.size
                return np.array([f(*coords, xi) for xi in np.atleast_1d(x)])
            fn = leaf
        else:
            def fn(x):
                child = level_spec.tightened()
                return np.array([recurse(coords + (xi,), depth + 1, child)
                                 for xi in np.atleast_1d(x)])
        if level.exp_rate is not None:
            r = integrate_semiinf_expweight(fn, level.exp_rate, level_spec)
        else:
            r = integrate_1d(fn, level.lo, level.hi, level_spec)
        inner_err_worst[depth] = max(inner_err_worst[depth], r.error_estimate)
        all_converged = all_converged and r.converged
        return r.value

    value = recurse((), 0, spec)
    # level 0's own error is in inner_err_worst[0]; deeper levels act as a
    # perturbation of the outer integrand, scaled by the outer measure
    total_err = inner_err_worst[0]
    for d in range(1, len(levels)):
        outer = levels[d - 1]
        measure = 1.0 if outer.exp_rate is not None else abs(outer.hi - outer.lo)
        total_err += inner_err_worst[d] * measure
    return QuadratureResult(float(value), float(total_err), eval_count, all_converged)
