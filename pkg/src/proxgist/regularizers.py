"""Separable regularization terms: value, closed-form proximity operators
(optionally composed with a positivity constraint), a brute-force scalar
oracle used to validate every closed form, and stationarity residuals.

Each term is a coordinate-wise penalty ``sum_k g(|w_k|)``:

=================  =======================
kind               g(x), x >= 0
=================  =======================
RIDGE              x**2
LASSO              x
LOG_SUM_PENALTY    log(x / theta + 1)
HALF_NORM          sqrt(x)
=================  =======================

The prox solves ``argmin_x tau * g(|x|) + 0.5 * (x - v)**2`` with the
effective threshold ``tau`` (a regularization weight divided by the
curvature constant); solvers never pass the two factors separately.
With ``nonneg=True`` the prox is applied to ``max(v, 0)``, which realizes
the positivity-constrained composite penalty.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels


class RegKind(enum.IntEnum):
    """Regularizer kinds; integer values double as kernel dispatch codes."""

    RIDGE = _kernels.RIDGE
    LASSO = _kernels.LASSO
    LOG_SUM_PENALTY = _kernels.LSP
    HALF_NORM = _kernels.LHALF


# CLI / table naming
KIND_NAMES = {
    RegKind.RIDGE: "l2",
    RegKind.LASSO: "l1",
    RegKind.LOG_SUM_PENALTY: "lsp",
    RegKind.HALF_NORM: "lhalf",
}
KIND_BY_NAME = {v: k for k, v in KIND_NAMES.items()}

SPARSE_KINDS = (RegKind.LASSO, RegKind.LOG_SUM_PENALTY, RegKind.HALF_NORM)


@dataclass(frozen=True)
class RegularizerSpec:
    """A regularization term: kind, LSP scale theta, optional positivity.

    ``theta`` is only read by LOG_SUM_PENALTY; the 0.1 default is a toolkit
    choice, configurable wherever a spec is built.  The half-norm exponent
    is fixed at 1/2.
    """

    kind: RegKind
    theta: float = 0.1
    nonneg: bool = False

    def __post_init__(self):
        if self.kind == RegKind.LOG_SUM_PENALTY and not self.theta > 0:
            raise ValueError(f"theta must be positive for LOG_SUM_PENALTY, got {self.theta}")

    @property
    def name(self) -> str:
        return KIND_NAMES[self.kind]


@dataclass(frozen=True)
class ProxQuery:
    """A scalar prox evaluation point: coordinate v and threshold tau."""

    v: float
    tau: float


@dataclass(frozen=True)
class KKTReport:
    """Per-coordinate stationarity residuals of 0 in grad L + lam * dR."""

    max_residual: float
    mean_residual: float
    residuals: np.ndarray


def _scalar_g(spec: RegularizerSpec, x: float) -> float:
    if spec.kind == RegKind.RIDGE:
        return x * x
    if spec.kind == RegKind.LASSO:
        return x
    if spec.kind == RegKind.LOG_SUM_PENALTY:
        return math.log1p(x / spec.theta)
    return math.sqrt(x)


def reg_value(spec: RegularizerSpec, w: np.ndarray) -> float:
    """Penalty value sum_k g(|w_k|).

    Returns ``inf`` when ``spec.nonneg`` and a coordinate is negative
    (infeasible point, distinct from a numeric error); raises on
    non-finite input.
    """
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise ValueError("reg_value: non-finite coefficients")
    if spec.nonneg and np.any(w < 0.0):
        return math.inf
    return float(_kernels.reg_value_kernel(int(spec.kind), np.ascontiguousarray(w), spec.theta))


def prox_objective(spec: RegularizerSpec, x: float, q: ProxQuery) -> float:
    """Scalar prox objective tau * g(|x|) + 0.5 * (x - v)^2 (inf if infeasible)."""
    if spec.nonneg and x < 0.0:
        return math.inf
    return q.tau * _scalar_g(spec, abs(x)) + 0.5 * (x - q.v) ** 2


def _check_query(q: ProxQuery) -> None:
    if not math.isfinite(q.v):
        raise ValueError("prox: non-finite input point")
    if not (math.isfinite(q.tau) and q.tau >= 0.0):
        raise ValueError(f"prox: threshold tau must be >= 0, got {q.tau}")


def prox_scalar(spec: RegularizerSpec, q: ProxQuery) -> float:
    """Closed-form scalar prox; global minimizer of the prox objective.

    Ridge and lasso are the textbook shrinkage/soft-threshold maps.  The two
    nonconvex kinds enumerate the nonnegative stationary points (a quadratic
    for the log penalty, a depressed cubic in sqrt(x) for the half norm,
    solved trigonometrically) plus the candidate 0, and return the objective
    argmin, with ties resolved toward exact 0.
    """
    _check_query(q)
    return _kernels.prox_scalar_kernel(int(spec.kind), q.v, q.tau, spec.theta, spec.nonneg)


def prox_vector(spec: RegularizerSpec, v: np.ndarray, tau: float) -> np.ndarray:
    """Coordinate-wise prox; zeroed coordinates are bit-exact zeros."""
    _check_query(ProxQuery(0.0, tau))
    v = np.ascontiguousarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("prox_vector: non-finite input")
    return _kernels.prox_vector_kernel(int(spec.kind), v, float(tau), spec.theta, spec.nonneg)


def prox_oracle_scalar(spec: RegularizerSpec, q: ProxQuery, grid_n: int = 100_000) -> float:
    """Brute-force scalar prox: dense grid scan plus golden-section refine.

    Validation-only (tests and the ``prox-check`` command); independent of
    every closed form above.
    """
    if grid_n < 1000:
        raise ValueError(f"prox_oracle_scalar: grid_n must be >= 1000, got {grid_n}")
    _check_query(q)

    hi = abs(q.v) + 1.0
    lo = 0.0 if spec.nonneg else -hi
    xs = np.linspace(lo, hi, grid_n)
    tau = q.tau
    ax = np.abs(xs)
    if spec.kind == RegKind.RIDGE:
        g = ax * ax
    elif spec.kind == RegKind.LASSO:
        g = ax
    elif spec.kind == RegKind.LOG_SUM_PENALTY:
        g = np.log1p(ax / spec.theta)
    else:
        g = np.sqrt(ax)
    obj = tau * g + 0.5 * (xs - q.v) ** 2
    i = int(np.argmin(obj))

    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, grid_n - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = prox_objective(spec, c, q)
    fd = prox_objective(spec, d, q)
    for _ in range(100):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = prox_objective(spec, c, q)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = prox_objective(spec, d, q)
    x_ref = c if fc < fd else d

    # the kink at 0 can sit between grid points; always let it compete
    best = 0.0
    best_obj = prox_objective(spec, 0.0, q)
    for x in (float(xs[i]), float(x_ref)):
        o = prox_objective(spec, x, q)
        if o < best_obj:
            best, best_obj = x, o
    return best


def _g_prime(spec: RegularizerSpec, x: float) -> float:
    """d g / d x at x > 0."""
    if spec.kind == RegKind.RIDGE:
        return 2.0 * x
    if spec.kind == RegKind.LASSO:
        return 1.0
    if spec.kind == RegKind.LOG_SUM_PENALTY:
        return 1.0 / (x + spec.theta)
    return 0.5 / math.sqrt(x)


def subdifferential_check(spec: RegularizerSpec, w: np.ndarray, grad: np.ndarray,
                          lam: float, mu: float = 1.0) -> KKTReport:
    """Stationarity residuals of the first-order optimality condition.

    At nonzero coordinates the residual is |grad_k + lam * g'(|w_k|) *
    sign(w_k)| (one-sided under the positivity constraint).  At zeros,
    lasso/ridge use their subdifferential bounds; the nonconvex kinds use
    the prox fixed-point test ``w_k == prox(w_k - grad_k / mu)`` scaled
    back to gradient units by ``mu``.
    """
    w = np.asarray(w, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if w.shape != grad.shape:
        raise ValueError(f"subdifferential_check: shape mismatch {w.shape} vs {grad.shape}")

    res = np.empty(w.shape[0])
    for k in range(w.shape[0]):
        wk = float(w[k])
        gk = float(grad[k])
        if wk != 0.0:
            s = 1.0 if wk > 0.0 else -1.0
            res[k] = abs(gk + lam * _g_prime(spec, abs(wk)) * s)
        elif spec.kind == RegKind.LASSO:
            if spec.nonneg:
                res[k] = max(0.0, -gk - lam)
            else:
                res[k] = max(0.0, abs(gk) - lam)
        elif spec.kind == RegKind.RIDGE:
            res[k] = max(0.0, -gk) if spec.nonneg else abs(gk)
        else:
            x = prox_scalar(spec, ProxQuery(wk - gk / mu, lam / mu))
            res[k] = 0.0 if abs(x) <= 1e-12 else mu * abs(x - wk)
    return KKTReport(float(np.max(res)) if res.size else 0.0,
                     float(np.mean(res)) if res.size else 0.0,
                     res)
