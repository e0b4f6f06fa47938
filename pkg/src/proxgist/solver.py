"""GIST solver: proximal linearization with a Barzilai-Borwein curvature
guess and a doubling line search, plus the regularization-path driver.

Each iteration linearizes the smooth loss at the current point and solves
the resulting prox subproblem; the curvature constant mu is accepted once

    F(w_next) <= ref - 0.5 * sigma * mu * ||w_next - w||^2

holds, where ref is the previous objective (monotone mode, the default) or
the maximum over a short window of past objectives.  The bias, when present,
takes a plain gradient step inside the same majorization and never passes
through the prox.

Dense least-squares problems without bias route through the jit-compiled
kernel in ``_kernels``; the generic loop below covers every loss.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .losses import LossKind, Problem, UnmixObservation, lipschitz_estimate
from .model import Model, zero_model
from .regularizers import RegularizerSpec, prox_vector, reg_value, subdifferential_check


class SolverDivergenceError(RuntimeError):
    """Objective became non-finite; carries the offending iteration."""

    def __init__(self, iteration: int, context: str = ""):
        self.iteration = iteration
        suffix = f" ({context})" if context else ""
        super().__init__(f"solver diverged: non-finite objective at iteration {iteration}{suffix}")


class Termination(enum.Enum):
    TOL = "tol"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class SolverConfig:
    """GIST controls.

    The line-search constants and tolerances are implementation defaults;
    they are not fixed by the method itself.
    """

    max_iter: int = 2000
    tol: float = 1e-7
    mu_min: float = 1e-10
    mu_max: float = 1e10
    sigma: float = 1e-4          # sufficient-decrease factor
    monotone: bool = True
    window: int = 5              # nonmonotone reference window (monotone=False)
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.mu_min < self.mu_max):
            raise ValueError("need 0 < mu_min < mu_max")
        if not (0 < self.sigma < 1):
            raise ValueError("need 0 < sigma < 1")
        if self.max_iter < 1 or self.window < 1:
            raise ValueError("max_iter and window must be >= 1")


@dataclass
class SolverReport:
    model: Model
    objective_trace: np.ndarray
    iterations: int
    termination: Termination
    kkt_max_residual: float
    wall_time: float

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])


@dataclass
class PathRecord:
    lam: float
    model: Model
    n_active: int
    objective: float
    iterations: int
    metrics: dict = field(default_factory=dict)


@dataclass
class PathResult:
    lambdas: np.ndarray
    records: list[PathRecord]


def _clip(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else (hi if x > hi else x)


def _solve_generic(problem: Problem, reg: RegularizerSpec, lam: float,
                   init: Model, cfg: SolverConfig) -> SolverReport:
    t0 = time.perf_counter()
    w = init.coefficients.copy()
    b = init.bias
    has_bias = b is not None

    value, gw, gb = problem.value_grad(Model(w, b))
    obj = value + lam * reg_value(reg, w)
    trace = [obj]

    mu = _clip(problem.lipschitz(), cfg.mu_min, cfg.mu_max)
    window = 1 if cfg.monotone else cfg.window
    w_prev, gw_prev = w, gw
    b_prev, gb_prev = b, gb
    termination = Termination.MAX_ITER
    iterations = 0

    for t in range(cfg.max_iter):
        if t > 0:
            dw = w - w_prev
            dg = gw - gw_prev
            denom = float(dw @ dw)
            num = float(dw @ dg)
            if has_bias:
                db = b - b_prev
                denom += db * db
                num += db * (gb - gb_prev)
            if denom > 0.0:
                mu = _clip(num / denom, cfg.mu_min, cfg.mu_max)

        ref = trace[-1] if window <= 1 else max(trace[-window:])
        accepted = False
        while True:
            w_new = prox_vector(reg, w - gw / mu, lam / mu)
            b_new = b - gb / mu if has_bias else None
            value_new, gw_new, gb_new = problem.value_grad(Model(w_new, b_new))
            obj_new = value_new + lam * reg_value(reg, w_new)
            d2 = float((w_new - w) @ (w_new - w))
            if has_bias:
                d2 += (b_new - b) ** 2
            if np.isfinite(obj_new) and obj_new <= ref - 0.5 * cfg.sigma * mu * d2:
                accepted = True
                break
            if mu >= cfg.mu_max:
                break
            mu = min(mu * 2.0, cfg.mu_max)

        if not accepted:
            if not np.isfinite(obj_new):
                raise SolverDivergenceError(t)
            termination = Termination.TOL  # no acceptable decrease left
            break

        rel = abs(trace[-1] - obj_new) / max(1.0, abs(trace[-1]))
        w_prev, gw_prev, b_prev, gb_prev = w, gw, b, gb
        w, gw, b, gb = w_new, gw_new, b_new, gb_new
        obj = obj_new
        trace.append(obj)
        iterations = t + 1
        if rel < cfg.tol:
            termination = Termination.TOL
            break

    kkt = subdifferential_check(reg, w, gw, lam, mu=mu)
    kkt_max = kkt.max_residual
    if has_bias:
        kkt_max = max(kkt_max, abs(gb))
    return SolverReport(Model(w, b), np.asarray(trace), iterations, termination,
                        kkt_max, time.perf_counter() - t0)


def _solve_least_squares(problem: Problem, reg: RegularizerSpec, lam: float,
                         init: Model, cfg: SolverConfig) -> SolverReport:
    t0 = time.perf_counter()
    data: UnmixObservation = problem.data
    D, y = data.dictionary, data.observed
    G = np.ascontiguousarray(D.T @ D)
    bvec = np.ascontiguousarray(D.T @ y)
    c0 = 0.5 * float(y @ y)
    mu0 = _clip(lipschitz_estimate(problem.loss, data), cfg.mu_min, cfg.mu_max)
    window = 1 if cfg.monotone else cfg.window

    w, trace, iterations, term_code, mu = _kernels.gist_ls_kernel(
        G, bvec, c0, np.ascontiguousarray(init.coefficients, dtype=np.float64),
        int(reg.kind), reg.theta, reg.nonneg, float(lam),
        mu0, cfg.max_iter, cfg.tol, cfg.mu_min, cfg.mu_max, cfg.sigma, window)

    if term_code == 2:
        raise SolverDivergenceError(iterations, "least-squares kernel")
    termination = Termination.TOL if term_code == 0 else Termination.MAX_ITER
    grad = G @ w - bvec
    kkt = subdifferential_check(reg, w, grad, lam, mu=mu)
    return SolverReport(Model(w, None), trace, int(iterations), termination,
                        kkt.max_residual, time.perf_counter() - t0)


def gist_solve(problem: Problem, reg: RegularizerSpec, lam: float,
               init: Model | None = None, cfg: SolverConfig | None = None) -> SolverReport:
    """Minimize loss(model) + lam * R(coefficients) from ``init`` (default 0)."""
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    cfg = cfg or SolverConfig()
    if init is None:
        init = zero_model(problem.dim, problem.has_bias)
    if init.coefficients.shape[0] != problem.dim:
        raise ValueError(f"init dimension {init.coefficients.shape[0]} != problem dimension {problem.dim}")
    if problem.has_bias and init.bias is None:
        raise ValueError("classification problems need a model with a bias")
    if problem.loss.kind == LossKind.LEAST_SQUARES and not problem.has_bias:
        return _solve_least_squares(problem, reg, lam, init, cfg)
    return _solve_generic(problem, reg, lam, init, cfg)


def reg_path(problem: Problem, reg: RegularizerSpec, lambdas, cfg: SolverConfig | None = None,
             evaluator=None, warm_start: bool = False) -> PathResult:
    """Solve along an increasing regularization grid.

    Every point starts from the zero model (the protocol treats the zero
    init as extra regularization for the nonconvex terms); pass
    ``warm_start=True`` to chain solutions instead.  ``evaluator(model, lam)``
    may return a metrics dict stored on each record.
    """
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ValueError("lambdas must be a non-empty 1-D array")
    if np.any(lambdas <= 0):
        raise ValueError("lambdas must be strictly positive")
    if np.any(np.diff(lambdas) <= 0):
        raise ValueError("lambdas must be strictly increasing")

    records = []
    init = zero_model(problem.dim, problem.has_bias)
    for lam in lambdas:
        try:
            report = gist_solve(problem, reg, float(lam), init, cfg)
        except SolverDivergenceError as exc:
            raise SolverDivergenceError(exc.iteration, f"lambda={lam:g}") from exc
        model = report.model
        metrics = evaluator(model, float(lam)) if evaluator is not None else {}
        records.append(PathRecord(float(lam), model, model.active_count,
                                  report.objective, report.iterations, metrics))
        if warm_start:
            init = model.copy()
    return PathResult(lambdas, records)


class PathSelectionError(ValueError):
    pass


def path_select_by_sparsity(path: PathResult, k: int) -> PathRecord:
    """Record with the smallest lambda whose active count equals k."""
    if not path.records:
        raise PathSelectionError("empty path")
    for rec in path.records:
        if rec.n_active == k:
            return rec
    achieved = sorted({rec.n_active for rec in path.records})
    raise PathSelectionError(f"no path record with {k} active coefficients; achieved counts: {achieved}")


def path_select_by_error(path: PathResult, metric: str = "model_error") -> PathRecord:
    """Record minimizing a metric; ties resolve to the smallest lambda."""
    if not path.records:
        raise PathSelectionError("empty path")
    best = None
    for rec in path.records:
        if metric not in rec.metrics:
            raise PathSelectionError(f"path record at lambda={rec.lam:g} lacks metric {metric!r}")
        if best is None or rec.metrics[metric] < best.metrics[metric]:
            best = rec
    return best
