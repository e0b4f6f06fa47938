"""Sparse linear unmixing: nonnegative regularized least squares over a
spectral library, library ingestion/synthesis with angular pruning, the
mixture simulation protocol, the positive-least-squares + hard-threshold
baseline, and the squared-distance model-error metric."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .losses import LossKind, LossSpec, Problem, UnmixObservation
from .model import Model
from .regularizers import RegularizerSpec
from .solver import SolverConfig, SolverReport, gist_solve

LEAST_SQUARES = LossSpec(LossKind.LEAST_SQUARES)

# projected solutions may carry rounding dust; prox outputs are exact zeros
BASELINE_ACTIVE_TOL = 1e-9


@dataclass
class SpectralLibrary:
    names: list[str]
    spectra: np.ndarray  # m bands x q spectra, columns are materials

    def __post_init__(self):
        self.spectra = np.ascontiguousarray(self.spectra, dtype=np.float64)
        if self.spectra.ndim != 2:
            raise ValueError("spectra must be a 2-D matrix (bands x spectra)")
        if len(self.names) != self.spectra.shape[1]:
            raise ValueError("one name per spectrum required")
        if not np.all(np.isfinite(self.spectra)):
            raise ValueError("spectra contain non-finite entries")
        norms = np.linalg.norm(self.spectra, axis=0)
        if np.any(norms == 0):
            raise ValueError("spectra must have nonzero column norms")

    @property
    def m(self) -> int:
        return self.spectra.shape[0]

    @property
    def q(self) -> int:
        return self.spectra.shape[1]


@dataclass
class MixtureSample:
    observed: np.ndarray
    alpha_true: np.ndarray
    n_act: int
    sigma: float


def angle_deg(a: np.ndarray, b: np.ndarray) -> float:
    c = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))


def pairwise_angles_deg(spectra: np.ndarray) -> np.ndarray:
    unit = spectra / np.linalg.norm(spectra, axis=0)
    c = np.clip(unit.T @ unit, -1.0, 1.0)
    return np.degrees(np.arccos(c))


def _greedy_prune(names, spectra, prune_deg: float):
    """Keep a spectrum iff its angle to every kept spectrum is >= prune_deg."""
    kept = []
    for j in range(spectra.shape[1]):
        if all(angle_deg(spectra[:, j], spectra[:, k]) >= prune_deg for k in kept):
            kept.append(j)
    return [names[k] for k in kept], spectra[:, kept]


def load_library(path, prune_deg: float = 15.0) -> SpectralLibrary:
    """Read a spectral-library CSV and prune near-duplicate spectra.

    Expected layout: header ``name,band_1,...,band_m``, one spectrum per
    row, reflectance as decimal floats.  Pruning is greedy in file order
    with a minimum pairwise angular separation of ``prune_deg`` degrees.
    """
    names = []
    rows = []
    n_bands = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                if not row or row[0].strip() != "name":
                    raise ValueError(f"{path}: line 1: expected header starting with 'name'")
                n_bands = len(row) - 1
                if n_bands < 1:
                    raise ValueError(f"{path}: line 1: no band columns")
                continue
            if not row:
                continue
            if len(row) != n_bands + 1:
                raise ValueError(f"{path}: line {lineno}: expected {n_bands + 1} fields, got {len(row)}")
            try:
                rows.append([float(x) for x in row[1:]])
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from exc
            names.append(row[0])
    if n_bands is None or not rows:
        raise ValueError(f"{path}: no spectra found")

    names, spectra = _greedy_prune(names, np.array(rows, dtype=np.float64).T, prune_deg)
    if len(names) < 2:
        raise ValueError(f"{path}: fewer than 2 spectra survive pruning at {prune_deg} degrees")
    return SpectralLibrary(names, spectra)


def save_library(lib: SpectralLibrary, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["name"] + [f"band_{i + 1}" for i in range(lib.m)])
        for j, name in enumerate(lib.names):
            writer.writerow([name] + [f"{x:.17g}" for x in lib.spectra[:, j]])


def synth_library(q: int, m: int = 200, seed=0, prune_deg: float = 15.0) -> SpectralLibrary:
    """Generate q smooth synthetic reflectance spectra over m bands.

    Each candidate is a sum of 3-6 Gaussian bumps (random centers and
    fairly broad widths, so the library stays coherent) peak-normalized
    to 1; candidates closer than ``prune_deg`` degrees to an accepted
    spectrum are regenerated.
    """
    if q < 2 or m < 8:
        raise ValueError("need q >= 2 spectra and m >= 8 bands")
    rng = np.random.default_rng(seed)
    bands = np.arange(m, dtype=np.float64)
    kept = []
    attempts = 0
    while len(kept) < q:
        attempts += 1
        if attempts > 100 * q:
            raise RuntimeError(f"could not assemble {q} spectra separated by {prune_deg} degrees "
                               f"in {100 * q} attempts")
        n_bumps = int(rng.integers(3, 7))
        centers = rng.uniform(0.0, m - 1.0, n_bumps)
        widths = rng.uniform(m / 30.0, m / 8.0, n_bumps)
        amps = rng.uniform(0.2, 1.0, n_bumps)
        s = np.zeros(m)
        for c, wdt, a in zip(centers, widths, amps):
            s += a * np.exp(-0.5 * ((bands - c) / wdt) ** 2)
        s /= s.max()
        if all(angle_deg(s, k) >= prune_deg for k in kept):
            kept.append(s)
    names = [f"synthetic_{i:02d}" for i in range(q)]
    return SpectralLibrary(names, np.column_stack(kept))


def simulate_mixture(lib: SpectralLibrary, n_act: int, sigma: float, seed=0) -> MixtureSample:
    """Random mixture of n_act endmembers with uniform [0,1] weights (not
    normalized to sum 1) plus i.i.d. Gaussian band noise of sd sigma.

    The support, weights and the unit-variance noise shape are drawn in a
    fixed order, so the same seed at different sigma yields the same
    mixture with rescaled noise.
    """
    if not 1 <= n_act <= lib.q:
        raise ValueError(f"n_act must be in [1, {lib.q}], got {n_act}")
    rng = np.random.default_rng(seed)
    support = rng.choice(lib.q, size=n_act, replace=False)
    weights = rng.uniform(0.0, 1.0, n_act)
    noise = rng.standard_normal(lib.m)
    alpha = np.zeros(lib.q)
    alpha[support] = weights
    observed = lib.spectra @ alpha + sigma * noise
    return MixtureSample(observed, alpha, n_act, float(sigma))


def unmix_solve(lib: SpectralLibrary, observed: np.ndarray, reg: RegularizerSpec,
                lam: float, cfg: SolverConfig | None = None) -> SolverReport:
    """Nonnegative regularized least squares over the library."""
    if not reg.nonneg:
        raise ValueError("unmixing requires a regularizer with nonneg=True")
    problem = Problem(LEAST_SQUARES, UnmixObservation(lib.spectra, observed))
    return gist_solve(problem, reg, lam, cfg=cfg)


def nnls_solve(lib: SpectralLibrary, observed: np.ndarray) -> np.ndarray:
    """Positive least squares (active-set NNLS)."""
    alpha, _ = nnls(lib.spectra, observed)
    return alpha


def ls_threshold_baseline(lib: SpectralLibrary, observed: np.ndarray, k: int,
                          refit: bool = False) -> np.ndarray:
    """Hard-threshold the positive least-squares solution to its k largest
    coordinates.  No refit by default; ``refit=True`` re-solves NNLS on the
    surviving columns (exploratory variant)."""
    if not 0 <= k <= lib.q:
        raise ValueError(f"k must be in [0, {lib.q}], got {k}")
    alpha = nnls_solve(lib, observed)
    if k == 0:
        return np.zeros_like(alpha)
    keep = np.argsort(-alpha, kind="stable")[:k]
    out = np.zeros_like(alpha)
    out[keep] = alpha[keep]
    if refit and np.any(out > 0):
        sel = np.flatnonzero(out > 0)
        sub, _ = nnls(lib.spectra[:, sel], observed)
        out = np.zeros_like(alpha)
        out[sel] = sub
    return out


def model_error(alpha: np.ndarray, alpha_true: np.ndarray) -> float:
    """Squared Euclidean distance to the generating abundances."""
    alpha = np.asarray(alpha, dtype=np.float64)
    alpha_true = np.asarray(alpha_true, dtype=np.float64)
    if alpha.shape != alpha_true.shape:
        raise ValueError(f"length mismatch: {alpha.shape} vs {alpha_true.shape}")
    d = alpha - alpha_true
    return float(d @ d)


# ---------------------------------------------------------------------------
# simulation study
# ---------------------------------------------------------------------------

BASELINE_NAME = "ls_thr"


@dataclass
class UnmixRow:
    method: str       # regularizer name or the LS+threshold baseline
    sigma: float
    n_act: int
    lam: float        # baseline rows reuse the grid value as hard threshold
    trial: int
    model_error: float
    n_selected: int


def _trial_rows(lib: SpectralLibrary, n_act: int, sigma: float, trial: int,
                lambdas, regs, seed: int, cfg: SolverConfig,
                include_baseline: bool) -> list[UnmixRow]:
    mix = simulate_mixture(lib, n_act, sigma, seed=(seed, trial))
    rows = []
    for reg in regs:
        for lam in lambdas:
            report = unmix_solve(lib, mix.observed, reg, float(lam), cfg)
            alpha = report.model.coefficients
            rows.append(UnmixRow(reg.name, sigma, n_act, float(lam), trial,
                                 model_error(alpha, mix.alpha_true),
                                 int(np.count_nonzero(alpha))))
    if include_baseline:
        alpha_ls = nnls_solve(lib, mix.observed)
        for lam in lambdas:
            thr = np.where(alpha_ls > lam, alpha_ls, 0.0)
            rows.append(UnmixRow(BASELINE_NAME, sigma, n_act, float(lam), trial,
                                 model_error(thr, mix.alpha_true),
                                 int(np.count_nonzero(np.abs(thr) > BASELINE_ACTIVE_TOL))))
    return rows


def unmix_experiment(lib: SpectralLibrary, n_act: int, sigmas, lambdas, trials: int = 50,
                     regs=None, seed: int = 0, cfg: SolverConfig | None = None,
                     include_baseline: bool = True, jobs: int = 1) -> list[UnmixRow]:
    """Repeated-mixture study: one row per (method, sigma, lambda, trial).

    Trial t draws its mixture from an RNG stream keyed by (seed, t), so
    every method and noise level sees the same support and weights --
    comparisons are paired.  The baseline interprets the grid value as a
    hard threshold on the positive least-squares solution.
    """
    if regs is None:
        regs = default_regs()
    cfg = cfg or SolverConfig()
    lambdas = np.asarray(lambdas, dtype=np.float64)
    sigmas = list(sigmas)

    units = [(sig, t) for sig in sigmas for t in range(trials)]
    if jobs > 1:
        from joblib import Parallel, delayed

        chunks = Parallel(n_jobs=jobs)(
            delayed(_trial_rows)(lib, n_act, sig, t, lambdas, regs, seed, cfg, include_baseline)
            for sig, t in units)
    else:
        chunks = [_trial_rows(lib, n_act, sig, t, lambdas, regs, seed, cfg, include_baseline)
                  for sig, t in units]

    rows = [row for chunk in chunks for row in chunk]
    method_order = {reg.name: i for i, reg in enumerate(regs)}
    method_order[BASELINE_NAME] = len(method_order)
    rows.sort(key=lambda r: (method_order[r.method], r.sigma, r.lam, r.trial))
    return rows


def default_regs(theta: float = 0.1, nonneg: bool = True) -> list[RegularizerSpec]:
    from .regularizers import RegKind

    return [RegularizerSpec(RegKind.RIDGE, theta=theta, nonneg=nonneg),
            RegularizerSpec(RegKind.LASSO, theta=theta, nonneg=nonneg),
            RegularizerSpec(RegKind.LOG_SUM_PENALTY, theta=theta, nonneg=nonneg),
            RegularizerSpec(RegKind.HALF_NORM, theta=theta, nonneg=nonneg)]


# ---------------------------------------------------------------------------
# row-table aggregation (the two study views plus the two path selectors)
# ---------------------------------------------------------------------------

def _group(rows, key):
    groups = {}
    for r in rows:
        groups.setdefault(key(r), []).append(r)
    return groups


def mean_error_vs_lambda(rows) -> dict:
    """(method, sigma, n_act, lam) -> mean model error over trials."""
    return {k: float(np.mean([r.model_error for r in g]))
            for k, g in _group(rows, lambda r: (r.method, r.sigma, r.n_act, r.lam)).items()}


def mean_error_vs_nsel(rows) -> dict:
    """(method, sigma, n_act, n_selected) -> mean model error over matching records."""
    return {k: float(np.mean([r.model_error for r in g]))
            for k, g in _group(rows, lambda r: (r.method, r.sigma, r.n_act, r.n_selected)).items()}


def min_over_path_mean_error(rows) -> dict:
    """(method, sigma, n_act) -> min over the grid of the trial-mean error."""
    by_lam = mean_error_vs_lambda(rows)
    out = {}
    for (method, sigma, n_act, _lam), err in by_lam.items():
        k = (method, sigma, n_act)
        out[k] = min(out.get(k, np.inf), err)
    return out


def matched_sparsity_errors(rows, target: int) -> dict:
    """(method, sigma, n_act) -> mean over trials of the error at the
    smallest grid value whose selected count equals ``target`` (falling
    back to the closest achieved count when the exact one never occurs)."""
    out = {}
    for (method, sigma, n_act, _t), recs in _group(
            rows, lambda r: (r.method, r.sigma, r.n_act, r.trial)).items():
        recs = sorted(recs, key=lambda r: r.lam)
        exact = [r for r in recs if r.n_selected == target]
        if exact:
            pick = exact[0]
        else:
            gap = min(abs(r.n_selected - target) for r in recs)
            pick = next(r for r in recs if abs(r.n_selected - target) == gap)
        out.setdefault((method, sigma, n_act), []).append(pick.model_error)
    return {k: float(np.mean(v)) for k, v in out.items()}


def selection_at_min_error(rows) -> dict:
    """(method, sigma, n_act) -> (mean n_selected, mean error) at each
    trial's minimum-error record (ties resolve to the smallest grid value)."""
    out = {}
    for (method, sigma, n_act, _t), recs in _group(
            rows, lambda r: (r.method, r.sigma, r.n_act, r.trial)).items():
        recs = sorted(recs, key=lambda r: r.lam)
        best = min(recs, key=lambda r: r.model_error)
        out.setdefault((method, sigma, n_act), []).append((best.n_selected, best.model_error))
    return {k: (float(np.mean([s for s, _ in v])), float(np.mean([e for _, e in v])))
            for k, v in out.items()}
