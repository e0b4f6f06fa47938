"""Linear classification: one-against-all training over the GIST solver,
the two-informative-dimension toy generator with its analytic Bayes
reference, and evaluation metrics (Cohen's kappa, accuracy, hyperplane
angle to the Bayes discriminant)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import LabeledDataset, LossKind, LossSpec, Problem
from .model import Model
from .regularizers import RegularizerSpec
from .solver import SolverConfig, gist_solve

SQUARED_HINGE = LossSpec(LossKind.SQUARED_HINGE)


@dataclass(frozen=True)
class ToySpec:
    """Two-class Gaussian toy data: 2 discriminative dimensions at means
    +/- mean_offset, d_noise pure-noise dimensions, isotropic noise_sd."""

    n_per_class: int = 100
    d_noise: int = 18
    mean_offset: tuple[float, float] = (1.0, 0.5)
    noise_sd: float = 1.0
    seed: object = 0

    def __post_init__(self):
        if self.n_per_class < 1 or self.d_noise < 0 or not self.noise_sd > 0:
            raise ValueError("invalid toy parameters")

    @property
    def dim(self) -> int:
        return 2 + self.d_noise


@dataclass
class MulticlassModel:
    """One linear model per class, sharing the feature dimension."""

    models: list[Model]
    classes: np.ndarray

    def __post_init__(self):
        self.classes = np.asarray(self.classes)
        if len(self.models) != self.classes.shape[0]:
            raise ValueError("one model per class required")
        dims = {m.coefficients.shape[0] for m in self.models}
        if len(dims) > 1:
            raise ValueError(f"per-class models disagree on dimension: {sorted(dims)}")

    @property
    def active_count(self) -> int:
        return sum(m.active_count for m in self.models)

    @property
    def total_active(self) -> int:
        return sum(m.total_active for m in self.models)


def make_toy(spec: ToySpec) -> tuple[LabeledDataset, Model]:
    """Sample the toy set and return it with the analytic Bayes model.

    Both classes are Gaussians with identity covariance scaled by
    noise_sd^2, so the Bayes discriminant is linear with coefficients
    (mu+ - mu-) / noise_sd^2 on the two informative dimensions, zero
    elsewhere, and zero bias.
    """
    rng = np.random.default_rng(spec.seed)
    n, d = spec.n_per_class, spec.dim
    mu = np.zeros(d)
    mu[0], mu[1] = spec.mean_offset
    X = rng.standard_normal((2 * n, d)) * spec.noise_sd
    X[:n] += mu
    X[n:] -= mu
    labels = np.concatenate([np.ones(n, dtype=np.int64), -np.ones(n, dtype=np.int64)])
    bayes = Model(2.0 * mu / spec.noise_sd ** 2, 0.0)
    return LabeledDataset(X, labels), bayes


def train_binary(data: LabeledDataset, reg: RegularizerSpec, lam: float,
                 cfg: SolverConfig | None = None, loss: LossSpec = SQUARED_HINGE):
    """Single binary classifier (labels -1/+1) from the zero model."""
    return gist_solve(Problem(loss, data), reg, lam, init=None, cfg=cfg)


def train_ova(data: LabeledDataset, reg: RegularizerSpec, lam: float,
              cfg: SolverConfig | None = None, classes=None,
              loss: LossSpec = SQUARED_HINGE) -> MulticlassModel:
    """One-against-all: one binary squared-hinge problem per class."""
    labels = data.labels
    if classes is None:
        classes = np.unique(labels)
    else:
        classes = np.asarray(classes)
    if classes.shape[0] < 2:
        raise ValueError("one-against-all needs at least 2 classes")
    models = []
    for c in classes:
        mask = labels == c
        if not np.any(mask):
            raise ValueError(f"class {c!r} has no samples")
        y = np.where(mask, 1, -1).astype(np.int64)
        report = gist_solve(Problem(loss, LabeledDataset(data.features, y)), reg, lam, cfg=cfg)
        models.append(report.model)
    return MulticlassModel(models, classes)


def decision_values(mm: MulticlassModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    d = mm.models[0].coefficients.shape[0]
    if features.ndim != 2 or features.shape[1] != d:
        raise ValueError(f"features must be (n, {d}), got {features.shape}")
    W = np.column_stack([m.coefficients for m in mm.models])
    b = np.array([m.bias if m.bias is not None else 0.0 for m in mm.models])
    return features @ W + b


def predict(mm: MulticlassModel, features: np.ndarray) -> np.ndarray:
    """Largest decision value wins; ties go to the lowest class index."""
    return mm.classes[np.argmax(decision_values(mm, features), axis=1)]


def predict_binary(model: Model, features: np.ndarray) -> np.ndarray:
    """Binary view of the one-against-all rule: +1 iff f(x) > 0."""
    features = np.asarray(features, dtype=np.float64)
    f = features @ model.coefficients + (model.bias or 0.0)
    return np.where(f > 0, 1, -1).astype(np.int64)


def confusion_matrix(y_true, y_pred, classes) -> np.ndarray:
    classes = np.asarray(classes)
    index = {c: i for i, c in enumerate(classes.tolist())}
    cm = np.zeros((classes.shape[0], classes.shape[0]), dtype=np.int64)
    for t, p in zip(np.asarray(y_true).tolist(), np.asarray(y_pred).tolist()):
        cm[index[t], index[p]] += 1
    return cm


def kappa(confusion: np.ndarray) -> float:
    """Cohen's kappa from a C x C confusion matrix (0 when chance
    agreement is exactly 1)."""
    cm = np.asarray(confusion, dtype=np.float64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.size == 0:
        raise ValueError("confusion must be a non-empty square matrix")
    total = cm.sum()
    if not total > 0:
        raise ValueError("confusion matrix has no counts")
    po = np.trace(cm) / total
    pe = float(cm.sum(axis=1) @ cm.sum(axis=0)) / total ** 2
    if pe >= 1.0:
        return 0.0
    return float((po - pe) / (1.0 - pe))


def accuracy(confusion: np.ndarray) -> float:
    cm = np.asarray(confusion, dtype=np.float64)
    return float(np.trace(cm) / cm.sum())


class UndefinedAngleError(ValueError):
    pass


def bayes_angle(model: Model, bayes: Model, n_informative: int = 2) -> float:
    """Angle in degrees between the model and Bayes coefficient vectors,
    restricted to the informative dimensions (scale invariant)."""
    u = model.coefficients[:n_informative]
    v = bayes.coefficients[:n_informative]
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise UndefinedAngleError("angle undefined for a zero coefficient vector")
    c = float(np.clip(u @ v / (nu * nv), -1.0, 1.0))
    return float(np.degrees(np.arccos(c)))


# ---------------------------------------------------------------------------
# toy path study (one row per regularizer / lambda / seed)
# ---------------------------------------------------------------------------

@dataclass
class ToyRow:
    reg: str
    lam: float
    seed: int
    kappa: float
    accuracy: float
    n_active_total: int
    n_active_informative: int
    bayes_angle_deg: float  # nan when the informative coefficients are all zero
    objective: float
    iterations: int


def _toy_seed_rows(toy: ToySpec, base_seed: int, seed_idx: int, regs, lambdas,
                   cfg: SolverConfig, test_factor: int = 10) -> list[ToyRow]:
    from dataclasses import replace

    train_spec = replace(toy, seed=(base_seed, seed_idx, 0))
    test_spec = replace(toy, n_per_class=test_factor * toy.n_per_class, seed=(base_seed, seed_idx, 1))
    train, bayes = make_toy(train_spec)
    test, _ = make_toy(test_spec)
    classes = np.array([-1, 1])

    rows = []
    for reg in regs:
        for lam in lambdas:
            report = train_binary(train, reg, float(lam), cfg)
            model = report.model
            pred = predict_binary(model, test.features)
            cm = confusion_matrix(test.labels, pred, classes)
            try:
                ang = bayes_angle(model, bayes)
            except UndefinedAngleError:
                ang = float("nan")
            rows.append(ToyRow(reg.name, float(lam), seed_idx, kappa(cm), accuracy(cm),
                               model.total_active, int(np.count_nonzero(model.coefficients[:2])),
                               ang, report.objective, report.iterations))
    return rows


def toy_study(toy: ToySpec, regs, lambdas, n_seeds: int, cfg: SolverConfig | None = None,
              base_seed: int = 0, jobs: int = 1) -> list[ToyRow]:
    """Full toy regularization-path study over resampled train/test splits.

    Seed s redraws both sets (test 10x the training size); every
    regularizer sees identical splits.  Rows come back sorted by
    (regularizer, lambda, seed) regardless of ``jobs``.
    """
    cfg = cfg or SolverConfig()
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if jobs > 1:
        from joblib import Parallel, delayed

        chunks = Parallel(n_jobs=jobs)(
            delayed(_toy_seed_rows)(toy, base_seed, s, regs, lambdas, cfg)
            for s in range(n_seeds))
    else:
        chunks = [_toy_seed_rows(toy, base_seed, s, regs, lambdas, cfg) for s in range(n_seeds)]

    rows = [row for chunk in chunks for row in chunk]
    order = {reg.name: i for i, reg in enumerate(regs)}
    rows.sort(key=lambda r: (order[r.reg], r.lam, r.seed))
    return rows
