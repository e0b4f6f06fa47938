"""Smooth data-fit terms: value, gradient and curvature (Lipschitz) bounds.

Classification losses (squared hinge, logistic) act on a labeled sample set
through f(x) = w'x + b and are averaged over samples; reconstruction losses
(least squares, Huber) act on a dictionary/observation pair without bias and
are unnormalized, so regularization weights transfer between the two problem
families on their natural scales.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .model import Model


class LossKind(enum.Enum):
    SQUARED_HINGE = "squared_hinge"
    LOGISTIC = "logistic"
    LEAST_SQUARES = "least_squares"
    HUBER = "huber"


CLASSIFICATION_KINDS = (LossKind.SQUARED_HINGE, LossKind.LOGISTIC)
RECONSTRUCTION_KINDS = (LossKind.LEAST_SQUARES, LossKind.HUBER)


@dataclass(frozen=True)
class LossSpec:
    """Loss kind plus the Huber knee delta (read only by HUBER)."""

    kind: LossKind
    delta: float = 1.0

    def __post_init__(self):
        if self.kind == LossKind.HUBER and not self.delta > 0:
            raise ValueError(f"Huber delta must be positive, got {self.delta}")


@dataclass(eq=False)
class LabeledDataset:
    """Sample matrix (n x d) with integer labels; binary views use -1/+1."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise ValueError(f"need at least one sample and one feature, got {n}x{d}")
        if self.labels.shape != (n,):
            raise ValueError(f"labels must have shape ({n},), got {self.labels.shape}")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite entries")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(eq=False)
class UnmixObservation:
    """Spectral dictionary (m bands x q spectra) and one observed spectrum."""

    dictionary: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        self.dictionary = np.ascontiguousarray(self.dictionary, dtype=np.float64)
        self.observed = np.ascontiguousarray(self.observed, dtype=np.float64)
        if self.dictionary.ndim != 2:
            raise ValueError("dictionary must be a 2-D matrix")
        m, q = self.dictionary.shape
        if m < 1 or q < 1:
            raise ValueError(f"need at least one band and one spectrum, got {m}x{q}")
        if self.observed.shape != (m,):
            raise ValueError(f"observed must have shape ({m},), got {self.observed.shape}")
        if not (np.all(np.isfinite(self.dictionary)) and np.all(np.isfinite(self.observed))):
            raise ValueError("unmixing data contain non-finite entries")

    @property
    def m(self) -> int:
        return self.dictionary.shape[0]

    @property
    def q(self) -> int:
        return self.dictionary.shape[1]


@dataclass(eq=False)
class Problem:
    """A loss bound to its dataset; the solver's smooth term."""

    loss: LossSpec
    data: LabeledDataset | UnmixObservation = field(repr=False)

    def __post_init__(self):
        if self.loss.kind in CLASSIFICATION_KINDS and not isinstance(self.data, LabeledDataset):
            raise ValueError(f"{self.loss.kind.value} requires a LabeledDataset")
        if self.loss.kind in RECONSTRUCTION_KINDS and not isinstance(self.data, UnmixObservation):
            raise ValueError(f"{self.loss.kind.value} requires an UnmixObservation")

    @property
    def dim(self) -> int:
        return self.data.d if isinstance(self.data, LabeledDataset) else self.data.q

    @property
    def has_bias(self) -> bool:
        return isinstance(self.data, LabeledDataset)

    def value_grad(self, model: Model):
        return loss_value_grad(self.loss, self.data, model)

    def lipschitz(self) -> float:
        return lipschitz_estimate(self.loss, self.data)


def _check_binary_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("binary losses need labels in {-1, +1}")
    return y


def loss_value_grad(spec: LossSpec, data, model: Model):
    """Loss value plus gradient (over coefficients, and bias when present).

    Returns ``(value, grad_w, grad_b)``; ``grad_b`` is None for the
    reconstruction losses, which carry no bias.
    """
    kind = spec.kind
    if kind in CLASSIFICATION_KINDS:
        if not isinstance(data, LabeledDataset):
            raise ValueError(f"{kind.value} requires a LabeledDataset")
        if model.coefficients.shape[0] != data.d:
            raise ValueError(f"model dimension {model.coefficients.shape[0]} != data dimension {data.d}")
        if model.bias is None:
            raise ValueError(f"{kind.value} requires a model with a bias term")
        X, n = data.features, data.n
        y = _check_binary_labels(data.labels)
        f = X @ model.coefficients + model.bias
        margin = y * f
        if kind == LossKind.SQUARED_HINGE:
            slack = np.maximum(0.0, 1.0 - margin)
            value = float(np.dot(slack, slack) / n)
            coef = -(2.0 / n) * (y * slack)
        else:
            value = float(np.mean(np.logaddexp(0.0, -margin)))
            coef = -(1.0 / n) * (y * expit(-margin))
        return value, X.T @ coef, float(np.sum(coef))

    if not isinstance(data, UnmixObservation):
        raise ValueError(f"{kind.value} requires an UnmixObservation")
    if model.coefficients.shape[0] != data.q:
        raise ValueError(f"model dimension {model.coefficients.shape[0]} != dictionary size {data.q}")
    D, y = data.dictionary, data.observed
    r = D @ model.coefficients - y
    if kind == LossKind.LEAST_SQUARES:
        return float(0.5 * np.dot(r, r)), D.T @ r, None
    delta = spec.delta
    absr = np.abs(r)
    quad = absr <= delta
    value = float(np.sum(np.where(quad, 0.5 * r * r, delta * absr - 0.5 * delta * delta)))
    return value, D.T @ np.clip(r, -delta, delta), None


def _top_sq_singular(A: np.ndarray, n_iter: int = 50, tol: float = 1e-8) -> float:
    """sigma_max(A)^2 by power iteration on A'A (deterministic start)."""
    rng = np.random.default_rng(0)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(n_iter):
        u = A.T @ (A @ v)
        nrm = np.linalg.norm(u)
        if nrm == 0.0:
            return 0.0
        v = u / nrm
        lam_new = float(v @ (A.T @ (A @ v)))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


def lipschitz_estimate(spec: LossSpec, data) -> float:
    """Upper bound on the gradient Lipschitz constant of the loss."""
    if spec.kind in CLASSIFICATION_KINDS:
        if not isinstance(data, LabeledDataset):
            raise ValueError(f"{spec.kind.value} requires a LabeledDataset")
        Xt = np.hstack([data.features, np.ones((data.n, 1))])  # bias column
        s2 = _top_sq_singular(Xt)
        if spec.kind == LossKind.SQUARED_HINGE:
            return 2.0 * s2 / data.n
        return 0.25 * s2 / data.n
    if not isinstance(data, UnmixObservation):
        raise ValueError(f"{spec.kind.value} requires an UnmixObservation")
    return _top_sq_singular(data.dictionary)
