"""Closed-form linear decoding and the statistics built around it.

The decoder is a one-vs-rest ridge regression onto one-hot class targets:
features and targets are centered, weights solve the regularized normal
equations by Cholesky factorization, and the intercept is the unpenalized
class-frequency vector, so a feature-mean input scores exactly the training
class frequencies.  Covariate removal projects out the orthonormalized span
of per-covariate ridge coefficient vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import betainc


@dataclass(frozen=True)
class RidgeModel:
    """One-vs-rest ridge classifier in centered form."""

    weights: np.ndarray      # dims x k
    intercepts: np.ndarray   # k, scores of a feature-mean input
    alpha: float
    feature_mean: np.ndarray
    class_labels: np.ndarray  # k label indices, ascending

    @property
    def dims(self) -> int:
        return self.weights.shape[0]


def _check_design(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"design matrix must be 2-D, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("design matrix contains non-finite values")
    return X


def _solve_centered(Xc: np.ndarray, target: np.ndarray, alpha: float) -> np.ndarray:
    gram = Xc.T @ Xc + alpha * np.eye(Xc.shape[1])
    factor = cho_factor(gram, lower=True, check_finite=False)
    return cho_solve(factor, Xc.T @ target, check_finite=False)


def ridge_fit(X, y, alpha: float = 1.0, class_labels=None) -> RidgeModel:
    """Fit a multiclass ridge decoder on integer labels.

    `class_labels` fixes the output classes externally (they must cover every
    label in `y`); otherwise the distinct labels of `y` are used and at least
    two are required.
    """
    X = _check_design(X)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training samples")
    if y.shape != (X.shape[0],):
        raise ValueError("labels must be one integer per design row")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    present = np.unique(y)
    if class_labels is None:
        classes = present
        if classes.size < 2:
            raise ValueError("need at least 2 distinct labels (or explicit class_labels)")
    else:
        classes = np.unique(np.asarray(class_labels, dtype=np.int64))
        if classes.size < 2:
            raise ValueError("class_labels must contain at least 2 classes")
        if not np.isin(present, classes).all():
            missing = present[~np.isin(present, classes)]
            raise ValueError(f"labels {missing.tolist()} not covered by class_labels")

    onehot = np.zeros((X.shape[0], classes.size))
    onehot[np.arange(X.shape[0]), np.searchsorted(classes, y)] = 1.0
    feature_mean = X.mean(axis=0)
    class_freq = onehot.mean(axis=0)
    weights = _solve_centered(X - feature_mean, onehot - class_freq, alpha)
    return RidgeModel(weights, class_freq, float(alpha), feature_mean, classes)


def ridge_scores(model: RidgeModel, X) -> np.ndarray:
    X = _check_design(X)
    if X.shape[1] != model.dims:
        raise ValueError(f"feature dims {X.shape[1]} != model dims {model.dims}")
    return (X - model.feature_mean) @ model.weights + model.intercepts


def ridge_predict(model: RidgeModel, X) -> np.ndarray:
    """Predicted label per row; exact score ties go to the lowest label index."""
    scores = ridge_scores(model, X)
    return model.class_labels[np.argmax(scores, axis=1)]


def majority_baseline(train_labels, test_labels) -> tuple[int, float]:
    """(most frequent training label, fraction of test rows equal to it)."""
    train = np.asarray(train_labels, dtype=np.int64)
    test = np.asarray(test_labels, dtype=np.int64)
    if train.size == 0:
        raise ValueError("cannot take a majority over an empty training set")
    if test.size == 0:
        raise ValueError("cannot score an empty test set")
    if train.min() < 0:
        raise ValueError("label indices must be non-negative")
    majority = int(np.argmax(np.bincount(train)))  # argmax picks the lowest index on ties
    return majority, float(np.mean(test == majority))


@dataclass(frozen=True)
class CovariateProjector:
    """Orthonormal directions along which covariates are linearly predictable."""

    directions: np.ndarray   # m x dims, orthonormal rows
    feature_mean: np.ndarray

    @property
    def dims(self) -> int:
        return self.directions.shape[1]


def fit_projector(X, covariates, alpha: float = 1.0) -> CovariateProjector:
    """Ridge-regress each covariate on X and orthonormalize the coefficients.

    Near-dependent coefficient vectors are dropped when their residual after
    orthogonalization has norm below 1e-10; if nothing survives there is no
    direction to remove and that is an error.
    """
    X = _check_design(X)
    C = np.asarray(covariates, dtype=np.float64)
    if C.ndim == 1:
        C = C[:, None]
    if C.ndim != 2 or C.shape[0] != X.shape[0]:
        raise ValueError("covariate rows must align with the design matrix")
    if not np.isfinite(C).all():
        raise ValueError("covariates contain non-finite values")
    feature_mean = X.mean(axis=0)
    coeffs = _solve_centered(X - feature_mean, C - C.mean(axis=0), alpha)  # dims x m
    directions: list[np.ndarray] = []
    for j in range(coeffs.shape[1]):
        v = coeffs[:, j].copy()
        for _ in range(2):  # re-orthogonalize for tight orthogonality
            for d in directions:
                v -= (v @ d) * d
        norm = float(np.linalg.norm(v))
        if norm >= 1e-10:
            directions.append(v / norm)
    if not directions:
        raise ValueError("all covariate coefficient vectors are zero; nothing to project out")
    return CovariateProjector(np.vstack(directions), feature_mean)


def project_out(projector: CovariateProjector, X) -> np.ndarray:
    """Remove the projector's directions from every row: x - sum (x.d) d."""
    X = _check_design(X)
    if X.shape[1] != projector.dims:
        raise ValueError(f"feature dims {X.shape[1]} != projector dims {projector.dims}")
    D = projector.directions
    return X - (X @ D.T) @ D


def pearson(x, y) -> tuple[float, float]:
    """Sample correlation with a two-sided p-value from the exact t reference.

    p = I_{nu/(nu+t^2)}(nu/2, 1/2) with nu = n-2, evaluated with the
    regularized incomplete beta function.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("inputs must be 1-D")
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 observations")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = math.sqrt(float(xc @ xc))
    sy = math.sqrt(float(yc @ yc))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("correlation is undefined for constant input")
    r = float(xc @ yc) / (sx * sy)
    r = max(-1.0, min(1.0, r))
    nu = n - 2
    if 1.0 - r * r <= 0.0:
        return r, 0.0
    t_sq = r * r * nu / (1.0 - r * r)
    p = float(betainc(0.5 * nu, 0.5, nu / (nu + t_sq)))
    return r, p


def label_entropy(labels) -> float:
    """Shannon entropy (bits) of the empirical label distribution."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("cannot compute entropy of an empty label set")
    _, counts = np.unique(labels, return_counts=True)
    p = counts / labels.size
    return float(-(p * np.log2(p)).sum())
