"""Gender GMMs (diagonal covariance, EM) and the noisy/quiet k-NN classifier.

Both models standardize raw features per dimension with statistics frozen
at training time. GMM log-likelihoods include the Jacobian of that
standardization, so a male and a female model each trained on its own data
still yield comparable densities over the raw feature space.
"""
from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from . import jsonfmt

VARIANCE_FLOOR = 1e-4
DEFAULT_COMPONENTS = 4
DEFAULT_K = 5
MONOTONE_SLACK = 1e-8


class Gender(str, enum.Enum):
    MALE = "male"
    FEMALE = "female"
    UNKNOWN = "unknown"


class NoiseLabel(str, enum.Enum):
    NOISY = "noisy"
    QUIET = "quiet"
    TIE = "tie"  # lecture level only, never produced by the classifier


class ModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Standardizer:
    center: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        scale = x.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(x.mean(axis=0), scale)

    def apply(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.center) / self.scale

    def to_dict(self) -> dict:
        return {"means": self.center.tolist(), "scales": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.asarray(d["means"], dtype=np.float64), np.asarray(d["scales"], dtype=np.float64))


def _as_matrix(vectors, dim: int | None = None) -> np.ndarray:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or (dim is not None and x.shape[1] != dim):
        raise ModelError(f"expected an (N, {dim or 'D'}) array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ModelError("non-finite feature values")
    return x


# ---------------------------------------------------------------- GMM

@dataclass(frozen=True, eq=False)
class GmmModel:
    """Diagonal GMM over standardized features.

    ``weights`` is (M,), ``means`` and ``variances`` are (M, D).
    ``history`` holds the mean per-vector log-likelihood at every EM step.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    standardizer: Standardizer
    label: str | None = None
    history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def _component_logpdf(z, means, variances) -> np.ndarray:
    """log N(z_n; mu_m, diag var_m) for every (n, m)."""
    log_det = np.sum(np.log(variances), axis=1)
    maha = np.sum((z[:, None, :] - means[None, :, :]) ** 2 / variances[None, :, :], axis=2)
    return -0.5 * (z.shape[1] * np.log(2.0 * np.pi) + log_det + maha)


def _kmeanspp(z, m: int, rng: np.random.Generator) -> np.ndarray:
    n = z.shape[0]
    centers = [z[rng.integers(n)]]
    d2 = np.sum((z - centers[0]) ** 2, axis=1)
    for _ in range(1, m):
        total = d2.sum()
        i = rng.integers(n) if total <= 0 else rng.choice(n, p=d2 / total)
        centers.append(z[i])
        d2 = np.minimum(d2, np.sum((z - z[i]) ** 2, axis=1))
    return np.array(centers)


def gmm_train(
    vectors,
    n_components: int = DEFAULT_COMPONENTS,
    seed: int = 0,
    max_iter: int = 200,
    tol: float = 1e-6,
    variance_floor: float = VARIANCE_FLOOR,
    label: str | None = None,
    check_monotone: bool = False,
) -> GmmModel:
    """Fit a diagonal GMM by EM.

    Means start from a seeded k-means++ pick, weights uniform, variances 1.
    Iteration stops when the mean log-likelihood improves by less than
    ``tol`` or after ``max_iter`` E-steps. With ``check_monotone`` a drop
    larger than 1e-8 raises ``ArithmeticError``.
    """
    x = _as_matrix(vectors)
    n, _ = x.shape
    if n_components < 1:
        raise ModelError("need at least one component")
    if n < 10 * n_components:
        raise ModelError(f"{n} vectors is too few for {n_components} components (need {10 * n_components})")

    std = Standardizer.fit(x)
    z = std.apply(x)
    rng = np.random.default_rng(seed)
    means = _kmeanspp(z, n_components, rng)
    variances = np.ones_like(means)
    weights = np.full(n_components, 1.0 / n_components)

    history: list[float] = []
    for _ in range(max_iter):
        joint = np.log(weights) + _component_logpdf(z, means, variances)
        norm = logsumexp(joint, axis=1)
        ll = float(norm.mean())
        if history and check_monotone and ll < history[-1] - MONOTONE_SLACK:
            raise ArithmeticError(f"EM log-likelihood fell from {history[-1]} to {ll}")
        converged = bool(history) and ll - history[-1] < tol
        history.append(ll)
        if converged:
            break
        resp = np.exp(joint - norm[:, None])
        nk = resp.sum(axis=0) + 1e-300
        weights = nk / nk.sum()
        means = (resp.T @ z) / nk[:, None]
        variances = (resp.T @ (z ** 2)) / nk[:, None] - means ** 2
        variances = np.maximum(variances, variance_floor)

    return GmmModel(weights, means, variances, std, label, tuple(history))


def gmm_loglik(model: GmmModel, vectors) -> float:
    """Normalized (mean per-vector) log-likelihood in raw feature space."""
    x = _as_matrix(vectors, model.dim)
    if x.shape[0] == 0:
        raise ModelError("empty vector sequence")
    z = model.standardizer.apply(x)
    joint = np.log(model.weights) + _component_logpdf(z, model.means, model.variances)
    jacobian = -np.sum(np.log(model.standardizer.scale))
    return float(logsumexp(joint, axis=1).mean() + jacobian)


def classify_gender(male: GmmModel, female: GmmModel, vectors) -> Gender:
    """Male only when its normalized log-likelihood is strictly greater."""
    if np.asarray(vectors).size == 0:
        raise ModelError("no feature vectors to classify")
    return Gender.MALE if gmm_loglik(male, vectors) > gmm_loglik(female, vectors) else Gender.FEMALE


# ---------------------------------------------------------------- k-NN

@dataclass(frozen=True, eq=False)
class KnnModel:
    points: np.ndarray  # raw (N, 2): SPL-fit mean, SPL-fit std
    labels: tuple
    k: int
    standardizer: Standardizer

    def __len__(self) -> int:
        return self.points.shape[0]


def knn_train(points, labels, k: int = DEFAULT_K) -> KnnModel:
    x = _as_matrix(points, 2)
    labels = tuple(NoiseLabel(l) if isinstance(l, str) else l for l in labels)
    if len(labels) != x.shape[0]:
        raise ModelError("points and labels differ in length")
    if k < 1 or k % 2 == 0:
        raise ModelError("k must be a positive odd integer")
    if k > x.shape[0]:
        raise ModelError(f"k={k} exceeds the {x.shape[0]} training points")
    return KnnModel(x, labels, k, Standardizer.fit(x))


def _vote(labels: tuple, neighbours) -> object:
    counts = Counter(labels[i] for i in neighbours)
    best = max(counts.values())
    # first-nearest winner among tied classes (only reachable with >2 classes)
    return next(labels[i] for i in neighbours if counts[labels[i]] == best)


def knn_predict(model: KnnModel, points) -> list:
    q = model.standardizer.apply(_as_matrix(points, 2))
    ref = model.standardizer.apply(model.points)
    d2 = np.sum((q[:, None, :] - ref[None, :, :]) ** 2, axis=2)
    order = np.argsort(d2, axis=1, kind="stable")[:, : model.k]
    return [_vote(model.labels, row) for row in order]


def knn_classify(model: KnnModel, point) -> NoiseLabel:
    """Majority label among the k nearest standardized training points.

    Equal distances favour the lower training index.
    """
    return knn_predict(model, point)[0]


def stratified_folds(labels, folds: int, seed: int) -> np.ndarray:
    """Fold index per sample: seeded shuffle, then round-robin within each class."""
    labels = list(labels)
    n = len(labels)
    if folds < 2:
        raise ModelError("need at least two folds")
    if folds > n:
        raise ModelError(f"{folds} folds exceed {n} samples")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=int)
    slot = 0
    for cls in sorted(set(labels), key=str):
        for i in perm:
            if labels[i] == cls:
                assignment[i] = slot % folds
                slot += 1
    return assignment


def cross_validate_predictions(points, labels, folds: int = 3, k: int = DEFAULT_K, seed: int = 0) -> list:
    """Out-of-fold k-NN predictions; standardization is refit on every training split."""
    x = _as_matrix(points, 2)
    labels = list(labels)
    if len(labels) != x.shape[0]:
        raise ModelError("points and labels differ in length")
    assignment = stratified_folds(labels, folds, seed)
    predicted: list = [None] * len(labels)
    for f in range(folds):
        test = np.flatnonzero(assignment == f)
        train = np.flatnonzero(assignment != f)
        model = knn_train(x[train], [labels[i] for i in train], k)
        for i, p in zip(test, knn_predict(model, x[test])):
            predicted[i] = p
    return predicted


def cross_validate(points, labels, folds: int = 3, k: int = DEFAULT_K, seed: int = 0) -> float:
    """k-fold error rate of the k-NN classifier."""
    labels = [NoiseLabel(l) if isinstance(l, str) else l for l in labels]
    predicted = cross_validate_predictions(points, labels, folds, k, seed)
    return sum(p != t for p, t in zip(predicted, labels)) / len(labels)


# ---------------------------------------------------------------- serialization

def model_to_dict(model) -> dict:
    if isinstance(model, GmmModel):
        return {
            "kind": "gmm",
            "label": model.label,
            "M": model.n_components,
            "weights": model.weights.tolist(),
            "means": model.means.tolist(),
            "variances": model.variances.tolist(),
            "standardization": model.standardizer.to_dict(),
        }
    if isinstance(model, KnnModel):
        return {
            "kind": "knn",
            "k": model.k,
            "points": model.points.tolist(),
            "labels": [getattr(l, "value", l) for l in model.labels],
            "standardization": model.standardizer.to_dict(),
        }
    raise TypeError(f"not a model: {type(model).__name__}")


def model_from_dict(d: dict):
    try:
        kind = d.get("kind") or ("gmm" if "weights" in d else "knn")
        std = Standardizer.from_dict(d["standardization"])
        if kind == "gmm":
            weights = np.asarray(d["weights"], dtype=np.float64)
            if weights.size != d["M"]:
                raise ModelError("M does not match the number of weights")
            return GmmModel(
                weights,
                np.asarray(d["means"], dtype=np.float64),
                np.asarray(d["variances"], dtype=np.float64),
                std,
                d.get("label"),
            )
        return KnnModel(
            np.asarray(d["points"], dtype=np.float64),
            tuple(NoiseLabel(l) for l in d["labels"]),
            int(d["k"]),
            std,
        )
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed model document: {exc}") from None


def save_model(model, path) -> None:
    Path(path).write_text(jsonfmt.dumps(model_to_dict(model), jsonfmt.MODEL_FLOAT))


def load_model(path):
    try:
        return model_from_dict(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: {exc}") from None
