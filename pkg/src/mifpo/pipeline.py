"""From labelled data to a quantized instance.

Steps: load or synthesize a dataset, fit a per-group logistic model, calibrate
its scores with isotonic regression, and bin the calibrated probabilities
into uniform histograms that become the bin centres and weights of a
:class:`~mifpo.core.MifpoInstance`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import MifpoInstance, ObjectiveKind
from .errors import DataError, DomainError, ShapeError

PROB_CLAMP = 1e-6
LOGISTIC_LAMBDA = 1e-4
LOGISTIC_TOL = 1e-8
LOGISTIC_MAX_ITER = 100


# ---------------------------------------------------------------------------
# data


@dataclass(frozen=True)
class Dataset:
    """Rows of ``(features, a, y)`` stored column-wise."""

    X: np.ndarray
    a: np.ndarray
    y: np.ndarray
    feature_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        a = np.asarray(self.a).astype(int).ravel()
        y = np.asarray(self.y).astype(int).ravel()
        if not (X.shape[0] == a.size == y.size):
            raise ShapeError("features, a and y must have the same number of rows")
        if not np.isin(a, (0, 1)).all():
            raise DataError("sensitive column not binary")
        if not np.isin(y, (0, 1)).all():
            raise DataError("label column not binary")
        for g in (0, 1):
            if not (a == g).any():
                raise DataError(f"empty group {g}")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ShapeError("one feature name per column is required")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def alpha0(self) -> float:
        return float(np.mean(self.a == 0))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.a[idx], self.y[idx], self.feature_names)

    def group(self, g: int):
        m = self.a == g
        return self.X[m], self.y[m]


def _parse_binary(value: str, what: str, line: int) -> int:
    try:
        v = float(value)
    except ValueError:
        v = math.nan
    if v not in (0.0, 1.0):
        raise DataError(f"line {line}: {what} column not binary (got {value!r})")
    return int(v)


def load_csv(path, sensitive_col: str = "a", label_col: str = "y") -> Dataset:
    """Read a headered CSV; every column other than the two named ones is a feature."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            body = [row for row in reader if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    for col in (sensitive_col, label_col):
        if col not in header:
            raise DataError(f"missing column {col!r}")
    if sensitive_col == label_col:
        raise DataError("sensitive and label columns must differ")
    ia, iy = header.index(sensitive_col), header.index(label_col)
    feat = [i for i in range(len(header)) if i not in (ia, iy)]
    X = np.empty((len(body), len(feat)))
    a = np.empty(len(body), dtype=int)
    y = np.empty(len(body), dtype=int)
    for r, row in enumerate(body):
        line = r + 2
        if len(row) != len(header):
            raise DataError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        a[r] = _parse_binary(row[ia], "sensitive", line)
        y[r] = _parse_binary(row[iy], "label", line)
        for c, i in enumerate(feat):
            try:
                X[r, c] = float(row[i])
            except ValueError:
                raise DataError(f"line {line}: non-numeric feature {header[i]!r} = {row[i]!r}") from None
            if not math.isfinite(X[r, c]):
                raise DataError(f"line {line}: non-finite feature {header[i]!r}")
    if not body:
        raise DataError(f"{path}: no data rows")
    return Dataset(X, a, y, tuple(header[i] for i in feat))


def write_csv(ds: Dataset, path, sensitive_col: str = "a", label_col: str = "y") -> None:
    """Write ``ds`` with features first, then the sensitive and label columns.

    Floats use ``repr`` so :func:`load_csv` reads back identical values.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.feature_names) + [sensitive_col, label_col])
        for x, a, y in zip(ds.X, ds.a, ds.y):
            w.writerow([repr(float(v)) for v in x] + [int(a), int(y)])


@dataclass(frozen=True)
class SyntheticSpec:
    """Ground truth: ``P(Y=1 | x, a) = sigmoid(weights[a] @ x + intercepts[a])``."""

    alpha0: float = 0.5
    weights0: tuple = (1.5, -1.0)
    weights1: tuple = (0.5, 1.0)
    intercept0: float = -0.5
    intercept1: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha0 < 1.0:
            raise DomainError("alpha0 must lie in (0, 1)")
        if len(self.weights0) != len(self.weights1) or len(self.weights0) < 1:
            raise ShapeError("both groups need the same nonzero number of weights")

    @property
    def n_features(self) -> int:
        return len(self.weights0)

    def probabilities(self, X: np.ndarray, a: np.ndarray) -> np.ndarray:
        W = np.array([self.weights0, self.weights1], dtype=float)
        b = np.array([self.intercept0, self.intercept1])
        a = np.asarray(a, dtype=int)
        return _sigmoid(np.einsum("ij,ij->i", np.atleast_2d(X), W[a]) + b[a])


def separable_spec(alpha0: float = 0.5, n_features: int = 2) -> SyntheticSpec:
    """Group 0 has ``Y = 0`` and group 1 has ``Y = 1`` (up to ``sigmoid(-40)``)."""
    zero = (0.0,) * n_features
    return SyntheticSpec(alpha0, zero, zero, -40.0, 40.0)


def synthetic_generate(n: int, seed: int, spec: SyntheticSpec = SyntheticSpec()) -> Dataset:
    """Standard-normal features, ``A = 1`` with probability ``1 - alpha0``, logistic labels.

    Both groups are guaranteed at least one row (``n >= 2``).
    """
    if n < 2:
        raise DomainError("synthetic data needs n >= 2 so both groups are present")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, spec.n_features))
    a = (rng.random(n) < 1.0 - spec.alpha0).astype(int)
    # keep both groups non-empty without disturbing the draw for typical n
    if a.min() == a.max():
        a[0] = 1 - a[0]
    y = (rng.random(n) < spec.probabilities(X, a)).astype(int)
    return Dataset(X, a, y, tuple(f"x{i}" for i in range(spec.n_features)))


def train_test_split(ds: Dataset, train_fraction: float, seed: int):
    """Per-group random split; each group keeps at least one row on both sides when it can."""
    if not 0.0 < train_fraction < 1.0:
        raise DomainError("train fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    tr, te = [], []
    for g in (0, 1):
        idx = np.flatnonzero(ds.a == g)
        idx = idx[rng.permutation(idx.size)]
        if idx.size < 2:
            raise DataError(f"group {g} has {idx.size} row(s); a split needs at least 2")
        cut = int(np.clip(round(train_fraction * idx.size), 1, idx.size - 1))
        tr.append(idx[:cut])
        te.append(idx[cut:])
    return ds.subset(np.sort(np.concatenate(tr))), ds.subset(np.sort(np.concatenate(te)))


# ---------------------------------------------------------------------------
# logistic regression


def _sigmoid(t):
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    intercept: float
    converged: bool = True
    iterations: int = 0
    constant: bool = False

    def score(self, X) -> np.ndarray:
        """Raw linear score ``w @ x + b``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.weights.size:
            raise ShapeError(f"expected {self.weights.size} features, got {X.shape[1]}")
        return X @ self.weights + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.score(X))

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "intercept": self.intercept,
                "converged": self.converged, "iterations": self.iterations, "constant": self.constant}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(np.asarray(d["weights"], dtype=float), float(d["intercept"]),
                   bool(d.get("converged", True)), int(d.get("iterations", 0)), bool(d.get("constant", False)))


def _penalised_loss(Z, y, theta, lam):
    t = Z @ theta
    # mean negative log-likelihood, log(1 + e^t) - y t computed stably
    nll = np.mean(np.logaddexp(0.0, t) - y * t)
    return nll + 0.5 * lam * np.dot(theta[1:], theta[1:])


def fit_logistic(X, y, lam: float = LOGISTIC_LAMBDA, tol: float = LOGISTIC_TOL,
                 max_iter: int = LOGISTIC_MAX_ITER) -> LogisticModel:
    """L2-regularised logistic regression by iteratively reweighted least squares.

    Minimises ``mean NLL + lam/2 * |w|^2`` (intercept unpenalised) on
    standardised features, then maps the coefficients back to raw features.
    Newton steps are damped by backtracking; a singular reweighted system
    falls back to a gradient step. A group with a single label, or fewer
    than two rows, gets the constant model at the clamped label mean.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if n != y.size:
        raise ShapeError("X and y lengths differ")
    if n == 0:
        raise DataError("cannot fit a model on an empty group")
    if n < 2 or y.min() == y.max():
        p = float(np.clip(y.mean(), PROB_CLAMP, 1.0 - PROB_CLAMP))
        return LogisticModel(np.zeros(d), _logit(p), True, 0, True)

    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Z = np.hstack([np.ones((n, 1)), (X - mu) / sd])
    pen = np.full(d + 1, lam)
    pen[0] = 0.0
    theta = np.zeros(d + 1)
    theta[0] = _logit(float(np.clip(y.mean(), PROB_CLAMP, 1 - PROB_CLAMP)))
    loss = _penalised_loss(Z, y, theta, lam)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = _sigmoid(Z @ theta)
        grad = Z.T @ (p - y) / n + pen * theta
        w = p * (1 - p)
        H = (Z * w[:, None]).T @ Z / n + np.diag(pen)
        try:
            step = np.linalg.solve(H, grad)
            if not np.isfinite(step).all():
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            step = grad
        t = 1.0
        while True:
            cand = theta - t * step
            new_loss = _penalised_loss(Z, y, cand, lam)
            if new_loss <= loss + 1e-4 * t * np.dot(grad, -step) or t < 1e-10:
                break
            t *= 0.5
        delta = np.abs(cand - theta).max()
        theta, loss = cand, new_loss
        if delta <= tol:
            converged = True
            break
    w_raw = theta[1:] / sd
    b_raw = float(theta[0] - np.dot(w_raw, mu))
    return LogisticModel(w_raw, b_raw, converged, it, False)


# ---------------------------------------------------------------------------
# isotonic calibration


@dataclass(frozen=True)
class IsotonicStep:
    """Right-continuous step function: value of the largest breakpoint ``<= s``."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if b.size != v.size or b.size == 0:
            raise ShapeError("need equally many (and at least one) breakpoints and values")
        if np.any(np.diff(b) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if np.any(np.diff(v) < 0) or v.min() < 0 or v.max() > 1:
            raise DomainError("values must be non-decreasing in [0, 1]")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        i = np.searchsorted(self.breakpoints, s, side="right") - 1
        out = self.values[np.clip(i, 0, self.values.size - 1)]
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "IsotonicStep":
        return cls(d["breakpoints"], d["values"])


def pava_isotonic(scores, labels) -> IsotonicStep:
    """Monotone least-squares fit of ``labels`` on ``scores`` by pool-adjacent-violators.

    Equal scores are first merged into one weighted point at their mean label.
    """
    s = np.asarray(scores, dtype=float).ravel()
    t = np.asarray(labels, dtype=float).ravel()
    if s.size != t.size:
        raise ShapeError("scores and labels lengths differ")
    if s.size == 0:
        raise DomainError("isotonic fit needs at least one pair")
    uniq, inv = np.unique(s, return_inverse=True)
    wt = np.bincount(inv).astype(float)
    mean = np.bincount(inv, weights=t) / wt

    # blocks as (value, weight, count) stacks
    val, wsum, cnt = [], [], []
    for m, w in zip(mean, wt):
        val.append(m)
        wsum.append(w)
        cnt.append(1)
        while len(val) > 1 and val[-2] > val[-1]:
            w2 = wsum[-2] + wsum[-1]
            v2 = (val[-2] * wsum[-2] + val[-1] * wsum[-1]) / w2
            c2 = cnt[-2] + cnt[-1]
            del val[-1], wsum[-1], cnt[-1]
            val[-1], wsum[-1], cnt[-1] = v2, w2, c2
    fitted = np.repeat(val, cnt)
    # pooled averages can wobble by an ulp; restore exact monotonicity and range
    fitted = np.clip(np.maximum.accumulate(fitted), 0.0, 1.0)
    return IsotonicStep(uniq, fitted)


@dataclass(frozen=True)
class GroupCalibration:
    logistic: LogisticModel
    isotonic: IsotonicStep

    def predict(self, X) -> np.ndarray:
        return np.asarray(self.isotonic(self.logistic.score(X)), dtype=float).reshape(-1)

    def to_dict(self) -> dict:
        return {**self.logistic.to_dict(), **self.isotonic.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "GroupCalibration":
        return cls(LogisticModel.from_dict(d), IsotonicStep.from_dict(d))


@dataclass(frozen=True)
class CalibratedModel:
    """Per-group logistic score composed with an isotonic map into ``[0, 1]``."""

    groups: tuple

    def __post_init__(self):
        if len(self.groups) != 2:
            raise ShapeError("a calibrated model has exactly two groups")
        if self.groups[0].logistic.weights.size != self.groups[1].logistic.weights.size:
            raise ShapeError("both groups must use the same features")

    @property
    def n_features(self) -> int:
        return self.groups[0].logistic.weights.size

    def to_dict(self) -> dict:
        return {"groups": [g.to_dict() for g in self.groups]}

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d: dict) -> "CalibratedModel":
        try:
            return cls(tuple(GroupCalibration.from_dict(g) for g in d["groups"]))
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed calibration JSON: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "CalibratedModel":
        return cls.from_dict(json.loads(text))


def fit_calibrated(ds: Dataset) -> CalibratedModel:
    """Fit both groups: logistic scores, then isotonic regression of labels on those scores."""
    groups = []
    for g in (0, 1):
        X, y = ds.group(g)
        lm = fit_logistic(X, y)
        groups.append(GroupCalibration(lm, pava_isotonic(lm.score(X), y)))
    return CalibratedModel(tuple(groups))


def predict_calibrated(model: CalibratedModel, x, a):
    """Calibrated ``P(Y=1 | x, a)``; ``x`` is one feature vector or a matrix of rows."""
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.n_features:
        raise ShapeError(f"expected {model.n_features} features, got {X.shape[1]}")
    a = np.broadcast_to(np.asarray(a, dtype=int), (X.shape[0],))
    if not np.isin(a, (0, 1)).all():
        raise DomainError("group must be 0 or 1")
    out = np.empty(X.shape[0])
    for g in (0, 1):
        m = a == g
        if m.any():
            out[m] = model.groups[g].predict(X[m])
    return float(out[0]) if single else out


def expected_calibration_error(predictions, labels, bins: int = 10) -> float:
    """Equal-width-bin ECE: ``sum_b (n_b / n) |mean prediction_b - mean label_b|``."""
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(labels, dtype=float).ravel()
    if p.size != t.size:
        raise ShapeError("predictions and labels lengths differ")
    if p.size == 0:
        raise DomainError("calibration error of an empty sample")
    if bins < 1:
        raise DomainError("bins must be >= 1")
    idx = np.clip(np.floor(p * bins).astype(int), 0, bins - 1)
    n_b = np.bincount(idx, minlength=bins)
    gap = np.abs(np.bincount(idx, weights=p, minlength=bins) - np.bincount(idx, weights=t, minlength=bins))
    return float(gap.sum() / p.size) if n_b.any() else 0.0


# ---------------------------------------------------------------------------
# quantization


@dataclass(frozen=True)
class GroupHistogram:
    centers: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if c.size != w.size or c.size == 0:
            raise ShapeError("histogram needs matching, nonempty centres and weights")
        if np.any(np.diff(c) <= 0):
            raise DomainError("histogram centres must be strictly increasing")
        if abs(w.sum() - 1.0) > 1e-12 or w.min() <= 0:
            raise DomainError("histogram weights must be positive and sum to 1")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "weights", w)


def bin_index(scores, L: int) -> np.ndarray:
    """Nearest of the ``L`` uniform centres ``l / (L - 1)``; exact midpoints go to the lower one."""
    s = np.asarray(scores, dtype=float)
    return np.clip(np.ceil(s * (L - 1) - 0.5), 0, L - 1).astype(int)


def build_histograms(scores, L: int) -> GroupHistogram:
    s = np.asarray(scores, dtype=float).ravel()
    if L < 2:
        raise DomainError("need L >= 2 bins")
    if s.size == 0:
        raise DataError("cannot build a histogram from no scores")
    if s.min() < 0 or s.max() > 1 or not np.isfinite(s).all():
        raise DomainError("scores must lie in [0, 1]")
    counts = np.bincount(bin_index(s, L), minlength=L)
    occ = np.flatnonzero(counts)
    return GroupHistogram(occ / (L - 1), counts[occ] / s.size)


def build_instance(ds: Dataset, model: CalibratedModel, L: int = 10, k: int = 10,
                   objective="min-error") -> MifpoInstance:
    """Quantize the calibrated scores of ``ds`` into a finite instance."""
    hists = []
    for g in (0, 1):
        X, _ = ds.group(g)
        if X.shape[0] == 0:
            raise DataError(f"empty group {g}")
        hists.append(build_histograms(predict_calibrated(model, X, g), L))
    return MifpoInstance(ds.alpha0, hists[0].centers, hists[0].weights,
                         hists[1].centers, hists[1].weights, k, ObjectiveKind.parse(objective))


@dataclass
class CalibrationReport:
    """Held-out calibration quality of a fitted model."""

    ece: float
    ece_per_group: list = field(default_factory=list)
    n_train: int = 0
    n_eval: int = 0
    converged: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"ece": self.ece, "ece_per_group": list(self.ece_per_group), "n_train": self.n_train,
                "n_eval": self.n_eval, "converged": list(self.converged)}


def calibration_report(model: CalibratedModel, train: Dataset, held_out: Dataset,
                       bins: int = 10) -> CalibrationReport:
    pred = predict_calibrated(model, held_out.X, held_out.a)
    per = [expected_calibration_error(pred[held_out.a == g], held_out.y[held_out.a == g], bins) for g in (0, 1)]
    return CalibrationReport(expected_calibration_error(pred, held_out.y, bins), per,
                             train.n, held_out.n, [g.logistic.converged for g in model.groups])


def instance_from_dataset(ds: Dataset, L: int = 10, k: int = 10, objective="min-error",
                          train_fraction: float = 0.75, seed: int = 0):
    """Split, calibrate on the training part, quantize the held-out part.

    Returns ``(instance, model, report)``.
    """
    train, held = train_test_split(ds, train_fraction, seed)
    model = fit_calibrated(train)
    return build_instance(held, model, L, k, objective), model, calibration_report(model, train, held)


def bayes_error(spec: SyntheticSpec, n: int, seed: int, kind="min-error") -> float:
    """Monte-Carlo estimate of ``E[h(P(Y=1 | X, A))]`` under the generator."""
    from .core import h_eval

    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, spec.n_features))
    a = (rng.random(n) < 1.0 - spec.alpha0).astype(int)
    return float(np.mean(h_eval(kind, spec.probabilities(X, a))))


__all__ = [
    "Dataset", "load_csv", "write_csv", "SyntheticSpec", "separable_spec", "synthetic_generate",
    "train_test_split", "LogisticModel", "fit_logistic", "IsotonicStep", "pava_isotonic",
    "GroupCalibration", "CalibratedModel", "fit_calibrated", "predict_calibrated",
    "expected_calibration_error", "GroupHistogram", "bin_index", "build_histograms", "build_instance",
    "CalibrationReport", "calibration_report", "instance_from_dataset", "bayes_error",
]
