"""Config-to-metric regression models used as cheap fitness functions."""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (DegenerateTarget, InsufficientData, LengthMismatch,
                     MalformedRecord)

TEST_FRACTION = 0.2
# 0/1 features make the normal equations exact in rationals; beyond this size
# the float solver is used
EXACT_SOLVE_MAX_FEATURES = 64


class FeatureMode(str, enum.Enum):
    BitsLinear = "BitsLinear"
    BitsPairwise = "BitsPairwise"


def feature_names(length: int, mode: FeatureMode) -> list[str]:
    names = ["intercept"] + [f"b{i}" for i in range(length)]
    if FeatureMode(mode) is FeatureMode.BitsPairwise:
        names += [f"b{i}*b{j}" for i in range(length) for j in range(i + 1, length)]
    return names


def features(configs: Sequence[str], mode: FeatureMode) -> np.ndarray:
    """Design matrix: intercept, raw bits and (pairwise mode) bit products."""
    bits = np.array([[c == "1" for c in cfg] for cfg in configs], dtype=np.float64)
    if bits.ndim != 2:
        bits = bits.reshape(len(configs), -1)
    cols = [np.ones((bits.shape[0], 1)), bits]
    if FeatureMode(mode) is FeatureMode.BitsPairwise:
        i, j = np.triu_indices(bits.shape[1], k=1)
        cols.append(bits[:, i] * bits[:, j])
    return np.concatenate(cols, axis=1)


@dataclass(frozen=True, eq=False)
class SurrogateModel:
    target_metric: str
    feature_mode: FeatureMode
    length: int
    coefficients: np.ndarray
    ridge_lambda: float
    train_mae: float
    test_mae: float

    def __post_init__(self):
        object.__setattr__(self, "feature_mode", FeatureMode(self.feature_mode))
        coef = np.array(self.coefficients, dtype=np.float64)
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)

    def __eq__(self, other):
        if not isinstance(other, SurrogateModel):
            return NotImplemented
        return (self.target_metric, self.feature_mode, self.length, self.ridge_lambda,
                self.train_mae, self.test_mae) == (
                    other.target_metric, other.feature_mode, other.length, other.ridge_lambda,
                    other.train_mae, other.test_mae) and np.array_equal(
                        self.coefficients, other.coefficients)

    __hash__ = None

    def predict_many(self, configs: Sequence[str]) -> np.ndarray:
        for c in configs:
            if len(c) != self.length:
                raise LengthMismatch(f"config length {len(c)} != trained length {self.length}")
        return features(configs, self.feature_mode) @ self.coefficients


def predict(model: SurrogateModel, config: str) -> float:
    return float(model.predict_many([config])[0])


def _exact_solve(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray | None:
    """Normal equations solved in rational arithmetic; None when singular."""
    n = X.shape[1]
    Xi = X.astype(np.int64)
    gram = Xi.T @ Xi
    yq = [Fraction(float(v)) for v in y]
    lam_q = Fraction(lam)
    rows = []
    for i in range(n):
        rhs = sum((yq[k] for k in np.flatnonzero(Xi[:, i])), Fraction(0))
        row = [Fraction(int(v)) for v in gram[i]]
        if i > 0:
            row[i] += lam_q
        rows.append(row + [rhs])
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            return None
        rows[col], rows[piv] = rows[piv], rows[col]
        p = rows[col][col]
        rows[col] = [v / p for v in rows[col]]
        for r in range(n):
            f = rows[r][col]
            if r != col and f != 0:
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    return np.array([float(r[n]) for r in rows])


def _solve(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    if X.shape[1] <= EXACT_SOLVE_MAX_FEATURES:
        coef = _exact_solve(X, y, lam)
        if coef is not None:
            return coef
    if lam == 0:
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        return coef
    # intercept is not penalised
    penalty = np.eye(X.shape[1]) * lam
    penalty[0, 0] = 0.0
    return np.linalg.solve(X.T @ X + penalty, X.T @ y)


def split_indices(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic 80/20 (train, test) split."""
    perm = np.random.default_rng(seed).permutation(n)
    n_test = max(1, int(round(TEST_FRACTION * n)))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def fit_surrogate(dataset: Iterable[tuple[str, float]], feature_mode: FeatureMode = FeatureMode.BitsLinear,
                  ridge_lambda: float = 0.0, split_seed: int = 0,
                  target_metric: str = "target") -> SurrogateModel:
    """Ridge least squares of a metric on config-bit features."""
    data = list(dataset)
    if not data:
        raise InsufficientData("empty dataset")
    configs = [str(c) for c, _ in data]
    length = len(configs[0])
    if any(len(c) != length for c in configs):
        raise LengthMismatch("configs of mixed length")
    y = np.array([v for _, v in data], dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise InsufficientData("target values must be finite")
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be >= 0")
    X = features(configs, feature_mode)
    if len(data) < 2 * X.shape[1]:
        raise InsufficientData(f"{len(data)} rows < 2 x {X.shape[1]} features")
    if np.ptp(y) == 0:
        raise DegenerateTarget("target has zero variance")
    train, test = split_indices(len(data), split_seed)
    coef = _solve(X[train], y[train], ridge_lambda)
    train_mae = float(np.mean(np.abs(X[train] @ coef - y[train])))
    test_mae = float(np.mean(np.abs(X[test] @ coef - y[test])))
    return SurrogateModel(target_metric, FeatureMode(feature_mode), length, coef,
                          float(ridge_lambda), train_mae, test_mae)


def constant_mean_mae(dataset: Iterable[tuple[str, float]], split_seed: int = 0) -> float:
    """Test MAE of predicting the training mean, on the same split as the fit."""
    y = np.array([v for _, v in dataset], dtype=np.float64)
    train, test = split_indices(len(y), split_seed)
    return float(np.mean(np.abs(y[test] - y[train].mean())))


# ---------------------------------------------------------------- persistence


def _g(x: float) -> str:
    return format(float(x), ".17g")


def dumps(model: SurrogateModel) -> str:
    meta = (f"# surrogate target={model.target_metric} feature_mode={model.feature_mode.value}"
            f" length={model.length} ridge_lambda={_g(model.ridge_lambda)}"
            f" train_mae={_g(model.train_mae)} test_mae={_g(model.test_mae)}")
    buf = io.StringIO()
    buf.write(meta + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["feature", "coefficient"])
    for name, c in zip(feature_names(model.length, model.feature_mode), model.coefficients):
        w.writerow([name, _g(c)])
    return buf.getvalue()


def loads(text: str) -> SurrogateModel:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# surrogate "):
        raise MalformedRecord(1, "missing surrogate metadata line")
    meta = dict(kv.split("=", 1) for kv in lines[0][len("# surrogate "):].split())
    try:
        length = int(meta["length"])
        mode = FeatureMode(meta["feature_mode"])
    except (KeyError, ValueError) as exc:
        raise MalformedRecord(1, f"bad metadata: {exc}") from None
    rows = list(csv.reader(lines[1:]))
    if not rows or rows[0] != ["feature", "coefficient"]:
        raise MalformedRecord(2, "header must be feature,coefficient")
    names = feature_names(length, mode)
    if [r[0] for r in rows[1:]] != names:
        raise MalformedRecord(3, "feature names do not match metadata")
    coef = [float(r[1]) for r in rows[1:]]
    return SurrogateModel(meta["target"], mode, length, coef, float(meta["ridge_lambda"]),
                          float(meta["train_mae"]), float(meta["test_mae"]))


def save(model: SurrogateModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model))


def load(path) -> SurrogateModel:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


__all__ = ["FeatureMode", "SurrogateModel", "fit_surrogate", "predict", "features",
           "feature_names", "constant_mean_mae", "dumps", "loads", "save", "load"]
