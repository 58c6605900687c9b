"""Operator output estimators and behavioural error metrics.

An *operator* here is anything with a ``spec`` (:class:`OperatorSpec`) and a
vectorised ``evaluate(a, b)`` returning integer results. Three estimators
provide that interface:

* :class:`LookupTable` stores the complete output table.
* :class:`NetlistFunctional` simulates a LUT netlist.
* :class:`PolyRegression` predicts outputs with a polynomial in the operands.

:func:`characterize_behav` compares an operator against a reference over an
exhaustive or Monte Carlo operand set.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Protocol, Union

import numpy as np

from .errors import EmptyPlan, RankDeficient, SpaceTooLarge, WidthMismatch
from .netlist import Netlist, simulate_batch
from .opgen import OperatorSpec

log = logging.getLogger(__name__)

EXHAUSTIVE_CAP = 1 << 24
EXHAUSTIVE_WARN = 1 << 20
_CHUNK = 1 << 18


class Operator(Protocol):
    spec: OperatorSpec

    def evaluate(self, a, b) -> np.ndarray: ...


@dataclass(frozen=True)
class BehavMetrics:
    avg_abs_err: float
    avg_rel_err: float
    max_abs_err: float
    err_prob: float
    mse: float

    FIELDS = ("avg_abs_err", "avg_rel_err", "max_abs_err", "err_prob", "mse")

    @classmethod
    def zero(cls) -> "BehavMetrics":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class Exhaustive:
    pass


@dataclass(frozen=True)
class MonteCarlo:
    n: int
    seed: int = 0


Plan = Union[Exhaustive, MonteCarlo]


# ---------------------------------------------------------------- operators


class _Scalar:
    def __call__(self, a: int, b: int) -> int:
        return estimate_output(self, a, b)


@dataclass(frozen=True, eq=False)
class Exact(_Scalar):
    """The mathematically exact operator (integer reference)."""

    spec: OperatorSpec
    kind = "Exact"

    def evaluate(self, a, b) -> np.ndarray:
        return self.spec.exact(a, b)


@dataclass(frozen=True, eq=False)
class NetlistFunctional(_Scalar):
    """Outputs computed by simulating every LUT and carry cell."""

    spec: OperatorSpec
    netlist: Netlist
    kind = "NetlistFunctional"

    def __post_init__(self):
        need = self.spec.width_a + self.spec.width_b
        if len(self.netlist.primary_inputs) != need:
            raise WidthMismatch(f"netlist has {len(self.netlist.primary_inputs)} inputs, spec needs {need}")
        if len(self.netlist.primary_outputs) != self.spec.width_out:
            raise WidthMismatch("netlist output width does not match spec")

    def evaluate(self, a, b) -> np.ndarray:
        bits = simulate_batch(self.netlist, self.spec.encode(a, b))
        return self.spec.decode(bits)


@dataclass(frozen=True, eq=False)
class LookupTable(_Scalar):
    """Complete output table, indexed ``a`` major (see ``OperatorSpec.all_operands``)."""

    spec: OperatorSpec
    table: np.ndarray
    kind = "LookupTable"

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int64).reshape(-1)
        if table.size != self.spec.space_size:
            raise WidthMismatch(
                f"table has {table.size} entries, operand space has {self.spec.space_size}"
            )
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_operator(cls, op: Operator) -> "LookupTable":
        a, b = op.spec.all_operands()
        return cls(op.spec, op.evaluate(a, b))

    def index(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        return ((a - self.spec.a_range[0]) << self.spec.width_b) | (b - self.spec.b_range[0])

    def evaluate(self, a, b) -> np.ndarray:
        return self.table[self.index(a, b)]


def monomials(degree: int) -> list[tuple[int, int]]:
    """Exponent pairs ``(p, q)`` of ``a^p b^q`` with ``p + q <= degree``."""
    return [(p, t - p) for t in range(degree + 1) for p in range(t, -1, -1)]


@dataclass(frozen=True, eq=False)
class PolyRegression(_Scalar):
    """Least-squares polynomial in both operands, rounded to the output grid.

    Operands are scaled by ``scale_a``/``scale_b`` before forming monomials to
    keep the design matrix well conditioned; ``coef`` applies to the scaled
    monomials in :func:`monomials` order.
    """

    spec: OperatorSpec
    degree: int
    samples: int
    seed: int
    coef: np.ndarray
    scale_a: float
    scale_b: float
    kind = "PolyRegression"

    def raw(self, a, b) -> np.ndarray:
        x = np.asarray(a, dtype=np.float64) / self.scale_a
        y = np.asarray(b, dtype=np.float64) / self.scale_b
        return _design(x, y, self.degree) @ self.coef

    def evaluate(self, a, b) -> np.ndarray:
        lo, hi = self.spec.out_range
        return np.clip(np.rint(self.raw(a, b)), lo, hi).astype(np.int64)


def _design(x, y, degree):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    return np.stack([x ** p * y ** q for p, q in monomials(degree)], axis=1)


def fit_poly_estimator(operator: Operator, degree: int, samples: int, seed: int = 0) -> PolyRegression:
    """Fit a :class:`PolyRegression` on ``samples`` seeded random operand pairs."""
    if not 1 <= degree <= 4:
        raise ValueError(f"degree must be in 1..4, got {degree}")
    spec = operator.spec
    n_mono = len(monomials(degree))
    if samples < n_mono:
        raise RankDeficient(f"{samples} samples < {n_mono} monomials")
    rng = np.random.default_rng(seed)
    a = rng.integers(spec.a_range[0], spec.a_range[1] + 1, size=samples)
    b = rng.integers(spec.b_range[0], spec.b_range[1] + 1, size=samples)
    y = operator.evaluate(a, b).astype(np.float64)
    sa = float(max(abs(v) for v in spec.a_range))
    sb = float(max(abs(v) for v in spec.b_range))
    X = _design(a / sa, b / sb, degree)
    if np.linalg.matrix_rank(X) < n_mono:
        raise RankDeficient(f"sample matrix rank < {n_mono}; increase samples")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    coef.setflags(write=False)
    return PolyRegression(spec, degree, samples, seed, coef, sa, sb)


def estimate_output(est: Operator, a: int, b: int) -> int:
    """One query against any estimator; operands must lie in the spec's range."""
    est.spec.check_operands(a, b)
    return int(np.asarray(est.evaluate([a], [b])).reshape(-1)[0])


# ---------------------------------------------------------------- metrics


def plan_operands(spec: OperatorSpec, plan: Plan) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(plan, Exhaustive):
        size = spec.space_size
        if size > EXHAUSTIVE_CAP:
            raise SpaceTooLarge(f"operand space 2^{size.bit_length() - 1} exceeds 2^24")
        if size > EXHAUSTIVE_WARN:
            log.warning("exhaustive sweep over %d operand pairs", size)
        return spec.all_operands()
    if isinstance(plan, MonteCarlo):
        if plan.n < 1:
            raise EmptyPlan("Monte Carlo plan needs n >= 1")
        rng = np.random.default_rng(plan.seed)
        a = rng.integers(spec.a_range[0], spec.a_range[1] + 1, size=plan.n)
        b = rng.integers(spec.b_range[0], spec.b_range[1] + 1, size=plan.n)
        return a, b
    raise EmptyPlan(f"unknown plan {plan!r}")


def error_metrics(approx: np.ndarray, accurate: np.ndarray) -> BehavMetrics:
    """Metrics for matched arrays of integer outputs."""
    approx = np.asarray(approx, dtype=np.int64)
    accurate = np.asarray(accurate, dtype=np.int64)
    n = approx.size
    if n == 0:
        raise EmptyPlan("no operands to compare")
    err = np.abs(approx - accurate)
    rel = err / np.maximum(np.abs(accurate), 1)
    return BehavMetrics(
        avg_abs_err=int(err.sum()) / n,
        avg_rel_err=math.fsum(rel) / n,
        max_abs_err=float(err.max()),
        err_prob=int(np.count_nonzero(err)) / n,
        mse=int((err * err).sum()) / n,
    )


def characterize_behav(operator: Operator, reference: Operator, plan: Plan = Exhaustive()) -> BehavMetrics:
    """Behavioural error of ``operator`` against ``reference`` over ``plan``.

    Relative error divides by ``max(|accurate|, 1)``.
    """
    if operator.spec != reference.spec:
        raise WidthMismatch(f"{operator.spec} vs reference {reference.spec}")
    a, b = plan_operands(operator.spec, plan)
    n = a.size
    abs_sum = sq_sum = nonzero = 0
    max_err = 0
    rel_parts = []
    for start in range(0, n, _CHUNK):
        sa, sb = a[start:start + _CHUNK], b[start:start + _CHUNK]
        acc = np.asarray(reference.evaluate(sa, sb), dtype=np.int64)
        err = np.abs(np.asarray(operator.evaluate(sa, sb), dtype=np.int64) - acc)
        abs_sum += int(err.sum())
        sq_sum += int((err * err).sum())
        nonzero += int(np.count_nonzero(err))
        max_err = max(max_err, int(err.max()))
        rel_parts.append(math.fsum(err / np.maximum(np.abs(acc), 1)))
    return BehavMetrics(
        avg_abs_err=abs_sum / n,
        avg_rel_err=math.fsum(rel_parts) / n,
        max_abs_err=float(max_err),
        err_prob=nonzero / n,
        mse=sq_sum / n,
    )


@dataclass
class EstimatorReport:
    name: str
    seconds: float
    seconds_per_query: float
    errors: np.ndarray = field(repr=False)
    metrics: BehavMetrics


def estimator_benchmark(estimators: dict[str, Operator], operator: NetlistFunctional,
                        plan: Plan = Exhaustive()) -> dict[str, EstimatorReport]:
    """Time each estimator and measure its deviation from netlist simulation."""
    a, b = plan_operands(operator.spec, plan)
    truth = operator.evaluate(a, b)
    out = {}
    for name, est in estimators.items():
        if est.spec != operator.spec:
            raise WidthMismatch(f"estimator {name} has spec {est.spec}")
        t0 = time.perf_counter()
        pred = np.asarray(est.evaluate(a, b), dtype=np.int64)
        dt = time.perf_counter() - t0
        out[name] = EstimatorReport(name, dt, dt / a.size, pred - truth,
                                    error_metrics(pred, truth))
    return out

