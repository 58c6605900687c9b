"""Application-level harness: tasks whose multiplies run through an approximate operator.

Two task kinds are provided, an FIR low-pass filter over an integer signal
and a 3x3 convolution over an integer image. Products come from the supplied
multiplier; accumulation is exact in wide integers unless an adder operator
is passed, in which case every accumulation step goes through it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .axmodel import SamplingKind, SamplingStrategy, apply_config, sample_configs
from .behav import Exact, NetlistFunctional, Operator
from .dse import (CHARACTERIZED, DesignPoint, GaParams, Objectives, ParetoArchive,
                  evaluate_list, nsga2_search, pareto_front)
from .errors import (DataError, LengthMismatch, MalformedRecord, OverflowPolicyViolation,
                     WidthMismatch)
from .netlist import Netlist
from .opgen import OpKind, OperatorSpec
from .ppa import DelayModel, PowerPlan, PpaMetrics, characterize_ppa

# reported in place of +inf when outputs match the reference exactly
PSNR_IDENTICAL_DB = 999.0
APP_METRICS = ("output_mse", "output_max_abs_err", "psnr_db")


def quantize(values, bits: int, scale: float | None = None) -> np.ndarray:
    """Symmetric signed quantisation to ``bits`` bits.

    ``scale`` defaults to mapping the largest magnitude onto ``2^(bits-1) - 1``.
    Rounds half away from zero, then saturates to the signed range.
    """
    x = np.asarray(values, dtype=np.float64)
    hi = (1 << (bits - 1)) - 1
    lo = -(1 << (bits - 1))
    if scale is None:
        peak = float(np.max(np.abs(x))) if x.size else 0.0
        scale = hi / peak if peak > 0 else 1.0
    y = x * scale
    q = np.sign(y) * np.floor(np.abs(y) + 0.5)
    return np.clip(q, lo, hi).astype(np.int64)


@dataclass(frozen=True)
class FirLowPass:
    """``y[n] = sum_k taps[k] * signal[n-k]`` with zero history; ``len(y) == len(signal)``.

    Samples are the multiplier's ``a`` operand, taps its ``b`` operand.
    """

    taps: tuple[int, ...]
    signal: tuple[int, ...]
    kind = "FirLowPass"

    def __post_init__(self):
        object.__setattr__(self, "taps", tuple(int(t) for t in self.taps))
        object.__setattr__(self, "signal", tuple(int(s) for s in self.signal))
        if not self.taps or not self.signal:
            raise LengthMismatch("taps and signal must be non-empty")

    @property
    def peak(self) -> int | None:
        return None

    def operand_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(self.signal, dtype=np.int64)
        n, k = x.size, len(self.taps)
        padded = np.concatenate([np.zeros(k - 1, dtype=np.int64), x])
        # row n, column j holds signal[n - j]
        idx = np.arange(n)[:, None] + (k - 1) - np.arange(k)[None, :]
        a = padded[idx]
        b = np.broadcast_to(np.asarray(self.taps, dtype=np.int64), a.shape)
        return a, b

    def shape_output(self, acc: np.ndarray) -> np.ndarray:
        return acc


@dataclass(frozen=True)
class Conv2d3x3:
    """Same-size 3x3 correlation with zero padding; pixels are ``a``, kernel ``b``."""

    kernel: tuple[tuple[int, int, int], ...]
    image: np.ndarray = field(compare=False)
    peak: int | None = None

    kind = "Conv2d3x3"

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.int64)
        if k.shape != (3, 3):
            raise WidthMismatch(f"kernel must be 3x3, got {k.shape}")
        object.__setattr__(self, "kernel", tuple(tuple(int(v) for v in r) for r in k))
        img = np.array(self.image, dtype=np.int64)
        if img.ndim != 2 or img.size == 0:
            raise LengthMismatch("image must be a non-empty 2D array")
        img.setflags(write=False)
        object.__setattr__(self, "image", img)

    def operand_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        h, w = self.image.shape
        padded = np.pad(self.image, 1)
        a = np.stack([padded[di:di + h, dj:dj + w].reshape(-1)
                      for di in range(3) for dj in range(3)], axis=1)
        b = np.broadcast_to(np.asarray(self.kernel, dtype=np.int64).reshape(1, 9), a.shape)
        return a, b

    def shape_output(self, acc: np.ndarray) -> np.ndarray:
        return acc.reshape(self.image.shape)


TaskModel = Union[FirLowPass, Conv2d3x3]


@dataclass(frozen=True)
class AppBehavMetrics:
    output_mse: float
    output_max_abs_err: float
    psnr_db: float | None = None

    def as_dict(self) -> dict[str, float]:
        d = {"output_mse": self.output_mse, "output_max_abs_err": self.output_max_abs_err}
        if self.psnr_db is not None:
            d["psnr_db"] = self.psnr_db
        return d


def _check_range(values: np.ndarray, rng: tuple[int, int], what: str) -> None:
    if values.size and (values.min() < rng[0] or values.max() > rng[1]):
        raise OverflowPolicyViolation(
            f"{what} span [{values.min()}, {values.max()}] outside operand range {rng}")


def run_task(task: TaskModel, multiplier: Operator, adder: Operator | None = None) -> np.ndarray:
    """Task outputs with every multiply routed through ``multiplier``."""
    spec = multiplier.spec
    if spec.kind is not OpKind.SignedMulBW:
        raise WidthMismatch(f"task multiplies need a signed multiplier, got {spec.label}")
    a, b = task.operand_pairs()
    _check_range(a, spec.a_range, "data")
    _check_range(b, spec.b_range, "coefficients")
    prods = np.asarray(multiplier.evaluate(a.reshape(-1), b.reshape(-1)),
                       dtype=np.int64).reshape(a.shape)
    if adder is None:
        acc = prods.sum(axis=1)
    else:
        acc = prods[:, 0].copy()
        for k in range(1, prods.shape[1]):
            _check_range(acc, adder.spec.a_range, "accumulator")
            _check_range(prods[:, k], adder.spec.b_range, "product")
            acc = np.asarray(adder.evaluate(acc, prods[:, k]), dtype=np.int64)
    return task.shape_output(acc)


def app_behav(outputs, golden, peak: int | None = None) -> AppBehavMetrics:
    """Output-level error of ``outputs`` against ``golden``; PSNR needs ``peak``."""
    out = np.asarray(outputs, dtype=np.int64)
    ref = np.asarray(golden, dtype=np.int64)
    if out.shape != ref.shape:
        raise LengthMismatch(f"outputs {out.shape} vs golden {ref.shape}")
    if out.size == 0:
        raise LengthMismatch("empty outputs")
    err = np.abs(out - ref)
    sq = int((err * err).sum())
    mse = sq / out.size
    psnr = None
    if peak is not None:
        psnr = PSNR_IDENTICAL_DB if sq == 0 else 10.0 * math.log10(peak * peak / mse)
    return AppBehavMetrics(mse, float(err.max()), psnr)


# ---------------------------------------------------------------- DSE


@dataclass(frozen=True, eq=False)
class AppEvaluator:
    """Fitness from a task run (application error) plus operator-level PPA."""

    task: TaskModel
    spec: OperatorSpec
    base: Netlist
    delay: DelayModel = DelayModel()
    power_plan: PowerPlan = PowerPlan()
    imported: Mapping[str, PpaMetrics] = field(default_factory=dict)
    golden: np.ndarray | None = None

    def __post_init__(self):
        if self.golden is None:
            object.__setattr__(self, "golden", run_task(self.task, Exact(self.spec)))

    @property
    def length(self) -> int:
        return len(self.base.luts)

    def __call__(self, config: str) -> DesignPoint:
        net = apply_config(self.base, config)
        out = run_task(self.task, NetlistFunctional(self.spec, net))
        app = app_behav(out, self.golden, self.task.peak)
        ppa = self.imported.get(config) or characterize_ppa(net, self.delay, self.power_plan)
        return DesignPoint(str(config), None, ppa, CHARACTERIZED, app.as_dict())


@dataclass
class AppDseResult:
    points: list[DesignPoint]
    archive: ParetoArchive
    log: list[dict]


def app_dse(task: TaskModel, spec: OperatorSpec, base: Netlist, objectives: Objectives,
            method: str = "Sampling", count: int = 1024, seed: int = 0,
            params: GaParams | None = None, workers: int = 1,
            evaluator: AppEvaluator | None = None) -> AppDseResult:
    """Application-level DSE over pruning configs of ``base``.

    ``Sampling`` evaluates ``count`` seeded random configs (the accurate
    config is always added); ``Ga`` runs NSGA-II with ``params``.
    """
    ev = evaluator or AppEvaluator(task, spec, base)
    length = len(base.luts)
    if method == "Sampling":
        count = min(count, 1 << length)
        configs = sample_configs(SamplingStrategy(SamplingKind.Random, seed=seed), length, count)
        ones = "1" * length
        if ones not in configs:
            configs = [*configs, ones]
        points = evaluate_list(configs, ev, workers)
        log = []
        for p in points:
            row = {"generation": 0, "config": p.config}
            row.update({m: p.metric(m) for m in objectives.objectives})
            row.update(feasible=objectives.feasible(p), fidelity=p.fidelity)
            log.append(row)
        return AppDseResult(points, pareto_front(points, objectives), log)
    if method == "Ga":
        res = nsga2_search(ev, length, objectives, params or GaParams(seed=seed), workers)
        return AppDseResult(list(res.evaluated.values()), res.archive, res.log)
    raise ValueError(f"unknown DSE method {method!r}")


# ---------------------------------------------------------------- file formats


def _text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    with open(source, encoding="utf-8") as fh:
        return fh.read()


def load_signal_csv(source) -> list[int]:
    """One integer sample per line; blank lines and ``#`` comments skipped."""
    out = []
    for lineno, line in enumerate(_text(source).splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            out.append(int(s))
        except ValueError:
            raise MalformedRecord(lineno, f"not an integer sample: {s!r}") from None
    if not out:
        raise DataError("signal file has no samples")
    return out


def save_signal_csv(samples: Sequence[int], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(f"{int(v)}\n" for v in samples))


def load_pgm(source) -> tuple[np.ndarray, int]:
    """ASCII (P2) greymap -> ``(pixels, maxval)``."""
    tokens = []
    for line in _text(source).splitlines():
        tokens += line.split("#", 1)[0].split()
    if not tokens or tokens[0] != "P2":
        raise MalformedRecord(1, "expected P2 magic")
    try:
        w, h, maxval = (int(t) for t in tokens[1:4])
        pix = [int(t) for t in tokens[4:]]
    except ValueError as exc:
        raise MalformedRecord(1, f"bad PGM token: {exc}") from None
    if len(pix) != w * h:
        raise MalformedRecord(1, f"expected {w * h} pixels, found {len(pix)}")
    arr = np.array(pix, dtype=np.int64).reshape(h, w)
    if arr.size and (arr.min() < 0 or arr.max() > maxval):
        raise MalformedRecord(1, "pixel outside 0..maxval")
    return arr, maxval


def save_pgm(pixels, path, maxval: int | None = None) -> None:
    arr = np.asarray(pixels, dtype=np.int64)
    maxval = int(arr.max()) if maxval is None else maxval
    h, w = arr.shape
    lines = ["P2", f"{w} {h}", str(maxval)]
    lines += [" ".join(str(int(v)) for v in row) for row in arr]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


__all__ = ["FirLowPass", "Conv2d3x3", "TaskModel", "AppBehavMetrics", "AppEvaluator",
           "AppDseResult", "quantize", "run_task", "app_behav", "app_dse",
           "load_signal_csv", "save_signal_csv", "load_pgm", "save_pgm", "PSNR_IDENTICAL_DB"]
