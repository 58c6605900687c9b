"""Bundled assets and brute-force oracles for cross-checking the main code paths.

The oracles deliberately avoid everything in :mod:`axoprune.behav` and the
vectorised simulator. Adders are modelled bit by bit in plain integers;
multipliers go through a naive recursive netlist interpreter that applies
pruning itself. Metric sums are accumulated as exact rationals.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import SpaceTooLarge
from .netlist import CONST0, CONST1, CarryCell, LutCell, Netlist
from .opgen import OperatorSpec, OpKind, generate

FIXTURE_VERSION = "v1"
ORACLE_CAP = 1 << 20

FIR_SIGNAL = "fir_signal.csv"
FIR_TAPS = "fir_taps.csv"
GRADIENT_PGM = "gradient64.pgm"
IMPORTED_PPA = "imported_ppa_uadd4.csv"
SAMPLE_LIBRARY = "library_uadd4.json"


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled fixture file."""
    return Path(str(resources.files("axoprune") / "data" / FIXTURE_VERSION / name))


# ---------------------------------------------------------------- oracle


@dataclass(frozen=True)
class OracleReport:
    spec: OperatorSpec
    config: str
    metrics: dict[str, float]


def _adder_model(n: int, config: str, a: int, b: int, tie: int) -> int:
    # a pruned bit's LUT outputs (propagate and generate) both read ``tie``
    carry, out = 0, 0
    for i in range(n):
        ai, bi = (a >> i) & 1, (b >> i) & 1
        if config[i] == "1":
            p, g = ai ^ bi, ai
        else:
            p = g = tie
        out |= (p ^ carry) << i
        carry = carry if p else g
    return out | (carry << n)


class _NaiveInterpreter:
    """Recursive per-vector evaluation straight from the cell list."""

    def __init__(self, netlist: Netlist, config: str, tie: int):
        self.netlist = netlist
        self.removed = {lut.id for bit, lut in zip(config, netlist.luts) if bit == "0"}
        self.tie = tie
        self.driver: dict[int, tuple] = {}
        for lut in netlist.luts:
            self.driver[lut.output] = (lut, 0)
            if lut.output5 is not None:
                self.driver[lut.output5] = (lut, 1)
        for cc in netlist.carries:
            for k in range(4):
                self.driver[cc.o[k]] = (cc, ("o", k))
                self.driver[cc.co[k]] = (cc, ("co", k))

    def run(self, assignment: dict[int, int]) -> list[int]:
        memo = dict(assignment)
        memo[CONST0], memo[CONST1] = 0, 1
        return [self._net(n, memo) for n in self.netlist.primary_outputs]

    def _net(self, net: int, memo: dict[int, int]) -> int:
        if net in memo:
            return memo[net]
        cell, which = self.driver[net]
        if isinstance(cell, LutCell):
            if cell.id in self.removed:
                val = self.tie
            else:
                idx = 0
                for k, n in enumerate(cell.inputs):
                    idx += self._net(n, memo) << k
                table = cell.init if which == 0 else cell.init5
                val = (table >> idx) & 1
        else:
            val = self._carry(cell, which, memo)
        memo[net] = val
        return val

    def _carry(self, cc: CarryCell, which, memo) -> int:
        kind, k = which
        c = self._net(cc.cin, memo)
        for i in range(k + 1):
            s = self._net(cc.s[i], memo)
            if i == k and kind == "o":
                return s ^ c
            c = c if s else self._net(cc.di[i], memo)
        return c


def _bits_of(value: int, width: int) -> list[int]:
    return [(value >> i) & 1 for i in range(width)]


def _from_bits(bits: list[int], signed: bool) -> int:
    v = sum(b << i for i, b in enumerate(bits))
    if signed and bits[-1]:
        v -= 1 << len(bits)
    return v


def oracle_behav(spec: OperatorSpec, config: str, tie: int = 0,
                 netlist: Netlist | None = None) -> OracleReport:
    """Exhaustive error metrics of ``config`` computed without the library's evaluators."""
    na, nb = spec.width_a, spec.width_b
    if (1 << (na + nb)) > ORACLE_CAP:
        raise SpaceTooLarge("oracle operand space above 2^20")
    if spec.kind is OpKind.UnsignedAdd:
        a_vals, b_vals = range(1 << na), range(1 << nb)

        def approx(a, b):
            return _adder_model(na, config, a, b, tie)

        def exact(a, b):
            return a + b
    else:
        a_vals = range(-(1 << (na - 1)), 1 << (na - 1))
        b_vals = range(-(1 << (nb - 1)), 1 << (nb - 1))
        net = netlist if netlist is not None else generate(spec)
        interp = _NaiveInterpreter(net, config, tie)
        a_bus = dict(net.inputs)["a"]
        b_bus = dict(net.inputs)["b"]

        def approx(a, b):
            env = dict(zip(a_bus, _bits_of(a, na)))
            env.update(zip(b_bus, _bits_of(b, nb)))
            return _from_bits(interp.run(env), True)

        def exact(a, b):
            return a * b
    n = 0
    abs_sum = sq_sum = wrong = worst = 0
    rel_sum = Fraction(0)
    for a in a_vals:
        for b in b_vals:
            ref = exact(a, b)
            err = abs(approx(a, b) - ref)
            n += 1
            abs_sum += err
            sq_sum += err * err
            wrong += err != 0
            worst = max(worst, err)
            rel_sum += Fraction(err, max(abs(ref), 1))
    metrics = {
        "avg_abs_err": float(Fraction(abs_sum, n)),
        "avg_rel_err": float(rel_sum / n),
        "max_abs_err": float(worst),
        "err_prob": float(Fraction(wrong, n)),
        "mse": float(Fraction(sq_sum, n)),
    }
    return OracleReport(spec, config, metrics)


def oracle_fir(taps, signal) -> list[int]:
    """Direct-form FIR in plain integers, zero history."""
    out = []
    for n in range(len(signal)):
        acc = 0
        for k, h in enumerate(taps):
            if n - k >= 0:
                acc += h * signal[n - k]
        out.append(acc)
    return out


# ---------------------------------------------------------------- bundled data


def fir_taps() -> list[int]:
    from .apps import load_signal_csv
    return load_signal_csv(fixture_path(FIR_TAPS))


def fir_signal() -> list[int]:
    from .apps import load_signal_csv
    return load_signal_csv(fixture_path(FIR_SIGNAL))


def gradient_image():
    """``(pixels, maxval)`` of the bundled 64x64 gradient."""
    from .apps import load_pgm
    return load_pgm(fixture_path(GRADIENT_PGM))


def build_fixture_files(directory) -> None:
    """Regenerate the bundled data files deterministically into ``directory``."""
    import json

    import numpy as np

    from .apps import quantize, save_pgm, save_signal_csv
    from .axmodel import enumerate_configs

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)

    # windowed-sinc low-pass, 15 taps, cutoff 0.1 of the sample rate
    k = np.arange(15) - 7
    h = np.sinc(0.2 * k) * np.hamming(15)
    save_signal_csv(quantize(h / h.sum(), 8), d / FIR_TAPS)

    rng = np.random.default_rng(2024)
    t = np.arange(256)
    x = np.sin(2 * np.pi * t / 64) + 0.5 * np.sin(2 * np.pi * t / 5) + 0.2 * rng.standard_normal(256)
    save_signal_csv(quantize(x, 8), d / FIR_SIGNAL)

    yy, xx = np.mgrid[0:64, 0:64]
    save_pgm(xx + yy, d / GRADIENT_PGM, maxval=127)

    # synthetic "measured" records for a few 4-bit adder configs
    lines = ["# sample imported PPA for uadd 4 (synthetic values)",
             "config,lut,carry,cpd_ns,power_mw,pdp"]
    for cfg in ("1111", "0111", "0011", "0001", "0000"):
        luts = cfg.count("1")
        cpd = 0.9 + 0.12 * luts
        power = 0.4 + 0.35 * luts
        lines.append(f"{cfg},{luts},{1 if luts else 0},{cpd:.3f},{power:.3f},{cpd * power:.5f}")
    (d / IMPORTED_PPA).write_text("\n".join(lines) + "\n", encoding="utf-8")

    lib = {"spec": OperatorSpec.uadd(4).to_dict(),
           "entries": [{"name": c, "config": c} for c in enumerate_configs(4)]}
    (d / SAMPLE_LIBRARY).write_text(json.dumps(lib, indent=2) + "\n", encoding="utf-8")


__all__ = ["OracleReport", "oracle_behav", "oracle_fir", "fixture_path", "fir_taps",
           "fir_signal", "gradient_image", "build_fixture_files"]
