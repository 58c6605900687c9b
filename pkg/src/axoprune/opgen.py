"""Accurate operator netlists: ripple-carry adders and Baugh-Wooley multipliers.

Both generators map every adder column onto one fractured LUT whose primary
output is the column propagate (``x ^ y``) and whose second output is the
column generate (``x``), feeding a chain of 4-bit carry cells. The LUTs are
listed in generation order; that order is the bit order of approximation
configs.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import OperandOutOfRange, UnsupportedWidth, WidthMismatch
from .netlist import CARRY_WIDTH, CONST0, CarryCell, LutCell, Netlist

ADD_WIDTHS = range(2, 17)
MUL_WIDTHS = range(2, 9)


class OpKind(str, enum.Enum):
    UnsignedAdd = "UnsignedAdd"
    SignedMulBW = "SignedMulBW"


@dataclass(frozen=True)
class OperatorSpec:
    kind: OpKind
    width_a: int
    width_b: int
    width_out: int

    def __post_init__(self):
        object.__setattr__(self, "kind", OpKind(self.kind))
        if self.kind is OpKind.UnsignedAdd:
            if not (self.width_a == self.width_b and self.width_out == self.width_a + 1):
                raise WidthMismatch(f"adder widths must be N, N, N+1: {self}")
        elif self.width_out != self.width_a + self.width_b:
            raise WidthMismatch(f"multiplier output must be width_a + width_b: {self}")

    @classmethod
    def uadd(cls, n: int) -> "OperatorSpec":
        return cls(OpKind.UnsignedAdd, n, n, n + 1)

    @classmethod
    def smul(cls, n: int, m: int) -> "OperatorSpec":
        return cls(OpKind.SignedMulBW, n, m, n + m)

    @property
    def signed(self) -> bool:
        return self.kind is OpKind.SignedMulBW

    @property
    def label(self) -> str:
        """``NxM_K`` operator name."""
        return f"{self.width_a}x{self.width_b}_{self.width_out}"

    def operand_range(self, width: int) -> tuple[int, int]:
        if self.signed:
            return -(1 << (width - 1)), (1 << (width - 1)) - 1
        return 0, (1 << width) - 1

    @property
    def a_range(self) -> tuple[int, int]:
        return self.operand_range(self.width_a)

    @property
    def b_range(self) -> tuple[int, int]:
        return self.operand_range(self.width_b)

    @property
    def out_range(self) -> tuple[int, int]:
        return self.operand_range(self.width_out)

    @property
    def space_size(self) -> int:
        return 1 << (self.width_a + self.width_b)

    def exact(self, a, b):
        """Integer reference result (vectorised over numpy arrays)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        return a + b if self.kind is OpKind.UnsignedAdd else a * b

    def check_operands(self, a, b) -> None:
        a = np.asarray(a)
        b = np.asarray(b)
        for name, v, (lo, hi) in (("a", a, self.a_range), ("b", b, self.b_range)):
            if v.size and (v.min() < lo or v.max() > hi):
                raise OperandOutOfRange(f"operand {name} outside [{lo}, {hi}]")

    def all_operands(self) -> tuple[np.ndarray, np.ndarray]:
        """Every operand pair, ``a`` major, each ascending."""
        a = np.arange(self.a_range[0], self.a_range[1] + 1, dtype=np.int64)
        b = np.arange(self.b_range[0], self.b_range[1] + 1, dtype=np.int64)
        aa, bb = np.meshgrid(a, b, indexing="ij")
        return aa.ravel(), bb.ravel()

    def encode(self, a, b) -> np.ndarray:
        """Operand pairs -> primary-input bit rows (a bits then b bits)."""
        a = np.asarray(a, dtype=np.int64).reshape(-1)
        b = np.asarray(b, dtype=np.int64).reshape(-1)
        abits = (a[:, None] >> np.arange(self.width_a)) & 1
        bbits = (b[:, None] >> np.arange(self.width_b)) & 1
        return np.concatenate([abits, bbits], axis=1).astype(np.uint8)

    def decode(self, bits: np.ndarray) -> np.ndarray:
        """Output bit rows -> integers (two's complement for signed operators)."""
        bits = np.asarray(bits, dtype=np.int64)
        val = (bits << np.arange(bits.shape[1])).sum(axis=1)
        if self.signed:
            top = 1 << (self.width_out - 1)
            val = np.where(val >= top, val - (1 << self.width_out), val)
        return val

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "width_a": self.width_a,
                "width_b": self.width_b, "width_out": self.width_out}


class _Builder:
    def __init__(self, name: str):
        self.name = name
        self.next_net = 2
        self.luts: list[LutCell] = []
        self.carries: list[CarryCell] = []

    def nets(self, k: int) -> tuple[int, ...]:
        out = tuple(range(self.next_net, self.next_net + k))
        self.next_net += k
        return out

    def lut(self, inputs, fn6, fn5=None) -> tuple[int, ...]:
        """Add a LUT; ``fn6``/``fn5`` map an input-bit tuple to 0/1."""
        inputs = tuple(inputs)
        init6 = init5 = 0
        for idx, bits in enumerate(_truth_rows(len(inputs))):
            init6 |= fn6(bits) << idx
            if fn5 is not None:
                init5 |= fn5(bits) << idx
        cid = f"L{len(self.luts):04d}"
        if fn5 is None:
            (o6,) = self.nets(1)
            self.luts.append(LutCell(cid, inputs, init6, o6))
            return (o6,)
        o6, o5 = self.nets(2)
        self.luts.append(LutCell(cid, inputs, init6, o6, init5, o5))
        return o6, o5

    def chain(self, props, gens, cin) -> tuple[list[int], int]:
        """Carry chain over columns; returns (sum nets, final carry-out net)."""
        k = len(props)
        sums, carry = [], cin
        for start in range(0, k, CARRY_WIDTH):
            s = list(props[start:start + CARRY_WIDTH])
            d = list(gens[start:start + CARRY_WIDTH])
            used = len(s)
            s += [CONST0] * (CARRY_WIDTH - used)
            d += [CONST0] * (CARRY_WIDTH - used)
            o = self.nets(CARRY_WIDTH)
            co = self.nets(CARRY_WIDTH)
            self.carries.append(
                CarryCell(f"C{len(self.carries):04d}", tuple(s), tuple(d), carry, o, co)
            )
            sums.extend(o[:used])
            carry = co[used - 1]
        return sums, carry

    def build(self, inputs, outputs) -> Netlist:
        return Netlist(self.name, tuple(inputs), tuple(outputs),
                       tuple(self.luts), tuple(self.carries))


def _truth_rows(k: int):
    # row idx has input bit j equal to (idx >> j) & 1
    for idx in range(1 << k):
        yield tuple((idx >> j) & 1 for j in range(k))


def gen_unsigned_adder(n: int) -> Netlist:
    """Accurate ``n``-bit unsigned adder: one LUT per bit plus a carry chain."""
    if n not in ADD_WIDTHS:
        raise UnsupportedWidth(f"adder width {n} not in 2..16")
    bld = _Builder(f"uadd{n}")
    a = bld.nets(n)
    b = bld.nets(n)
    props, gens = [], []
    for i in range(n):
        p, g = bld.lut((a[i], b[i]), lambda v: v[0] ^ v[1], lambda v: v[0])
        props.append(p)
        gens.append(g)
    sums, cout = bld.chain(props, gens, CONST0)
    return bld.build([("a", a), ("b", b)], [("out", (*sums, cout))])


def gen_signed_mul_bw(n: int, m: int) -> Netlist:
    """Accurate ``n`` x ``m`` two's-complement Baugh-Wooley array multiplier.

    Partial product ``a_i b_j`` sits in column ``i + j`` and is complemented
    when exactly one of ``a_i``, ``b_j`` is a sign bit. The correction constant
    ``2^(n-1) + 2^(m-1) + 2^(n+m-1)`` is folded in structurally: ``2^(n-1)``
    by rewriting row 0's complemented top bit, ``2^(m-1)`` as carry-in of the
    last row's chain and ``2^(n+m-1)`` as a select on the top column. Both
    of the latter come from a constant-1 second output of the ``a0 b0`` LUT. Rows 0 and 1 share one chain (two partial products per LUT);
    every further row is one chain adding onto the running sum.

    The LUT count is ``1 + n*(m-1)``.
    """
    if n not in MUL_WIDTHS or m not in MUL_WIDTHS:
        raise UnsupportedWidth(f"multiplier widths {n}x{m} not in 2..8")
    bld = _Builder(f"smul{n}x{m}")
    a = bld.nets(n)
    b = bld.nets(m)
    width = n + m

    def term(i, j):
        comp = (i == n - 1) != (j == m - 1)
        return (i, j, comp)

    row0 = {i: (i, 0, False) for i in range(n)}
    row0[n] = (n - 1, 0, True)

    def rowj(j):
        return {i + j: term(i, j) for i in range(n)}

    def term_value(t, env):
        i, j, comp = t
        return (env[a[i]] & env[b[j]]) ^ comp

    def column_lut(x, y):
        """LUT producing propagate ``x ^ y`` and generate ``x``.

        Each addend is a partial-product term tuple or an existing net.
        """
        ins: list[int] = []
        for t in (x, y):
            need = [t] if isinstance(t, int) else [a[t[0]], b[t[1]]]
            for net in need:
                if net not in ins:
                    ins.append(net)

        def value(t, bits):
            env = dict(zip(ins, bits))
            return env[t] if isinstance(t, int) else term_value(t, env)

        return bld.lut(ins, lambda v: value(x, v) ^ value(y, v), lambda v: value(x, v))

    acc: dict[int, int] = {}
    # the spare output is a constant 1 that enables the correction terms, so
    # pruning every LUT yields the all-zero operator
    acc[0], corr = bld.lut((a[0], b[0]), lambda v: v[0] & v[1], lambda v: 1)

    def run_chain(lo, hi, x_of, y_of, last):
        props, gens = [], []
        for c in range(lo, hi + 1):
            p, g = column_lut(x_of(c), y_of(c))
            props.append(p)
            gens.append(g)
        if last:
            props.append(corr)
            gens.append(CONST0)
        sums, cout = bld.chain(props, gens, corr if last else CONST0)
        for off, net in enumerate(sums):
            acc[lo + off] = net
        if not last:
            acc[hi + 1] = cout

    r1 = rowj(1)
    run_chain(1, n, row0.__getitem__, r1.__getitem__, last=(m == 2))
    for j in range(2, m):
        rj = rowj(j)
        run_chain(j, n + j - 1, acc.__getitem__, rj.__getitem__, last=(j == m - 1))

    out = tuple(acc[c] for c in range(width))
    return bld.build([("a", a), ("b", b)], [("out", out)])


def generate(spec: OperatorSpec) -> Netlist:
    if spec.kind is OpKind.UnsignedAdd:
        return gen_unsigned_adder(spec.width_a)
    return gen_signed_mul_bw(spec.width_a, spec.width_b)


def config_length(spec: OperatorSpec) -> int:
    """Number of prunable LUTs of the accurate netlist for ``spec``."""
    if spec.kind is OpKind.UnsignedAdd:
        return spec.width_a
    return 1 + spec.width_a * (spec.width_b - 1)


def parse_spec(kind: str, *widths: int) -> OperatorSpec:
    """``('uadd', 8)`` or ``('smul-bw', 4, 4)`` -> OperatorSpec."""
    key = kind.lower().replace("_", "-")
    if key in ("uadd", "unsignedadd"):
        if len(widths) != 1:
            raise UnsupportedWidth("uadd takes one width")
        if widths[0] not in ADD_WIDTHS:
            raise UnsupportedWidth(f"adder width {widths[0]} not in 2..16")
        return OperatorSpec.uadd(widths[0])
    if key in ("smul-bw", "smul", "signedmulbw"):
        if len(widths) == 1:
            widths = (widths[0], widths[0])
        if len(widths) != 2 or any(w not in MUL_WIDTHS for w in widths):
            raise UnsupportedWidth(f"multiplier widths {widths} not in 2..8")
        return OperatorSpec.smul(*widths)
    raise UnsupportedWidth(f"unknown operator kind {kind!r}")


__all__ = [
    "OpKind", "OperatorSpec", "gen_unsigned_adder", "gen_signed_mul_bw",
    "generate", "config_length", "parse_spec", "RtlMode", "emit_verilog",
]

from .rtl import RtlMode, emit_verilog  # noqa: E402  emitter lives beside the generators
