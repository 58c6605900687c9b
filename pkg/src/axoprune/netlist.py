"""Structural netlists of LUT and carry-chain cells.

Nets are plain non-negative integers. Net 0 and net 1 are reserved for the
constants 0 and 1. Every bus (operand inputs, outputs, truth-table indexing,
carry positions) is bit-0 first.

A :class:`LutCell` models a fractured 6-input LUT: the primary output reads
``init`` and an optional second output reads ``init5`` over the same inputs.
Removing the cell removes both outputs, which is what LUT pruning relies on.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import CycleDetected, InvalidNetlist, WidthMismatch

CONST0 = 0
CONST1 = 1
CONSTANTS = (CONST0, CONST1)
MAX_LUT_INPUTS = 6
CARRY_WIDTH = 4

_CHUNK = 1 << 16


@dataclass(frozen=True)
class LutCell:
    id: str
    inputs: tuple[int, ...]
    init: int
    output: int
    init5: int | None = None
    output5: int | None = None

    @property
    def outputs(self) -> tuple[int, ...]:
        if self.output5 is None:
            return (self.output,)
        return (self.output, self.output5)

    @property
    def tables(self) -> tuple[int, ...]:
        if self.output5 is None:
            return (self.init,)
        return (self.init, self.init5)

    def evaluate(self, bits: Sequence[int]) -> tuple[int, ...]:
        """Outputs for one input vector (``bits[k]`` drives ``inputs[k]``)."""
        idx = sum((b & 1) << k for k, b in enumerate(bits))
        return tuple((t >> idx) & 1 for t in self.tables)


@dataclass(frozen=True)
class CarryCell:
    id: str
    s: tuple[int, int, int, int]
    di: tuple[int, int, int, int]
    cin: int
    o: tuple[int, int, int, int]
    co: tuple[int, int, int, int]

    @property
    def inputs(self) -> tuple[int, ...]:
        return (*self.s, *self.di, self.cin)

    @property
    def outputs(self) -> tuple[int, ...]:
        return (*self.o, *self.co)

    @staticmethod
    def evaluate(s: Sequence[int], di: Sequence[int], cin: int) -> tuple[list[int], list[int]]:
        """Reference semantics: ``co[i] = s[i] ? c[i-1] : di[i]``, ``o[i] = s[i] ^ c[i-1]``."""
        c = cin
        o, co = [], []
        for si, dii in zip(s, di):
            o.append(si ^ c)
            c = c if si else dii
            co.append(c)
        return o, co


Bus = tuple[str, tuple[int, ...]]


@dataclass(frozen=True)
class Netlist:
    """Immutable combinational netlist.

    ``inputs``/``outputs`` are ordered named buses; ``pruned`` keeps the LUT
    cells removed by pruning so reports and RTL can still name them.
    """

    name: str
    inputs: tuple[Bus, ...]
    outputs: tuple[Bus, ...]
    luts: tuple[LutCell, ...]
    carries: tuple[CarryCell, ...] = ()
    pruned: tuple[LutCell, ...] = field(default=())

    constants = CONSTANTS

    @property
    def primary_inputs(self) -> tuple[int, ...]:
        return tuple(n for _, bus in self.inputs for n in bus)

    @property
    def primary_outputs(self) -> tuple[int, ...]:
        return tuple(n for _, bus in self.outputs for n in bus)

    @property
    def cells(self) -> tuple[LutCell | CarryCell, ...]:
        return (*self.luts, *self.carries)

    @cached_property
    def cell_map(self) -> dict[str, LutCell | CarryCell]:
        return {c.id: c for c in self.cells}

    @cached_property
    def drivers(self) -> dict[int, str]:
        """Net -> id of the cell driving it (first driver wins if invalid)."""
        out: dict[int, str] = {}
        for c in self.cells:
            for n in c.outputs:
                out.setdefault(n, c.id)
        return out

    @property
    def net_count(self) -> int:
        nets = [CONST1, *self.primary_inputs, *self.primary_outputs]
        for c in self.cells:
            nets.extend(c.inputs)
            nets.extend(c.outputs)
        return max(nets) + 1

    @cached_property
    def _program(self):
        return _compile(self)


# ---------------------------------------------------------------- violations


@dataclass(frozen=True)
class MultipleDrivers:
    net: int
    drivers: tuple[str, ...]

    def __str__(self):
        return f"net {self.net} driven by {', '.join(self.drivers)}"


@dataclass(frozen=True)
class DanglingNet:
    net: int
    cell: str

    def __str__(self):
        return f"cell {self.cell} reads undriven net {self.net}"


@dataclass(frozen=True)
class UndrivenOutput:
    net: int

    def __str__(self):
        return f"primary output net {self.net} is undriven"


@dataclass(frozen=True)
class BadCell:
    cell: str
    reason: str

    def __str__(self):
        return f"cell {self.cell}: {self.reason}"


@dataclass(frozen=True)
class Cycle:
    cells: tuple[str, ...]

    def __str__(self):
        return f"cycle through {', '.join(self.cells)}"


def validate(netlist: Netlist) -> list:
    """Return structural violations; an empty list means the netlist is sound."""
    violations: list = []
    ids = [c.id for c in netlist.cells]
    seen_ids: set[str] = set()
    for cid in ids:
        if cid in seen_ids:
            violations.append(BadCell(cid, "duplicate cell id"))
        seen_ids.add(cid)

    drivers: dict[int, list[str]] = {}
    for n in netlist.primary_inputs:
        drivers.setdefault(n, []).append("<input>")
    for n in CONSTANTS:
        drivers.setdefault(n, []).append("<const>")
    for c in netlist.cells:
        for n in c.outputs:
            drivers.setdefault(n, []).append(c.id)
    for n, ds in sorted(drivers.items()):
        if len(ds) > 1:
            violations.append(MultipleDrivers(n, tuple(ds)))

    for lut in netlist.luts:
        k = len(lut.inputs)
        if not 1 <= k <= MAX_LUT_INPUTS:
            violations.append(BadCell(lut.id, f"{k} inputs (expected 1..6)"))
            continue
        for t in lut.tables:
            if t < 0 or t >> (1 << k):
                violations.append(BadCell(lut.id, "init has bits above 2^n"))
        if (lut.init5 is None) != (lut.output5 is None):
            violations.append(BadCell(lut.id, "second output needs both init5 and output5"))
    for cc in netlist.carries:
        if any(len(v) != CARRY_WIDTH for v in (cc.s, cc.di, cc.o, cc.co)):
            violations.append(BadCell(cc.id, "carry buses must be 4 bits wide"))

    for c in netlist.cells:
        for n in c.inputs:
            if n not in drivers:
                violations.append(DanglingNet(n, c.id))
    for n in netlist.primary_outputs:
        if n not in drivers:
            violations.append(UndrivenOutput(n))

    if not violations:
        try:
            topo_order(netlist)
        except CycleDetected as exc:
            violations.append(Cycle(tuple(exc.cells)))
    return violations


def topo_order(netlist: Netlist) -> list[str]:
    """Cell ids such that every cell follows the cells driving its inputs.

    Ties are broken by ascending cell id, so the order is deterministic.
    """
    drv = netlist.drivers
    preds: dict[str, set[str]] = {}
    succs: dict[str, list[str]] = {c.id: [] for c in netlist.cells}
    for c in netlist.cells:
        p = {drv[n] for n in c.inputs if n in drv}
        preds[c.id] = p
        for q in p:
            succs[q].append(c.id)
    indeg = {cid: len(p) for cid, p in preds.items()}
    heap = [cid for cid, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        cid = heapq.heappop(heap)
        order.append(cid)
        for s in succs[cid]:
            indeg[s] -= 1
            if indeg[s] == 0:
                heapq.heappush(heap, s)
    if len(order) != len(indeg):
        raise CycleDetected(sorted(cid for cid, d in indeg.items() if d > 0))
    return order


# ---------------------------------------------------------------- simulation


def _compile(netlist: Netlist):
    violations = validate(netlist)
    if violations:
        raise InvalidNetlist(violations)
    ops = []
    for cid in topo_order(netlist):
        cell = netlist.cell_map[cid]
        if isinstance(cell, LutCell):
            size = 1 << len(cell.inputs)
            tables = [
                np.array([(t >> k) & 1 for k in range(size)], dtype=np.uint8)
                for t in cell.tables
            ]
            ops.append(("lut", np.array(cell.inputs), tables, cell.outputs))
        else:
            ops.append(("carry", cell))
    return ops


def simulate_nets(netlist: Netlist, input_bits: np.ndarray) -> np.ndarray:
    """Values of every net for a batch of input vectors.

    ``input_bits`` has shape ``(V, n_inputs)``; the result has shape
    ``(net_count, V)`` with dtype uint8.
    """
    bits = np.asarray(input_bits, dtype=np.uint8)
    pis = netlist.primary_inputs
    if bits.ndim != 2 or bits.shape[1] != len(pis):
        raise WidthMismatch(
            f"expected {len(pis)} input bits per vector, got shape {bits.shape}"
        )
    program = netlist._program
    nv = bits.shape[0]
    vals = np.zeros((netlist.net_count, nv), dtype=np.uint8)
    vals[CONST1] = 1
    vals[list(pis)] = bits.T
    for op in program:
        if op[0] == "lut":
            _, ins, tables, outs = op
            idx = np.zeros(nv, dtype=np.uint8)
            for k, n in enumerate(ins):
                idx |= vals[n] << k
            for t, n in zip(tables, outs):
                vals[n] = t[idx]
        else:
            cc = op[1]
            c = vals[cc.cin]
            for i in range(CARRY_WIDTH):
                s = vals[cc.s[i]]
                vals[cc.o[i]] = s ^ c
                c = np.where(s != 0, c, vals[cc.di[i]])
                vals[cc.co[i]] = c
    return vals


def simulate_batch(netlist: Netlist, input_bits: np.ndarray) -> np.ndarray:
    """Primary-output bits for a batch: ``(V, n_inputs) -> (V, n_outputs)``."""
    bits = np.asarray(input_bits, dtype=np.uint8)
    if bits.ndim != 2:
        raise WidthMismatch("input_bits must be a 2-D array of vectors")
    pos = list(netlist.primary_outputs)
    out = np.empty((bits.shape[0], len(pos)), dtype=np.uint8)
    for start in range(0, bits.shape[0], _CHUNK):
        chunk = bits[start:start + _CHUNK]
        out[start:start + len(chunk)] = simulate_nets(netlist, chunk)[pos].T
    return out


def simulate(netlist: Netlist, input_bits: Sequence[int]) -> list[int]:
    """Simulate one input vector; returns output bits, bit 0 first."""
    if len(input_bits) != len(netlist.primary_inputs):
        raise WidthMismatch(
            f"expected {len(netlist.primary_inputs)} input bits, got {len(input_bits)}"
        )
    row = np.asarray(input_bits, dtype=np.uint8).reshape(1, -1)
    return [int(v) for v in simulate_batch(netlist, row)[0]]


def constant_values(netlist: Netlist) -> dict[int, int]:
    """Nets whose value is structurally constant, mapped to that value."""
    val = {CONST0: 0, CONST1: 1}
    for cid in topo_order(netlist):
        cell = netlist.cell_map[cid]
        if isinstance(cell, LutCell):
            if all(n in val for n in cell.inputs):
                outs = cell.evaluate([val[n] for n in cell.inputs])
                val.update(zip(cell.outputs, outs))
            continue
        c = val.get(cell.cin)
        for i in range(CARRY_WIDTH):
            s = val.get(cell.s[i])
            d = val.get(cell.di[i])
            if s is None:
                o = None
                c = c if (c is not None and c == d) else None
            elif s:
                o = None if c is None else 1 - c
            else:
                o = c
                c = d
            if o is not None:
                val[cell.o[i]] = o
            if c is not None:
                val[cell.co[i]] = c
    return val
