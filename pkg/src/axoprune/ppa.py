"""Structural hardware-cost proxies and import of measured PPA records."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DuplicateConfig, InvalidNetlist, MalformedRecord, SchemaMismatch
from .netlist import (CARRY_WIDTH, LutCell, Netlist, constant_values,
                      simulate_nets, topo_order, validate)

PROXY = "Proxy"
IMPORTED = "Imported"
IMPORT_COLUMNS = ("config", "lut", "carry", "cpd_ns", "power_mw", "pdp")


@dataclass(frozen=True)
class PpaMetrics:
    lut_count: int
    carry_count: int
    cpd_proxy: float
    power_proxy: float
    pdp_proxy: float
    source: str = PROXY

    FIELDS = ("lut_count", "carry_count", "cpd_proxy", "power_proxy", "pdp_proxy")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DelayModel:
    lut_delay: float = 1.0
    carry_per_bit_delay: float = 0.1
    net_delay: float = 0.0

    def __post_init__(self):
        if self.lut_delay <= 0 or self.carry_per_bit_delay <= 0:
            raise ValueError("cell delays must be strictly positive")
        if self.net_delay != 0:
            raise ValueError("net delay is fixed at 0")


@dataclass(frozen=True)
class PowerPlan:
    vectors: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.vectors < 2:
            raise ValueError("power estimation needs at least 2 vectors")


def critical_path(netlist: Netlist, delay: DelayModel = DelayModel(),
                  const: dict[int, int] | None = None) -> float:
    """Longest weighted path from any primary input to any primary output.

    Constant nets carry no path. A signal entering a carry cell at position
    ``i`` (carry-in enters at position 0) and leaving at position ``k``
    costs ``(k - i + 1) * carry_per_bit_delay``.
    """
    const = constant_values(netlist) if const is None else const
    arr: dict[int, float] = {n: 0.0 for n in netlist.primary_inputs}
    cpb = delay.carry_per_bit_delay
    for cid in topo_order(netlist):
        cell = netlist.cell_map[cid]
        if isinstance(cell, LutCell):
            ins = [arr[n] for n in cell.inputs if n in arr and n not in const]
            if ins:
                t = max(ins) + delay.lut_delay
                for n in cell.outputs:
                    if n not in const:
                        arr[n] = t
            continue
        # (position, arrival, pin) of every live input
        live = []
        if cell.cin in arr and cell.cin not in const:
            live.append((0, arr[cell.cin], "c"))
        for i in range(CARRY_WIDTH):
            for n, tag in ((cell.s[i], "s"), (cell.di[i], "d")):
                if n in arr and n not in const:
                    live.append((i, arr[n], tag))
        for k in range(CARRY_WIDTH):
            for net, is_o in ((cell.o[k], True), (cell.co[k], False)):
                if net in const:
                    continue
                cand = [t + (k - i + 1) * cpb for i, t, tag in live
                        if i < k or (i == k and (tag != "d" or not is_o))]
                if cand:
                    arr[net] = max(cand)
    outs = [arr[n] for n in netlist.primary_outputs if n in arr and n not in const]
    return max(outs, default=0.0)


def toggle_rate(netlist: Netlist, plan: PowerPlan = PowerPlan()) -> float:
    """Mean number of cell-output nets changing value per input step."""
    rng = np.random.default_rng(plan.seed)
    bits = rng.integers(0, 2, size=(plan.vectors, len(netlist.primary_inputs)), dtype=np.uint8)
    vals = simulate_nets(netlist, bits)
    nets = sorted({n for c in netlist.cells for n in c.outputs})
    if not nets:
        return 0.0
    v = vals[nets]
    toggles = np.count_nonzero(v[:, 1:] != v[:, :-1])
    return toggles / (plan.vectors - 1)


def characterize_ppa(netlist: Netlist, delay: DelayModel = DelayModel(),
                     power_plan: PowerPlan = PowerPlan()) -> PpaMetrics:
    violations = validate(netlist)
    if violations:
        raise InvalidNetlist(violations)
    const = constant_values(netlist)
    luts = sum(1 for l in netlist.luts if any(n not in const for n in l.outputs))
    carries = sum(1 for c in netlist.carries if any(n not in const for n in c.inputs))
    cpd = critical_path(netlist, delay, const)
    power = toggle_rate(netlist, power_plan)
    return PpaMetrics(luts, carries, cpd, power, power * cpd, PROXY)


# ---------------------------------------------------------------- import


def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, newline="", encoding="utf-8") as fh:
            return fh.read()
    if hasattr(source, "read"):
        return source.read()
    return str(source)


def import_ppa(source) -> dict[str, PpaMetrics]:
    """Parse a measured-PPA CSV (path, file object or text).

    Header must be exactly ``config,lut,carry,cpd_ns,power_mw,pdp``. Lines
    starting with ``#`` are ignored.
    """
    text = _read_text(source)
    rows = [(i + 1, line) for i, line in enumerate(text.splitlines())
            if line.strip() and not line.lstrip().startswith("#")]
    if not rows:
        raise SchemaMismatch("missing header")
    header_line, header = rows[0]
    if tuple(h.strip() for h in next(csv.reader([header]))) != IMPORT_COLUMNS:
        raise MalformedRecord(header_line, f"header must be {','.join(IMPORT_COLUMNS)}")
    out: dict[str, PpaMetrics] = {}
    for lineno, line in rows[1:]:
        fields = [f.strip() for f in next(csv.reader(io.StringIO(line)))]
        if len(fields) != len(IMPORT_COLUMNS):
            raise MalformedRecord(lineno, f"expected 6 fields, got {len(fields)}")
        cfg = fields[0]
        if not cfg:
            raise MalformedRecord(lineno, "empty config id")
        try:
            lut, carry = int(fields[1]), int(fields[2])
            cpd, power, pdp = (float(f) for f in fields[3:])
        except ValueError as exc:
            raise MalformedRecord(lineno, str(exc)) from None
        if min(lut, carry, cpd, power, pdp) < 0:
            raise MalformedRecord(lineno, "negative metric")
        if cfg in out:
            raise DuplicateConfig(cfg)
        out[cfg] = PpaMetrics(lut, carry, cpd, power, pdp, IMPORTED)
    return out


def merge_imported(proxies: dict[str, PpaMetrics], imported: dict[str, PpaMetrics]):
    """Override proxies with imported records; returns ``(merged, unknown_ids)``."""
    merged = dict(proxies)
    unknown = []
    for cfg, rec in imported.items():
        if cfg in merged:
            merged[cfg] = rec
        else:
            unknown.append(cfg)
    return merged, sorted(unknown)
