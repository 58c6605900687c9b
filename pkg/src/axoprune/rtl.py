"""Structural Verilog emission for external synthesis and characterization.

Two flavours are produced from the same netlist:

``Generic``
    Portable continuous assignments. Each LUT becomes one ``assign`` that
    indexes a ``localparam`` truth table with the concatenated LUT inputs;
    carry cells become their per-bit mux/xor equations.
``VendorPrimitives``
    ``LUT6_2``/``LUTn`` and ``CARRY4`` instantiations with INIT attributes.

Internal net ``k`` is named ``n<k>``. LUTs removed by pruning are still listed,
with their former outputs tied to ``1'b0``, so a report can name them.
"""
from __future__ import annotations

import enum

from .errors import InvalidNetlist
from .netlist import CONST0, CONST1, CARRY_WIDTH, BadCell, CarryCell, LutCell, Netlist, topo_order, validate


class RtlMode(str, enum.Enum):
    Generic = "Generic"
    VendorPrimitives = "VendorPrimitives"


def _net(n: int) -> str:
    if n == CONST0:
        return "1'b0"
    if n == CONST1:
        return "1'b1"
    return f"n{n}"


def _hex(value: int, bits: int) -> str:
    return f"{bits}'h{value:0{max(1, (bits + 3) // 4)}X}"


def _ident(name: str) -> str:
    out = "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in name)
    return out if out and not out[0].isdigit() else f"m_{out}"


def _header(netlist: Netlist) -> list[str]:
    ports = [f"    input  wire [{len(bus) - 1}:0] {name}" for name, bus in netlist.inputs]
    ports += [f"    output wire [{len(bus) - 1}:0] {name}" for name, bus in netlist.outputs]
    lines = [f"module {_ident(netlist.name)} ("]
    lines += [p + ("," if i < len(ports) - 1 else "") for i, p in enumerate(ports)]
    lines.append(");")
    internal = sorted({n for c in netlist.cells for n in c.outputs}
                      | {n for lut in netlist.pruned for n in lut.outputs}
                      | set(netlist.primary_inputs))
    internal = [n for n in internal if n not in (CONST0, CONST1)]
    for start in range(0, len(internal), 16):
        lines.append("  wire " + ", ".join(_net(n) for n in internal[start:start + 16]) + ";")
    for name, bus in netlist.inputs:
        for i, n in enumerate(bus):
            lines.append(f"  assign {_net(n)} = {name}[{i}];")
    return lines


def _footer(netlist: Netlist) -> list[str]:
    lines = []
    for name, bus in netlist.outputs:
        for i, n in enumerate(bus):
            lines.append(f"  assign {name}[{i}] = {_net(n)};")
    lines.append("endmodule")
    return lines


def _pruned_lines(netlist: Netlist) -> list[str]:
    lines = []
    for lut in netlist.pruned:
        for n in lut.outputs:
            lines.append(f"  assign {_net(n)} = 1'b0; // pruned {lut.id}")
    return lines


def _generic_lut(lut: LutCell) -> list[str]:
    k = len(lut.inputs)
    size = 1 << k
    # concatenation lists the highest-index input first
    idx = "{" + ", ".join(_net(n) for n in reversed(lut.inputs)) + "}"
    lines = [f"  localparam [{size - 1}:0] {lut.id}_INIT = {_hex(lut.init, size)};"]
    if lut.output5 is None:
        lines.append(f"  assign {_net(lut.output)} = {lut.id}_INIT[{idx}]; // lut {lut.id}")
        return lines
    lines.append(f"  localparam [{size - 1}:0] {lut.id}_INIT5 = {_hex(lut.init5, size)};")
    lines.append(f"  assign {{{_net(lut.output5)}, {_net(lut.output)}}} = "
                 f"{{{lut.id}_INIT5[{idx}], {lut.id}_INIT[{idx}]}}; // lut {lut.id}")
    return lines


def _generic_carry(cc: CarryCell) -> list[str]:
    lines = [f"  // carry {cc.id}"]
    prev = _net(cc.cin)
    for i in range(CARRY_WIDTH):
        s, d = _net(cc.s[i]), _net(cc.di[i])
        lines.append(f"  assign {_net(cc.o[i])} = {s} ^ {prev};")
        lines.append(f"  assign {_net(cc.co[i])} = {s} ? {prev} : {d};")
        prev = _net(cc.co[i])
    return lines


def _vendor_lut(lut: LutCell) -> list[str]:
    k = len(lut.inputs)
    if lut.output5 is None:
        pins = [f".I{i}({_net(n)})" for i, n in enumerate(lut.inputs)]
        return [f"  LUT{k} #(.INIT({_hex(lut.init, 1 << k)})) {lut.id} "
                f"({', '.join(pins)}, .O({_net(lut.output)}));"]
    # O6 reads the upper half when I5 is tied high; O5 always reads the lower half
    init = (lut.init << 32) | lut.init5
    ins = list(lut.inputs) + [CONST0] * (5 - k)
    pins = [f".I{i}({_net(n)})" for i, n in enumerate(ins)] + [".I5(1'b1)"]
    return [f"  LUT6_2 #(.INIT({_hex(init, 64)})) {lut.id} "
            f"({', '.join(pins)}, .O6({_net(lut.output)}), .O5({_net(lut.output5)}));"]


def _bus(nets) -> str:
    return "{" + ", ".join(_net(n) for n in reversed(nets)) + "}"


def _vendor_carry(cc: CarryCell) -> list[str]:
    return [f"  CARRY4 {cc.id} (.CI({_net(cc.cin)}), .CYINIT(1'b0), "
            f".DI({_bus(cc.di)}), .S({_bus(cc.s)}), .O({_bus(cc.o)}), .CO({_bus(cc.co)}));"]


def emit_verilog(netlist: Netlist, mode: RtlMode | str = RtlMode.Generic) -> str:
    """Verilog text for ``netlist``; ports are the netlist's named buses."""
    mode = RtlMode(mode)
    violations = validate(netlist)
    if mode is RtlMode.VendorPrimitives:
        violations += [BadCell(l.id, "dual-output LUT needs at most 5 inputs")
                       for l in netlist.luts if l.output5 is not None and len(l.inputs) > 5]
    if violations:
        raise InvalidNetlist(violations)
    lines = _header(netlist)
    for cid in topo_order(netlist):
        cell = netlist.cell_map[cid]
        if isinstance(cell, LutCell):
            lines += _generic_lut(cell) if mode is RtlMode.Generic else _vendor_lut(cell)
        else:
            lines += _generic_carry(cell) if mode is RtlMode.Generic else _vendor_carry(cell)
    lines += _pruned_lines(netlist)
    lines += _footer(netlist)
    return "\n".join(lines) + "\n"


def write_verilog(netlist: Netlist, path, mode: RtlMode | str = RtlMode.Generic) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(emit_verilog(netlist, mode))


__all__ = ["RtlMode", "emit_verilog", "write_verilog"]
