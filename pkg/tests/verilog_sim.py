"""Tiny reader/simulator for the Verilog subset the emitter produces.

Written against Verilog and primitive semantics directly (LUTn, LUT6_2,
CARRY4 as documented by the FPGA vendor) so it shares nothing with the
package's simulator. Statements are evaluated to a fixed point, so their
order in the text does not matter.
"""
from __future__ import annotations

import re

import numpy as np

PORT = re.compile(r"(input|output)\s+wire\s+\[(\d+):0\]\s+(\w+)")
PARAM = re.compile(r"localparam\s+\[(\d+):0\]\s+(\w+)\s*=\s*\d+'h([0-9A-Fa-f]+);")
ASSIGN = re.compile(r"assign\s+(.+?)\s*=\s*(.+?);")
INST = re.compile(r"(LUT[1-6](?:_2)?|CARRY4)\s+(?:#\(\.INIT\(\d+'h([0-9A-Fa-f]+)\)\)\s+)?(\w+)\s*\((.*)\);")
PIN = re.compile(r"\.(\w+)\(([^()]*)\)")


def _split_concat(text: str) -> list[str]:
    text = text.strip()
    assert text.startswith("{") and text.endswith("}"), text
    return [t.strip() for t in text[1:-1].split(",")]


class Module:
    def __init__(self, text: str):
        self.ports: dict[str, tuple[str, int]] = {}
        self.params: dict[str, int] = {}
        self.stmts: list = []
        for line in text.splitlines():
            line = line.split("//")[0].strip()
            if not line:
                continue
            if m := PORT.search(line):
                self.ports[m.group(3)] = (m.group(1), int(m.group(2)) + 1)
            elif m := PARAM.match(line):
                self.params[m.group(2)] = int(m.group(3), 16)
            elif m := ASSIGN.match(line):
                self.stmts.append(("assign", m.group(1), m.group(2)))
            elif m := INST.match(line):
                init = int(m.group(2), 16) if m.group(2) else None
                pins = dict(PIN.findall(m.group(4)))
                self.stmts.append((m.group(1), init, pins))

    # -- expression evaluation over numpy bit vectors --------------------

    def _sig(self, name: str, env: dict):
        name = name.strip()
        if name == "1'b0":
            return np.zeros(self.n, dtype=np.int64)
        if name == "1'b1":
            return np.ones(self.n, dtype=np.int64)
        return env.get(name)

    def _index(self, concat: str, env):
        parts = _split_concat(concat)
        idx = np.zeros(self.n, dtype=np.int64)
        # highest-order bit listed first
        for k, p in enumerate(reversed(parts)):
            v = self._sig(p, env)
            if v is None:
                return None
            idx |= v << k
        return idx

    def _table(self, ref: str, env):
        m = re.fullmatch(r"(\w+)\[(\{.*\})\]", ref.strip())
        table = self.params[m.group(1)]
        idx = self._index(m.group(2), env)
        if idx is None:
            return None
        return np.array([(table >> int(i)) & 1 for i in idx], dtype=np.int64)

    def _expr(self, rhs: str, env):
        rhs = rhs.strip()
        if m := re.fullmatch(r"(\S+)\s*\?\s*(\S+)\s*:\s*(\S+)", rhs):
            s, t, f = (self._sig(x, env) for x in m.groups())
            return None if s is None or t is None or f is None else np.where(s == 1, t, f)
        if m := re.fullmatch(r"(\S+)\s*\^\s*(\S+)", rhs):
            x, y = (self._sig(v, env) for v in m.groups())
            return None if x is None or y is None else x ^ y
        if "[{" in rhs:
            return self._table(rhs, env)
        return self._sig(rhs, env)

    def _run_assign(self, lhs, rhs, env) -> bool:
        if lhs.startswith("{"):
            targets = _split_concat(lhs)
            inner = rhs.strip()[1:-1]
            refs = re.findall(r"\w+\[\{[^}]*\}\]", inner)
            vals = [self._table(r, env) for r in refs]
            if any(v is None for v in vals):
                return False
            for t, v in zip(targets, vals):
                env[t] = v
            return True
        val = self._expr(rhs, env)
        if val is None:
            return False
        env[lhs.strip()] = val
        return True

    def _run_inst(self, kind, init, pins, env) -> bool:
        if kind == "CARRY4":
            ci = self._sig(pins["CI"], env)
            cy = self._sig(pins["CYINIT"], env)
            di = [self._sig(x, env) for x in reversed(_split_concat(pins["DI"]))]
            s = [self._sig(x, env) for x in reversed(_split_concat(pins["S"]))]
            if ci is None or cy is None or any(v is None for v in (*di, *s)):
                return False
            c = ci | cy
            o_names = list(reversed(_split_concat(pins["O"])))
            co_names = list(reversed(_split_concat(pins["CO"])))
            for i in range(4):
                env[o_names[i]] = s[i] ^ c
                c = np.where(s[i] == 1, c, di[i])
                env[co_names[i]] = c
            return True
        k = 6 if kind == "LUT6_2" else int(kind[3])
        ins = [self._sig(pins[f"I{i}"], env) for i in range(k)]
        if any(v is None for v in ins):
            return False
        idx = sum(v << i for i, v in enumerate(ins))
        bit = np.array([(init >> int(i)) & 1 for i in idx], dtype=np.int64)
        if kind == "LUT6_2":
            env[pins["O6"]] = bit
            idx5 = idx & 31
            env[pins["O5"]] = np.array([(init >> int(i)) & 1 for i in idx5], dtype=np.int64)
        else:
            env[pins["O"]] = bit
        return True

    def run(self, inputs: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        """``inputs`` maps port name to an integer array; returns output ports."""
        self.n = len(next(iter(inputs.values())))
        env: dict[str, np.ndarray] = {}
        for name, (direction, width) in self.ports.items():
            if direction == "input":
                v = np.asarray(inputs[name], dtype=np.int64)
                for i in range(width):
                    env[f"{name}[{i}]"] = (v >> i) & 1
        pending = list(self.stmts)
        while pending:
            left = []
            for st in pending:
                done = (self._run_assign(st[1], st[2], env) if st[0] == "assign"
                        else self._run_inst(*st, env))
                if not done:
                    left.append(st)
            if len(left) == len(pending):
                raise AssertionError(f"unresolvable statements: {left[:3]}")
            pending = left
        out = {}
        for name, (direction, width) in self.ports.items():
            if direction == "output":
                out[name] = sum(env[f"{name}[{i}]"] << i for i in range(width))
        return out
