"""Persistence: netlist text format, library files, run configuration and result CSVs.

Netlist text format (one record per line, fields separated by single spaces)::

    axoprune-netlist 1
    name uadd4
    input a 2,3,4,5
    output out 18,19,20,21,25
    lut L0000 in=2,6 init=6 out=10 init5=A out5=11
    carry C0000 s=10,12,14,16 di=11,13,15,17 cin=0 o=18,19,20,21 co=22,23,24,25
    pruned L0003 in=5,9 init=6 out=16 init5=A out5=17

Truth tables are upper-case hex without prefix. Writing is canonical, so
``dumps_netlist(loads_netlist(t)) == t`` for any text this module wrote.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import yaml

from .axmodel import LibraryEntry, OperatorLibrary, apply_config
from .behav import BehavMetrics, LookupTable, NetlistFunctional
from .dse import DesignPoint
from .errors import DataError, MalformedRecord, SchemaMismatch
from .netlist import CarryCell, LutCell, Netlist
from .opgen import OperatorSpec, generate, parse_spec
from .ppa import PpaMetrics

NETLIST_MAGIC = "axoprune-netlist 1"


# ---------------------------------------------------------------- netlist text


def _ints(nets: Iterable[int]) -> str:
    return ",".join(str(n) for n in nets)


def _lut_line(tag: str, lut: LutCell) -> str:
    line = f"{tag} {lut.id} in={_ints(lut.inputs)} init={lut.init:X} out={lut.output}"
    if lut.output5 is not None:
        line += f" init5={lut.init5:X} out5={lut.output5}"
    return line


def dumps_netlist(netlist: Netlist) -> str:
    lines = [NETLIST_MAGIC, f"name {netlist.name}"]
    lines += [f"input {name} {_ints(bus)}" for name, bus in netlist.inputs]
    lines += [f"output {name} {_ints(bus)}" for name, bus in netlist.outputs]
    lines += [_lut_line("lut", l) for l in netlist.luts]
    for c in netlist.carries:
        lines.append(f"carry {c.id} s={_ints(c.s)} di={_ints(c.di)} cin={c.cin} "
                     f"o={_ints(c.o)} co={_ints(c.co)}")
    lines += [_lut_line("pruned", l) for l in netlist.pruned]
    return "\n".join(lines) + "\n"


def _parse_ints(text: str, lineno: int) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",")) if text else ()
    except ValueError:
        raise MalformedRecord(lineno, f"bad net list {text!r}") from None


def _kv(fields: Sequence[str], lineno: int) -> dict[str, str]:
    out = {}
    for f in fields:
        if "=" not in f:
            raise MalformedRecord(lineno, f"expected key=value, got {f!r}")
        k, v = f.split("=", 1)
        out[k] = v
    return out


def _parse_lut(fields, lineno) -> LutCell:
    kv = _kv(fields[2:], lineno)
    try:
        lut = LutCell(fields[1], _parse_ints(kv["in"], lineno), int(kv["init"], 16),
                      int(kv["out"]))
        if "out5" in kv:
            lut = LutCell(lut.id, lut.inputs, lut.init, lut.output,
                          int(kv["init5"], 16), int(kv["out5"]))
    except (KeyError, ValueError) as exc:
        raise MalformedRecord(lineno, f"bad lut record: {exc}") from None
    return lut


def loads_netlist(text: str) -> Netlist:
    lines = text.splitlines()
    if not lines or lines[0] != NETLIST_MAGIC:
        raise MalformedRecord(1, f"first line must be {NETLIST_MAGIC!r}")
    name = None
    inputs, outputs, luts, carries, pruned = [], [], [], [], []
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        fields = line.split(" ")
        kind = fields[0]
        if kind == "name" and len(fields) == 2:
            name = fields[1]
        elif kind in ("input", "output") and len(fields) == 3:
            (inputs if kind == "input" else outputs).append((fields[1], _parse_ints(fields[2], lineno)))
        elif kind in ("lut", "pruned") and len(fields) >= 5:
            (luts if kind == "lut" else pruned).append(_parse_lut(fields, lineno))
        elif kind == "carry" and len(fields) == 7:
            kv = _kv(fields[2:], lineno)
            try:
                carries.append(CarryCell(fields[1], _parse_ints(kv["s"], lineno),
                                         _parse_ints(kv["di"], lineno), int(kv["cin"]),
                                         _parse_ints(kv["o"], lineno), _parse_ints(kv["co"], lineno)))
            except (KeyError, ValueError) as exc:
                raise MalformedRecord(lineno, f"bad carry record: {exc}") from None
        else:
            raise MalformedRecord(lineno, f"unrecognised record {line!r}")
    if name is None:
        raise MalformedRecord(2, "missing name record")
    return Netlist(name, tuple(inputs), tuple(outputs), tuple(luts), tuple(carries), tuple(pruned))


def save_netlist(netlist: Netlist, path) -> None:
    write_text(path, dumps_netlist(netlist))


def load_netlist(path) -> Netlist:
    return loads_netlist(Path(path).read_text(encoding="utf-8"))


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------- library JSON


def dumps_library(spec: OperatorSpec, entries: Sequence[tuple[str, str, PpaMetrics | None]]) -> str:
    """``entries`` are ``(name, config, ppa)``; PPA is optional."""
    doc = {"spec": spec.to_dict(), "entries": []}
    for name, cfg, ppa in entries:
        e: dict[str, Any] = {"name": name, "config": cfg}
        if ppa is not None:
            e["ppa"] = ppa.as_dict()
        doc["entries"].append(e)
    return json.dumps(doc, indent=2) + "\n"


def load_library(source, as_tables: bool = True) -> OperatorLibrary:
    """Build an :class:`OperatorLibrary` from a library JSON file or text."""
    text = Path(source).read_text(encoding="utf-8") if not str(source).lstrip().startswith("{") else str(source)
    try:
        doc = json.loads(text)
        sd = doc["spec"]
        spec = OperatorSpec(sd["kind"], sd["width_a"], sd["width_b"], sd["width_out"])
        raw = doc["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"bad library file: {exc}") from None
    base = generate(spec)
    entries = []
    for e in raw:
        op = NetlistFunctional(spec, apply_config(base, e["config"]))
        if as_tables:
            op = LookupTable.from_operator(op)
        ppa = PpaMetrics(**e["ppa"]) if "ppa" in e else None
        entries.append(LibraryEntry(e["name"], op, ppa))
    return OperatorLibrary(spec, tuple(entries))


# ---------------------------------------------------------------- seeds and hashing


def derive_seed(master: int, label: str) -> int:
    """Stable 63-bit sub-seed for a named random stream."""
    digest = hashlib.sha256(f"{int(master)}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def fmt_real(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


# ---------------------------------------------------------------- run config


class ConfigError(DataError):
    """A run configuration is missing a key or has an invalid value."""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"{path}: {reason}")


_MISSING = object()

# key -> default; _MISSING marks required keys. Nested dicts are sections.
SCHEMA: dict[str, Any] = {
    "operator": {"kind": _MISSING, "widths": _MISSING},
    "approximation": {"model": "lut_pruning", "tie": 0},
    "estimators": {
        "behav": {"estimator": "NetlistFunctional", "plan": "exhaustive", "samples": 10000,
                  "poly_degree": 2, "poly_samples": 200},
        "ppa": {"imported": None, "lut_delay": 1.0, "carry_per_bit_delay": 0.1,
                "power_vectors": 1000},
        "surrogates": {},
    },
    "configs": {"source": "enumerate", "list_file": None, "sampling": {
        "kind": "Random", "count": 64, "window": None, "pattern": "all"}},
    "dse": {"method": "Ga", "compare_exhaustive": False, "compare": {},
            "ga": {"population": 32, "generations": 25, "crossover_prob": 0.9,
                   "mutation_prob_per_bit": None, "tournament": 2}},
    "objectives": {"minimize": ["pdp_proxy", "avg_abs_err"], "constraints": {}},
    "app": {"task": "fir", "signal": None, "taps": None, "image": None,
            "kernel": [[1, 2, 1], [2, 4, 2], [1, 2, 1]], "count": 1024},
    "surrogate_fit": {"target": "lut_count", "feature_mode": "BitsLinear", "ridge_lambda": 0.0},
    "seeds": {"master": 0},
    "workers": 1,
    "output_dir": _MISSING,
}

# sections whose contents are free-form mappings
_OPEN_SECTIONS = {"estimators.surrogates", "dse.compare", "objectives.constraints"}


def _merge(schema: Mapping, data: Any, path: str) -> dict:
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError(path or "<root>", "expected a mapping")
    unknown = sorted(set(data) - set(schema))
    if unknown:
        raise ConfigError(f"{path + '.' if path else ''}{unknown[0]}", "unknown key")
    out = {}
    for key, default in schema.items():
        kp = f"{path}.{key}" if path else key
        if isinstance(default, dict) and kp not in _OPEN_SECTIONS:
            out[key] = _merge(default, data.get(key), kp)
        elif key in data:
            out[key] = data[key]
        elif default is _MISSING:
            raise ConfigError(kp, "missing required key")
        else:
            out[key] = default
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; ``data`` is the fully defaulted mapping."""

    data: dict = field(compare=True)
    base_dir: Path = Path(".")

    @classmethod
    def from_mapping(cls, data: Mapping, base_dir=".") -> "RunConfig":
        merged = _merge(SCHEMA, data, "")
        rc = cls(merged, Path(base_dir))
        rc.spec  # validate early
        if not isinstance(merged["workers"], int) or merged["workers"] < 1:
            raise ConfigError("workers", "must be a positive integer")
        mins = merged["objectives"]["minimize"]
        if not isinstance(mins, list) or not mins:
            raise ConfigError("objectives.minimize", "needs at least one metric")
        return rc

    @property
    def spec(self) -> OperatorSpec:
        op = self.data["operator"]
        widths = op["widths"]
        if isinstance(widths, int):
            widths = [widths]
        try:
            return parse_spec(str(op["kind"]), *[int(w) for w in widths])
        except DataError as exc:
            raise ConfigError("operator", str(exc)) from None

    def get(self, dotted: str):
        node = self.data
        for part in dotted.split("."):
            node = node[part]
        return node

    def path(self, dotted: str) -> Path | None:
        v = self.get(dotted)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def output_dir(self) -> Path:
        return self.path("output_dir")

    def seed(self, label: str) -> int:
        return derive_seed(self.data["seeds"]["master"], label)

    @property
    def digest(self) -> str:
        """Hash of everything that can change results (not workers or output location)."""
        keep = {k: v for k, v in self.data.items() if k not in ("workers", "output_dir")}
        canon = json.dumps(keep, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def header(self, kind: str) -> str:
        return f"# axoprune run={self.digest} output={kind}"


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError("<root>", f"invalid YAML: {exc}") from None
    return RunConfig.from_mapping(data or {}, path.parent)


# ---------------------------------------------------------------- result CSVs


BEHAV_COLUMNS = BehavMetrics.FIELDS
PPA_COLUMNS = PpaMetrics.FIELDS
RESULT_COLUMNS = ("config", "fidelity", *BEHAV_COLUMNS, *PPA_COLUMNS, "ppa_source")


def point_row(p: DesignPoint, extra_columns: Sequence[str] = ()) -> list[str]:
    def val(m):
        try:
            return fmt_real(p.metric(m))
        except KeyError:
            return ""
    row = [p.config, p.fidelity]
    row += [val(m) for m in (*BEHAV_COLUMNS, *PPA_COLUMNS)]
    row.append(p.ppa.source if p.ppa is not None else "")
    row += [val(m) for m in extra_columns]
    return row


def dumps_points(points: Sequence[DesignPoint], header: str,
                 extra_columns: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*RESULT_COLUMNS, *extra_columns])
    for p in points:
        w.writerow(point_row(p, extra_columns))
    return buf.getvalue()


def dumps_rows(rows: Sequence[Mapping], columns: Sequence[str], header: str) -> str:
    buf = io.StringIO()
    buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt_real(r[c]) if not isinstance(r[c], str) else r[c] for c in columns])
    return buf.getvalue()


def read_table(path) -> tuple[list[str], list[dict[str, str]]]:
    """CSV with optional leading ``#`` lines -> ``(columns, rows)``."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    if not lines:
        raise SchemaMismatch(f"{path}: no header")
    reader = csv.DictReader(lines)
    rows = list(reader)
    return list(reader.fieldnames or []), rows


def read_points(path) -> list[DesignPoint]:
    """Rebuild points from a results CSV; every numeric column becomes a metric."""
    cols, rows = read_table(path)
    if "config" not in cols:
        raise SchemaMismatch(f"{path}: missing config column")
    pts = []
    for r in rows:
        extra = {}
        for c in cols:
            if c in ("config", "fidelity", "ppa_source") or r[c] in ("", None):
                continue
            try:
                extra[c] = float(r[c])
            except ValueError:
                continue
        pts.append(DesignPoint(r["config"], None, None, r.get("fidelity") or "Characterized", extra))
    return pts


__all__ = [
    "dumps_netlist", "loads_netlist", "save_netlist", "load_netlist", "dumps_library",
    "load_library", "derive_seed", "fmt_real", "ConfigError", "RunConfig", "load_run_config",
    "RESULT_COLUMNS", "dumps_points", "dumps_rows", "read_points", "read_table", "write_text",
]
