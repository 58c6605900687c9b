"""Approximation models: LUT pruning by binary config, and library selection.

A config is a string of ``'0'``/``'1'`` whose character ``i`` keeps (``1``)
or prunes (``0``) LUT ``i`` of the accurate netlist, in generator order.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np

from .behav import LookupTable, NetlistFunctional, Operator
from .errors import (CountExceedsFamily, DuplicateConfig, IndexOutOfRange,
                     LengthMismatch, SpaceTooLarge)
from .netlist import CONST0, CONST1, CarryCell, Netlist
from .opgen import OperatorSpec

ENUMERATION_CAP = 1 << 20


class AxoConfig(str):
    """Binary keep/prune string; behaves as a plain ``str``."""

    def __new__(cls, bits):
        if isinstance(bits, (list, tuple, np.ndarray)):
            bits = "".join("1" if int(b) else "0" for b in bits)
        bits = str(bits)
        if not bits or set(bits) - {"0", "1"}:
            raise ValueError(f"config must be a non-empty 0/1 string, got {bits!r}")
        return super().__new__(cls, bits)

    @classmethod
    def all_ones(cls, length: int) -> "AxoConfig":
        return cls("1" * length)

    @property
    def popcount(self) -> int:
        return self.count("1")

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.encode(), dtype=np.uint8) - ord("0")

    def covers(self, other: str) -> bool:
        """True when every LUT kept by ``other`` is also kept here."""
        return all(o <= s for s, o in zip(self, other))


def prunable_count(base: Netlist) -> int:
    return len(base.luts)


def apply_config(base: Netlist, config: str, tie: int = 0) -> Netlist:
    """Remove every LUT whose config bit is ``0``.

    Nets the removed LUT drove are re-pointed to constant ``tie`` (0 by
    default) wherever they were read, including primary outputs. Carry cells
    are kept.
    """
    config = AxoConfig(config)
    if len(config) != len(base.luts):
        raise LengthMismatch(f"config length {len(config)} != {len(base.luts)} prunable LUTs")
    if config.popcount == len(config):
        return base
    const = CONST1 if tie else CONST0
    remap: dict[int, int] = {}
    kept, pruned = [], []
    for bit, lut in zip(config, base.luts):
        if bit == "1":
            kept.append(lut)
        else:
            pruned.append(lut)
            for n in lut.outputs:
                remap[n] = const

    def m(n):
        return remap.get(n, n)

    luts = tuple(replace(l, inputs=tuple(m(n) for n in l.inputs)) for l in kept)
    carries = tuple(
        CarryCell(c.id, tuple(map(m, c.s)), tuple(map(m, c.di)), m(c.cin), c.o, c.co)
        for c in base.carries
    )
    outputs = tuple((name, tuple(map(m, bus))) for name, bus in base.outputs)
    return Netlist(f"{base.name}_{config}", base.inputs, outputs, luts, carries,
                   pruned=base.pruned + tuple(pruned))


def config_space_size(length: int) -> int:
    return 1 << length


def enumerate_configs(length: int, limit: int = ENUMERATION_CAP) -> Iterator[AxoConfig]:
    """All ``2^length`` configs in lexicographic order."""
    if length < 1:
        raise LengthMismatch("config length must be >= 1")
    total = 1 << length
    if total > limit:
        raise SpaceTooLarge(f"2^{length} configs exceed limit {limit}")
    fmt = f"0{length}b"
    for i in range(total):
        yield AxoConfig(format(i, fmt))


# ---------------------------------------------------------------- sampling


class SamplingKind(str, enum.Enum):
    Random = "Random"
    Patterned = "Patterned"
    Special = "Special"


SPECIAL_PATTERNS = ("alternating", "one_hot", "one_cold")


@dataclass(frozen=True)
class SamplingStrategy:
    """``window`` applies to Patterned (``None`` sweeps every window length);
    ``pattern`` applies to Special (one of :data:`SPECIAL_PATTERNS` or ``"all"``)."""

    kind: SamplingKind
    window: int | None = None
    pattern: str = "all"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SamplingKind(self.kind))


def patterned_family(length: int, window: int | None = None) -> list[AxoConfig]:
    """Zero windows swept through all-ones, then one windows swept through all-zeros."""
    widths = range(1, length) if window is None else [window]
    if window is not None and not 1 <= window <= length:
        raise ValueError(f"window {window} outside 1..{length}")
    out: list[str] = []
    for fill, mark in (("1", "0"), ("0", "1")):
        for w in widths:
            for p in range(length - w + 1):
                out.append(fill * p + mark * w + fill * (length - p - w))
    return [AxoConfig(c) for c in dict.fromkeys(out)]


def special_family(length: int, pattern: str = "all") -> list[AxoConfig]:
    names = SPECIAL_PATTERNS if pattern == "all" else (pattern,)
    out: list[str] = []
    for name in names:
        if name == "alternating":
            out += [("01" * length)[:length], ("10" * length)[:length]]
        elif name == "one_hot":
            out += ["0" * i + "1" + "0" * (length - i - 1) for i in range(length)]
        elif name == "one_cold":
            out += ["1" * i + "0" + "1" * (length - i - 1) for i in range(length)]
        else:
            raise ValueError(f"unknown special pattern {name!r}")
    return [AxoConfig(c) for c in dict.fromkeys(out)]


def _random_configs(length: int, count: int, seed: int) -> list[AxoConfig]:
    if count > (1 << min(length, 62)):
        raise CountExceedsFamily(f"{count} unique configs requested from 2^{length}")
    rng = np.random.default_rng(seed)
    seen: dict[str, None] = {}
    while len(seen) < count:
        block = rng.integers(0, 2, size=(max(count - len(seen), 8), length), dtype=np.uint8)
        for row in block:
            seen.setdefault((row + ord("0")).tobytes().decode(), None)
            if len(seen) == count:
                break
    return [AxoConfig(c) for c in seen]


def sample_configs(strategy: SamplingStrategy, length: int, count: int) -> list[AxoConfig]:
    """A batch of unique configs; deterministic for a given strategy and seed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if strategy.kind is SamplingKind.Random:
        return _random_configs(length, count, strategy.seed)
    if strategy.kind is SamplingKind.Patterned:
        family = patterned_family(length, strategy.window)
    else:
        family = special_family(length, strategy.pattern)
    if count > len(family):
        raise CountExceedsFamily(f"{count} requested, family has {len(family)}")
    return family[:count]


# ---------------------------------------------------------------- selection


@dataclass(frozen=True)
class LibraryEntry:
    name: str
    operator: Operator
    ppa: object | None = None  # PpaMetrics, passed through untouched


@dataclass(frozen=True)
class OperatorLibrary:
    """Indexed set of pre-built operators sharing one :class:`OperatorSpec`."""

    spec: OperatorSpec
    entries: tuple[LibraryEntry, ...]

    def __post_init__(self):
        names = set()
        for e in self.entries:
            if e.name in names:
                raise DuplicateConfig(e.name)
            names.add(e.name)
            if e.operator.spec != self.spec:
                raise LengthMismatch(f"entry {e.name} has spec {e.operator.spec}")

    def __len__(self):
        return len(self.entries)

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise IndexOutOfRange(f"no library entry named {name!r}") from None


def library_lookup(lib: OperatorLibrary, index: int) -> tuple[Operator, object | None]:
    """Behaviour function and optional PPA record of entry ``index``."""
    if not 0 <= index < len(lib.entries):
        raise IndexOutOfRange(f"index {index} outside 0..{len(lib.entries) - 1}")
    entry = lib.entries[index]
    return entry.operator, entry.ppa


def library_from_configs(spec: OperatorSpec, base: Netlist, configs: Sequence[str],
                         as_tables: bool = True) -> OperatorLibrary:
    """Pre-characterise pruned designs into a selection library."""
    entries = []
    for c in configs:
        op = NetlistFunctional(spec, apply_config(base, c))
        if as_tables:
            op = LookupTable.from_operator(op)
        entries.append(LibraryEntry(str(c), op))
    return OperatorLibrary(spec, tuple(entries))


__all__ = [
    "AxoConfig", "apply_config", "enumerate_configs", "config_space_size",
    "SamplingKind", "SamplingStrategy", "sample_configs", "patterned_family",
    "special_family", "LibraryEntry", "OperatorLibrary", "library_lookup",
    "library_from_configs", "prunable_count",
]
