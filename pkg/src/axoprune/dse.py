"""Design-space exploration over approximation configs.

Everything is minimised. Constraints are upper bounds on named metrics and
are handled by feasibility dominance: a feasible point beats an infeasible
one, and infeasible points compare by total bound violation.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .axmodel import AxoConfig, apply_config
from .behav import (BehavMetrics, Exact, Exhaustive, LookupTable, NetlistFunctional,
                    Plan, characterize_behav, fit_poly_estimator)
from .errors import AllInfeasible, RefDominated, WrongDimension
from .netlist import Netlist
from .opgen import OperatorSpec
from .ppa import DelayModel, PowerPlan, PpaMetrics, characterize_ppa
from .surrogate import SurrogateModel, predict

log = logging.getLogger(__name__)

PREDICTED = "Predicted"
CHARACTERIZED = "Characterized"


@dataclass(frozen=True)
class DesignPoint:
    """One evaluated design.

    ``extra`` holds metrics that are not part of the operator-level records:
    surrogate predictions and application-level errors. Lookups check
    ``extra`` first.
    """

    config: str
    behav: BehavMetrics | None = None
    ppa: PpaMetrics | None = None
    fidelity: str = CHARACTERIZED
    extra: Mapping[str, float] = field(default_factory=dict)

    def metric(self, name: str) -> float:
        if name in self.extra:
            return float(self.extra[name])
        if self.behav is not None and name in BehavMetrics.FIELDS:
            return float(getattr(self.behav, name))
        if self.ppa is not None and name in PpaMetrics.FIELDS:
            return float(getattr(self.ppa, name))
        raise KeyError(f"design {self.config} has no metric {name!r}")

    def metric_names(self) -> list[str]:
        names = list(self.extra)
        if self.behav is not None:
            names += [n for n in BehavMetrics.FIELDS if n not in names]
        if self.ppa is not None:
            names += [n for n in PpaMetrics.FIELDS if n not in names]
        return names


@dataclass(frozen=True)
class Objectives:
    objectives: tuple[str, ...]
    constraints: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "objectives", tuple(self.objectives))
        if not self.objectives:
            raise ValueError("at least one objective is required")
        object.__setattr__(self, "constraints", dict(self.constraints))

    @property
    def metrics(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys([*self.objectives, *self.constraints]))

    def values(self, p: DesignPoint) -> np.ndarray:
        return np.array([p.metric(m) for m in self.objectives], dtype=np.float64)

    def violation(self, p: DesignPoint) -> float:
        return float(sum(max(0.0, p.metric(m) - ub) for m, ub in self.constraints.items()))

    def feasible(self, p: DesignPoint) -> bool:
        return all(p.metric(m) <= ub for m, ub in self.constraints.items())


@dataclass(frozen=True)
class GaParams:
    population: int = 32
    generations: int = 25
    crossover_prob: float = 0.9
    mutation_prob_per_bit: float | None = None  # None -> 1/L
    tournament: int = 2
    seed: int = 0
    # start from the accurate design as well as random ones
    include_accurate: bool = True

    def __post_init__(self):
        if self.population < 2 or self.population % 2:
            raise ValueError("population must be even and >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        for p in (self.crossover_prob, self.mutation_prob_per_bit):
            if p is not None and not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.tournament < 1:
            raise ValueError("tournament size must be >= 1")


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True, eq=False)
class Evaluator:
    """Maps a config to a :class:`DesignPoint`.

    ``estimator`` selects how operator outputs are produced for behavioural
    metrics (``NetlistFunctional``, ``LookupTable`` or ``PolyRegression``).
    Metrics covered by ``surrogates`` are predicted instead of characterised;
    when surrogates are present only ``needed`` metrics are characterised.
    ``imported`` PPA records override the structural proxies.
    """

    spec: OperatorSpec
    base: Netlist
    behav_plan: Plan = Exhaustive()
    estimator: str = "NetlistFunctional"
    poly_degree: int = 2
    poly_samples: int = 200
    poly_seed: int = 0
    delay: DelayModel = DelayModel()
    power_plan: PowerPlan = PowerPlan()
    imported: Mapping[str, PpaMetrics] = field(default_factory=dict)
    surrogates: Mapping[str, SurrogateModel] = field(default_factory=dict)
    needed: tuple[str, ...] = ()
    tie: int = 0

    @property
    def length(self) -> int:
        return len(self.base.luts)

    def without_surrogates(self) -> "Evaluator":
        return replace(self, surrogates={}, needed=())

    def operator(self, config: str):
        op = NetlistFunctional(self.spec, apply_config(self.base, config, self.tie))
        if self.estimator == "LookupTable":
            return LookupTable.from_operator(op)
        if self.estimator == "PolyRegression":
            return fit_poly_estimator(op, self.poly_degree, self.poly_samples, self.poly_seed)
        if self.estimator != "NetlistFunctional":
            raise ValueError(f"unknown estimator {self.estimator!r}")
        return op

    def behav(self, config: str) -> BehavMetrics:
        return characterize_behav(self.operator(config), Exact(self.spec), self.behav_plan)

    def ppa(self, config: str) -> PpaMetrics:
        if config in self.imported:
            return self.imported[config]
        return characterize_ppa(apply_config(self.base, config, self.tie), self.delay,
                                self.power_plan)

    def __call__(self, config: str) -> DesignPoint:
        config = AxoConfig(config)
        predicted = {m: predict(s, config) for m, s in self.surrogates.items()}
        if predicted:
            rest = [m for m in self.needed if m not in predicted]
            need_behav = any(m in BehavMetrics.FIELDS for m in rest)
            need_ppa = any(m in PpaMetrics.FIELDS for m in rest)
        else:
            need_behav = need_ppa = True
        return DesignPoint(
            str(config),
            self.behav(config) if need_behav else None,
            self.ppa(config) if need_ppa else None,
            PREDICTED if predicted else CHARACTERIZED,
            predicted,
        )


def evaluate_list(configs: Sequence[str], evaluator: Callable[[str], DesignPoint],
                  workers: int = 1) -> list[DesignPoint]:
    """One point per config, in input order, regardless of worker count."""
    configs = [str(c) for c in configs]
    if workers <= 1 or len(configs) <= 1:
        return [evaluator(c) for c in configs]
    chunk = max(1, len(configs) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(evaluator, configs, chunksize=chunk))


# ---------------------------------------------------------------- Pareto


def dominates(u: np.ndarray, v: np.ndarray) -> bool:
    return bool(np.all(u <= v) and np.any(u < v))


def nondominated_mask(F: np.ndarray) -> np.ndarray:
    """True for rows of ``F`` not dominated by any other row."""
    F = np.asarray(F, dtype=np.float64)
    n = F.shape[0]
    keep = np.ones(n, dtype=bool)
    block = 1024
    for start in range(0, n, block):
        sub = F[start:start + block]
        le = np.all(F[None, :, :] <= sub[:, None, :], axis=2)
        lt = np.any(F[None, :, :] < sub[:, None, :], axis=2)
        keep[start:start + block] = ~np.any(le & lt, axis=1)
    return keep


@dataclass(frozen=True)
class ParetoArchive:
    points: tuple[DesignPoint, ...]
    objectives: Objectives

    @property
    def configs(self) -> list[str]:
        return [p.config for p in self.points]

    def matrix(self) -> np.ndarray:
        return np.array([self.objectives.values(p) for p in self.points]).reshape(
            len(self.points), len(self.objectives.objectives))

    def __len__(self):
        return len(self.points)


def _sort_key(obj: Objectives):
    return lambda p: (p.metric(obj.objectives[0]), p.config)


def pareto_front(points: Sequence[DesignPoint], objectives: Objectives) -> ParetoArchive:
    """Feasible, mutually non-dominated subset, ordered by first objective then config."""
    feasible = [p for p in points if objectives.feasible(p)]
    if not feasible:
        raise AllInfeasible("no point satisfies the constraints")
    F = np.array([objectives.values(p) for p in feasible])
    keep = nondominated_mask(F)
    front = sorted((p for p, k in zip(feasible, keep) if k), key=_sort_key(objectives))
    return ParetoArchive(tuple(front), objectives)


# ---------------------------------------------------------------- hypervolume


RAW = "Raw"
MINMAX = "MinMaxOverUnion"
NORMALIZED_REF = (1.1, 1.1)


def _as_matrix(front) -> np.ndarray:
    if isinstance(front, ParetoArchive):
        F = front.matrix()
    else:
        F = np.asarray(front, dtype=np.float64)
    if F.ndim == 1 and F.size == 0:
        F = F.reshape(0, 2)
    if F.ndim != 2 or F.shape[1] != 2:
        raise WrongDimension(f"hypervolume needs exactly 2 objectives, got shape {F.shape}")
    return F


def minmax_bounds(*sets) -> tuple[np.ndarray, np.ndarray]:
    allpts = np.vstack([_as_matrix(s) for s in sets])
    return allpts.min(axis=0), allpts.max(axis=0)


def normalize(F: np.ndarray, bounds: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    lo, hi = bounds
    span = np.where(hi > lo, hi - lo, 1.0)
    return (F - lo) / span


def hypervolume_2d(front, ref=None, normalization: str = RAW, union=None) -> float:
    """Exact area dominated by ``front`` and bounded by ``ref``.

    With ``MinMaxOverUnion`` both objectives are scaled to [0, 1] using the
    bounds of ``union`` (a list of point sets; defaults to ``front``) and
    ``ref`` defaults to (1.1, 1.1).
    """
    F = _as_matrix(front)
    if normalization == MINMAX:
        bounds = minmax_bounds(*(union if union is not None else [F]))
        F = normalize(F, bounds)
        ref = NORMALIZED_REF if ref is None else ref
    elif normalization != RAW:
        raise ValueError(f"unknown normalization {normalization!r}")
    if ref is None:
        raise ValueError("raw hypervolume needs a reference point")
    ref = np.asarray(ref, dtype=np.float64)
    if ref.shape != (2,):
        raise WrongDimension("reference point must have 2 coordinates")
    if F.size and np.any(F > ref):
        raise RefDominated("every front point must dominate the reference point")
    order = np.lexsort((F[:, 1], F[:, 0]))
    area = 0.0
    y_floor = ref[1]
    for x, y in F[order]:
        if y < y_floor:
            area += (ref[0] - x) * (y_floor - y)
            y_floor = y
    return float(area)


def compare_hypervolumes(sets: Mapping[str, object]) -> dict[str, float]:
    """Hypervolume of each named set's own front, normalised over the union."""
    mats = {k: _as_matrix(v) for k, v in sets.items()}
    fronts = {k: F[nondominated_mask(F)] if len(F) else F for k, F in mats.items()}
    union = list(mats.values())
    return {k: hypervolume_2d(F, normalization=MINMAX, union=union) for k, F in fronts.items()}


# ---------------------------------------------------------------- NSGA-II


def constrained_fronts(F: np.ndarray, viol: np.ndarray) -> list[list[int]]:
    """Fast non-dominated sort under feasibility dominance."""
    n = F.shape[0]
    feas = viol <= 0
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    pareto = le & lt
    both_feas = feas[:, None] & feas[None, :]
    both_infeas = ~feas[:, None] & ~feas[None, :]
    dom = (both_feas & pareto) | (feas[:, None] & ~feas[None, :]) | (
        both_infeas & (viol[:, None] < viol[None, :]))
    np.fill_diagonal(dom, False)
    count = dom.sum(axis=0)
    fronts = []
    remaining = np.ones(n, dtype=bool)
    while remaining.any():
        cur = np.flatnonzero(remaining & (count == 0))
        fronts.append(cur.tolist())
        remaining[cur] = False
        count = count - dom[cur].sum(axis=0)
    return fronts


def crowding_distance(F: np.ndarray) -> np.ndarray:
    n, m = F.shape
    d = np.zeros(n)
    if n <= 2:
        d[:] = np.inf
        return d
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        lo, hi = F[order[0], k], F[order[-1], k]
        d[order[0]] = d[order[-1]] = np.inf
        if hi > lo:
            d[order[1:-1]] += (F[order[2:], k] - F[order[:-2], k]) / (hi - lo)
    return d


@dataclass
class NsgaResult:
    population: list[DesignPoint]
    archive: ParetoArchive
    evaluated: dict[str, DesignPoint]
    log: list[dict]

    @property
    def evaluations(self) -> int:
        return len(self.evaluated)


def _rank_and_crowd(points, objectives):
    F = np.array([objectives.values(p) for p in points])
    viol = np.array([objectives.violation(p) for p in points])
    fronts = constrained_fronts(F, viol)
    rank = np.empty(len(points), dtype=int)
    crowd = np.empty(len(points))
    for r, fr in enumerate(fronts):
        rank[fr] = r
        crowd[fr] = crowding_distance(F[fr])
    return fronts, rank, crowd


def nsga2_search(fitness: Callable[[str], DesignPoint], length: int, objectives: Objectives,
                 params: GaParams = GaParams(), workers: int = 1) -> NsgaResult:
    """NSGA-II over binary configs of ``length`` bits.

    Binary tournament on (rank, crowding), uniform crossover, per-bit flip
    mutation. Each distinct config is evaluated once; the returned archive is
    the Pareto front over every evaluated config.
    """
    rng = np.random.default_rng(params.seed)
    pm = params.mutation_prob_per_bit
    pm = 1.0 / length if pm is None else pm
    cache: dict[str, DesignPoint] = {}

    def evaluate(genomes: np.ndarray) -> list[DesignPoint]:
        cfgs = [AxoConfig(g) for g in genomes]
        new = list(dict.fromkeys(c for c in cfgs if c not in cache))
        for c, p in zip(new, evaluate_list(new, fitness, workers)):
            cache[c] = p
        return [cache[c] for c in cfgs]

    def record(gen, pts):
        for p in pts:
            row = {"generation": gen, "config": p.config}
            row.update({m: p.metric(m) for m in objectives.objectives})
            row["feasible"] = objectives.feasible(p)
            row["fidelity"] = p.fidelity
            history.append(row)

    history: list[dict] = []
    genomes = rng.integers(0, 2, size=(params.population, length), dtype=np.uint8)
    if params.include_accurate:
        genomes[0] = 1
    pop = evaluate(genomes)
    _, rank, crowd = _rank_and_crowd(pop, objectives)
    record(0, pop)

    def tournament():
        idx = rng.integers(0, len(pop), size=params.tournament)
        best = idx[0]
        for i in idx[1:]:
            if (rank[i], -crowd[i]) < (rank[best], -crowd[best]):
                best = i
        return genomes[best]

    for gen in range(1, params.generations + 1):
        children = []
        while len(children) < params.population:
            p1, p2 = tournament(), tournament()
            if rng.random() < params.crossover_prob:
                mask = rng.random(length) < 0.5
                c1, c2 = np.where(mask, p1, p2), np.where(mask, p2, p1)
            else:
                c1, c2 = p1.copy(), p2.copy()
            for c in (c1, c2):
                flip = rng.random(length) < pm
                children.append(np.where(flip, 1 - c, c).astype(np.uint8))
        kids = np.array(children[:params.population])
        offspring = evaluate(kids)
        merged_g = np.concatenate([genomes, kids])
        merged = pop + offspring
        fronts, mrank, mcrowd = _rank_and_crowd(merged, objectives)
        chosen: list[int] = []
        for fr in fronts:
            if len(chosen) + len(fr) <= params.population:
                chosen.extend(fr)
                continue
            order = sorted(fr, key=lambda i: (-mcrowd[i], i))
            chosen.extend(order[:params.population - len(chosen)])
            break
        genomes = merged_g[chosen]
        pop = [merged[i] for i in chosen]
        rank, crowd = mrank[chosen], mcrowd[chosen]
        record(gen, pop)

    evaluated = dict(sorted(cache.items()))
    archive = pareto_front(list(evaluated.values()), objectives)
    return NsgaResult(pop, archive, evaluated, history)


# ---------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    predicted: list[DesignPoint]
    validated: list[DesignPoint]
    drift: dict[str, float]

    def rows(self) -> list[dict]:
        out = []
        for p, v in zip(self.predicted, self.validated):
            for m in self.drift:
                out.append({"config": p.config, "metric": m, "predicted": p.metric(m),
                            "validated": v.metric(m), "drift": v.metric(m) - p.metric(m)})
        return out


def validate_points(points: Sequence[DesignPoint], characterize: Evaluator | Callable,
                    workers: int = 1) -> ValidationReport:
    """Re-characterise ``points`` with the high-fidelity path and report drift.

    Drift is the mean absolute difference per metric available on both sides.
    """
    if isinstance(characterize, Evaluator):
        characterize = characterize.without_surrogates()
    validated = evaluate_list([p.config for p in points], characterize, workers)
    validated = [replace(v, fidelity=CHARACTERIZED) for v in validated]
    drift: dict[str, float] = {}
    if points:
        names = [m for m in points[0].metric_names() if m in validated[0].metric_names()]
        for m in names:
            d = [abs(v.metric(m) - p.metric(m)) for p, v in zip(points, validated)]
            drift[m] = float(np.mean(d))
    return ValidationReport(list(points), validated, drift)


def sample_sweep(evaluator: Evaluator, configs: Sequence[str], workers: int = 1) -> list[DesignPoint]:
    """Evaluate a sampled or predefined batch (alias kept for readability)."""
    return evaluate_list(configs, evaluator, workers)
