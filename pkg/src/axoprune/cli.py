"""``axoprune`` command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
violation. Commands that take a run configuration read a YAML file (schema in
:data:`axoprune.storage.SCHEMA`) and write into its ``output_dir``. Every
written CSV starts with a ``# axoprune run=<hash> output=<kind>`` line.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import storage
from .apps import (APP_METRICS, AppEvaluator, Conv2d3x3, FirLowPass, app_dse,
                   load_pgm, load_signal_csv)
from .axmodel import SamplingStrategy, apply_config, enumerate_configs, sample_configs
from .behav import BehavMetrics, Exhaustive, MonteCarlo
from .dse import (Evaluator, GaParams, Objectives, compare_hypervolumes, evaluate_list,
                  nsga2_search, pareto_front, validate_points)
from .errors import AxoError, DataError, InvalidNetlist, SchemaMismatch
from .fixtures import fir_signal, fir_taps, gradient_image
from .opgen import OpKind, generate, parse_spec
from .ppa import DelayModel, PowerPlan, PpaMetrics, import_ppa, merge_imported
from .rtl import RtlMode, emit_verilog
from .storage import (ConfigError, RunConfig, dumps_points, dumps_rows, fmt_real,
                      load_run_config, read_points, read_table, write_text)
from .surrogate import FeatureMode, fit_surrogate, load as load_surrogate, save as save_surrogate

log = logging.getLogger("axoprune")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3
OPERATOR_METRICS = (*BehavMetrics.FIELDS, *PpaMetrics.FIELDS)
GENERATION_COLUMNS = ("generation", "config")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------- helpers


def _args_header(kind: str, argv: Sequence[str]) -> str:
    digest = hashlib.sha256("\0".join(argv).encode()).hexdigest()[:16]
    return f"# axoprune run={digest} output={kind}"


def _behav_plan(rc: RunConfig):
    plan = rc.get("estimators.behav.plan")
    if plan == "exhaustive":
        return Exhaustive()
    if plan == "monte_carlo":
        return MonteCarlo(int(rc.get("estimators.behav.samples")), rc.seed("behav"))
    raise ConfigError("estimators.behav.plan", "must be exhaustive or monte_carlo")


def _evaluator(rc: RunConfig, with_surrogates: bool = True, needed=()) -> Evaluator:
    spec = rc.spec
    ppa = rc.get("estimators.ppa")
    imported = {}
    if ppa["imported"]:
        imported = import_ppa(rc.path("estimators.ppa.imported"))
    surrogates = {}
    if with_surrogates:
        for metric, path in rc.get("estimators.surrogates").items():
            p = Path(path)
            surrogates[metric] = load_surrogate(p if p.is_absolute() else rc.base_dir / p)
    est = rc.get("estimators.behav.estimator")
    if est not in ("NetlistFunctional", "LookupTable", "PolyRegression"):
        raise ConfigError("estimators.behav.estimator", f"unknown estimator {est!r}")
    return Evaluator(
        spec, generate(spec), _behav_plan(rc), est,
        int(rc.get("estimators.behav.poly_degree")), int(rc.get("estimators.behav.poly_samples")),
        rc.seed("poly"),
        DelayModel(float(ppa["lut_delay"]), float(ppa["carry_per_bit_delay"])),
        PowerPlan(int(ppa["power_vectors"]), rc.seed("power")),
        imported, surrogates, tuple(needed), int(rc.get("approximation.tie")),
    )


def _objectives(rc: RunConfig, known=OPERATOR_METRICS) -> Objectives:
    mins = list(rc.get("objectives.minimize"))
    cons = dict(rc.get("objectives.constraints"))
    for m in [*mins, *cons]:
        if m not in known:
            raise ConfigError("objectives", f"unknown metric {m!r}")
    return Objectives(tuple(mins), {k: float(v) for k, v in cons.items()})


def _configs(rc: RunConfig, length: int) -> list[str]:
    src = rc.get("configs.source")
    if src == "enumerate":
        return list(enumerate_configs(length))
    if src == "list":
        path = rc.path("configs.list_file")
        if path is None:
            raise ConfigError("configs.list_file", "required when source is list")
        cfgs = [l.strip() for l in path.read_text(encoding="utf-8").splitlines()
                if l.strip() and not l.startswith("#")]
        for c in cfgs:
            if len(c) != length or set(c) - {"0", "1"}:
                raise DataError(f"config {c!r} is not a {length}-bit 0/1 string")
        return cfgs
    if src == "sample":
        s = rc.get("configs.sampling")
        strat = SamplingStrategy(s["kind"], s["window"], s["pattern"], rc.seed("sampling"))
        return [str(c) for c in sample_configs(strat, length, int(s["count"]))]
    raise ConfigError("configs.source", "must be enumerate, list or sample")


def _ga_params(rc: RunConfig) -> GaParams:
    g = rc.get("dse.ga")
    try:
        return GaParams(int(g["population"]), int(g["generations"]), float(g["crossover_prob"]),
                        None if g["mutation_prob_per_bit"] is None else float(g["mutation_prob_per_bit"]),
                        int(g["tournament"]), rc.seed("ga"))
    except ValueError as exc:
        raise ConfigError("dse.ga", str(exc)) from None


def _workers(rc: RunConfig, override: int | None) -> int:
    return override if override else int(rc.get("workers"))


def _out(rc: RunConfig) -> Path:
    d = rc.output_dir
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_generations(path: Path, rows, objectives: Objectives, header: str) -> None:
    cols = [*GENERATION_COLUMNS, *objectives.objectives, "feasible", "fidelity"]
    rows = [{**r, "feasible": "1" if r["feasible"] else "0"} for r in rows]
    write_text(path, dumps_rows(rows, cols, header))


def _hv_report(path: Path, sets: dict, header: str) -> dict[str, float]:
    hv = compare_hypervolumes(sets)
    rows = [{"set": k, "hypervolume": v} for k, v in hv.items()]
    write_text(path, dumps_rows(rows, ("set", "hypervolume"), header))
    return hv


# ---------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    spec = parse_spec(args.kind, *args.widths)
    net = generate(spec)
    text = storage.dumps_netlist(net)
    if args.output:
        write_text(args.output, text)
    print(f"L={len(net.luts)}")
    return EXIT_OK


def _iter_points(configs, ev, workers):
    if workers <= 1:
        for c in configs:
            yield ev(c)
        return
    chunk = max(1, len(configs) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        yield from ex.map(ev, configs, chunksize=chunk)


def cmd_characterize(args) -> int:
    rc = load_run_config(args.runconfig)
    ev = _evaluator(rc, with_surrogates=False)
    configs = sorted(_configs(rc, ev.length))
    out = _out(rc) / "results.csv"
    header = rc.header("characterize")
    points = []
    try:
        for p in _iter_points(configs, ev, _workers(rc, args.workers)):
            points.append(p)
    except BaseException:
        write_text(out.with_name(out.name + ".partial"), dumps_points(points, header))
        raise
    write_text(out, dumps_points(points, header))
    print(f"{len(points)} rows -> {out}")
    return EXIT_OK


def cmd_sample(args) -> int:
    rc = load_run_config(args.runconfig)
    configs = _configs(rc, len(generate(rc.spec).luts))
    out = _out(rc) / "configs.txt"
    write_text(out, rc.header("sample") + "\n" + "".join(c + "\n" for c in configs))
    print(f"{len(configs)} configs -> {out}")
    return EXIT_OK


def cmd_dse(args) -> int:
    rc = load_run_config(args.runconfig)
    obj = _objectives(rc)
    ev = _evaluator(rc, needed=obj.metrics)
    workers = _workers(rc, args.workers)
    out = _out(rc)
    method = rc.get("dse.method")
    if method == "Ga":
        res = nsga2_search(ev, ev.length, obj, _ga_params(rc), workers)
        evaluated, front, gens = list(res.evaluated.values()), res.archive, res.log
    elif method in ("Sampling", "List"):
        evaluated = evaluate_list(_configs(rc, ev.length), ev, workers)
        front = pareto_front(evaluated, obj)
        gens = [{"generation": 0, "config": p.config, **{m: p.metric(m) for m in obj.objectives},
                 "feasible": obj.feasible(p), "fidelity": p.fidelity} for p in evaluated]
    else:
        raise ConfigError("dse.method", "must be Ga, Sampling or List")
    extra = [m for m in obj.metrics if m not in OPERATOR_METRICS]
    write_text(out / "front.csv", dumps_points(front.points, rc.header("front"), extra))
    write_text(out / "evaluated.csv", dumps_points(evaluated, rc.header("evaluated"), extra))
    _write_generations(out / "generations.csv", gens, obj, rc.header("generations"))
    print(f"{len(evaluated)} designs evaluated, {len(front)} on the front")
    if len(obj.objectives) == 2:
        sets = {"search": front}
        if rc.get("dse.compare_exhaustive"):
            full = evaluate_list(list(enumerate_configs(ev.length)), ev.without_surrogates(), workers)
            sets["exhaustive"] = pareto_front(full, obj)
        for name, path in rc.get("dse.compare").items():
            p = Path(path)
            sets[name] = pareto_front(read_points(p if p.is_absolute() else rc.base_dir / p), obj)
        hv = _hv_report(out / "hypervolume.csv", sets, rc.header("hypervolume"))
        for k, v in hv.items():
            print(f"hypervolume {k} = {fmt_real(v)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    rc = load_run_config(args.runconfig)
    points = read_points(args.points)
    if not points:
        raise SchemaMismatch(f"{args.points}: no points")
    ev = _evaluator(rc, with_surrogates=False)
    report = validate_points(points, ev, _workers(rc, args.workers))
    out = _out(rc)
    write_text(out / "validated.csv", dumps_points(report.validated, rc.header("validated")))
    rows = [{"metric": m, "mae": v} for m, v in report.drift.items()]
    write_text(out / "drift.csv", dumps_rows(rows, ("metric", "mae"), rc.header("drift")))
    for m, v in report.drift.items():
        print(f"drift {m} = {fmt_real(v)}")
    return EXIT_OK


def _task(rc: RunConfig):
    app = rc.get("app")
    if app["task"] == "fir":
        signal = load_signal_csv(rc.path("app.signal")) if app["signal"] else fir_signal()
        taps = app["taps"] if app["taps"] is not None else fir_taps()
        return FirLowPass(taps, signal)
    if app["task"] == "conv2d":
        img, maxval = load_pgm(rc.path("app.image")) if app["image"] else gradient_image()
        return Conv2d3x3(app["kernel"], img, maxval)
    raise ConfigError("app.task", "must be fir or conv2d")


def cmd_app_eval(args) -> int:
    rc = load_run_config(args.runconfig)
    spec = rc.spec
    if spec.kind is not OpKind.SignedMulBW:
        raise ConfigError("operator.kind", "application tasks need a signed multiplier")
    task = _task(rc)
    base = generate(spec)
    ev = AppEvaluator(task, spec, base, power_plan=PowerPlan(
        int(rc.get("estimators.ppa.power_vectors")), rc.seed("power")))
    out = _out(rc)
    app_cols = [m for m in APP_METRICS if m != "psnr_db" or task.peak is not None]
    if args.config:
        p = ev(args.config)
        write_text(out / "app_point.csv", dumps_points([p], rc.header("app_point"), app_cols))
        for m in app_cols:
            print(f"{m} = {fmt_real(p.metric(m))}")
        return EXIT_OK
    obj = _objectives(rc, known=(*OPERATOR_METRICS, *app_cols))
    method = rc.get("dse.method")
    res = app_dse(task, spec, base, obj, "Ga" if method == "Ga" else "Sampling",
                  int(rc.get("app.count")), rc.seed("sampling"), _ga_params(rc),
                  _workers(rc, args.workers), ev)
    write_text(out / "app_front.csv", dumps_points(res.archive.points, rc.header("app_front"), app_cols))
    write_text(out / "app_points.csv", dumps_points(res.points, rc.header("app_points"), app_cols))
    _write_generations(out / "app_generations.csv", res.log, obj, rc.header("app_generations"))
    print(f"{len(res.points)} designs evaluated, {len(res.archive)} on the front")
    return EXIT_OK


def cmd_emit_rtl(args) -> int:
    spec = parse_spec(args.kind, *args.widths)
    net = generate(spec)
    if args.config:
        net = apply_config(net, args.config)
    text = emit_verilog(net, RtlMode(args.mode))
    if args.output:
        write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_import_ppa(args, argv) -> int:
    imported = import_ppa(args.csv)
    print(f"{len(imported)} imported records")
    if not args.results:
        return EXIT_OK
    points = read_points(args.results)
    by_cfg = {p.config: p for p in points}
    proxies = {c: None for c in by_cfg}
    merged, unknown = merge_imported(proxies, imported)
    for cfg in unknown:
        print(f"warning: imported config {cfg} not in results", file=sys.stderr)
    rows = []
    for p in points:
        rec = merged[p.config]
        vals = dict(p.extra)
        if rec is not None:
            vals.update({m: getattr(rec, m) for m in PpaMetrics.FIELDS})
        row = {"config": p.config, "fidelity": p.fidelity,
               "ppa_source": rec.source if rec is not None else "Proxy"}
        row.update({m: vals.get(m, "") for m in OPERATOR_METRICS})
        rows.append(row)
    cols = storage.RESULT_COLUMNS
    write_text(args.output, dumps_rows(rows, cols, _args_header("import-ppa", argv)))
    return EXIT_OK


def _svg(sets: dict, x: str, y: str, marks: dict) -> str:
    w, h, pad = 480, 360, 48
    allx = np.concatenate([np.asarray(v[0]) for v in sets.values()])
    ally = np.concatenate([np.asarray(v[1]) for v in sets.values()])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    sx = (w - 2 * pad) / (x1 - x0 or 1.0)
    sy = (h - 2 * pad) / (y1 - y0 or 1.0)
    palette = ["#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#17becf"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
           f'<rect width="{w}" height="{h}" fill="white"/>',
           f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" y2="{h - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{h - pad}" stroke="black"/>',
           f'<text x="{w / 2}" y="{h - 12}" text-anchor="middle" font-size="12">{x}</text>',
           f'<text x="14" y="{h / 2}" font-size="12" transform="rotate(-90 14 {h / 2})" '
           f'text-anchor="middle">{y}</text>']
    for k, (name, (xs, ys, cfgs)) in enumerate(sets.items()):
        color = palette[k % len(palette)]
        for xv, yv, c in zip(xs, ys, cfgs):
            px = pad + (xv - x0) * sx
            py = h - pad - (yv - y0) * sy
            on_front = c in marks[name]
            out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{4 if on_front else 2.5}" '
                       f'fill="{"#d62728" if on_front else color}" '
                       f'class="{"pareto" if on_front else "point"}" data-set="{name}" '
                       f'data-config="{c}"/>')
        out.append(f'<text x="{w - pad}" y="{pad + 14 * k}" text-anchor="end" font-size="11" '
                   f'fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_plotdata(args, argv) -> int:
    if not args.results:
        raise SchemaMismatch("no result files given")
    names = args.names or [Path(p).stem for p in args.results]
    if len(names) != len(args.results):
        raise UsageError("--names must match the number of result files")
    schema = None
    tidy, scatter, marks, pareto_rows = [], {}, {}, []
    for name, path in zip(names, args.results):
        cols, rows = read_table(path)
        if schema is None:
            schema = cols
        elif cols != schema:
            raise SchemaMismatch(f"{path}: columns differ from {args.results[0]}")
        if not rows:
            raise SchemaMismatch(f"{path}: no rows")
        metrics = [c for c in cols if c not in ("config", "fidelity", "ppa_source")]
        for r in rows:
            for m in metrics:
                if r[m] != "":
                    tidy.append({"set": name, "config": r["config"], "metric": m, "value": r[m]})
        if args.x and args.y:
            for c in (args.x, args.y):
                if c not in cols:
                    raise SchemaMismatch(f"{path}: no column {c!r}")
            pts = read_points(path)
            front = pareto_front(pts, Objectives((args.x, args.y)))
            marks[name] = set(front.configs)
            pareto_rows += [{"set": name, "config": c} for c in front.configs]
            scatter[name] = ([p.metric(args.x) for p in pts], [p.metric(args.y) for p in pts],
                             [p.config for p in pts])
    header = _args_header("plotdata", argv)
    write_text(args.output, dumps_rows(tidy, ("set", "config", "metric", "value"), header))
    if scatter:
        write_text(Path(args.output).with_suffix(".pareto.csv"),
                   dumps_rows(pareto_rows, ("set", "config"), header))
        if args.svg:
            write_text(args.svg, _svg(scatter, args.x, args.y, marks))
    print(f"{len(tidy)} tidy rows -> {args.output}")
    return EXIT_OK


def cmd_fit_surrogate(args, argv) -> int:
    points = read_points(args.results)
    data = []
    for p in points:
        try:
            data.append((p.config, p.metric(args.target)))
        except KeyError:
            raise SchemaMismatch(f"{args.results}: no values for {args.target!r}") from None
    model = fit_surrogate(data, FeatureMode(args.mode), args.ridge_lambda, args.seed, args.target)
    save_surrogate(model, args.output)
    print(f"train_mae={fmt_real(model.train_mae)} test_mae={fmt_real(model.test_mae)}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="axoprune", description="Approximate operator pruning toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def spec_args(sp):
        sp.add_argument("kind", help="uadd or smul-bw")
        sp.add_argument("widths", type=int, nargs="+")

    g = sub.add_parser("generate", help="write an accurate operator netlist")
    spec_args(g)
    g.add_argument("-o", "--output")

    for name, hlp in (("characterize", "BEHAV and PPA for a config set"),
                      ("sample", "write a sampled config list"),
                      ("dse", "design-space exploration"),
                      ("app-eval", "application-level evaluation or DSE")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("runconfig")
        sp.add_argument("--workers", type=int)
        if name == "app-eval":
            sp.add_argument("--config", help="evaluate one config only")

    v = sub.add_parser("validate", help="re-characterise predicted points")
    v.add_argument("runconfig")
    v.add_argument("--points", required=True)
    v.add_argument("--workers", type=int)

    e = sub.add_parser("emit-rtl", help="emit Verilog")
    spec_args(e)
    e.add_argument("--config")
    e.add_argument("--mode", default="Generic", choices=[m.value for m in RtlMode])
    e.add_argument("-o", "--output")

    i = sub.add_parser("import-ppa", help="parse and merge measured PPA")
    i.add_argument("csv")
    i.add_argument("--results")
    i.add_argument("-o", "--output", default="merged.csv")

    pl = sub.add_parser("plotdata", help="tidy CSV and SVG scatter")
    pl.add_argument("results", nargs="*")
    pl.add_argument("--names", nargs="+")
    pl.add_argument("--x")
    pl.add_argument("--y")
    pl.add_argument("-o", "--output", default="plotdata.csv")
    pl.add_argument("--svg")

    f = sub.add_parser("fit-surrogate", help="fit a config-bit regression model")
    f.add_argument("results")
    f.add_argument("--target", required=True)
    f.add_argument("--mode", default="BitsLinear", choices=[m.value for m in FeatureMode])
    f.add_argument("--ridge-lambda", type=float, default=0.0)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("-o", "--output", required=True)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"axoprune: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {
        "generate": lambda: cmd_generate(args),
        "characterize": lambda: cmd_characterize(args),
        "sample": lambda: cmd_sample(args),
        "dse": lambda: cmd_dse(args),
        "validate": lambda: cmd_validate(args),
        "app-eval": lambda: cmd_app_eval(args),
        "emit-rtl": lambda: cmd_emit_rtl(args),
        "import-ppa": lambda: cmd_import_ppa(args, argv),
        "plotdata": lambda: cmd_plotdata(args, argv),
        "fit-surrogate": lambda: cmd_fit_surrogate(args, argv),
    }
    try:
        return handlers[args.command]()
    except UsageError as exc:
        print(f"axoprune: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"axoprune: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvalidNetlist, AxoError, AssertionError) as exc:
        print(f"axoprune: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"axoprune: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
