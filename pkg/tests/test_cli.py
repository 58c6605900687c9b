import subprocess
import sys

import pytest
import yaml

from axoprune.cli import main
from axoprune.dse import Objectives, pareto_front
from axoprune.fixtures import IMPORTED_PPA, fixture_path
from axoprune.storage import RESULT_COLUMNS, read_points, read_table
from verilog_sim import Module


def run_config(tmp_path, name="run.yaml", **sections):
    data = {"operator": {"kind": "uadd", "widths": [4]}, "output_dir": "out"}
    data.update(sections)
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def test_generate(tmp_path, capsys):
    out = tmp_path / "m.net"
    assert main(["generate", "smul-bw", "4", "4", "-o", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "L=13"
    assert out.read_text().startswith("axoprune-netlist 1")


def test_characterize_full_adder_space(tmp_path):
    cfg = run_config(tmp_path)
    assert main(["characterize", str(cfg)]) == 0
    text = (tmp_path / "out" / "results.csv").read_text()
    lines = text.splitlines()
    assert lines[0].startswith("# axoprune run=")
    assert lines[1] == ",".join(RESULT_COLUMNS)
    pts = read_points(tmp_path / "out" / "results.csv")
    assert [p.config for p in pts] == sorted(format(i, "04b") for i in range(16))
    acc = {p.config: p for p in pts}["1111"]
    assert acc.metric("avg_abs_err") == 0 and acc.metric("lut_count") == 4


def test_characterize_worker_determinism(tmp_path):
    cfg = run_config(tmp_path)
    assert main(["characterize", str(cfg), "--workers", "1"]) == 0
    one = (tmp_path / "out" / "results.csv").read_bytes()
    assert main(["characterize", str(cfg), "--workers", "3"]) == 0
    assert (tmp_path / "out" / "results.csv").read_bytes() == one


def test_sample(tmp_path):
    cfg = run_config(tmp_path, configs={"source": "sample", "sampling": {"kind": "Random", "count": 5}})
    assert main(["sample", str(cfg)]) == 0
    lines = (tmp_path / "out" / "configs.txt").read_text().splitlines()
    assert lines[0].startswith("#") and len(lines) == 6


def test_dse_and_plotdata(tmp_path):
    cfg = run_config(tmp_path, dse={"compare_exhaustive": True,
                                    "ga": {"population": 16, "generations": 10}})
    assert main(["dse", str(cfg)]) == 0
    out = tmp_path / "out"
    for f in ("front.csv", "evaluated.csv", "generations.csv", "hypervolume.csv"):
        assert (out / f).is_file()
    _, hv = read_table(out / "hypervolume.csv")
    vals = {r["set"]: float(r["hypervolume"]) for r in hv}
    assert vals["search"] == vals["exhaustive"]
    cols, gens = read_table(out / "generations.csv")
    assert cols == ["generation", "config", "pdp_proxy", "avg_abs_err", "feasible", "fidelity"]

    tidy = tmp_path / "plot.csv"
    svg = tmp_path / "plot.svg"
    argv = ["plotdata", str(out / "evaluated.csv"), "--x", "pdp_proxy", "--y", "avg_abs_err",
            "-o", str(tidy), "--svg", str(svg)]
    assert main(argv) == 0
    _, marked = read_table(tidy.with_suffix(".pareto.csv"))
    obj = Objectives(("pdp_proxy", "avg_abs_err"))
    expected = pareto_front(read_points(out / "evaluated.csv"), obj).configs
    assert [r["config"] for r in marked] == expected
    assert svg.read_text().count('class="pareto"') == len(expected)


def test_plotdata_errors(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text(",".join(RESULT_COLUMNS) + "\n")
    assert main(["plotdata", str(empty), "-o", str(tmp_path / "p.csv")]) == 2
    assert main(["plotdata"]) == 2


def test_surrogate_dse_then_validate(tmp_path):
    cfg = run_config(tmp_path)
    assert main(["characterize", str(cfg)]) == 0
    results = tmp_path / "out" / "results.csv"
    model = tmp_path / "lut.csv"
    assert main(["fit-surrogate", str(results), "--target", "lut_count", "-o", str(model)]) == 0
    cfg2 = run_config(tmp_path, "sur.yaml", output_dir="sur",
                      estimators={"surrogates": {"lut_count": str(model)}},
                      objectives={"minimize": ["lut_count", "avg_abs_err"]},
                      dse={"ga": {"population": 8, "generations": 4}})
    assert main(["dse", str(cfg2)]) == 0
    front = tmp_path / "sur" / "front.csv"
    assert {p.fidelity for p in read_points(front)} == {"Predicted"}
    assert main(["validate", str(cfg2), "--points", str(front)]) == 0
    _, drift = read_table(tmp_path / "sur" / "drift.csv")
    assert {r["metric"]: float(r["mae"]) for r in drift}["lut_count"] == 0.0
    assert {p.fidelity for p in read_points(tmp_path / "sur" / "validated.csv")} == {"Characterized"}


def test_app_eval(tmp_path, capsys):
    cfg = run_config(tmp_path, operator={"kind": "smul-bw", "widths": [8, 8]},
                     objectives={"minimize": ["lut_count", "output_mse"]}, app={"count": 8},
                     dse={"method": "Sampling"})
    assert main(["app-eval", str(cfg), "--config", "1" * 57]) == 0
    assert "output_mse = 0" in capsys.readouterr().out
    assert main(["app-eval", str(cfg)]) == 0
    pts = read_points(tmp_path / "out" / "app_points.csv")
    assert len(pts) == 9
    front = read_points(tmp_path / "out" / "app_front.csv")
    assert "1" * 57 in [p.config for p in front]


def test_emit_rtl(tmp_path):
    import numpy as np
    out = tmp_path / "m.v"
    assert main(["emit-rtl", "uadd", "4", "--config", "1011", "--mode", "VendorPrimitives",
                 "-o", str(out)]) == 0
    a, b = np.meshgrid(np.arange(16), np.arange(16))
    got = Module(out.read_text()).run({"a": a.ravel(), "b": b.ravel()})["out"]
    low = (a ^ b) & 1 | ((a & b & 1) << 1)
    assert np.array_equal(got, (low + (((a >> 2) + (b >> 2)) << 2)).ravel())


def test_import_ppa(tmp_path, capsys):
    cfg = run_config(tmp_path)
    assert main(["characterize", str(cfg)]) == 0
    merged = tmp_path / "merged.csv"
    assert main(["import-ppa", str(fixture_path(IMPORTED_PPA)), "--results",
                 str(tmp_path / "out" / "results.csv"), "-o", str(merged)]) == 0
    _, rows = read_table(merged)
    src = {r["config"]: r["ppa_source"] for r in rows}
    assert {c for c, s in src.items() if s == "Imported"} == {"1111", "0111", "0011", "0001", "0000"}
    assert len(rows) == 16
    bad = tmp_path / "bad.csv"
    bad.write_text("config,lut,carry,cpd_ns,power_mw,pdp\n1111,4\n")
    assert main(["import-ppa", str(bad)]) == 2


def test_imported_ppa_in_evaluator(tmp_path):
    cfg = run_config(tmp_path, estimators={"ppa": {"imported": str(fixture_path(IMPORTED_PPA))}})
    assert main(["characterize", str(cfg)]) == 0
    pts = {p.config: p for p in read_points(tmp_path / "out" / "results.csv")}
    assert pts["1111"].metric("cpd_proxy") == 1.38
    _, rows = read_table(tmp_path / "out" / "results.csv")
    assert {r["config"]: r["ppa_source"] for r in rows}["1010"] == "Proxy"


def test_exit_codes(tmp_path, capsys):
    assert main(["frobnicate"]) == 1
    assert main(["generate", "uadd"]) == 1
    missing = tmp_path / "m.yaml"
    missing.write_text(yaml.safe_dump({"output_dir": "o"}))
    assert main(["characterize", str(missing)]) == 2
    assert "operator.kind" in capsys.readouterr().err
    assert main(["characterize", str(tmp_path / "nope.yaml")]) == 2
    assert main(["generate", "uadd", "99"]) == 2


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "axoprune.cli", "generate", "uadd", "8"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "L=8"
