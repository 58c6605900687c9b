import numpy as np
import pytest

from axoprune.apps import (PSNR_IDENTICAL_DB, AppEvaluator, Conv2d3x3, FirLowPass, app_behav,
                           app_dse, load_pgm, load_signal_csv, quantize, run_task, save_pgm,
                           save_signal_csv)
from axoprune.axmodel import apply_config, enumerate_configs
from axoprune.behav import Exact, LookupTable, NetlistFunctional
from axoprune.dse import GaParams, Objectives, evaluate_list, pareto_front
from axoprune.errors import (LengthMismatch, MalformedRecord, OverflowPolicyViolation,
                             WidthMismatch)
from axoprune.fixtures import fir_signal, fir_taps, gradient_image, oracle_fir
from axoprune.opgen import OperatorSpec, generate


def conv_oracle(image, kernel):
    h, w = len(image), len(image[0])
    out = [[0] * w for _ in range(h)]
    for i in range(h):
        for j in range(w):
            for di in range(3):
                for dj in range(3):
                    y, x = i + di - 1, j + dj - 1
                    if 0 <= y < h and 0 <= x < w:
                        out[i][j] += kernel[di][dj] * image[y][x]
    return out


@pytest.fixture(scope="module")
def fir():
    return FirLowPass(fir_taps(), fir_signal())


def test_fir_accurate_matches_oracle(fir, mul8):
    spec, base = mul8
    out = run_task(fir, NetlistFunctional(spec, base))
    ref = oracle_fir(fir_taps(), fir_signal())
    assert out.tolist() == ref
    m = app_behav(out, ref)
    assert m.output_mse == 0 and m.output_max_abs_err == 0 and m.psnr_db is None


def test_fir_all_zero_config(fir, mul8):
    spec, base = mul8
    out = run_task(fir, NetlistFunctional(spec, apply_config(base, "0" * 57)))
    ref = oracle_fir(fir_taps(), fir_signal())
    assert not out.any()
    m = app_behav(out, ref)
    assert m.output_mse == sum(r * r for r in ref) / len(ref)
    assert m.output_max_abs_err == max(abs(r) for r in ref)
    assert m.output_mse > 0


def test_conv_matches_oracle(mul4):
    rng = np.random.default_rng(4)
    img = rng.integers(-8, 8, (6, 5))
    ker = rng.integers(-8, 8, (3, 3))
    out = run_task(Conv2d3x3(ker, img), Exact(OperatorSpec.smul(4, 4)))
    assert out.tolist() == conv_oracle(img.tolist(), ker.tolist())
    spec, base = mul4
    assert np.array_equal(run_task(Conv2d3x3(ker, img), NetlistFunctional(spec, base)), out)


def test_conv_identity_kernel(mul8):
    spec, base = mul8
    img, peak = gradient_image()
    task = Conv2d3x3([[0, 0, 0], [0, 1, 0], [0, 0, 0]], img, peak)
    out = run_task(task, NetlistFunctional(spec, base))
    assert np.array_equal(out, img)
    assert app_behav(out, img, peak).psnr_db == PSNR_IDENTICAL_DB


def test_app_behav_examples():
    ref = np.arange(-5, 5)
    m = app_behav(ref + 1, ref)
    assert m.output_mse == 1.0 and m.output_max_abs_err == 1.0
    m = app_behav(ref + 1, ref, peak=255)
    assert m.psnr_db == pytest.approx(10 * np.log10(255 ** 2))
    assert app_behav(np.zeros(10), ref).output_mse == float(np.mean(ref ** 2))
    with pytest.raises(LengthMismatch):
        app_behav([1, 2], [1, 2, 3])


def test_task_errors():
    with pytest.raises(OverflowPolicyViolation):
        run_task(FirLowPass([1, 2], [200, 3]), Exact(OperatorSpec.smul(8, 8)))
    with pytest.raises(OverflowPolicyViolation):
        run_task(FirLowPass([9], [1]), Exact(OperatorSpec.smul(4, 4)))
    with pytest.raises(WidthMismatch):
        run_task(FirLowPass([1], [1]), Exact(OperatorSpec.uadd(4)))
    with pytest.raises(WidthMismatch):
        Conv2d3x3([[1, 2], [3, 4]], np.zeros((3, 3)))
    with pytest.raises(LengthMismatch):
        FirLowPass([], [1])


def test_lookup_table_consistency(fir, mul8):
    spec, base = mul8
    rng = np.random.default_rng(8)
    for _ in range(3):
        cfg = "".join(rng.choice(["0", "1"], 57))
        op = NetlistFunctional(spec, apply_config(base, cfg))
        assert np.array_equal(run_task(fir, LookupTable.from_operator(op)), run_task(fir, op))


def test_approximate_adder_accumulation():
    rng = np.random.default_rng(1)
    task = FirLowPass([1, 2, 1], rng.integers(0, 4, 20))
    mul = Exact(OperatorSpec.smul(4, 4))
    # products stay small and non-negative, so an exact 8-bit adder accumulates them unchanged
    add_spec = OperatorSpec.uadd(8)
    exact_add = NetlistFunctional(add_spec, generate(add_spec))
    assert np.array_equal(run_task(task, mul, exact_add), run_task(task, mul))


def test_quantize():
    assert quantize([0.5, -0.5, 1.5, -2.5], 8, scale=1.0).tolist() == [1, -1, 2, -3]
    assert quantize([1000, -1000], 8, scale=1.0).tolist() == [127, -128]
    q = quantize([0.25, -1.0, 0.5], 8)
    assert q.tolist() == [32, -127, 64]
    assert quantize([0.0, 0.0], 4).tolist() == [0, 0]


def test_fixture_ranges(fir):
    spec = OperatorSpec.smul(8, 8)
    lo, hi = spec.a_range
    assert len(fir.signal) == 256 and len(fir.taps) == 15
    assert all(lo <= v <= hi for v in (*fir.signal, *fir.taps))


@pytest.fixture(scope="module")
def small_fir_task():
    rng = np.random.default_rng(0)
    return FirLowPass([1, 3, -2, 3, 1], rng.integers(-4, 4, 32))


def test_app_dse_ga_subset_of_exhaustive(small_fir_task):
    spec = OperatorSpec.smul(3, 3)
    base = generate(spec)
    obj = Objectives(("lut_count", "output_mse"))
    ev = AppEvaluator(small_fir_task, spec, base)
    everything = evaluate_list(enumerate_configs(len(base.luts)), ev)
    exhaustive = pareto_front(everything, obj)
    res = app_dse(small_fir_task, spec, base, obj, method="Ga",
                  params=GaParams(population=16, generations=20, seed=3), evaluator=ev)
    assert set(res.archive.configs) <= set(exhaustive.configs)


def test_app_dse_sampling(small_fir_task, mul4):
    spec, base = mul4
    obj = Objectives(("pdp_proxy", "output_mse"))
    res = app_dse(small_fir_task, spec, base, obj, count=40, seed=2)
    assert len(res.points) == 41 and res.points[-1].config == "1" * 13
    F = np.array([obj.values(p) for p in res.points])
    for row in res.archive.matrix():
        assert not any((f <= row).all() and (f < row).any() for f in F)
    again = app_dse(small_fir_task, spec, base, obj, count=40, seed=2, workers=2)
    assert again.log == res.log


def test_app_dse_constraint(small_fir_task, mul4):
    spec, base = mul4
    obj = Objectives(("lut_count", "output_mse"), {"output_mse": 0.0})
    res = app_dse(small_fir_task, spec, base, obj, count=30)
    assert res.archive.configs == ["1" * 13]
    worst = AppEvaluator(small_fir_task, spec, base)("0" * 13)
    assert worst.metric("output_mse") >= res.archive.points[0].metric("output_mse")


def test_signal_and_pgm_files(tmp_path):
    p = tmp_path / "s.csv"
    save_signal_csv([3, -4, 5], p)
    assert load_signal_csv(p) == [3, -4, 5]
    p.write_text("# c\n1\n\n2\n")
    assert load_signal_csv(p) == [1, 2]
    p.write_text("1\nx\n")
    with pytest.raises(MalformedRecord):
        load_signal_csv(p)
    img = np.arange(12).reshape(3, 4)
    q = tmp_path / "i.pgm"
    save_pgm(img, q, maxval=15)
    arr, maxval = load_pgm(q)
    assert maxval == 15 and np.array_equal(arr, img)
    q.write_text("P2\n2 2\n3\n0 1 2\n")
    with pytest.raises(MalformedRecord):
        load_pgm(q)
