import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from axoprune.axmodel import apply_config, enumerate_configs
from axoprune.behav import (BehavMetrics, Exact, Exhaustive, LookupTable, MonteCarlo,
                            NetlistFunctional, PolyRegression, characterize_behav, error_metrics,
                            estimate_output, estimator_benchmark, fit_poly_estimator, monomials)
from axoprune.errors import (EmptyPlan, OperandOutOfRange, RankDeficient, SpaceTooLarge,
                             WidthMismatch)
from axoprune.opgen import OperatorSpec


def brute_metrics(pairs, approx, exact):
    errs = [abs(approx(a, b) - exact(a, b)) for a, b in pairs]
    rel = sum(Fraction(e, max(abs(exact(a, b)), 1)) for e, (a, b) in zip(errs, pairs))
    n = len(pairs)
    return {"avg_abs_err": sum(errs) / n, "avg_rel_err": float(rel / n),
            "max_abs_err": max(errs), "err_prob": sum(e > 0 for e in errs) / n,
            "mse": sum(e * e for e in errs) / n}


ADDER_PAIRS = [(a, b) for a in range(16) for b in range(16)]


def test_identity_is_zero(adder4, mul4):
    for spec, base in (adder4, mul4):
        op = NetlistFunctional(spec, base)
        assert characterize_behav(op, op) == BehavMetrics.zero()
        assert characterize_behav(op, Exact(spec), MonteCarlo(500, 1)) == BehavMetrics.zero()


def test_all_zero_adder(adder4):
    spec, base = adder4
    m = characterize_behav(NetlistFunctional(spec, apply_config(base, "0000")), Exact(spec))
    assert m.avg_abs_err == 15.0
    assert m.err_prob == 255 / 256
    assert m.max_abs_err == 30.0
    ref = brute_metrics(ADDER_PAIRS, lambda a, b: 0, lambda a, b: a + b)
    assert m.mse == ref["mse"] and math.isclose(m.avg_rel_err, ref["avg_rel_err"], rel_tol=1e-12)


def test_msb_lut_pruned(adder4):
    # config "1110" removes the most significant LUT: bit 3 carries bit 2's carry-out
    spec, base = adder4
    m = characterize_behav(NetlistFunctional(spec, apply_config(base, "1110")), Exact(spec))
    ref = brute_metrics(ADDER_PAIRS, lambda a, b: (a & 7) + (b & 7), lambda a, b: a + b)
    assert m.avg_abs_err == ref["avg_abs_err"] == 8.0
    assert m.err_prob == ref["err_prob"]
    assert m.max_abs_err == ref["max_abs_err"]
    assert m.mse == ref["mse"]
    assert math.isclose(m.avg_rel_err, ref["avg_rel_err"], rel_tol=1e-12)


def test_second_bit_pruned(adder4):
    spec, base = adder4

    def model(a, b):
        low = ((a ^ b) & 1) | ((a & b & 1) << 1)
        return low + (((a >> 2) + (b >> 2)) << 2)
    m = characterize_behav(NetlistFunctional(spec, apply_config(base, "1011")), Exact(spec))
    ref = brute_metrics(ADDER_PAIRS, model, lambda a, b: a + b)
    assert m.avg_abs_err == ref["avg_abs_err"] == 2.0
    assert m.mse == ref["mse"]


def test_signed_metrics_use_decoded_values(mul4):
    spec, base = mul4
    m = characterize_behav(NetlistFunctional(spec, apply_config(base, "0" * 13)), Exact(spec))
    pairs = [(a, b) for a in range(-8, 8) for b in range(-8, 8)]
    ref = brute_metrics(pairs, lambda a, b: 0, lambda a, b: a * b)
    assert m.avg_abs_err == ref["avg_abs_err"] and m.max_abs_err == 64


def test_metric_invariants(mul4):
    spec, base = mul4
    rng = np.random.default_rng(0)
    for _ in range(20):
        cfg = "".join(rng.choice(["0", "1"], 13))
        m = characterize_behav(NetlistFunctional(spec, apply_config(base, cfg)), Exact(spec))
        assert (m.err_prob == 0) == (m.avg_abs_err == 0) == (m.max_abs_err == 0)
        assert m.avg_abs_err <= m.max_abs_err
        assert 0 <= m.mse <= m.max_abs_err ** 2
        assert 0 <= m.err_prob <= 1


def test_monte_carlo_consistency(adder4):
    spec, base = adder4
    for cfg in enumerate_configs(4):
        op = NetlistFunctional(spec, apply_config(base, cfg))
        ex = characterize_behav(op, Exact(spec)).avg_abs_err
        mc = characterize_behav(op, Exact(spec), MonteCarlo(100_000, 3)).avg_abs_err
        assert abs(mc - ex) <= 0.05 * ex


def test_plans_errors():
    with pytest.raises(SpaceTooLarge):
        characterize_behav(Exact(OperatorSpec.uadd(13)), Exact(OperatorSpec.uadd(13)))
    with pytest.raises(EmptyPlan):
        characterize_behav(Exact(OperatorSpec.uadd(4)), Exact(OperatorSpec.uadd(4)), MonteCarlo(0))
    with pytest.raises(WidthMismatch):
        characterize_behav(Exact(OperatorSpec.uadd(4)), Exact(OperatorSpec.uadd(5)))


def test_lookup_table_equals_netlist(mul4):
    spec, base = mul4
    for cfg in ("1011011101110", "0111111111111", "1111100000111"):
        net_op = NetlistFunctional(spec, apply_config(base, cfg))
        assert characterize_behav(LookupTable.from_operator(net_op), Exact(spec)) == \
            characterize_behav(net_op, Exact(spec))


def test_estimate_output():
    spec = OperatorSpec.uadd(4)
    from axoprune.opgen import generate
    lut = LookupTable.from_operator(NetlistFunctional(spec, generate(spec)))
    assert estimate_output(lut, 7, 8) == 15
    with pytest.raises(OperandOutOfRange):
        estimate_output(lut, 16, 0)
    with pytest.raises(OperandOutOfRange):
        estimate_output(Exact(OperatorSpec.smul(4, 4)), -9, 0)


def test_netlist_functional_wraps_simulate(mul4):
    spec, base = mul4
    op = NetlistFunctional(spec, base)
    assert op(-8, 7) == -56 == estimate_output(op, -8, 7)


def test_poly_exact_adder(adder4):
    spec, base = adder4
    est = fit_poly_estimator(NetlistFunctional(spec, base), 1, 50, seed=0)
    a, b = spec.all_operands()
    assert np.array_equal(est.evaluate(a, b), a + b)


def test_poly_exact_multiplier(mul4):
    spec, base = mul4
    est = fit_poly_estimator(NetlistFunctional(spec, base), 2, 100, seed=0)
    a, b = spec.all_operands()
    assert np.array_equal(est.evaluate(a, b), a * b)
    assert estimate_output(est, -8, 7) == -56


def test_poly_linear_cannot_multiply(mul4):
    spec, base = mul4
    est = fit_poly_estimator(NetlistFunctional(spec, base), 1, 100, seed=0)
    a, b = spec.all_operands()
    assert np.abs(est.evaluate(a, b) - a * b).max() > 0


def test_poly_refit_bit_identical(mul4):
    spec, base = mul4
    op = NetlistFunctional(spec, base)
    e1, e2 = fit_poly_estimator(op, 3, 80, 4), fit_poly_estimator(op, 3, 80, 4)
    assert e1.coef.tobytes() == e2.coef.tobytes()


def test_poly_errors(mul4):
    spec, base = mul4
    op = NetlistFunctional(spec, base)
    with pytest.raises(RankDeficient):
        fit_poly_estimator(op, 2, 5)
    with pytest.raises(ValueError):
        fit_poly_estimator(op, 5, 100)
    assert len(monomials(2)) == 6


@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(-1, 1))
def test_poly_reproduces_any_quadratic(c0, c1, c2):
    # a*b*c2 + a*c1 + c0 stays inside the output range, so it is an exact quadratic
    class Quad:
        spec = OperatorSpec.smul(8, 8)

        def evaluate(self, a, b):
            a, b = np.asarray(a), np.asarray(b)
            return np.clip(c2 * a * b + c1 * a + c0, *self.spec.out_range)
    est = fit_poly_estimator(Quad(), 2, 60, seed=1)
    a, b = Quad.spec.all_operands()
    assert np.array_equal(est.evaluate(a, b), Quad().evaluate(a, b))


def test_estimator_benchmark(mul8):
    spec, base = mul8
    net_op = NetlistFunctional(spec, apply_config(base, "1" * 50 + "0" * 7))
    ests = {"lut": LookupTable.from_operator(net_op), "netlist": net_op,
            "poly1": fit_poly_estimator(net_op, 1, 200)}
    rep = estimator_benchmark(ests, net_op)
    assert not rep["lut"].errors.any() and not rep["netlist"].errors.any()
    assert rep["lut"].metrics == BehavMetrics.zero() == rep["netlist"].metrics
    assert np.abs(rep["poly1"].errors).max() > 0
    assert rep["lut"].seconds_per_query <= rep["netlist"].seconds_per_query


def test_error_metrics_direct():
    m = error_metrics([1, 2, 3], [1, 2, 5])
    assert m.avg_abs_err == 2 / 3 and m.max_abs_err == 2.0 and m.mse == 4 / 3
    assert m.avg_rel_err == (2 / 5) / 3
