"""Error metrics of pruned operators and the three output estimators.

Run: python3 demos/02_behavioural_error.py
"""
from axoprune import OperatorSpec, apply_config, generate
from axoprune.behav import (Exact, LookupTable, MonteCarlo, NetlistFunctional, characterize_behav,
                            estimator_benchmark, fit_poly_estimator)
from axoprune.fixtures import oracle_behav

spec = OperatorSpec.uadd(8)
base = generate(spec)
print("8-bit adder, pruning the k least significant LUTs:")
for k in range(0, 9, 2):
    cfg = "0" * k + "1" * (8 - k)
    m = characterize_behav(NetlistFunctional(spec, apply_config(base, cfg)), Exact(spec))
    print(f"  k={k}: avg_abs_err={m.avg_abs_err:7.2f} err_prob={m.err_prob:.3f} "
          f"max_abs_err={m.max_abs_err:.0f}")

cfg = "00111111"
op = NetlistFunctional(spec, apply_config(base, cfg))
mc = characterize_behav(op, Exact(spec), MonteCarlo(20_000, seed=1))
print(f"\nMonte Carlo estimate for {cfg}: avg_abs_err {mc.avg_abs_err:.3f} (exhaustive: 3.000)")

small = OperatorSpec.uadd(4)
print("independent oracle for uadd4 config 0011:", oracle_behav(small, "0011").metrics)

mul = OperatorSpec.smul(8, 8)
mbase = generate(mul)
net_op = NetlistFunctional(mul, apply_config(mbase, "0" * 10 + "1" * 47))
report = estimator_benchmark({
    "LookupTable": LookupTable.from_operator(net_op),
    "NetlistFunctional": net_op,
    "PolyRegression(d=2)": fit_poly_estimator(net_op, 2, 300, seed=0),
}, net_op)
print("\nestimators against netlist simulation of a pruned 8x8 multiplier:")
for name, r in report.items():
    print(f"  {name:20s} avg_abs_err={r.metrics.avg_abs_err:9.3f} "
          f"us/query={r.seconds_per_query * 1e6:7.3f}")
