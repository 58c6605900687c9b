"""NSGA-II against exhaustive enumeration: first the 4-bit adder, then the
8192-design space of the 4x4 multiplier with an error budget.

Run: python3 demos/04_pareto_search.py   (about 20 s)
"""
from axoprune import OperatorSpec, enumerate_configs, generate
from axoprune.dse import (Evaluator, GaParams, Objectives, compare_hypervolumes, evaluate_list,
                          nsga2_search, pareto_front)

spec = OperatorSpec.uadd(4)
ev = Evaluator(spec, generate(spec))
obj = Objectives(("pdp_proxy", "avg_abs_err"))
exhaustive = pareto_front(evaluate_list(list(enumerate_configs(4)), ev), obj)
ga = nsga2_search(ev, 4, obj, GaParams(population=16, generations=10, seed=0))
print("uadd4 exhaustive front:", exhaustive.configs)
print("uadd4 GA front:        ", ga.archive.configs, f"({ga.evaluations} unique designs evaluated)")

mul = OperatorSpec.smul(4, 4)
mev = Evaluator(mul, generate(mul))
budget = Objectives(("pdp_proxy", "mse"), {"avg_abs_err": 3.0})
everything = evaluate_list(list(enumerate_configs(len(mev.base.luts))), mev)
ex_front = pareto_front(everything, budget)
res = nsga2_search(mev, len(mev.base.luts), budget, GaParams(population=32, generations=30, seed=4))
print(f"\nsmul4x4 with avg_abs_err <= 3: exhaustive front {len(ex_front)} designs "
      f"from {len(everything)}; GA front {len(res.archive)} designs from {res.evaluations}")
for p in res.archive.points:
    tag = "on exhaustive front" if p.config in ex_front.configs else "dominated"
    print(f"  {p.config} pdp={p.metric('pdp_proxy'):6.2f} mse={p.metric('mse'):7.2f} ({tag})")
print("normalised hypervolume:", compare_hypervolumes({"GA": res.archive, "EX": ex_front}))
