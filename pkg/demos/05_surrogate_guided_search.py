"""Fit a config-bit regression, search with it, then re-characterise the
front and measure how far the predictions drifted.

Run: python3 demos/05_surrogate_guided_search.py
"""
from axoprune import OperatorSpec, generate
from axoprune.axmodel import SamplingKind, SamplingStrategy, sample_configs
from axoprune.dse import (Evaluator, GaParams, Objectives, evaluate_list, nsga2_search,
                          pareto_front, validate_points)
from axoprune.surrogate import FeatureMode, constant_mean_mae, fit_surrogate

spec = OperatorSpec.smul(4, 4)
plain = Evaluator(spec, generate(spec))
train = evaluate_list(sample_configs(SamplingStrategy(SamplingKind.Random, seed=3), 13, 400), plain)

surrogates = {}
for metric, mode in (("pdp_proxy", FeatureMode.BitsPairwise), ("avg_abs_err", FeatureMode.BitsPairwise)):
    data = [(p.config, p.metric(metric)) for p in train]
    model = fit_surrogate(data, mode, ridge_lambda=0.1, split_seed=0, target_metric=metric)
    surrogates[metric] = model
    print(f"{metric}: test MAE {model.test_mae:.3f} (constant-mean baseline {constant_mean_mae(data):.3f})")

fast = Evaluator(spec, plain.base, surrogates=surrogates)
obj = Objectives(("pdp_proxy", "avg_abs_err"))
res = nsga2_search(fast, 13, obj, GaParams(population=32, generations=20, seed=1))
print(f"\npredicted front: {len(res.archive)} designs from {res.evaluations} surrogate evaluations")

report = validate_points(res.archive.points, plain)
print("drift after re-characterisation (mean absolute difference):")
for m, d in report.drift.items():
    print(f"  {m}: {d:.3f}")
print("\nper design, predicted -> validated avg_abs_err:")
for p, v in zip(report.predicted, report.validated):
    print(f"  {p.config}: {p.metric('avg_abs_err'):7.2f} -> {v.metric('avg_abs_err'):7.2f}")

# The regression extrapolates below zero error for heavily pruned designs,
# which is why the predicted front must be re-characterised before use.
real = pareto_front(report.validated, obj)
print("validated front:", real.configs)
