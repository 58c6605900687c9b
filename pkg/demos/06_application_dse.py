"""Application-level exploration: approximate multipliers inside a FIR
low-pass filter and a 3x3 image convolution.

Run: python3 demos/06_application_dse.py
"""
from axoprune import OperatorSpec, apply_config, generate
from axoprune.apps import Conv2d3x3, FirLowPass, app_behav, app_dse, run_task
from axoprune.behav import Exact, NetlistFunctional
from axoprune.dse import GaParams, Objectives
from axoprune.fixtures import fir_signal, fir_taps, gradient_image

spec = OperatorSpec.smul(8, 8)
base = generate(spec)
fir = FirLowPass(fir_taps(), fir_signal())
golden = run_task(fir, Exact(spec))

# LUTs 1.. k add the low columns of the first partial-product row; LUT 0 is
# left alone because it also feeds the sign correction
def prune_low(k):
    return "1" + "0" * k + "1" * (56 - k)


for k in (0, 1, 2, 3):
    out = run_task(fir, NetlistFunctional(spec, apply_config(base, prune_low(k))))
    m = app_behav(out, golden)
    print(f"FIR, {k} low LUTs pruned: output_mse={m.output_mse:10.1f} max={m.output_max_abs_err:.0f}")

obj = Objectives(("pdp_proxy", "output_mse"))
res = app_dse(fir, spec, base, obj, method="Ga", params=GaParams(population=32, generations=40, seed=0))
print(f"\nGA evaluated {len(res.points)} multipliers; FIR-level Pareto front:")
for p in res.archive.points:
    print(f"  pdp={p.metric('pdp_proxy'):7.2f} output_mse={p.metric('output_mse'):14.1f}")

img, peak = gradient_image()
blur = Conv2d3x3([[1, 2, 1], [2, 4, 2], [1, 2, 1]], img, peak=16 * peak)
gold = run_task(blur, Exact(spec))
for k in (0, 1, 2, 3):
    out = run_task(blur, NetlistFunctional(spec, apply_config(base, prune_low(k))))
    print(f"blur, {k} low LUTs pruned: PSNR={app_behav(out, gold, blur.peak).psnr_db:.1f} dB")
