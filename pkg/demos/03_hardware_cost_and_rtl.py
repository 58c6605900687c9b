"""Structural PPA proxies, imported measurements, and Verilog output.

Run: python3 demos/03_hardware_cost_and_rtl.py
"""
from axoprune import OperatorSpec, apply_config, emit_verilog, generate
from axoprune.fixtures import IMPORTED_PPA, fixture_path
from axoprune.ppa import characterize_ppa, import_ppa, merge_imported

spec = OperatorSpec.smul(8, 8)
base = generate(spec)
full = characterize_ppa(base)
print(f"accurate {spec.label}: luts={full.lut_count} carries={full.carry_count} "
      f"cpd={full.cpd_proxy:.2f} power={full.power_proxy:.2f} pdp={full.pdp_proxy:.2f}")
for k in (8, 16, 32):
    m = characterize_ppa(apply_config(base, "0" * k + "1" * (len(base.luts) - k)))
    print(f"  {k:2d} LUTs pruned: luts={m.lut_count} cpd={m.cpd_proxy:.2f} pdp={m.pdp_proxy:.2f}")

adder = OperatorSpec.uadd(4)
abase = generate(adder)
proxies = {c: characterize_ppa(apply_config(abase, c)) for c in ("1111", "0111", "1010")}
merged, unknown = merge_imported(proxies, import_ppa(fixture_path(IMPORTED_PPA)))
print("\nafter merging the bundled measurements:")
for cfg, rec in merged.items():
    print(f"  {cfg}: cpd={rec.cpd_proxy} source={rec.source}")
print(f"  measured configs with no matching design: {unknown}")

print("\nVerilog for uadd4 with LUT 1 pruned (vendor primitives):")
print(emit_verilog(apply_config(abase, "1011"), "VendorPrimitives"))
