"""Build accurate operators, prune LUTs, and watch the arithmetic change.

Run: python3 demos/01_operators_and_pruning.py
"""
from axoprune import OperatorSpec, apply_config, enumerate_configs, generate
from axoprune.behav import NetlistFunctional

adder = OperatorSpec.uadd(4)
base = generate(adder)
print(f"{adder.label}: {len(base.luts)} prunable LUTs, {len(base.carries)} carry cell(s)")
print(f"config space: {sum(1 for _ in enumerate_configs(len(base.luts)))} designs "
      "(the all-ones string is the accurate adder)")

# Character i of a config keeps (1) or removes (0) LUT i, least significant bit first.
for cfg in ("1111", "0111", "1110", "0000"):
    op = NetlistFunctional(adder, apply_config(base, cfg))
    print(f"  config {cfg}: 7 + 9 = {op(7, 9)}")

mul = OperatorSpec.smul(8, 8)
mbase = generate(mul)
print(f"\n{mul.label}: {len(mbase.luts)} prunable LUTs")
# LUT 0 also supplies the constant 1 for the sign correction, so pruning it
# costs far more than its product bit suggests.
no_lut0 = "0" + "1" * (len(mbase.luts) - 1)
no_lut1 = "10" + "1" * (len(mbase.luts) - 2)
for label, cfg in (("accurate", "1" * len(mbase.luts)), ("LUT 0 pruned", no_lut0),
                   ("LUT 1 pruned", no_lut1)):
    op = NetlistFunctional(mul, apply_config(mbase, cfg))
    print(f"  {label:12s}: -93 * 57 = {op(-93, 57)}")
