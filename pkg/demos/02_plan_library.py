"""The plan formalism and the plan-base manager.

Shows a plan being parsed from text, printed canonically, and the shipped
base being validated and filtered by goal closure. Run from the repo root:

    python demos/02_plan_library.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parents[1] / "src"))

from adil.planlib import base_list, base_validate, closure, load_plan_base, parse_plan, print_plan

TOY = """\
; a toy cliche: some value is initialized to zero
plan "zero-init" kind=cliche category=pl
doc "initializes @target to zero"
node c0 kind=CONST const=0
export target = c0
end
"""

plan = parse_plan(TOY)
print("--- parsed toy plan, printed canonically ---")
print(print_plan(plan))

base = load_plan_base(Path(__file__).parents[1] / "plans")
print(f"--- shipped base: {len(base.plans)} plans, "
      f"{len(base_validate(base))} validation problems ---")
for name in base.names():
    p = base.plans[name]
    tag = f"bug, corrupts {p.corrupts}" if p.kind == "bug" else p.kind
    print(f"  {name:28} [{p.category}] {tag}")

print("\n--- bug plans only ---")
print(" ", ", ".join(base_list(base, kind="bug")))

# Closure is the filtering strategy: given the goals an assignment names,
# only these plans are worth matching.
print("\n--- closure of goal {average} ---")
print(" ", ", ".join(closure(base, ["average"])))
