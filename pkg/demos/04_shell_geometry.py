import numpy as np

from zeffrg import FunctionSpec, ScalarFieldModel, ShellSpec, delta_constrained_measure, f_of_q
from zeffrg import full_range_vs_shell_sum
from zeffrg.shell import full_range_f, shell_sum_f

shell = ShellSpec(k_c=10.0, dk=0.01)
model = ScalarFieldModel(FunctionSpec.constant(1.0), FunctionSpec.named("quartic"))

# F(q) on one thin shell is a triangle of half-width dk and vanishes beyond
print("   q        measure     F(q)")
for q in np.linspace(0, 0.015, 7):
    r = f_of_q(model, 1.0, shell, q)
    print(f"{q:.4f}   {r.measure:.4f}   {r.value:.4e}")

# a sum over shells only ever sees the diagonal blocks of the (p, p') square
for q in (0.0, 0.5, 0.55):
    print("q =", q, "full square vs blocks:", full_range_vs_shell_sum(1.0, 0.1, q))

for q in (0.0, 0.3):
    print(f"q={q}: shell sum {shell_sum_f(model, 1.0, 2.0, 0.02, q):.5f}"
          f"  full range {full_range_f(model, 1.0, 2.0, q):.5f}")
