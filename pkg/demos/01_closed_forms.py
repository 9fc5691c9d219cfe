import numpy as np

from zeffrg import FieldGrid, FunctionSpec, ScalarFieldModel, compare_methods
from zeffrg.closedform import DERIVATIVE_EXPANSION

# Z(phi) = 1 + phi^2, V(phi) = phi^2 / 2
model = ScalarFieldModel(FunctionSpec.named("z-quadratic"), FunctionSpec.named("harmonic"))
cmp = compare_methods(model, FieldGrid(-1.0, 1.0, 9))

print("phi     Z_eff(deriv. exp.)   Z_eff(ERG)    difference")
for phi, s, d in zip(cmp.phi, cmp.samples, cmp.difference):
    print(f"{phi:5.2f}   {s[DERIVATIVE_EXPANSION].z_eff:.6f}           "
          f"{s['erg-oneloop'].z_eff:.6f}      {d:+.6f}")

# the two agree only where Z' = 0; the ERG keeps just the Z'' term
t3 = cmp.column(DERIVATIVE_EXPANSION, "t3")
print("difference equals the Z'^2 term:", np.allclose(cmp.difference, t3))

# pure quartic potential with constant Z: only the V'''^2 term survives
quartic = ScalarFieldModel(FunctionSpec.constant(1.0), FunctionSpec.polynomial([0, 0, 0, 0, 0.25]))
from zeffrg import z_eff_derivative_expansion, z_eff_erg_oneloop
print("quartic, phi=1:", z_eff_derivative_expansion(quartic, 1.0).z_eff,
      "vs ERG", z_eff_erg_oneloop(quartic, 1.0).z_eff)
