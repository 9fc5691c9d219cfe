from fractions import Fraction

from zeffrg import FunctionSpec, ScalarFieldModel, oneloop_correction_by_quadrature
from zeffrg.flows import PTRG

# Integrate the proper-time flow with everything frozen at the bare values.
# At phi0 = 0 each of these models switches on a different combination of
# Z', Z'', V''', so the four coefficients can be read off one by one.
harmonic = FunctionSpec.named("harmonic")
v_cubic = FunctionSpec.polynomial([0, 0, 0.5, 1.0])   # V'' = 1, V''' = 6
z_const = FunctionSpec.constant(1.0)
z_lin = FunctionSpec.polynomial([1.0, 1.0])           # Z' = 1
z_quad = FunctionSpec.named("z-quadratic")            # Z'' = 2

dz = lambda z, v: oneloop_correction_by_quadrature(ScalarFieldModel(z, v), 0.0, PTRG)

c1 = dz(z_const, v_cubic) / 36
c3 = dz(z_lin, harmonic)
c4 = dz(z_quad, harmonic) / 2
c2 = (dz(z_lin, v_cubic) - 36 * c1 - c3) / 6

for name, c in zip(("V'''^2", "Z'V'''", "Z'^2", "Z''"), (c1, c2, c3, c4)):
    print(f"{name:7s} {c:+.12f}  ~ {Fraction(c).limit_denominator(100)}")
