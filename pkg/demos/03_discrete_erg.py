import numpy as np

from zeffrg import DiscreteErgConfig, FunctionSpec, ScalarFieldModel, erg_discrete_sweep
from zeffrg import FieldGrid, FlowConfig, integrate_flow, oneloop_correction_by_quadrature
from zeffrg.flows import ERG, ERG_CONTINUUM, LATTICE_SINE

model = ScalarFieldModel(FunctionSpec.named("z-quadratic"), FunctionSpec.named("harmonic"))
target = oneloop_correction_by_quadrature(model, 0.0, ERG)
print("continuum Delta Z at phi=0:", target)

# remove Matsubara modes one at a time, from the highest down
for n, eps in [(10**3, 3e-2), (10**4, 1e-2), (10**5, 3e-3), (10**6, 1e-3), (10**7, 3e-4)]:
    z = erg_discrete_sweep(model, 0.0, DiscreteErgConfig(n, eps))
    print(f"N={n:>8d}  N*eps={n * eps:7.0f}  Delta Z={z[0] - z[-1]:.6f}  "
          f"rel err={abs(z[0] - z[-1] - target) / target:.1e}")

z = erg_discrete_sweep(model, 0.0, DiscreteErgConfig(10**6, 1e-3, mode_frequency=LATTICE_SINE))
print("lattice-sine frequencies:", z[0] - z[-1])

# the continuous flow on a field grid, frozen vs running Z
grid = FieldGrid(-1, 1, 41)
frozen = integrate_flow(model, grid, FlowConfig(np.inf, 0.0), ERG_CONTINUUM)
running = integrate_flow(model, grid, FlowConfig(np.inf, 0.0, mode="running-z-frozen-v"), ERG_CONTINUUM)
i = np.searchsorted(grid.points(), 1.0 - 1e-12)
print("Z_eff(1) frozen:", frozen.final.z[i], " running:", running.final.z[i])
