from zeffrg import (FunctionSpec, OracleConfig, ScalarFieldModel, extract_wavefunction_correction,
                    z_eff_derivative_expansion, z_eff_erg_oneloop)

model = ScalarFieldModel(FunctionSpec.named("z-quadratic"), FunctionSpec.named("harmonic"))

# Fit the Omega^2 coefficient of log det K on phi0 + eps sin(Omega t) backgrounds.
for phi0 in (0.0, 1.0):
    de = z_eff_derivative_expansion(model, phi0).correction
    erg = z_eff_erg_oneloop(model, phi0).correction
    res = extract_wavefunction_correction(model, phi0, OracleConfig.for_model(model, phi0))
    print(f"phi0={phi0}: lattice B = {res.B:.5f} +/- {res.b_stderr:.1e}"
          f"   deriv. exp. {de:.6f}   ERG {erg:.6f}")
    for M, b in res.convergence:
        print(f"    M={M:5d}  B={b:.5f}")

# the straight line picks up some Omega^4 curvature; allow for it
cfg = OracleConfig.for_model(model, 1.0, n_modes=8, fit_degree=2)
print("quadratic fit at phi0=1:", extract_wavefunction_correction(model, 1.0, cfg).B)
