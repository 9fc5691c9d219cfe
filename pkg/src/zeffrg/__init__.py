"""One-loop wave-function renormalization in a 1D field theory with Z(phi)."""

__version__ = "0.1.0"

from .model import (DerivativeBundle, DomainError, FieldGrid, FunctionSpec, ScalarFieldModel,
                    eval_bundle, grid_points, second_derivative_on_grid)
from .closedform import (MethodComparison, ZEffSample, compare_methods,
                         z_eff_derivative_expansion, z_eff_erg_oneloop)
from .flows import (DiscreteErgConfig, FlowConfig, FlowError, erg_discrete_sweep, erg_rhs,
                    integrate_flow, oneloop_correction_by_quadrature, ptrg_rhs)
from .shell import (ShellSpec, delta_constrained_measure, f_of_q, full_range_vs_shell_sum)
from .oracle import (FluctuationOperator, LatticePath, OracleConfig, UnstableBackground,
                     discretize_operator, extract_wavefunction_correction, one_loop_action)
