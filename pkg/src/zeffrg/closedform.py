"""Closed-form one-loop wave-function renormalization.

Two results are evaluated pointwise:

* the derivative expansion of the one-loop effective action, which yields
  four correction terms built from Z, Z', Z'', V'' and V''';
* the one-loop solution of the mode-elimination (ERG) flow, which keeps only
  the Z'' term.

Each term carries its own hbar factor and sign, so ``z_eff`` is literally
``z_bare + t1 + t2 + t3 + t4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import DomainError, FieldGrid, ScalarFieldModel, grid_points

DERIVATIVE_EXPANSION = "derivative-expansion"
ERG_ONELOOP = "erg-oneloop"

# coefficients of the four derivative-expansion terms
DEFAULT_COEFFICIENTS = (1.0 / 32.0, -3.0 / 16.0, -7.0 / 32.0, 1.0 / 4.0)


@dataclass(frozen=True)
class ZEffSample:
    phi0: float
    z_bare: float
    t1: float
    t2: float
    t3: float
    t4: float
    z_eff: float
    method: str

    @property
    def correction(self) -> float:
        return self.t1 + self.t2 + self.t3 + self.t4

    @property
    def terms(self) -> tuple[float, float, float, float]:
        return (self.t1, self.t2, self.t3, self.t4)


def _term_shapes(model: ScalarFieldModel, phi0: float):
    """The four hbar-weighted structures multiplying each coefficient."""
    zb, vb = model.check_stable(phi0)
    z, z1, z2 = zb.f0, zb.f1, zb.f2
    v2, v3 = vb.f2, vb.f3
    h = model.hbar
    sz, sv = math.sqrt(z), math.sqrt(v2)
    shapes = (
        h * v3**2 * sz / (v2**2 * sv),
        h * v3 * z1 / (sz * v2 * sv),
        h * z1**2 / (z * sz * sv),
        h * z2 / (sz * sv),
    )
    return z, shapes


def z_eff_derivative_expansion(model: ScalarFieldModel, phi0: float,
                               coefficients=DEFAULT_COEFFICIENTS) -> ZEffSample:
    """Derivative-expansion Z_eff at ``phi0``.

    ``coefficients`` replaces the default quadruple (1/32, -3/16, -7/32, 1/4);
    pass a different set to evaluate another scheme with the same term
    structure. No alternative set ships with the package.
    """
    if len(coefficients) != 4:
        raise ValueError("need exactly four coefficients")
    z, shapes = _term_shapes(model, phi0)
    t = [float(c * s) for c, s in zip(coefficients, shapes)]
    return ZEffSample(float(phi0), z, *t, z_eff=z + math.fsum(t), method=DERIVATIVE_EXPANSION)


def z_eff_erg_oneloop(model: ScalarFieldModel, phi0: float) -> ZEffSample:
    """One-loop ERG Z_eff at ``phi0``: only the Z'' term survives."""
    z, shapes = _term_shapes(model, phi0)
    t4 = DEFAULT_COEFFICIENTS[3] * shapes[3]
    return ZEffSample(float(phi0), z, 0.0, 0.0, 0.0, t4, z_eff=z + t4, method=ERG_ONELOOP)


@dataclass
class MethodComparison:
    grid: FieldGrid
    samples: list[dict[str, ZEffSample]] = field(default_factory=list)

    @property
    def phi(self) -> np.ndarray:
        return np.array([s[DERIVATIVE_EXPANSION].phi0 for s in self.samples])

    @property
    def difference(self) -> np.ndarray:
        """Derivative expansion minus ERG, pointwise."""
        return np.array([s[DERIVATIVE_EXPANSION].z_eff - s[ERG_ONELOOP].z_eff
                         for s in self.samples])

    def column(self, method: str, name: str) -> np.ndarray:
        return np.array([getattr(s[method], name) for s in self.samples])


def compare_methods(model: ScalarFieldModel, grid: FieldGrid) -> MethodComparison:
    """Both closed forms on every grid point.

    Raises DomainError naming the first grid point where Z <= 0 or V'' <= 0.
    """
    out = MethodComparison(grid)
    for phi in grid_points(grid):
        try:
            de = z_eff_derivative_expansion(model, phi)
            erg = z_eff_erg_oneloop(model, phi)
        except DomainError as exc:
            raise DomainError(f"compare_methods: first invalid grid point phi0={phi!r}: {exc}",
                              phi0=float(phi)) from exc
        out.samples.append({DERIVATIVE_EXPANSION: de, ERG_ONELOOP: erg})
    return out
