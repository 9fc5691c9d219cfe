"""Bare theory: field-dependent wave function Z(phi), potential V(phi) and hbar.

Both functions are stored as polynomial coefficient arrays so that every
derivative used downstream is exact. The builtin families are thin
constructors over the same representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

MAX_DEGREE = 12


class DomainError(ValueError):
    """A formula was evaluated outside its domain (e.g. Z <= 0 or V'' <= 0)."""

    def __init__(self, message: str, phi0: float | None = None):
        super().__init__(message)
        self.phi0 = phi0


def _harmonic(params):
    m2 = params.get("m2", 1.0)
    return [0.0, 0.0, 0.5 * m2]


def _quartic(params):
    m2 = params.get("m2", 1.0)
    g = params.get("g", 1.0)
    return [0.0, 0.0, 0.5 * m2, 0.0, 0.25 * g]


def _z_quadratic(params):
    z0 = params.get("z0", 1.0)
    g = params.get("g", 1.0)
    return [z0, 0.0, g]


# id -> (allowed parameter names, coefficient builder)
BUILTINS = {
    "harmonic": (("m2",), _harmonic),
    "quartic": (("m2", "g"), _quartic),
    "z-quadratic": (("z0", "g"), _z_quadratic),
}


@dataclass(frozen=True)
class DerivativeBundle:
    """Value and first three derivatives of a function at one point."""

    f0: float
    f1: float
    f2: float
    f3: float

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.f0, self.f1, self.f2, self.f3)):
            raise DomainError(f"non-finite derivative bundle {self}")

    def as_tuple(self):
        return (self.f0, self.f1, self.f2, self.f3)


@dataclass(frozen=True)
class FunctionSpec:
    """A polynomial in ascending powers, or a named builtin with parameters.

    ``kind`` is ``"polynomial"`` or ``"named"``. Use the ``polynomial`` and
    ``named`` constructors rather than building instances by hand.
    """

    kind: str
    coefficients: tuple = ()
    name: str | None = None
    params: tuple = ()  # sorted (key, value) pairs, hashable

    def __post_init__(self):
        if self.kind == "named":
            if self.name not in BUILTINS:
                raise ValueError(f"unknown builtin: {self.name!r}")
            allowed, _ = BUILTINS[self.name]
            for key, value in self.params:
                if key not in allowed:
                    raise ValueError(f"unknown parameter {key!r} for builtin {self.name!r}")
                if not math.isfinite(value):
                    raise ValueError(f"non-finite parameter {key}={value!r}")
        elif self.kind == "polynomial":
            if len(self.coefficients) == 0:
                raise ValueError("polynomial needs at least one coefficient")
            if len(self.coefficients) - 1 > MAX_DEGREE:
                raise ValueError(f"polynomial degree exceeds {MAX_DEGREE}")
            if not all(math.isfinite(c) for c in self.coefficients):
                raise ValueError("non-finite polynomial coefficient")
        else:
            raise ValueError(f"unknown function kind {self.kind!r}")

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> "FunctionSpec":
        return cls("polynomial", coefficients=tuple(float(c) for c in coefficients))

    @classmethod
    def named(cls, name: str, params: Mapping[str, float] | None = None) -> "FunctionSpec":
        items = tuple(sorted((str(k), float(v)) for k, v in (params or {}).items()))
        return cls("named", name=name, params=items)

    @classmethod
    def constant(cls, c: float) -> "FunctionSpec":
        return cls.polynomial([c])

    @property
    def coeffs(self) -> np.ndarray:
        """Ascending-power coefficients of the underlying polynomial."""
        if self.kind == "polynomial":
            return np.asarray(self.coefficients, dtype=float)
        _, build = BUILTINS[self.name]
        return np.asarray(build(dict(self.params)), dtype=float)

    def scaled(self, lam: float) -> "FunctionSpec":
        return FunctionSpec.polynomial(lam * self.coeffs)

    def is_even(self) -> bool:
        return bool(np.all(self.coeffs[1::2] == 0.0))

    def __call__(self, phi):
        return P.polyval(phi, self.coeffs)

    def to_dict(self) -> dict:
        if self.kind == "polynomial":
            return {"polynomial": [float(c) for c in self.coefficients]}
        return {"named": self.name, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "FunctionSpec":
        if not isinstance(data, Mapping):
            raise ValueError(f"function spec must be a mapping, got {data!r}")
        keys = set(data)
        if "polynomial" in keys:
            extra = keys - {"polynomial"}
            if extra:
                raise ValueError(f"unknown key: {sorted(extra)[0]}")
            return cls.polynomial(data["polynomial"])
        if "named" in keys:
            extra = keys - {"named", "params"}
            if extra:
                raise ValueError(f"unknown key: {sorted(extra)[0]}")
            return cls.named(data["named"], data.get("params") or {})
        raise ValueError("function spec needs 'polynomial' or 'named'")


def eval_bundle(spec: FunctionSpec, phi0: float) -> DerivativeBundle:
    """Exact value and first three derivatives of ``spec`` at ``phi0``."""
    c = spec.coeffs
    vals = [P.polyval(phi0, c)]
    for _ in range(3):
        c = P.polyder(c) if len(c) > 1 else np.zeros(1)
        vals.append(P.polyval(phi0, c))
    return DerivativeBundle(*(float(v) for v in vals))


@dataclass(frozen=True)
class ScalarFieldModel:
    """Euclidean action  int dt [ Z(phi)/2 phidot^2 + V(phi) ]  with explicit hbar."""

    z: FunctionSpec
    v: FunctionSpec
    hbar: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.hbar) and self.hbar > 0):
            raise ValueError(f"hbar must be positive, got {self.hbar!r}")

    def z_bundle(self, phi0: float) -> DerivativeBundle:
        return eval_bundle(self.z, phi0)

    def v_bundle(self, phi0: float) -> DerivativeBundle:
        return eval_bundle(self.v, phi0)

    def scaled(self, lam: float) -> "ScalarFieldModel":
        """The model with (Z, V) -> (lam Z, lam V)."""
        return ScalarFieldModel(self.z.scaled(lam), self.v.scaled(lam), self.hbar)

    def with_hbar(self, hbar: float) -> "ScalarFieldModel":
        return ScalarFieldModel(self.z, self.v, hbar)

    def check_stable(self, phi0: float) -> tuple[DerivativeBundle, DerivativeBundle]:
        """Bundles at phi0, raising DomainError unless Z > 0 and V'' > 0."""
        zb, vb = self.z_bundle(phi0), self.v_bundle(phi0)
        if zb.f0 <= 0:
            raise DomainError(f"Z(phi0) = {zb.f0} <= 0 at phi0 = {phi0}", phi0=phi0)
        if vb.f2 <= 0:
            raise DomainError(f"V''(phi0) = {vb.f2} <= 0 at phi0 = {phi0}", phi0=phi0)
        return zb, vb

    def to_dict(self) -> dict:
        return {"z": self.z.to_dict(), "v": self.v.to_dict(), "hbar": self.hbar}


@dataclass(frozen=True)
class FieldGrid:
    """Uniform grid of n >= 3 field values on [phi_min, phi_max]."""

    phi_min: float
    phi_max: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"grid needs n >= 3 points, got n={self.n}")
        if not (math.isfinite(self.phi_min) and math.isfinite(self.phi_max)):
            raise ValueError("grid bounds must be finite")
        if not self.phi_min < self.phi_max:
            raise ValueError(f"grid needs phi_min < phi_max, got {self.phi_min}, {self.phi_max}")

    @property
    def spacing(self) -> float:
        return (self.phi_max - self.phi_min) / (self.n - 1)

    def points(self) -> np.ndarray:
        return grid_points(self)


def grid_points(grid: FieldGrid) -> np.ndarray:
    # linspace pins both endpoints exactly
    return np.linspace(grid.phi_min, grid.phi_max, grid.n)


def second_derivative_on_grid(values, grid: FieldGrid) -> np.ndarray:
    """Second derivative of sampled values; O(h^2) everywhere, exact for quadratics.

    Central differences in the interior, four-point one-sided stencils at
    the edges (three-point when n == 3).
    """
    f = np.asarray(values, dtype=float)
    if f.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} values, got shape {f.shape}")
    h2 = grid.spacing**2
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h2
    if grid.n == 3:
        out[0] = out[-1] = out[1]
    else:
        out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2
        out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h2
    return out


def first_derivative_on_grid(values, grid: FieldGrid) -> np.ndarray:
    f = np.asarray(values, dtype=float)
    if f.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} values, got shape {f.shape}")
    return np.gradient(f, grid.spacing, edge_order=2)
