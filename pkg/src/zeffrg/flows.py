"""Renormalization-group flows of the running wave function Z_k(phi).

Orientation: the bare theory sits at the UV end (k -> infinity) and the
effective value is read off at k -> 0. With that convention

    Delta Z_ERG  = + int_0^inf dk (hbar/2pi) Z'' / (Z k^2 + V'')
    Delta Z_PTRG = - int_0^inf (dk/k) [k dZ_k/dk]_frozen

and both reproduce the closed forms in :mod:`zeffrg.closedform`. The ERG
rate returned by :func:`erg_rhs` is therefore the increment of Z per unit of
cutoff *removed* (``-dZ/dk``), matching the mode-by-mode recursion
``Z_{n-1} = Z_n + ...``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .model import (DerivativeBundle, DomainError, FieldGrid, ScalarFieldModel,
                    first_derivative_on_grid, grid_points, second_derivative_on_grid)

PTRG = "PTRG"
ERG = "ERG"
ERG_CONTINUUM = "ERG-continuum"

FROZEN_ONELOOP = "frozen-oneloop"
RUNNING_Z = "running-z-frozen-v"

FOURIER_PERIODIC = "fourier-periodic"
LATTICE_SINE = "lattice-sine"

_EXP_LIMIT = 700.0
_INV_2SQRTPI = 0.5 / math.sqrt(math.pi)


class FlowError(RuntimeError):
    """Adaptive flow integration failed (Z <= 0, step underflow, step budget)."""


class QuadratureError(RuntimeError):
    pass


def _ptrg_rate(z, z1, z2, v2, v3, k, hbar):
    """Vectorized k dZ/dk of the proper-time flow; k may be 0 only if V'' > 0."""
    z, z1, z2, v2, v3 = np.broadcast_arrays(*map(np.asarray, (z, z1, z2, v2, v3)))
    if k == 0.0:
        if np.any(v2 <= 0):
            raise DomainError("PTRG rate diverges at k = 0 for V'' <= 0")
        return np.zeros(z.shape)
    zk2 = z * k * k
    expo = -v2 / zk2
    if np.any(expo > _EXP_LIMIT):
        raise DomainError(f"PTRG exponential overflows at k={k} (V'' < 0 too deep)")
    bracket = (-z2 / zk2
               + 21.0 * z1**2 / (24.0 * z * zk2)
               + 9.0 * z1 * v3 / (6.0 * zk2**2)
               - z * v3**2 / (6.0 * zk2**3))
    return hbar * _INV_2SQRTPI * k * np.exp(expo) * bracket


def ptrg_rhs(z_bundle: DerivativeBundle, v_bundle: DerivativeBundle, k: float,
             hbar: float = 1.0) -> float:
    """k dZ_k/dk of the proper-time RG flow, evaluated with the given bundles."""
    if not k > 0:
        raise DomainError(f"PTRG rate needs k > 0, got {k}")
    if z_bundle.f0 <= 0:
        raise DomainError(f"PTRG rate needs Z > 0, got {z_bundle.f0}")
    return float(_ptrg_rate(z_bundle.f0, z_bundle.f1, z_bundle.f2,
                            v_bundle.f2, v_bundle.f3, k, hbar))


def erg_rhs(z_value: float, z_second: float, v_second: float, k: float,
            hbar: float = 1.0) -> float:
    """(hbar/2pi) Z'' / (Z k^2 + V''): increment of Z per unit of cutoff removed."""
    if k < 0:
        raise DomainError(f"ERG rate needs k >= 0, got {k}")
    denom = z_value * k * k + v_second
    if not denom > 0:
        raise DomainError(f"ERG denominator Z k^2 + V'' = {denom} <= 0")
    return hbar / (2.0 * math.pi) * z_second / denom


def _quad(f, a, b, rel_tol):
    val, err, info = integrate.quad(f, a, b, epsabs=1e-15, epsrel=rel_tol,
                                    limit=500, full_output=1)[:3]
    if not math.isfinite(val) or err > max(1e-13, 10 * rel_tol * abs(val)):
        raise QuadratureError(f"quadrature did not converge on [{a}, {b}]: "
                              f"value={val}, error estimate={err}")
    return val


def oneloop_correction_by_quadrature(model: ScalarFieldModel, phi0: float, method: str,
                                     k_range: tuple[float, float] | None = None,
                                     rel_tol: float = 1e-9) -> float:
    """Frozen-coefficient one-loop Delta Z from integrating a flow over k.

    ``k_range=None`` integrates over (0, inf); the tail beyond
    k* = max(1, 10 sqrt(V''/Z)) is mapped to u = 1/k. A finite
    ``(k_lo, k_hi)`` restricts the integral, which is what a flow run
    between k_ir and k_uv accumulates.
    """
    zb, vb = model.check_stable(phi0)
    hbar = model.hbar
    if method == ERG:
        def rate(k):
            return erg_rhs(zb.f0, zb.f2, vb.f2, k, hbar)
    elif method == PTRG:
        def rate(k):
            if k == 0.0:
                return 0.0
            return -float(_ptrg_rate(zb.f0, zb.f1, zb.f2, vb.f2, vb.f3, k, hbar)) / k
    else:
        raise ValueError(f"unknown quadrature method {method!r}")

    if k_range is not None:
        lo, hi = map(float, k_range)
        if not 0 <= lo <= hi:
            raise ValueError(f"bad k_range {k_range}")
        return _quad(rate, lo, hi, rel_tol) if hi > lo else 0.0

    k_star = max(1.0, 10.0 * math.sqrt(vb.f2 / zb.f0))
    head = _quad(rate, 0.0, k_star, rel_tol)
    tail = _quad(lambda u: 0.0 if u == 0.0 else rate(1.0 / u) / (u * u),
                 0.0, 1.0 / k_star, rel_tol)
    return head + tail


@dataclass(frozen=True)
class FlowConfig:
    """Adaptive flow settings. ``k_uv`` may be ``math.inf``."""

    k_uv: float
    k_ir: float = 0.0
    mode: str = FROZEN_ONELOOP
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 100_000
    snapshots: int = 11

    def __post_init__(self):
        if not self.k_uv > 0:
            raise ValueError("k_uv must be positive")
        if not (math.isfinite(self.k_ir) and 0 <= self.k_ir < self.k_uv):
            raise ValueError("need 0 <= k_ir < k_uv")
        if self.mode not in (FROZEN_ONELOOP, RUNNING_Z):
            raise ValueError(f"unknown flow mode {self.mode!r}")
        for tol in (self.rel_tol, self.abs_tol):
            if not 0 < tol <= 1e-2:
                raise ValueError("tolerances must lie in (0, 1e-2]")
        if self.max_steps < 1 or self.snapshots < 2:
            raise ValueError("max_steps >= 1 and snapshots >= 2 required")

    def snapshot_ks(self, k_scale: float = 1.0) -> np.ndarray:
        """Log-spaced for a finite window, otherwise uniform in flow time."""
        if self.k_ir > 0 and math.isfinite(self.k_uv):
            ks = np.geomspace(self.k_uv, self.k_ir, self.snapshots)
        else:
            us = np.linspace(_to_u(self.k_uv, k_scale), _to_u(self.k_ir, k_scale), self.snapshots)
            ks = np.array([_to_k(u, k_scale) for u in us])
        ks[0], ks[-1] = self.k_uv, self.k_ir
        return ks


# Flow time u = k / (k + k_s) maps [0, inf] onto [0, 1]; both flows are
# smooth and bounded in u, so step-size control sees a well-scaled problem.
_MAX_DU = 0.05


def _to_u(k, k_s):
    return 1.0 if math.isinf(k) else k / (k + k_s)


def _to_k(u, k_s):
    return math.inf if u >= 1.0 else k_s * u / (1.0 - u)


@dataclass(frozen=True)
class FlowState:
    k: float
    phi: np.ndarray
    z: np.ndarray
    v2: np.ndarray  # frozen V'' per grid point


@dataclass
class FlowTrajectory:
    which: str
    config: FlowConfig
    k_scale: float
    states: list[FlowState] = field(default_factory=list)
    n_steps: int = 0

    @property
    def final(self) -> FlowState:
        return self.states[-1]

    @property
    def delta_z(self) -> np.ndarray:
        return self.states[-1].z - self.states[0].z

    def triples(self):
        """(k, phi, Z_k) rows in snapshot order."""
        for s in self.states:
            for phi, z in zip(s.phi, s.z):
                yield float(s.k), float(phi), float(z)


def integrate_flow(model: ScalarFieldModel, grid: FieldGrid, cfg: FlowConfig,
                   which: str) -> FlowTrajectory:
    """Integrate Z_k on ``grid`` from k_uv down to k_ir with adaptive RK45.

    In ``frozen-oneloop`` mode every coefficient stays at its bare value, so
    each grid point is an independent quadrature. In ``running-z-frozen-v``
    mode Z, Z' and Z'' are re-derived from the running grid values at each
    stage while V keeps its bare derivatives.

    Stepping is done in u = k / (k + k_s) with k_s the median of
    sqrt(V''/Z) over the grid; snapshots are reported in k.
    """
    if which not in (PTRG, ERG_CONTINUUM):
        raise ValueError(f"unknown flow {which!r}")
    phi = grid_points(grid)
    bundles = []
    for p in phi:
        try:
            bundles.append(model.check_stable(p))
        except DomainError as exc:
            raise DomainError(f"flow precondition fails at phi={p}: {exc}", phi0=float(p)) from exc
    z0 = np.array([zb.f0 for zb, _ in bundles])
    z1b = np.array([zb.f1 for zb, _ in bundles])
    z2b = np.array([zb.f2 for zb, _ in bundles])
    v2 = np.array([vb.f2 for _, vb in bundles])
    v3 = np.array([vb.f3 for _, vb in bundles])
    hbar = model.hbar
    running = cfg.mode == RUNNING_Z
    k_s = float(np.median(np.sqrt(v2 / z0)))

    def dzdu(u, z):
        if running:
            z1 = first_derivative_on_grid(z, grid)
            z2 = second_derivative_on_grid(z, grid)
        else:
            z, z1, z2 = z0, z1b, z2b
        if which == ERG_CONTINUUM:
            # -(hbar/2pi) Z'' / (Z k^2 + V'') * dk/du, written in u
            return -hbar / (2.0 * math.pi) * z2 * k_s / (z * (k_s * u) ** 2 + v2 * (1.0 - u) ** 2)
        if u <= 0.0:
            return np.zeros_like(z)
        if u >= 1.0:
            # k dZ/dk -> hbar/(2 sqrt pi) (-Z''/Z + 21 Z'^2/(24 Z^2)) / k as k -> inf
            return hbar * _INV_2SQRTPI * (-z2 / z + 21.0 * z1**2 / (24.0 * z * z)) / k_s
        k = k_s * u / (1.0 - u)
        return _ptrg_rate(z, z1, z2, v2, v3, k, hbar) / k * k_s / (1.0 - u) ** 2

    u_uv, u_ir = _to_u(cfg.k_uv, k_s), _to_u(cfg.k_ir, k_s)
    # cap the step so the embedded error estimate samples the peak region
    solver = integrate.RK45(dzdu, u_uv, z0.copy(), u_ir, rtol=cfg.rel_tol, atol=cfg.abs_tol,
                            max_step=_MAX_DU)
    ks = cfg.snapshot_ks(k_s)
    us = [_to_u(k, k_s) for k in ks]
    traj = FlowTrajectory(which, cfg, k_s, [FlowState(cfg.k_uv, phi, z0.copy(), v2)])
    nxt = 1
    while solver.status == "running":
        if traj.n_steps >= cfg.max_steps:
            raise FlowError(f"max_steps={cfg.max_steps} exceeded at k={_to_k(solver.t, k_s)}")
        msg = solver.step()
        traj.n_steps += 1
        k_now = _to_k(solver.t, k_s)
        if solver.status == "failed":
            raise FlowError(f"step underflow at k={k_now}: {msg}")
        bad = np.flatnonzero(~(solver.y > 0))
        if bad.size:
            i = bad[0]
            raise FlowError(f"Z_k <= 0 at k={k_now}, phi={phi[i]} (Z={solver.y[i]})")
        if nxt < len(ks) - 1 and solver.t <= us[nxt]:
            dense = solver.dense_output()
            while nxt < len(ks) - 1 and solver.t <= us[nxt]:
                traj.states.append(FlowState(float(ks[nxt]), phi, dense(us[nxt]), v2))
                nxt += 1
    traj.states.append(FlowState(cfg.k_ir, phi, solver.y.copy(), v2))
    return traj


@dataclass(frozen=True)
class DiscreteErgConfig:
    n_modes: int
    epsilon: float
    include_constant_term: bool = False
    mode_frequency: str = FOURIER_PERIODIC

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 4:
            raise ValueError("n_modes must be an integer >= 4")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.mode_frequency not in (FOURIER_PERIODIC, LATTICE_SINE):
            raise ValueError(f"unknown mode_frequency {self.mode_frequency!r}")

    def beta(self, hbar: float) -> float:
        return (self.n_modes + 1) * self.epsilon / hbar

    def frequencies(self) -> tuple[np.ndarray, float]:
        """(omega_n for n = 1..N, multiplicity per listed mode).

        fourier-periodic lists only positive frequencies 2 pi n/((N+1) eps),
        each carrying the cosine/sine pair. lattice-sine walks the whole
        periodic Brillouin zone, (2/eps) sin(pi n/(N+1)), so each listed
        mode is a single real mode.
        """
        n = np.arange(1, self.n_modes + 1, dtype=float)
        L = (self.n_modes + 1) * self.epsilon
        if self.mode_frequency == FOURIER_PERIODIC:
            return 2.0 * math.pi * n / L, 2.0
        return (2.0 / self.epsilon) * np.sin(math.pi * n / (self.n_modes + 1)), 1.0


def erg_discrete_sweep(model: ScalarFieldModel, phi0: float, cfg: DiscreteErgConfig) -> np.ndarray:
    """Eliminate modes n = N, ..., 1 one at a time with frozen Z, V''.

    Returns ``z`` with ``z[n] = Z_n``: ``z[N]`` is the bare value and
    ``z[0] - z[N]`` the accumulated correction.
    """
    zb, vb = model.z_bundle(phi0), model.v_bundle(phi0)
    if zb.f0 <= 0:
        raise DomainError(f"Z(phi0) = {zb.f0} <= 0")
    omega, mult = cfg.frequencies()
    denom = zb.f0 * omega**2 + vb.f2
    if np.any(denom <= 0):
        n_bad = int(np.flatnonzero(denom <= 0)[0]) + 1
        raise DomainError(f"Z omega_n^2 + V'' <= 0 at mode n={n_bad}")
    inc = mult * zb.f2 / denom
    if cfg.include_constant_term:
        inc = inc + 1.0
    inc *= 0.5 / cfg.beta(model.hbar)
    z = np.empty(cfg.n_modes + 1)
    z[:-1] = zb.f0 + np.cumsum(inc[::-1])[::-1]
    z[-1] = zb.f0
    return z
