"""Lattice fluctuation-determinant oracle for the one-loop wave function.

The second variation of the Euclidean action about a background path is

    K = -d/dt (Z(phi) d/dt) + V''(phi) + 1/2 Z''(phi) phidot^2 - d/dt (Z'(phi) phidot),

discretized on a periodic time lattice as a symmetric cyclic tridiagonal
matrix. The one-loop action is Gamma_1 = (hbar/2) [log det K[path] -
log det K[phi0]]. Probing with phi0 + eps sin(Omega t) over whole periods
gives

    Gamma_1 / eps^2 * 4 / T  ->  A + B Omega^2 + O(Omega^4)

with B the one-loop correction to Z at phi0 and A the correction to V''.
On the lattice A also picks up an Omega-independent measure term that grows
like 1/a; it is reported only as a diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .model import DomainError, ScalarFieldModel


class UnstableBackground(DomainError):
    """The fluctuation operator is not positive definite."""

    def __init__(self, smallest_eigenvalue: float):
        super().__init__(f"unstable background: smallest eigenvalue {smallest_eigenvalue:.6g}")
        self.smallest_eigenvalue = smallest_eigenvalue


@dataclass(frozen=True)
class LatticePath:
    T: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if not self.T > 0:
            raise ValueError("period T must be positive")
        if vals.ndim != 1 or vals.size < 8:
            raise ValueError("a lattice path needs at least 8 slices")
        if not np.all(np.isfinite(vals)):
            raise ValueError("path values must be finite")

    @property
    def M(self) -> int:
        return self.values.size

    @property
    def a(self) -> float:
        return self.T / self.M

    @property
    def times(self) -> np.ndarray:
        return self.a * np.arange(self.M)

    @classmethod
    def constant(cls, T: float, M: int, phi0: float) -> "LatticePath":
        return cls(T, np.full(M, float(phi0)))

    @classmethod
    def sinusoid(cls, T: float, M: int, phi0: float, eps: float, mode: int) -> "LatticePath":
        t = (T / M) * np.arange(M)
        return cls(T, phi0 + eps * np.sin(2.0 * math.pi * mode * t / T))


@dataclass(frozen=True)
class FluctuationOperator:
    """Symmetric cyclic tridiagonal matrix.

    ``off[i]`` couples sites i and i+1; ``off[-1]`` is the corner coupling
    between the last and first sites.
    """

    diag: np.ndarray
    off: np.ndarray

    @property
    def M(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        M = self.M
        K = np.diag(self.diag)
        idx = np.arange(M)
        K[idx, (idx + 1) % M] += self.off
        K[(idx + 1) % M, idx] += self.off
        return K

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        return (self.diag * x + self.off * np.roll(x, -1)
                + np.roll(self.off, 1) * np.roll(x, 1))

    def smallest_eigenvalue(self) -> float:
        return float(linalg.eigvalsh(self.to_dense(), subset_by_index=[0, 0])[0])

    def logdet(self) -> float:
        """log det via banded Cholesky of the open chain plus a rank-2 corner update.

        K = B + c (e_0 e_{M-1}^T + e_{M-1} e_0^T) with B tridiagonal. If B is
        positive definite, K has at most one negative eigenvalue, so
        det K > 0 already implies K is positive definite.
        """
        M, corner = self.M, float(self.off[-1])
        ab = np.zeros((2, M))
        ab[0, 1:] = self.off[:-1]
        ab[1] = self.diag
        try:
            cb = linalg.cholesky_banded(ab)
        except linalg.LinAlgError:
            return self._dense_logdet()
        logdet_b = 2.0 * np.sum(np.log(cb[1]))
        if corner == 0.0:
            return float(logdet_b)
        U = np.zeros((M, 2))
        U[0, 0] = U[-1, 1] = 1.0
        X = linalg.cho_solve_banded((cb, False), U)
        small = np.eye(2) + np.array([[0.0, corner], [corner, 0.0]]) @ X[[0, -1], :]
        det2 = float(np.linalg.det(small))
        if not det2 > 0:
            raise UnstableBackground(self.smallest_eigenvalue())
        return float(logdet_b + math.log(det2))

    def _dense_logdet(self) -> float:
        lam = linalg.eigvalsh(self.to_dense())
        if lam[0] <= 0:
            raise UnstableBackground(float(lam[0]))
        return float(np.sum(np.log(lam)))


def _ddt(f, a):
    return (np.roll(f, -1) - np.roll(f, 1)) / (2.0 * a)


def discretize_operator(model: ScalarFieldModel, path: LatticePath) -> FluctuationOperator:
    phi, a = path.values, path.a
    zc = model.z.coeffs
    z = np.polynomial.polynomial.polyval(phi, zc)
    z1 = np.polynomial.polynomial.polyval(phi, np.polynomial.polynomial.polyder(zc, 1))
    z2 = np.polynomial.polynomial.polyval(phi, np.polynomial.polynomial.polyder(zc, 2))
    v2 = np.polynomial.polynomial.polyval(phi, np.polynomial.polynomial.polyder(model.v.coeffs, 2))
    phidot = _ddt(phi, a)
    w = v2 + 0.5 * z2 * phidot**2 - _ddt(z1 * phidot, a)
    z_half = 0.5 * (z + np.roll(z, -1))  # Z_{i+1/2}
    diag = (z_half + np.roll(z_half, 1)) / a**2 + w
    off = -z_half / a**2
    return FluctuationOperator(diag, off)


def one_loop_action(model: ScalarFieldModel, path: LatticePath, phi0: float) -> float:
    """(hbar/2) [log det K[path] - log det K[constant phi0]]."""
    ref = LatticePath.constant(path.T, path.M, phi0)
    if np.array_equal(path.values, ref.values):
        return 0.0
    ld = discretize_operator(model, path).logdet()
    ld0 = discretize_operator(model, ref).logdet()
    return 0.5 * model.hbar * (ld - ld0)


def _extrapolate_to_zero(xs, ys):
    """Polynomial (Neville) extrapolation of the arrays ys(x) to x = 0."""
    xs = np.asarray(xs, dtype=float)
    p = [np.asarray(y, dtype=float) for y in ys]
    n = len(p)
    for level in range(1, n):
        for i in range(n - level):
            x_i, x_j = xs[i], xs[i + level]
            p[i] = (x_j * p[i] - x_i * p[i + 1]) / (x_j - x_i)
    return p[0]


@dataclass(frozen=True)
class OracleConfig:
    """Probe-path protocol: Omega = 2 pi m / T for m in ``modes``.

    ``epsilons`` and ``slices`` are Richardson ladders. Amplitudes are
    extrapolated in eps^2 (Gamma_1 is even in eps). Lattice spacing is
    extrapolated as a polynomial in a, because a field-dependent Z leaves an
    O(a) lattice artifact in the Omega^2 coefficient. ``fit_degree`` 2 adds
    an Omega^4 column to the fit.
    """

    T: float
    modes: tuple = (1, 2, 3, 4)
    epsilons: tuple = (0.1, 0.05)
    slices: tuple = (512, 1024, 2048)
    fit_degree: int = 1

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "slices", tuple(int(M) for M in self.slices))
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.fit_degree not in (1, 2):
            raise ValueError("fit_degree must be 1 or 2")
        if len(self.modes) < self.fit_degree + 2 or min(self.modes) < 1 or len(set(self.modes)) != len(self.modes):
            raise ValueError("need at least 3 distinct modes m >= 1 for the Omega^2 fit")
        if not self.epsilons or min(self.epsilons) <= 0 or len(set(self.epsilons)) != len(self.epsilons):
            raise ValueError("epsilons must be distinct positive amplitudes")
        if not self.slices or min(self.slices) < 8 or len(set(self.slices)) != len(self.slices):
            raise ValueError("slices must be distinct lattice sizes >= 8")
        for M in self.slices:
            if 2 * max(self.modes) >= M:
                raise ValueError(f"mode {max(self.modes)} is not resolved by M={M}")

    @property
    def omegas(self) -> np.ndarray:
        return 2.0 * math.pi * np.array(self.modes, dtype=float) / self.T

    @classmethod
    def for_model(cls, model: ScalarFieldModel, phi0: float, n_modes: int = 4,
                  window: float = 0.1, **kwargs) -> "OracleConfig":
        """Choose T so the largest probe frequency obeys Z Omega^2 <= window * V''."""
        zb, vb = model.check_stable(phi0)
        omega_max = math.sqrt(window * vb.f2 / zb.f0)
        T = 2.0 * math.pi * n_modes / omega_max
        return cls(T=T, modes=tuple(range(1, n_modes + 1)), **kwargs)


@dataclass
class OracleResult:
    phi0: float
    omegas: np.ndarray
    c2: np.ndarray        # extrapolated Gamma_1/eps^2 per Omega
    c2_err: np.ndarray    # size of the last Richardson correction per Omega
    A: float
    B: float
    residuals: np.ndarray
    b_stderr: float
    convergence: list = field(default_factory=list)  # (M, B after eps extrapolation)
    flags: list = field(default_factory=list)

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residuals))


def _fit_line(x, y, degree=1):
    X = np.column_stack([x**j for j in range(degree + 1)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = len(x) - degree - 1
    if dof > 0:
        cov = np.linalg.inv(X.T @ X) * float(resid @ resid) / dof
        stderr = math.sqrt(max(cov[1, 1], 0.0))
    else:
        stderr = float("nan")
    return float(coef[0]), float(coef[1]), resid, stderr


def extract_wavefunction_correction(model: ScalarFieldModel, phi0: float,
                                    cfg: OracleConfig) -> OracleResult:
    """Fit B (the one-loop Delta Z at phi0) from probe-path log-determinants."""
    zc, vc = model.z.coeffs, model.v.coeffs
    poly = np.polynomial.polynomial
    eps_max = max(cfg.epsilons)
    probe = np.linspace(phi0 - eps_max, phi0 + eps_max, 201)
    if np.any(poly.polyval(probe, zc) <= 0) or np.any(poly.polyval(probe, poly.polyder(vc, 2)) <= 0):
        raise DomainError(f"Z or V'' not positive on [phi0 - eps, phi0 + eps] at phi0={phi0}")

    omegas = cfg.omegas
    # c2[iM, ieps, iomega]
    c2 = np.empty((len(cfg.slices), len(cfg.epsilons), len(cfg.modes)))
    for iM, M in enumerate(cfg.slices):
        ld0 = discretize_operator(model, LatticePath.constant(cfg.T, M, phi0)).logdet()
        for ie, eps in enumerate(cfg.epsilons):
            for im, m in enumerate(cfg.modes):
                path = LatticePath.sinusoid(cfg.T, M, phi0, eps, m)
                ld = discretize_operator(model, path).logdet()
                c2[iM, ie, im] = 0.5 * model.hbar * (ld - ld0) / eps**2

    eps2 = np.array(cfg.epsilons) ** 2
    spacing = cfg.T / np.array(cfg.slices, dtype=float)
    per_M = np.array([_extrapolate_to_zero(eps2, c2[iM]) for iM in range(len(cfg.slices))])
    c2_final = _extrapolate_to_zero(spacing, per_M)

    if len(cfg.slices) > 1:
        c2_err = np.abs(c2_final - per_M[np.argmin(spacing)])
    else:
        c2_err = np.abs(c2_final - c2[0, np.argmin(eps2)])

    scale = 4.0 / cfg.T
    x = omegas**2
    A, B, resid, stderr = _fit_line(x, scale * c2_final, cfg.fit_degree)

    flags = []
    convergence = []
    for iM, M in enumerate(cfg.slices):
        convergence.append((M, _fit_line(x, scale * per_M[iM], cfg.fit_degree)[1]))
    order = np.argsort(spacing)[::-1]  # coarse -> fine
    b_seq = [convergence[i][1] for i in order]
    if len(b_seq) >= 3:
        d = np.abs(np.diff(b_seq))
        if np.any(d[1:] > d[:-1]):
            flags.append("richardson: B not converging monotonically in a")
    if not np.isfinite(stderr):
        flags.append("fit: no residual degrees of freedom")
    return OracleResult(float(phi0), omegas, c2_final, c2_err, A, B, resid, stderr,
                        convergence, flags)
