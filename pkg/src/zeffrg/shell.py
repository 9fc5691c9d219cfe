"""Delta-constrained integrals over momentum shells.

A shell of outer edge k_c and thickness dk is the set
{p : k_c - dk <= |p| <= k_c}, two intervals of length dk. A momentum
conservation constraint p + p' = q restricts the double integral over
shell x shell to the 1D set {p in shell : q - p in shell}, whose measure is
piecewise linear in q: for small |q| it is 2 max(0, dk - |q|) and it
vanishes identically for dk <= |q| <= 2(k_c - dk).

Interval endpoints are handled as exact rationals (each float input is
read through its shortest decimal repr), so measures such as 0.1 or 0.05
come out exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from scipy import integrate

from .model import DomainError, ScalarFieldModel


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


def _overlap(a0, a1, b0, b1):
    """Exact intersection [lo, hi] of two closed intervals, or None."""
    lo, hi = max(a0, b0), min(a1, b1)
    return (lo, hi) if hi > lo else None


@dataclass(frozen=True)
class ShellSpec:
    k_c: float
    dk: float

    def __post_init__(self):
        if not self.k_c > 0:
            raise ValueError("k_c must be positive")
        if not 0 < self.dk <= self.k_c:
            raise ValueError("need 0 < dk <= k_c")

    def intervals(self):
        """The two shell pieces as exact (sign, lo, hi) triples."""
        kc, dk = _exact(self.k_c), _exact(self.dk)
        return ((-1, -kc, dk - kc), (+1, kc - dk, kc))


def _branch_pieces(shell: ShellSpec, q):
    """Exact sub-intervals of p with p and q - p both in the shell.

    Yields (same_sign, lo, hi).
    """
    q = _exact(q)
    for s1, a0, a1 in shell.intervals():
        for s2, b0, b1 in shell.intervals():
            # q - p in [b0, b1]  <=>  p in [q - b1, q - b0]
            ov = _overlap(a0, a1, q - b1, q - b0)
            if ov is not None:
                yield s1 == s2, ov[0], ov[1]


def _measure_split(shell: ShellSpec, q):
    opp = same = Fraction(0)
    for same_sign, lo, hi in _branch_pieces(shell, q):
        if same_sign:
            same += hi - lo
        else:
            opp += hi - lo
    return opp, same


def delta_constrained_measure(shell: ShellSpec, q: float) -> float:
    """Length of {p in shell : q - p in shell}, computed exactly."""
    opp, same = _measure_split(shell, q)
    return float(opp + same)


@dataclass(frozen=True)
class ConstrainedIntegralResult:
    q: float
    value: float
    sector_opp: float
    sector_same: float
    branch_minus: float  # delta(p + p' - q)
    branch_plus: float   # delta(p + p' + q)
    measure: float


def _kernel(model: ScalarFieldModel, phi0: float):
    zb, vb = model.z_bundle(phi0), model.v_bundle(phi0)
    z, v2 = zb.f0, vb.f2

    def g(p):
        return z * p * p + v2

    return g, vb.f3


def f_of_q(model: ScalarFieldModel, phi0: float, shell: ShellSpec, q: float,
           rel_tol: float = 1e-12) -> ConstrainedIntegralResult:
    """Shell-restricted one-loop bubble F(q) with kernel G(p) = Z p^2 + V''.

    Both delta branches are eliminated analytically; each surviving piece
    is integrated by adaptive quadrature. The conjugate term doubles the
    real integrand, and each momentum integral carries its 1/(2 pi).
    """
    g, v3 = _kernel(model, phi0)
    kc_in = shell.k_c - shell.dk
    if min(g(kc_in), g(shell.k_c)) <= 0:
        raise DomainError("G(p) = Z p^2 + V'' must be positive on the shell")
    pref = 2.0 * v3**2 / 4.0 / (2.0 * math.pi) ** 2

    def branch(qq):
        opp = same = 0.0
        for same_sign, lo, hi in _branch_pieces(shell, qq):
            val = integrate.quad(lambda p: 1.0 / (g(p) * g(qq - p)), float(lo), float(hi),
                                 epsabs=0.0, epsrel=rel_tol, limit=200)[0]
            if same_sign:
                same += val
            else:
                opp += val
        return opp, same

    # delta(p + p' - q): p' = q - p ;  delta(p + p' + q): p' = -q - p
    minus_opp, minus_same = branch(q)
    plus_opp, plus_same = branch(-q)
    sector_opp = pref * (minus_opp + plus_opp)
    sector_same = pref * (minus_same + plus_same)
    return ConstrainedIntegralResult(
        q=float(q),
        value=sector_opp + sector_same,
        sector_opp=sector_opp,
        sector_same=sector_same,
        branch_minus=pref * (minus_opp + minus_same),
        branch_plus=pref * (plus_opp + plus_same),
        measure=delta_constrained_measure(shell, q),
    )


def full_range_vs_shell_sum(Lambda: float, dk: float, q: float) -> tuple[float, float]:
    """Constrained measure over the full square versus a sum over diagonal blocks.

    I_full   = |{p in [0, L] : q - p in [0, L]}|
    I_blocks = sum_j |{p in [j dk, (j+1) dk] : q - p in [j dk, (j+1) dk]}|

    Both delta branches p + p' = +-q are counted, as in f_of_q; on the
    non-negative square at most one of them is non-empty, so the result is
    even in q. The block sum only sees the diagonal squares, so
    I_full >= I_blocks.
    """
    L, d, qq = _exact(Lambda), _exact(dk), _exact(q)
    if not (L > 0 and d > 0):
        raise ValueError("Lambda and dk must be positive")
    n_blocks = L / d
    nb = round(n_blocks)
    if nb < 1 or abs(n_blocks - nb) > Fraction(1, 10**9) * n_blocks:
        raise ValueError(f"dk={dk} does not divide Lambda={Lambda}")

    def measure(a0, a1):
        total = Fraction(0)
        for t in {qq, -qq}:
            ov = _overlap(a0, a1, t - a1, t - a0)
            if ov:
                total += ov[1] - ov[0]
        return total

    # block edges at j L / nb, so the tiling ends exactly at L
    d = L / nb
    full = measure(Fraction(0), L)
    blocks = sum((measure(j * d, (j + 1) * d) for j in range(nb)), Fraction(0))
    return float(full), float(blocks)


def shell_sum_f(model: ScalarFieldModel, phi0: float, Lambda: float, dk: float,
                q: float) -> float:
    """Sum of f_of_q over shells tiling 0 < |p| <= Lambda."""
    nb = round(Lambda / dk)
    total = 0.0
    for j in range(1, nb + 1):
        total += f_of_q(model, phi0, ShellSpec(j * Lambda / nb, Lambda / nb), q).value
    return total


def full_range_f(model: ScalarFieldModel, phi0: float, Lambda: float, q: float,
                 rel_tol: float = 1e-12) -> float:
    """The same constrained bubble with p and p' ranging over all of [-Lambda, Lambda]."""
    g, v3 = _kernel(model, phi0)
    if min(g(0.0), g(Lambda)) <= 0:
        raise DomainError("G(p) must be positive on [-Lambda, Lambda]")
    pref = 2.0 * v3**2 / 4.0 / (2.0 * math.pi) ** 2
    total = 0.0
    for qq in (q, -q):
        lo, hi = max(-Lambda, qq - Lambda), min(Lambda, qq + Lambda)
        if hi > lo:
            total += integrate.quad(lambda p: 1.0 / (g(p) * g(qq - p)), lo, hi,
                                    epsabs=0.0, epsrel=rel_tol, limit=200)[0]
    return pref * total
