import json
import math
from fractions import Fraction
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zeffrg.model import DomainError, FunctionSpec, ScalarFieldModel
from zeffrg.shell import (ShellSpec, delta_constrained_measure, f_of_q, full_range_f,
                          full_range_vs_shell_sum, shell_sum_f)

GOLDEN = Path(__file__).parent / "golden" / "shell_quartic.json"
QUARTIC = ScalarFieldModel(FunctionSpec.constant(1.0), FunctionSpec.named("quartic"))


def sampled_measure(k_c, dk, q, n=200_000):
    """Brute-force oracle: midpoint count of p in the shell with q - p in the shell."""
    def inside(p):
        a = np.abs(p)
        return (a >= k_c - dk) & (a <= k_c)

    total = 0.0
    for lo in (-k_c, k_c - dk):
        h = dk / n
        p = lo + (np.arange(n) + 0.5) * h
        total += h * np.count_nonzero(inside(q - p))
    return total


@pytest.mark.parametrize("q, expected", [(0.0, 0.2), (0.05, 0.1), (0.15, 0.0), (19.95, 0.05)])
def test_measure_examples(q, expected):
    assert delta_constrained_measure(ShellSpec(10.0, 0.1), q) == expected


@settings(max_examples=60, deadline=None)
@given(dk=st.sampled_from([0.1, 0.05, 0.01, 0.003]), frac=st.floats(0, 1))
def test_small_q_measure_is_exact(dk, frac):
    q = frac * dk
    expected = 2 * max(Fraction(0), Fraction(repr(dk)) - Fraction(repr(q)))
    assert delta_constrained_measure(ShellSpec(10.0, dk), q) == float(expected)


@pytest.mark.parametrize("q", [0.0, 0.03, 0.099, 5.0, 19.85, 19.9, 19.97, 20.0])
def test_measure_matches_sampling(q):
    assert delta_constrained_measure(ShellSpec(10.0, 0.1), q) == pytest.approx(
        sampled_measure(10.0, 0.1, q), abs=2e-6)


def test_measure_piecewise_linear():
    k_c, dk = 10.0, 0.1
    shell = ShellSpec(k_c, dk)
    bps = sorted({0.0, dk, 2 * k_c - 2 * dk, 2 * k_c - dk, 2 * k_c, 2 * k_c + 1.0})
    bps = sorted({-b for b in bps} | set(bps))
    for a, b in zip(bps, bps[1:]):
        xs = [a + t * (b - a) for t in (0.2, 0.5, 0.8)]
        ys = [delta_constrained_measure(shell, x) for x in xs]
        # affine: the midpoint value is the mean of the two outer samples
        assert ys[1] == pytest.approx(0.5 * (ys[0] + ys[2]), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(k_c=st.floats(1, 50), r=st.floats(0.001, 0.5), q=st.floats(0, 120))
def test_measure_even_in_q(k_c, r, q):
    shell = ShellSpec(k_c, r * k_c)
    assert delta_constrained_measure(shell, q) == delta_constrained_measure(shell, -q)


@settings(max_examples=50, deadline=None)
@given(frac=st.floats(0, 1))
def test_support_gap_is_exactly_zero(frac):
    k_c, dk = 10.0, 0.01
    q = dk + frac * (2 * (k_c - dk) - dk)
    shell = ShellSpec(k_c, dk)
    assert delta_constrained_measure(shell, q) == 0.0
    r = f_of_q(QUARTIC, 1.0, shell, q)
    assert r.value == 0.0 and r.sector_opp == 0.0 and r.sector_same == 0.0


def test_f_vanishes_at_dk_and_halves_at_midpoint():
    shell = ShellSpec(10.0, 0.01)
    assert f_of_q(QUARTIC, 1.0, shell, 0.01).value == 0.0
    ratio = f_of_q(QUARTIC, 1.0, shell, 0.0).value / f_of_q(QUARTIC, 1.0, shell, 0.005).value
    assert ratio == pytest.approx(2.0, rel=5e-3)


def test_f_small_q_shape():
    # C (dk - |q|) / G(k_c)^2 with C = 4 * prefactor: two branches, two opposite-sign sectors
    shell = ShellSpec(10.0, 0.01)
    g = 10.0**2 + 4.0
    c = 4 * 2 * 36 / 4 / (2 * math.pi) ** 2
    for q in (0.0, 0.002, 0.007):
        v = f_of_q(QUARTIC, 1.0, shell, q).value
        assert v == pytest.approx(c * (0.01 - q) / g**2, rel=2e-3)


def test_f_breakdown_sums():
    r = f_of_q(QUARTIC, 0.7, ShellSpec(2.0, 0.3), 0.1)
    assert r.value == pytest.approx(r.sector_opp + r.sector_same, rel=1e-15)
    assert r.value == pytest.approx(r.branch_minus + r.branch_plus, rel=1e-14)
    assert r.value > 0


def test_same_sign_sector_near_2kc():
    r = f_of_q(QUARTIC, 1.0, ShellSpec(1.0, 0.2), 1.9)
    assert r.sector_opp == 0.0 and r.sector_same > 0


@settings(max_examples=20, deadline=None)
@given(q=st.floats(0, 4.5), phi=st.floats(-1, 1))
def test_f_even_in_q(q, phi):
    shell = ShellSpec(2.0, 0.3)
    a, b = f_of_q(QUARTIC, phi, shell, q).value, f_of_q(QUARTIC, phi, shell, -q).value
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


def test_f_harmonic_potential_vanishes():
    m = ScalarFieldModel(FunctionSpec.constant(1.0), FunctionSpec.named("harmonic"))
    assert f_of_q(m, 0.0, ShellSpec(10.0, 0.01), 0.0).value == 0.0


def test_f_domain_error():
    m = ScalarFieldModel(FunctionSpec.constant(1.0), FunctionSpec.polynomial([0, 0, -50.0]))
    with pytest.raises(DomainError):
        f_of_q(m, 0.0, ShellSpec(10.0, 0.1), 0.0)


def test_golden_value_and_independent_quadrature():
    gold = json.loads(GOLDEN.read_text())
    shell = ShellSpec(gold["k_c"], gold["dk"])
    value = f_of_q(QUARTIC, gold["phi0"], shell, gold["q"]).value
    assert value == pytest.approx(gold["value"], rel=1e-12)

    # mpmath oracle: V'' = 4, V''' = 6 at phi0 = 1; at q = 0 only p' = -p survives
    mp.mp.dps = 30
    g = lambda p: p * p + 4
    inner = mp.quad(lambda p: 1 / g(p) ** 2, [gold["k_c"] - gold["dk"], gold["k_c"]])
    ref = 2 * mp.mpf(36) / 4 / (2 * mp.pi) ** 2 * 4 * inner
    assert value == pytest.approx(float(ref), rel=1e-10)


@pytest.mark.parametrize("q, expected", [(0.5, (0.5, 0.1)), (0.55, (0.55, 0.05)), (0.0, (0.0, 0.0))])
def test_full_range_vs_shell_sum_examples(q, expected):
    assert full_range_vs_shell_sum(1.0, 0.1, q) == expected


@settings(max_examples=60, deadline=None)
@given(q=st.floats(-2.5, 2.5), n=st.integers(1, 20))
def test_dominance(q, n):
    dk = 1.0 / n
    full, blocks = full_range_vs_shell_sum(1.0, dk, q)
    assert full >= blocks
    # only the two corner blocks see all of the constraint line
    if dk < abs(q) < 2.0 - dk:
        assert full > blocks
    else:
        assert full == pytest.approx(blocks, abs=1e-15)
    assert full_range_vs_shell_sum(1.0, 1.0 / n, -q) == (full, blocks)


def test_full_range_requires_divisible_blocks():
    with pytest.raises(ValueError):
        full_range_vs_shell_sum(1.0, 0.3, 0.5)


def test_shell_sum_keeps_only_q_zero():
    at0 = shell_sum_f(QUARTIC, 1.0, 2.0, 0.02, 0.0)
    assert at0 == pytest.approx(full_range_f(QUARTIC, 1.0, 2.0, 0.0), rel=1e-3)
    q = 0.3
    assert shell_sum_f(QUARTIC, 1.0, 2.0, 0.02, q) < 0.05 * full_range_f(QUARTIC, 1.0, 2.0, q)
