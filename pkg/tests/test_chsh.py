import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_lab.chsh import (
    SettingsQuad,
    canonical_quad,
    chsh_estimate,
    chsh_grid_max_abs,
    chsh_value,
)
from nonlocal_lab.errors import InputError
from nonlocal_lab.models import PI, LhvSaw, QuantumSinglet, SuperquantumPR, apply_jamming, correlation, relative_angle
from nonlocal_lab.optimize import lhv_max_chsh

ROOT2 = math.sqrt(2)
settings_st = st.floats(min_value=-10, max_value=10, allow_nan=False)


def test_canonical_quad_angles():
    q = canonical_quad()
    rel = q.relative_angles()
    assert rel["AB"] == pytest.approx(PI / 4, abs=1e-15)
    assert rel["AB'"] == pytest.approx(PI / 4, abs=1e-15)
    assert rel["A'B"] == pytest.approx(PI / 4, abs=1e-15)
    assert rel["A'B'"] == pytest.approx(3 * PI / 4, abs=1e-15)
    # successive separations a' -> b -> a -> b' of pi/4
    order = [q.a_prime, q.b, q.a, q.b_prime]
    assert np.allclose(np.diff(order), PI / 4, atol=1e-15)


@pytest.mark.parametrize("ramp", ["smooth-sine", "linear"])
def test_superquantum_reaches_four(ramp):
    m = SuperquantumPR(ramp)
    r = chsh_value(m, canonical_quad())
    assert r.value == 4.0
    assert r.correlations == (1.0, 1.0, 1.0, -1.0)
    # the same number written as three equal terms minus the (a', b') term
    assert 3 * correlation(m, PI / 4) - correlation(m, 3 * PI / 4) == 4.0


def test_term_order_alternative_listing():
    # E(a,b) + E(a',b) + E(a,b') - E(a',b') lists the terms differently, same value
    q = canonical_quad()
    m = QuantumSinglet()
    e = lambda x, y: correlation(m, relative_angle(x, y))
    alt = e(q.a, q.b) + e(q.a_prime, q.b) + e(q.a, q.b_prime) - e(q.a_prime, q.b_prime)
    assert chsh_value(m, q).value == pytest.approx(alt, abs=1e-15)


def test_singlet_canonical_value():
    r = chsh_value(QuantumSinglet(), canonical_quad())
    assert r.value == pytest.approx(-2 * ROOT2, abs=1e-12)


def test_jammed_superquantum_is_two_and_matches_lhv_max():
    r = chsh_value(apply_jamming(SuperquantumPR()), canonical_quad())
    assert r.value == pytest.approx(2.0, abs=1e-15)
    assert r.value == pytest.approx(lhv_max_chsh().value, abs=1e-15)


@given(a=settings_st, ap=settings_st, b=settings_st, bp=settings_st)
def test_algebraic_bound_and_report_sum(a, ap, b, bp):
    q = SettingsQuad(a=a, a_prime=ap, b=b, b_prime=bp)
    for m in (QuantumSinglet(), SuperquantumPR(), LhvSaw()):
        r = chsh_value(m, q)
        assert abs(r.value) <= 4.0
        assert r.value == pytest.approx(sum(t.contribution for t in r.terms), abs=1e-12)


def test_quad_rejects_non_finite():
    with pytest.raises(InputError):
        SettingsQuad(a=math.inf, a_prime=0, b=0, b_prime=0)


def test_grid_max_bounds():
    assert chsh_grid_max_abs(LhvSaw(), 50)[0] <= 2 + 1e-9
    best, quad = chsh_grid_max_abs(QuantumSinglet(), 40)
    # a 40-point grid contains the canonical angles exactly (multiples of pi/40)
    assert best == pytest.approx(2 * ROOT2, abs=1e-9)
    assert abs(chsh_value(QuantumSinglet(), quad).value) == pytest.approx(best, abs=1e-12)


def test_estimate_superquantum_exact():
    r = chsh_estimate(SuperquantumPR(), canonical_quad(), 10**5, seed=3)
    assert r.value == 4.0
    assert r.standard_error == 0.0


@pytest.mark.parametrize("model, target", [(QuantumSinglet(), -2 * ROOT2), (LhvSaw(), 2.0)])
def test_estimate_within_four_standard_errors(model, target):
    r = chsh_estimate(model, canonical_quad(), 10**6, seed=11)
    # binomial oracle for the standard error: products are +/-1
    var = sum(1 - correlation(model, t.relative_angle) ** 2 for t in r.terms)
    assert r.standard_error == pytest.approx(math.sqrt(var / 10**6), rel=1e-2)
    assert abs(r.value - target) <= 4 * r.standard_error


def test_estimate_reproducible_and_worker_independent():
    r1 = chsh_estimate(QuantumSinglet(), canonical_quad(), 200_000, seed=8, workers=1)
    r2 = chsh_estimate(QuantumSinglet(), canonical_quad(), 200_000, seed=8, workers=4)
    assert r1.value == r2.value and r1.terms == r2.terms


def test_estimate_rejects_zero_samples():
    with pytest.raises(InputError):
        chsh_estimate(QuantumSinglet(), canonical_quad(), 0, seed=1)


def test_estimator_consistency_over_seeds():
    misses = 0
    for seed in range(40):
        r = chsh_estimate(QuantumSinglet(), canonical_quad(), 20_000, seed=seed)
        misses += abs(r.value + 2 * ROOT2) > 5 * r.standard_error
    assert misses == 0
