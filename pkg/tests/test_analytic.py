import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from nqa import analytic as an
from nqa.core import ParameterError, make_params


def canon(**kw):
    base = dict(J=0.5, g=10.0, delta=0.0, tau=500.0, N=1024)
    base.update(kw)
    return make_params(**base)


# ------------------------------------------------------------------ Gamma


def test_gamma_factorials():
    assert an.complex_gamma(1) == pytest.approx(1, rel=1e-14)
    assert an.complex_gamma(5) == pytest.approx(24, rel=1e-13)


@pytest.mark.parametrize("y", [0.1, 0.5, 1.0, 2.0, 5.0])
def test_gamma_modulus_identity(y):
    assert an.abs_gamma_sq(1 + 1j * y) * math.sinh(math.pi * y) / (math.pi * y) == pytest.approx(1, abs=1e-10)
    assert abs(an.complex_gamma(1 + 1j * y)) ** 2 == pytest.approx(math.pi * y / math.sinh(math.pi * y), rel=1e-12)


complex_st = st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False)


@given(complex_st)
def test_gamma_against_mpmath(z):
    if z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real):
        return
    if abs(z - round(z.real)) < 1e-6 and z.real < 0.5:
        return
    ref = oracles.mp_gamma(z)
    assert abs(an.complex_gamma(z) - ref) <= 1e-12 * abs(ref)
    assert abs(an.rgamma(z) * ref - 1) <= 1e-12
    assert an.complex_gamma(z.conjugate()) == pytest.approx(an.complex_gamma(z).conjugate(), rel=1e-14)


def test_gamma_poles():
    for z in (0, -1, -7):
        assert an.rgamma(z) == 0
        with pytest.raises(an.SpecialFunctionError):
            an.complex_gamma(z)


# ------------------------------------------------------------------ Lerch


def test_lerch_values():
    assert an.lerch_phi(0.0, 0.5, 1.0) == 1.0
    brute = sum(0.3935**n / math.sqrt(n + 1) for n in range(400))
    v = an.lerch_phi(0.3935, 0.5, 1.0)
    assert v == pytest.approx(brute, abs=1e-13)
    assert v == pytest.approx(1.4149, abs=5e-4)
    with pytest.raises(an.SpecialFunctionError):
        an.lerch_phi(1.0, 0.5, 1.0)


@given(st.just(0.0) | st.floats(1e-6, 0.999999), st.floats(0.1, 3.0), st.floats(0.2, 5.0))
def test_lerch_against_mpmath(x, s, a):
    assert an.lerch_phi(x, s, a) == pytest.approx(oracles.mp_lerch(x, s, a), rel=1e-11)


@given(st.floats(0.0, 0.98), st.floats(0.0, 0.98))
def test_lerch_monotone(x1, x2):
    if abs(x1 - x2) < 1e-9:
        return
    lo, hi = sorted((x1, x2))
    assert an.lerch_phi(lo, 0.5, 1) < an.lerch_phi(hi, 0.5, 1)


@given(st.floats(0.05, 0.99), st.floats(0.2, 3.0), st.integers(3, 60))
def test_lerch_tail_bound_is_a_bound(x, s, n):
    v1, tail = an.lerch_phi(x, s, 1.0, max_terms=n, with_error=True)
    v2, _ = an.lerch_phi(x, s, 1.0, max_terms=2 * n, with_error=True)
    assert abs(v2 - v1) <= tail * (1 + 1e-12)


def test_lerch_exp_parametrisation():
    import mpmath as mp

    for mu in (1e-22, 1e-9, 1e-3, 0.5):
        with mp.workdps(60):
            ref = float(mp.lerchphi(mp.exp(-mp.mpf(mu)), 0.5, 1))
        assert an.lerch_phi_exp(mu, 0.5, 1.0) == pytest.approx(ref, rel=1e-12)


# ------------------------------------------------------------------ parabolic cylinder


def test_pcf_order_zero():
    assert abs(an.parabolic_cylinder_D(0, 1.0) - math.exp(-0.25)) <= 1e-12


@given(st.complex_numbers(max_magnitude=8, allow_nan=False, allow_infinity=False))
def test_pcf_at_origin(p):
    ref = 2 ** (p / 2) * math.sqrt(math.pi) * an.rgamma((1 - p) / 2)
    assert abs(an.parabolic_cylinder_D(p, 0) - ref) <= 1e-12 * max(1, abs(ref))


pcf_st = st.tuples(
    st.complex_numbers(max_magnitude=6, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=6, allow_nan=False, allow_infinity=False),
)


@given(pcf_st)
def test_pcf_recurrence(pz):
    p, z = pz
    if (p + 1) - 1 != p:
        return  # order not representable after the shift
    vals = [an.parabolic_cylinder_D(p + j, z, with_error=True) for j in (-1, 0, 1)]
    (dm, em), (d0, e0), (dp, ep) = vals
    res = dp - z * d0 + p * dm
    scale = abs(dp) + abs(z * d0) + abs(p * dm)
    assert abs(res) <= 1e-9 * scale + 10 * (ep + abs(z) * e0 + abs(p) * em) + 1e-300  # floor for subnormal z


@given(pcf_st)
def test_pcf_against_mpmath(pz):
    p, z = pz
    v, err = an.parabolic_cylinder_D(p, z, with_error=True)
    ref = oracles.mp_pcfd(p, z)
    assert abs(v - ref) <= max(10 * err, 1e-13 * abs(ref))


def test_pcf_domain():
    with pytest.raises(an.SpecialFunctionError):
        an.parabolic_cylinder_D(0.5, 12.5)


# ------------------------------------------------------------------ Weber / closed forms


def test_weber_params_end_modulus():
    for d in (0.0, 10.0):
        p = canon(delta=d)
        for k in (1, 100, 400):
            w = an.weber_params(p, k)
            phi = math.pi * (2 * k - 1) / 1024
            assert abs(w.z) ** 2 == pytest.approx(2 * 500 * 0.5 * math.cos(phi) ** 2 / abs(p.G), rel=1e-12)
            assert w.nu.real > 0


@pytest.mark.parametrize("delta", [0.0, 10.0])
@pytest.mark.parametrize("k", [1, 8, 64, 256, 512])
def test_weber_against_mpmath(delta, k):
    p = canon(delta=delta)
    r = an.weber_survival(p, k, detailed=True)
    P, X = oracles.mp_weber_survival(0.5, 10.0, delta, 500.0, 1024, k)
    # compare within the propagated special-function uncertainty
    assert abs(r.survival - P) <= r.uncertainty + 1e-13
    assert abs(r.excitation - X) <= r.uncertainty + 1e-13
    assert r.uncertainty < 1e-4


def test_weber_limits():
    assert an.weber_survival(canon(), 512) > 0.999


def test_pk_asymptotic_examples():
    p = canon()
    nu = 500 * 0.5 * math.sin(math.pi / 1024) ** 2 / 20
    assert an.pk_asymptotic(p, 1) == pytest.approx(2 * math.pi * nu / (1 + 2 * math.pi * nu), rel=1e-3)
    assert an.pk_asymptotic(p, 1) == pytest.approx(-math.expm1(-2 * math.pi * nu), rel=1e-10)
    assert 1 - an.pk_asymptotic(canon(delta=10.0), 1) == pytest.approx(2.66e-8, rel=0.02)
    with pytest.raises(ParameterError):
        an.pk_asymptotic(p, 200)


def test_landau_zener_examples():
    p = canon(N=64)
    assert an.closed_form_inputs(p).tau0 == pytest.approx(16600.5, rel=1e-5)
    assert an.pgs_landau_zener(p) == pytest.approx(0.17242, abs=1e-5)
    assert an.pgs_landau_zener(canon()) == pytest.approx(7.39e-4, rel=1e-3)
    assert an.pgs_landau_zener(canon(tau=1e12)) == 1.0


@pytest.mark.parametrize("N", [64, 256])
@pytest.mark.parametrize("tau", [1e2, 1e3, 1e4])
def test_first_mode_reduces_to_landau_zener(N, tau):
    p = canon(N=N, tau=tau)
    assert abs(an.pgs_first_mode(p) - an.pgs_landau_zener(p)) <= 1e-10


def test_first_mode_against_mpmath():
    for d in (0.5, 10.0, 40.0):
        P, X = oracles.mp_pgs_first_mode(0.5, 10.0, d, 500.0, 1024)
        got = an.pgs_first_mode(canon(delta=d))
        assert 1 - got == pytest.approx(X, rel=1e-6)
    ci = an.closed_form_inputs(canon(delta=10.0))
    assert ci.kappa == pytest.approx(7.9578, abs=1e-4)


@given(st.floats(0.5, 30), st.floats(0, 60), st.floats(10, 1e4), st.sampled_from([64, 256, 1024]))
def test_first_mode_in_unit_interval(g, d, tau, N):
    v = an.pgs_first_mode(canon(g=g, delta=d, tau=tau, N=N))
    assert 0.0 <= v <= 1.0


@given(st.floats(0.5, 30), st.floats(0, 1))
def test_closed_form_inputs_invariants(g, r):
    p = canon(g=g, delta=r * g)
    ci = an.closed_form_inputs(p)
    assert ci.kappa >= ci.kappa0
    p0 = canon(g=g)
    c0 = an.closed_form_inputs(p0)
    assert c0.kappa == pytest.approx(500 / c0.tau0) and c0.nu_first.imag == 0


def test_fast_quench_examples():
    f = an.pgs_fast_quench(canon(delta=10.0))
    ci = an.closed_form_inputs(canon(delta=10.0))
    assert ci.tau0 / (2 * math.pi * 500) == pytest.approx(1352.8, rel=1e-4)
    assert 1 - f.p_gs == pytest.approx(1.88e-8, rel=0.01)
    assert f.at1_satisfied and f.at1_value == pytest.approx(25 - math.log(1352.8), rel=1e-4)
    g = an.pgs_fast_quench(canon())
    assert g.p_gs < 0 and not g.approximation_valid


def test_kink_density_closed_examples():
    n0 = math.sqrt(10 / 250) / (2 * math.pi)
    assert an.kink_density_closed(canon()).density == pytest.approx(0.031831, rel=1e-5)
    ref = n0 * math.exp(-0.5) * oracles.mp_lerch(1 - math.exp(-0.5), 0.5, 1)
    assert an.kink_density_closed(canon(delta=0.1)).density == pytest.approx(ref, rel=1e-12)
    assert an.kink_density_closed(canon(delta=0.1)).density == pytest.approx(0.02732, rel=1e-3)
    big = an.kink_density_closed(canon(delta=10.0)).density
    assert big == pytest.approx(n0 * math.sqrt(math.pi) * math.exp(-25), rel=1e-6)
    assert not an.kink_density_closed(canon(delta=11.0)).within_validity


def test_kink_density_closed_monotone():
    ds = np.linspace(0, 10, 201)
    vals = [an.kink_density_closed(canon(delta=d)).density for d in ds]
    assert np.all(np.diff(vals) < 0)
