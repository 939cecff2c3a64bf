import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from nqa import analytic, dynamics as dy
from nqa.core import ParameterError, make_params
from nqa.spectrum import eigensystem


def canon(**kw):
    base = dict(J=0.5, g=10.0, delta=0.0, tau=500.0, N=1024)
    base.update(kw)
    return make_params(**base)


# ------------------------------------------------------------------ frame / probabilities


def _spec_with_theta(theta):
    class S:
        degenerate = False

    s = S()
    s.theta = theta
    return s


def test_frame_transform_examples():
    st0 = dy.ModeState(0.3 + 0.1j, -0.7j)
    a = dy.frame_transform(st0, _spec_with_theta(0.0))
    assert (a.alpha_amp, a.beta_amp) == (st0.u, st0.v)
    a = dy.frame_transform(st0, _spec_with_theta(math.pi))
    assert a.alpha_amp == pytest.approx(-st0.v, abs=1e-15) and a.beta_amp == pytest.approx(st0.u, abs=1e-15)


@given(
    st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
)
def test_frame_round_trip(u, v, theta):
    sp = _spec_with_theta(theta)
    back = dy.inverse_frame_transform(dy.frame_transform(dy.ModeState(u, v), sp), sp)
    scale = (abs(u) + abs(v) + 1e-300) * max(1.0, abs(np.cos(theta / 2)) ** 2 + abs(np.sin(theta / 2)) ** 2)
    assert abs(back.u - u) <= 1e-14 * scale and abs(back.v - v) <= 1e-14 * scale


def test_frame_rejects_ep():
    p = canon(delta=10.0)
    sp = eigensystem(p, phi=p.alpha, s=1 - 1 / abs(p.G))
    with pytest.raises(ParameterError):
        dy.frame_transform(dy.ModeState(1, 0), sp)


def test_survival_examples():
    assert dy.survival_probability(dy.AdiabaticState(1, 0)) == 1
    assert dy.survival_probability(dy.AdiabaticState(0, 0.3j)) == 0
    assert dy.survival_probability(dy.AdiabaticState(0.2 + 0.1j, 0.2 + 0.1j)) == pytest.approx(0.5)
    with pytest.raises(ParameterError):
        dy.survival_probability(dy.AdiabaticState(0, 0))


# ------------------------------------------------------------------ engines


def test_initial_state_is_ground_state():
    p = canon(delta=10.0, N=64)
    for k in (1, 10, 32):
        tr = dy.integrate_diabatic(p, k, [0.0, 0.5])
        assert tr.survival[0] == pytest.approx(1.0, abs=1e-15)
        assert tr.excitation[0] <= 1e-28


def test_hermitian_norm_conserved():
    p = canon(N=64)
    for tr in dy.integrate_modes(p, [1, 16, 32], np.linspace(0, 1, 201)):
        nrm = (np.abs(tr.amplitudes) ** 2).sum(axis=1) * 4.0**tr.log2scale
        assert np.max(np.abs(nrm - 1)) <= 1e-8


def test_first_mode_landau_zener():
    p = canon()
    P = dy.integrate_diabatic(p, 1, [0, 1]).final_survival
    nu = 500 * 0.5 * math.sin(math.pi / 1024) ** 2 / 20
    assert nu == pytest.approx(1.1766e-4, rel=1e-4)
    assert P == pytest.approx(-math.expm1(-2 * math.pi * nu), rel=0.2)


def test_short_wavelength_adiabatic():
    assert dy.integrate_diabatic(canon(), 256, [0, 1]).final_survival > 0.999


@pytest.mark.parametrize("delta,k", [(0.0, 1), (0.0, 8), (0.0, 40), (10.0, 1), (10.0, 60), (10.0, 300), (3.0, 200)])
def test_diabatic_against_reference_integrator(delta, k):
    p = canon(delta=delta)
    tr = dy.integrate_diabatic(p, k, [0, 1])
    P, X = oracles.reference_survival(0.5, 10.0, delta, 500.0, 1024, k)
    assert tr.final_survival == pytest.approx(P, abs=1e-8)
    assert tr.final_excitation == pytest.approx(X, rel=1e-5, abs=1e-12)


def test_adiabatic_matches_diabatic_hermitian_long_mode():
    p = canon()
    a = dy.integrate_diabatic(p, 3)
    b = dy.integrate_adiabatic(p, 3)
    assert np.max(np.abs(a.survival - b.survival)) <= 1e-6


@settings(max_examples=15)
@given(
    st.floats(2, 20), st.floats(0, 2), st.floats(100, 1000), st.sampled_from([64, 256]), st.integers(0, 10**6)
)
def test_cross_engine_equivalence(g, r, tau, N, seed):
    p = make_params(0.5, g, r * g, tau, N)
    k = int(np.random.default_rng(seed).integers(1, N // 2 + 1))
    assume(abs(math.pi * (2 * k - 1) / N - p.alpha) > dy.EP_EXCLUSION)
    grid = np.linspace(0, 1, 51)
    a = dy.integrate_diabatic(p, k, grid)
    b = dy.integrate_adiabatic(p, k, grid)
    assert np.max(np.abs(a.survival - b.survival)) <= 1e-6
    for tr in (a, b):
        assert np.all((tr.survival >= 0) & (tr.survival <= 1))
        assert tr.survival[0] == pytest.approx(1.0)


def test_frozen_quench_keeps_ground_state():
    p = canon(delta=10.0, N=64)
    tr = dy.integrate_adiabatic(p, 20, np.linspace(0, 1, 41), frozen_at=0.3)
    assert np.all(tr.survival == 1.0)
    assert np.all(tr.amplitudes[:, 1] == 0)
    # alpha picks up exp(+i eps t) with eps = J epshat(s = 0.3)
    sp = eigensystem(p, 20, s=0.3)
    a_end = tr.amplitudes[-1, 0] * 2.0 ** tr.log2scale[-1]
    assert a_end == pytest.approx(np.exp(1j * sp.eps * p.tau), rel=1e-8)


def test_adiabatic_refuses_ep_mode():
    p = make_params(0.5, 10.0, 10.0 * math.tan(math.pi * 63 / 256), 500.0, 256)
    with pytest.raises(dy.EPExclusionError):
        dy.integrate_adiabatic(p, 32)
    # the diabatic engine integrates through it
    tr = dy.integrate_diabatic(p, 32, [0, 1])
    assert 0 <= tr.final_survival <= 1


def test_sample_grid_validation():
    p = canon(N=64)
    for bad in ([0.5, 0.2], [0, 1.5], [-0.1, 0.3], []):
        with pytest.raises(ParameterError):
            dy.integrate_diabatic(p, 1, bad)


def test_step_budget_reported():
    p = canon(N=64)
    with pytest.raises(dy.IntegrationError) as e:
        dy.integrate_diabatic(p, 1, [0, 1], max_steps=50)
    assert 0 < e.value.s_fail < 1


def test_tolerance_refinement_stability():
    p = canon(N=64, delta=0.0, tau=2000.0)
    a = dy.ground_state_probability(p)
    b = dy.ground_state_probability(p, rtol=dy.RTOL / 2, atol=dy.ATOL / 2)
    assert abs(a.p_gs - b.p_gs) < 1e-7


def test_worker_count_does_not_change_results():
    p = canon(N=128, delta=3.0)
    a = dy.integrate_modes(p, None, [0, 0.5, 1], workers=1)
    b = dy.integrate_modes(p, None, [0, 0.5, 1], workers=2)
    for x, y in zip(a, b):
        assert np.array_equal(x.amplitudes, y.amplitudes) and np.array_equal(x.log2scale, y.log2scale)


# ------------------------------------------------------------------ reductions


def test_ground_state_product():
    r = dy.ground_state_from_modes(np.ones(32))
    assert r.p_gs == 1.0
    P = np.array([0.9, 0.5, 0.99])
    r = dy.ground_state_from_modes(P)
    assert r.p_gs == pytest.approx(np.prod(P), rel=1e-14)


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=40), st.data())
def test_removing_a_factor_increases_product(P, data):
    P = np.array(P)
    i = data.draw(st.integers(0, len(P) - 1))
    assume(P[i] < 1)
    full = dy.ground_state_from_modes(P).p_gs
    less = dy.ground_state_from_modes(np.delete(P, i)).p_gs
    assert less > full


def test_hermitian_product_against_landau_zener():
    p = canon(N=64, tau=8000.0)
    r = dy.ground_state_probability(p)
    assert r.p_gs == pytest.approx(analytic.pgs_landau_zener(p), abs=0.03)


def test_kink_number_examples():
    assert dy.kink_number(np.ones(512)).number == 0
    rep = dy.kink_number(np.zeros(512))
    assert rep.positive_branch_sum == 512 and rep.number == 1024 and rep.density == 1.0
    with pytest.raises(ParameterError):
        dy.kink_number([0.5, 1.2])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=200))
def test_kink_bounds(P):
    rep = dy.kink_number(P)
    assert 0 <= rep.number <= 2 * len(P)
    assert 0 <= rep.density <= 1


def test_kink_density_matches_quadrature_and_sum():
    p = canon(N=256, tau=500.0)
    X = dy.final_excitations(p)[1]
    n_sum = dy.kink_number(excitation=X).density
    tdl = dy.kink_density_tdl(p, 128)
    assert tdl.density == pytest.approx(n_sum, rel=1e-12)
    with pytest.raises(ParameterError):
        dy.kink_density_tdl(p, 32)


def test_kink_density_tdl_against_discrete_sum():
    p = canon()
    n_sum = dy.kink_number(excitation=dy.final_excitations(p)[1]).density
    tdl = dy.kink_density_tdl(p, 1024, tol=0.02)
    assert tdl.density == pytest.approx(n_sum, rel=0.02)
    assert tdl.converged


def test_kink_density_at_hermitian_point():
    p = canon()
    n = dy.kink_number(excitation=dy.final_excitations(p)[1]).density
    assert n == pytest.approx(math.sqrt(10 / 250) / (2 * math.pi), rel=0.15)


# ------------------------------------------------------------------ decay-dominated expectations


def test_kink_suppression_at_delta_equal_g():
    p = canon(delta=10.0)
    assert dy.kink_density_tdl(p, 512).density <= 1e-6


def test_ground_state_probability_at_delta_equal_g():
    assert dy.ground_state_probability(canon(delta=10.0)).p_gs >= 0.9


def test_ground_state_probability_hermitian():
    assert dy.ground_state_probability(canon()).p_gs <= 0.05


def test_weber_agrees_with_ode_on_probe_modes():
    worst = 0.0
    for d in (0.0, 10.0):
        p = canon(delta=d)
        for k in (1, 8, 64, 256):
            worst = max(worst, abs(analytic.weber_survival(p, k) - dy.integrate_diabatic(p, k, [0, 1]).final_survival))
    assert worst <= 1e-3


# ------------------------------------------------------------------ excitation surface


def test_excitation_surface_shapes_and_values():
    p = canon(N=64)
    phis = np.linspace(0.2, 3.0, 9)
    surf = dy.excitation_surface(p, "at_tau", [0.0, 5.0], phis)
    assert surf.excitation.shape == (2, 9)
    assert surf.valid.all()
    # adiabatic cells at delta = 0
    assert surf.excitation[0, 4] < 1e-3


def test_excitation_surface_marks_cells_without_ep():
    p = make_params(0.5, 0.5, 0.0, 50.0, 64)
    surf = dy.excitation_surface(p, "at_tc", [0.1], [0.5, 1.0])
    assert not surf.valid.any() and surf.errors


def test_excitation_relaxes_by_quench_end():
    p = canon(delta=5.0)
    phis = np.array([2.0, 2.5, 2.9])
    tc = dy.excitation_surface(p, "at_tc", [5.0], phis).excitation[0]
    end = dy.excitation_surface(p, "at_tau", [5.0], phis).excitation[0]
    assert np.all(end < tc)
