import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridrep.densmat import PSI_PLUS
from hybridrep.entangle import (
    D_UPPER,
    MID_POINT,
    LinkParams,
    SingularConfigurationError,
    distinguishability,
    entanglement_entropy_bound,
    entanglement_fidelity,
    external_loss_params,
    fidelity_ps_curve,
    link_transmission,
    optimize_d,
    post_selected_state,
    small_angle_gamma1,
    success_probability,
    tuning_displacement,
    tuning_rotation,
)
from oracles import success_probability_symbolic

# homodyne_sampling(1.2, 0.8, 0.4, theta=0.01, n=10**6, seed=2024)
SAMPLED_PS, SAMPLED_PS_ERR = 0.331958, 4.709e-4
SAMPLED_F, SAMPLED_F_ERR = 0.8100491718672327, 6.227e-5


def closed_form(link):
    gamma1, _ = external_loss_params(link)
    return entanglement_fidelity(distinguishability(link), link.transmission, link.pc, gamma1)


def test_anchor_ten_km_link():
    t = link_transmission(0.4)
    assert t == pytest.approx(0.67, abs=0.005)
    d, f = optimize_d(t, 0.5)
    assert success_probability(d, t, 0.5) == pytest.approx(0.36, abs=0.01)
    assert f == pytest.approx(0.77, abs=0.01)


def test_matches_homodyne_sampling():
    link = LinkParams.from_distinguishability(1.2, 0.8, 0.4)
    res = post_selected_state(link)
    assert abs(res.ps - SAMPLED_PS) < 4 * SAMPLED_PS_ERR
    assert abs(res.fidelity - SAMPLED_F) < 4 * SAMPLED_F_ERR
    assert abs(closed_form(link) - SAMPLED_F) < 4 * SAMPLED_F_ERR


@pytest.mark.parametrize("d,t,pc", [(1.2, 0.8, 0.4), (2.0, 0.67, 0.5), (0.3, 1.0, 1.7), (4.0, 0.1, 0.05)])
def test_success_probability_symbolic(d, t, pc):
    assert success_probability(d, t, pc) == pytest.approx(success_probability_symbolic(d, t, pc), rel=1e-12)


link_params = st.builds(
    lambda d, t, pc, th: LinkParams.from_distinguishability(d, t, pc, th),
    st.floats(0.05, 4.0), st.floats(0.05, 1.0), st.floats(0.02, 2.5), st.floats(0.002, 0.05),
)


@given(link_params)
def test_closed_form_matches_quadrature(link):
    res = post_selected_state(link)
    assert abs(res.fidelity - closed_form(link)) < 1e-6
    assert abs(res.ps - success_probability(distinguishability(link), link.transmission, link.pc)) < 1e-6
    assert abs(np.trace(res.rho12.matrix) - 1) < 1e-12
    assert np.linalg.eigvalsh(res.rho12.matrix).min() > -1e-9


@given(link_params)
def test_coherence_bounded_by_loss(link):
    res = post_selected_state(link)
    gamma1, _ = external_loss_params(link)
    m = res.rho12.matrix
    assert abs(m[1, 2]) <= math.exp(-gamma1) / 2 * (m[1, 1] + m[2, 2]).real + 1e-12


@given(st.floats(0.05, 4), st.floats(0.05, 1), st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_ps_monotone_in_window(d, t, pc1, pc2):
    lo, hi = sorted((pc1, pc2))
    assert success_probability(d, t, lo) <= success_probability(d, t, hi) + 1e-15


@given(st.floats(0.05, 4), st.floats(0.05, 1), st.floats(0.01, 2.0), st.floats(0, 3), st.floats(0, 3))
def test_fidelity_monotone_in_dephasing(d, t, pc, g1, g2):
    lo, hi = sorted((g1, g2))
    assert entanglement_fidelity(d, t, pc, hi) <= entanglement_fidelity(d, t, pc, lo) + 1e-15


def test_zero_window_limit():
    d, t, g = 1.3, 0.7, 0.2
    limit = entanglement_fidelity(d, t, 0.0, g)
    assert entanglement_fidelity(d, t, 1e-7, g) == pytest.approx(limit, rel=1e-9)


def test_equal_angles_need_no_tuning():
    link = LinkParams(30.0, 0.02, 0.02, 0.7, 0.5)
    assert tuning_displacement(link) == 0.0
    assert tuning_rotation(link) == 0.0


def test_tuning_singular_at_zero_theta2():
    link = LinkParams(30.0, 0.02, 0.0, 0.7, 0.5)
    with pytest.raises(SingularConfigurationError):
        tuning_displacement(link)


def test_unequal_angles_still_match_closed_form():
    link = LinkParams(40.0, 0.03, 0.02, 0.6, 0.4)
    assert post_selected_state(link).fidelity == pytest.approx(closed_form(link), abs=1e-6)


def test_large_angle_warns():
    with pytest.warns(UserWarning):
        LinkParams(3.0, 0.5, 0.5, 0.7, 0.5)


@pytest.mark.parametrize("theta", [0.001, 0.01, 0.04])
def test_small_angle_dephasing(theta):
    link = LinkParams.from_distinguishability(1.5, 0.6, 0.5, theta)
    gamma1, _ = external_loss_params(link)
    approx = small_angle_gamma1(distinguishability(link), 0.6)
    assert abs(gamma1 - approx) / gamma1 < 0.01


def test_midpoint_doubles_dephasing_and_halves_length():
    assert link_transmission(2.0, MID_POINT) == pytest.approx(math.exp(-1.0))
    end = LinkParams.from_distinguishability(1.0, 0.8, 0.5)
    mid = LinkParams.from_distinguishability(1.0, 0.8, 0.5, geometry=MID_POINT)
    assert external_loss_params(mid)[0] == pytest.approx(2 * external_loss_params(end)[0])


def test_midpoint_fifty_km_stays_entangled():
    for row in fidelity_ps_curve(50.0 / 25.0, np.linspace(0.02, 1.0, 25), MID_POINT):
        if row["ps"] <= 0.20:
            assert row["fidelity"] > 0.5


def test_lossless_link_reaches_unit_fidelity():
    d, f = optimize_d(1.0, 0.5)
    assert 0 < d <= D_UPPER
    assert f == pytest.approx(1.0, abs=1e-9)


def test_optimize_d_respects_cap():
    d, _ = optimize_d(1.0, 0.5, d_upper=1.0)
    assert d == pytest.approx(1.0, abs=1e-5)


def test_fidelity_falls_as_window_grows():
    rows = fidelity_ps_curve(0.4, np.linspace(0.05, 2.0, 20))
    fids = [r["fidelity"] for r in rows]
    assert all(np.diff(fids) < 0)
    # d is re-optimized per window, so Ps need not be monotone; only the first rise is guaranteed
    assert rows[1]["ps"] > rows[0]["ps"]


def test_short_link_fidelity_near_one():
    rows = fidelity_ps_curve(1e-6, [0.1, 0.5, 1.0])
    assert all(r["fidelity"] > 0.999 for r in rows)


def test_post_selection_of_lossless_narrow_window_gives_bell_state():
    link = LinkParams.from_distinguishability(6.0, 1.0, 1e-3)
    res = post_selected_state(link)
    assert res.fidelity == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(res.rho12.matrix, np.outer(PSI_PLUS, PSI_PLUS), atol=1e-6)


def test_entropy_bound_examples():
    assert entanglement_entropy_bound(0.0, 0.3) == 0.0
    assert entanglement_entropy_bound(5.0, 0.0) == 0.0
    assert entanglement_entropy_bound(1.0, math.pi) == pytest.approx(1 - math.exp(-4))
    with pytest.raises(ValueError):
        entanglement_entropy_bound(-1.0, 0.1)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        LinkParams(1.0, 0.01, 0.01, 1.5, 0.5)
    with pytest.raises(ValueError):
        success_probability(1.0, 0.5, -0.1)
    with pytest.raises(ValueError):
        fidelity_ps_curve(0.4, [])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises(ValueError):
            post_selected_state(LinkParams(1.0, 0.01, 0.01, 0.5, 0.0))
