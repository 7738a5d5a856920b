import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridrep.czgate import (
    CZParams,
    GateConditionError,
    Z_PAIRS,
    approx_lambda0,
    berry_phase,
    beta_sequence,
    cz_error_curve,
    distortion_matrix,
    gate_channel,
    gate_condition,
    kraus_decompose,
    noiseless_channel,
    noisy_cx,
    semi_ideal_offdiagonals,
    walsh_coefficients,
)
from hybridrep.densmat import CNOT, KET_PLUS, PSI_PLUS, DensityMatrix, apply_kraus, fidelity_with_pure
from oracles import berry_zz_coefficient_symbolic, distortion_product, semi_ideal_beta4_series

cz_params = st.builds(
    lambda a, th, t: CZParams(tuple(a), tuple(th), tuple(t)),
    st.lists(st.floats(0.0, 60.0), min_size=4, max_size=4),
    st.lists(st.floats(0.0, 0.05), min_size=4, max_size=4),
    st.lists(st.floats(0.5, 1.0), min_size=4, max_size=4),
)


def random_rho(rng, n=2):
    g = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m))


def test_beta_without_rotation_is_phase_free_loop():
    a = (2.0, 3.0, 5.0, 7.0)
    b4 = beta_sequence(CZParams(a, (0.0,) * 4, (1.0,) * 4), 1, -1)[3]
    assert b4 == pytest.approx(a[0] + (1j - 1) * a[1] - (1j + 1) * a[2] - (1j - 1) * a[3])


@pytest.mark.parametrize("z1,z2", Z_PAIRS)
def test_semi_ideal_beta4_second_order(z1, z2):
    alpha, theta = 40.0, 1e-3
    p = CZParams((alpha,) * 4, (theta,) * 4, (1.0,) * 4)
    b4 = beta_sequence(p, z1, z2)[3]
    # residual is O(alpha theta^3)
    assert abs(b4 - semi_ideal_beta4_series(alpha, theta, z1, z2)) < 10 * alpha * theta**3


def test_berry_phase_trivial_cases():
    assert berry_phase(CZParams((0.0,) * 4, (0.01,) * 4, (0.9,) * 4), 1, -1) == 0.0
    p = CZParams.semi_ideal_params(0.9, 0.0, alpha=20.0)
    coeffs = walsh_coefficients([berry_phase(p, *z) for z in Z_PAIRS])
    assert np.allclose(coeffs[1:], 0.0, atol=1e-12)


@pytest.mark.parametrize("t", [0.99, 0.9, 0.7])
def test_berry_zz_coefficient_matches_symbolic_expansion(t):
    theta = 1e-3
    p = CZParams.semi_ideal_params(t, theta)
    alpha = p.alpha[0]
    zz = gate_channel(p).berry[3]
    expected = berry_zz_coefficient_symbolic()(alpha, theta, t)
    assert zz == pytest.approx(expected, rel=1e-3)
    assert zz == pytest.approx(t**2 * (1 + 2 * t) * (alpha * theta) ** 2 / 4, rel=1e-3)


@given(cz_params)
def test_distortion_magnitudes_match_stepwise_product(p):
    d = distortion_matrix(p).entries
    ref = distortion_product(p.alpha, p.theta, p.transmission)
    assert np.allclose(np.abs(d), np.abs(ref), atol=1e-10)
    # phases agree once a diagonal unitary u is divided out: d = u ref u^dagger
    ratio = d / ref
    u = ratio[:, 0] / ratio[0, 0]
    assert np.allclose(ratio, np.outer(u, u.conj()) * ratio[0, 0], atol=1e-8)


@given(cz_params)
def test_distortion_hermitian_unit_diagonal(p):
    d = distortion_matrix(p).entries
    assert np.allclose(d, d.conj().T, atol=1e-12)
    assert np.allclose(np.diag(d), 1.0, atol=1e-12)


@given(cz_params, st.integers(0, 2**32 - 1))
def test_kraus_channel_is_elementwise_distortion(p, seed):
    rho = random_rho(np.random.default_rng(seed))
    d = distortion_matrix(p).entries
    ch = kraus_decompose(distortion_matrix(p))
    out = apply_kraus(rho, ch.kraus)
    assert np.allclose(out.matrix, rho.matrix * d, atol=1e-9)
    assert ch.kraus.completeness_error() < 1e-9
    assert out.is_valid()


@given(cz_params)
def test_kraus_operators_are_diagonal_so_commute_with_cz(p):
    cz = np.diag([1, 1, 1, -1]).astype(complex)
    for k in gate_channel(p).kraus.operators:
        assert np.allclose(k @ cz, cz @ k)


def test_all_ones_distortion_gives_identity():
    ch = noiseless_channel()
    assert ch.lambda0 == pytest.approx(1.0)
    assert np.allclose(ch.lambdas[1:], 0.0, atol=1e-15)
    k0 = ch.kraus.operators[0]
    assert np.allclose(k0 @ k0.conj().T, np.eye(4))


def test_non_psd_matrix_rejected():
    m = np.ones((4, 4), dtype=complex)
    m[0, 3] = m[3, 0] = -1.0
    with pytest.raises(ValueError):
        kraus_decompose(m)


@pytest.mark.parametrize("t,val", [(1.0, math.pi / 2), (0.5, 4 * math.pi / 3)])
def test_gate_condition(t, val):
    assert gate_condition(t) == pytest.approx(val)


def test_gate_condition_rejects_tiny_transmission():
    with pytest.raises(GateConditionError):
        gate_condition(0.01)
    with pytest.raises(ValueError):
        gate_condition(0.0)


def test_removed_phase_is_the_cz_phase():
    p = CZParams.semi_ideal_params(0.95, 1e-3)
    assert distortion_matrix(p).phase_coefficients[3] == pytest.approx(math.pi / 4, rel=1e-4)


@pytest.mark.parametrize("t", [0.99, 0.95])
def test_semi_ideal_offdiagonals_to_second_order(t):
    theta = 1e-3
    p = CZParams.semi_ideal_params(t, theta)
    a2 = abs(p.alpha[0]) ** 2
    d = distortion_matrix(p).entries
    for key, val in semi_ideal_offdiagonals(t, a2 * theta**2, a2 * theta**4).items():
        assert abs(d[key] - val) / abs(val) < 1e-4


def test_semi_ideal_residual_shrinks_with_theta():
    def worst(theta):
        p = CZParams.semi_ideal_params(0.8, theta)
        a2 = abs(p.alpha[0]) ** 2
        d = distortion_matrix(p).entries
        ref = semi_ideal_offdiagonals(0.8, a2 * theta**2, a2 * theta**4)
        return max(abs(d[k] - v) / abs(v) for k, v in ref.items())
    assert worst(1e-4) < worst(1e-3) / 5


def test_lambda0_tends_to_one():
    vals = [gate_channel(CZParams.semi_ideal_params(1 - loss, th)).lambda0
            for loss, th in [(1e-2, 1e-2), (1e-3, 1e-3), (1e-5, 1e-4)]]
    assert vals[0] < vals[1] < vals[2]
    assert 1 - vals[2] < 1e-4


def test_published_lambda0_approximation_is_comparison_only():
    # the approximation tends to (1 + e^{-pi/4})^2 / 4 at T=1 rather than 1
    assert approx_lambda0(1.0) == pytest.approx((1 + math.exp(-math.pi / 4)) ** 2 / 4)
    assert gate_channel(CZParams.semi_ideal_params(1.0, 1e-4)).lambda0 > 0.999


def test_noiseless_cx_makes_bell_state():
    rho = DensityMatrix.from_ket(np.kron(KET_PLUS, [1, 0]))
    out = noisy_cx(rho, noiseless_channel(), 0, 1)
    phi_plus = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert fidelity_with_pure(out, phi_plus) == pytest.approx(1.0)


@pytest.mark.parametrize("k", range(4))
def test_noiseless_cx_truth_table(k):
    ket = np.zeros(4)
    ket[k] = 1
    out = noisy_cx(DensityMatrix.from_ket(ket), noiseless_channel(), 0, 1)
    assert fidelity_with_pure(out, CNOT @ ket) == pytest.approx(1.0)


def test_noisy_cx_bilateral_is_trace_preserving_and_lossy():
    ch = gate_channel(CZParams.semi_ideal_params(0.99, 0.01))
    pair = DensityMatrix.from_ket(PSI_PLUS)
    rho = DensityMatrix(np.kron(pair.matrix, pair.matrix))
    out = noisy_cx(noisy_cx(rho, ch, 0, 2), ch, 1, 3)
    ideal = noisy_cx(noisy_cx(rho, noiseless_channel(), 0, 2), noiseless_channel(), 1, 3)
    assert np.trace(out.matrix).real == pytest.approx(1.0)
    assert out.is_valid()
    overlap = np.trace(out.matrix @ ideal.matrix).real
    assert 0.9 < overlap < 1.0


def test_noisy_cx_rejects_same_qubit():
    with pytest.raises(ValueError):
        noisy_cx(DensityMatrix.maximally_mixed(2), noiseless_channel(), 1, 1)


def test_cz_error_curve_monotone_with_floor():
    losses = np.logspace(-4, -0.5, 8)
    rows = cz_error_curve([0.01, 0.1], losses)
    for th in (0.01, 0.1):
        errs = [r["one_minus_lambda0"] for r in rows if r["theta"] == th]
        assert all(np.diff(errs) > 0)
    floor = cz_error_curve([0.1], [0.0])[0]["one_minus_lambda0"]
    assert floor > cz_error_curve([0.01], [0.0])[0]["one_minus_lambda0"] > 0
    with pytest.raises(ValueError):
        cz_error_curve([], losses)
