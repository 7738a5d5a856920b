import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridrep.densmat import (
    CNOT,
    H,
    KET0,
    PSI_PLUS,
    X,
    Z,
    DensityMatrix,
    DensityMatrixError,
    KrausSet,
    apply_kraus,
    apply_unitary,
    embed_operator,
    fidelity_with_pure,
    identity_channel,
    partial_trace,
    projective_measure,
    tensor_product,
    werner_state,
)
from oracles import embed_brute

seeds = st.integers(0, 2**32 - 1)


def random_state(rng, n):
    d = 2**n
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = a @ a.conj().T
    return DensityMatrix(m / np.trace(m))


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_kraus(rng, d, m):
    # Columns of a random isometry C^d -> C^(d m) split into m blocks.
    u = random_unitary(rng, d * m)[:, :d]
    return KrausSet([u[i * d:(i + 1) * d] for i in range(m)])


def test_pure_state_is_valid_and_rank_one():
    rho = DensityMatrix.from_ket(PSI_PLUS)
    rho.validate()
    assert rho.n_qubits == 2
    assert np.linalg.matrix_rank(rho.matrix, tol=1e-12) == 1


def test_matrix_is_read_only_copy():
    m = np.eye(2) / 2
    rho = DensityMatrix(m)
    m[0, 0] = 5
    assert rho.matrix[0, 0] == 0.5
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1


def test_rejects_bad_shapes():
    with pytest.raises(DensityMatrixError):
        DensityMatrix(np.eye(3) / 3)
    with pytest.raises(DensityMatrixError):
        DensityMatrix(np.eye(32) / 32)
    with pytest.raises(DensityMatrixError):
        DensityMatrix(np.ones((2, 4)))


def test_validate_flags_invalid_matrices():
    assert not DensityMatrix(np.diag([1.5, -0.5])).is_valid()
    assert not DensityMatrix(np.eye(2)).is_valid()
    assert not DensityMatrix(np.array([[0.5, 1], [0, 0.5]])).is_valid()


def test_incomplete_kraus_set_rejected():
    with pytest.raises(DensityMatrixError):
        KrausSet([0.5 * np.eye(2)])
    assert KrausSet([0.5 * np.eye(2)], check=False).completeness_error() == pytest.approx(0.75)


def test_identity_channel_is_noop():
    rho = random_state(np.random.default_rng(1), 2)
    out = apply_kraus(rho, identity_channel(4))
    assert np.allclose(out.matrix, rho.matrix, atol=1e-14)


@given(seeds, st.integers(1, 4), st.data())
def test_embed_matches_brute_force(seed, n, data):
    rng = np.random.default_rng(seed)
    k = data.draw(st.integers(1, min(n, 2)))
    qubits = data.draw(st.permutations(range(n)))[:k]
    op = rng.normal(size=(2**k, 2**k)) + 1j * rng.normal(size=(2**k, 2**k))
    assert np.allclose(embed_operator(op, qubits, n), embed_brute(op, qubits, n), atol=1e-12)


def test_cnot_orientation():
    # Control 0, target 1 with qubit 0 the most significant bit.
    ket10 = np.zeros(4)
    ket10[2] = 1
    out = apply_unitary(DensityMatrix.from_ket(ket10), CNOT, [0, 1])
    assert out.matrix[3, 3] == pytest.approx(1.0)
    out = apply_unitary(DensityMatrix.from_ket(ket10), CNOT, [1, 0])
    assert out.matrix[2, 2] == pytest.approx(1.0)


@given(seeds, st.sampled_from([1, 2, 4]), st.integers(1, 4))
def test_channels_preserve_validity(seed, n, m):
    rng = np.random.default_rng(seed)
    rho = random_state(rng, n)
    k = min(n, 2)
    qubits = list(rng.permutation(n)[:k])
    out = apply_kraus(rho, random_kraus(rng, 2**k, m), qubits)
    out.validate()
    out = apply_unitary(out, random_unitary(rng, 2**k), qubits)
    out.validate()


@given(seeds)
def test_measurement_probabilities_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    rho = random_state(rng, 4)
    total = 0.0
    for a in (0, 1):
        for b in (0, 1):
            p, rem = projective_measure(rho, [1, 3], [a, b])
            total += p
            assert rem.n_qubits == 2
            rem.validate()
    assert total == pytest.approx(1.0, abs=1e-12)


def test_measurement_zero_probability_is_flagged():
    p, rem = projective_measure(DensityMatrix.from_ket(KET0), [0], [1])
    assert p == 0.0 and rem is None


def test_measurement_keeps_remaining_order():
    # |0>|1>|+> measured on the middle qubit leaves |0>|+>.
    ket = np.kron(np.kron(KET0, X @ KET0), H @ KET0)
    p, rem = projective_measure(DensityMatrix.from_ket(ket), [1], [1])
    assert p == pytest.approx(1.0)
    assert fidelity_with_pure(rem, np.kron(KET0, H @ KET0)) == pytest.approx(1.0)


@given(seeds)
def test_partial_trace_of_product(seed):
    rng = np.random.default_rng(seed)
    a, b = random_state(rng, 1), random_state(rng, 2)
    ab = tensor_product(a, b)
    assert np.allclose(partial_trace(ab, [0]).matrix, a.matrix, atol=1e-12)
    assert np.allclose(partial_trace(ab, [1, 2]).matrix, b.matrix, atol=1e-12)
    partial_trace(ab, [2, 0]).validate()


def test_partial_trace_of_bell_state_is_mixed():
    out = partial_trace(DensityMatrix.from_ket(PSI_PLUS), [1])
    assert np.allclose(out.matrix, np.eye(2) / 2)


def test_fidelity_requires_normalized_ket():
    rho = DensityMatrix.from_ket(PSI_PLUS)
    with pytest.raises(DensityMatrixError):
        fidelity_with_pure(rho, 2 * PSI_PLUS)
    with pytest.raises(DensityMatrixError):
        fidelity_with_pure(rho, KET0)


@pytest.mark.parametrize("f", [0.25, 0.5, 0.77, 1.0])
def test_werner_fidelity(f):
    w = werner_state(f)
    w.validate()
    assert fidelity_with_pure(w, PSI_PLUS) == pytest.approx(f, abs=1e-14)


def test_bell_state_is_z_anticorrelated():
    rho = DensityMatrix.from_ket(PSI_PLUS)
    zz = np.real(np.trace(np.kron(Z, Z) @ rho.matrix))
    assert zz == pytest.approx(-1.0)
