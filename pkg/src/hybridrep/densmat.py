"""Dense density matrices and Kraus channels for up to four qubits.

Qubit 0 is the most significant bit of a basis index, i.e. the leftmost
Kronecker factor.  Computational state ``|0>`` is the ``Z = +1`` eigenstate.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 4
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
EIG_TOL = 1e-10
COMPLETENESS_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
# (|01> + |10>)/sqrt(2): the odd-parity Bell state targeted by the link.
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


class DensityMatrixError(ValueError):
    pass


def _n_qubits_of(dim: int) -> int:
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 0 or 2**n != dim:
        raise DensityMatrixError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise DensityMatrixError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit cap")
    return n


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite state.

    A zero-qubit (1x1) state is allowed as the remainder of a complete
    measurement.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DensityMatrixError(f"matrix must be square, got {m.shape}")
        _n_qubits_of(m.shape[0])
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return _n_qubits_of(self.dim)

    def validate(self, tol: float = EIG_TOL) -> None:
        """Raise if the matrix is not a valid state within tolerance."""
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
            raise DensityMatrixError("matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise DensityMatrixError(f"trace {tr!r} differs from 1")
        ev = np.linalg.eigvalsh(m)
        if ev.min() < -tol:
            raise DensityMatrixError(f"negative eigenvalue {ev.min()!r}")

    def is_valid(self, tol: float = EIG_TOL) -> bool:
        try:
            self.validate(tol)
        except DensityMatrixError:
            return False
        return True

    @classmethod
    def from_ket(cls, ket: np.ndarray) -> "DensityMatrix":
        v = np.asarray(ket, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        d = 2**n_qubits
        return cls(np.eye(d, dtype=complex) / d)


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Operator-sum channel.  Completeness is checked on construction."""

    operators: tuple

    def __init__(self, operators: Sequence[np.ndarray], check: bool = True):
        ops = tuple(np.asarray(k, dtype=complex) for k in operators)
        if not ops:
            raise DensityMatrixError("a KrausSet needs at least one operator")
        shape = ops[0].shape
        if len(shape) != 2:
            raise DensityMatrixError("Kraus operators must be matrices")
        for k in ops:
            if k.shape != shape:
                raise DensityMatrixError("Kraus operators differ in shape")
        object.__setattr__(self, "operators", ops)
        if check:
            err = self.completeness_error()
            if err > COMPLETENESS_TOL:
                raise DensityMatrixError(f"incomplete KrausSet (error {err:.3e})")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[1]

    def completeness_error(self) -> float:
        s = sum(k.conj().T @ k for k in self.operators)
        return float(np.max(np.abs(s - np.eye(s.shape[0]))))


def _clean(m: np.ndarray) -> np.ndarray:
    # Re-symmetrize and renormalize to stop drift over long chains.
    m = 0.5 * (m + m.conj().T)
    return m / np.trace(m).real


def tensor_product(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    """Kronecker product with ``a`` occupying the leading qubits."""
    if a.n_qubits + b.n_qubits > MAX_QUBITS:
        raise DensityMatrixError("tensor product exceeds the 4-qubit cap")
    return DensityMatrix(np.kron(a.matrix, b.matrix))


def embed_operator(op: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """Lift an operator on ``qubits`` (in the given order) to ``n_qubits``."""
    qubits = list(qubits)
    k = len(qubits)
    if len(set(qubits)) != k or any(q < 0 or q >= n_qubits for q in qubits):
        raise DensityMatrixError(f"invalid qubit indices {qubits} for {n_qubits} qubits")
    op = np.asarray(op, dtype=complex)
    if op.shape != (2**k, 2**k):
        raise DensityMatrixError("operator size does not match qubit count")
    rest = [q for q in range(n_qubits) if q not in qubits]
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    # full acts on order qubits + rest; permute axes back to natural order.
    order = qubits + rest
    t = full.reshape([2] * (2 * n_qubits))
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [n_qubits + i for i in inv])
    return t.reshape(2**n_qubits, 2**n_qubits)


def apply_unitary(rho: DensityMatrix, u: np.ndarray, qubits: Sequence[int] | None = None) -> DensityMatrix:
    n = rho.n_qubits
    if qubits is not None:
        u = embed_operator(u, qubits, n)
    return DensityMatrix(_clean(u @ rho.matrix @ u.conj().T))


def apply_kraus(rho: DensityMatrix, k: KrausSet, qubits: Sequence[int] | None = None) -> DensityMatrix:
    """Return sum_m K_m rho K_m^dagger, optionally acting on a qubit subset."""
    ops = k.operators
    if qubits is not None:
        ops = [embed_operator(op, qubits, rho.n_qubits) for op in ops]
    elif k.dim != rho.dim:
        raise DensityMatrixError(f"channel dim {k.dim} does not match state dim {rho.dim}")
    if k.completeness_error() > COMPLETENESS_TOL:
        raise DensityMatrixError("incomplete KrausSet")
    m = rho.matrix
    out = sum(op @ m @ op.conj().T for op in ops)
    return DensityMatrix(_clean(out))


def projective_measure(
    rho: DensityMatrix, qubit_indices: Sequence[int], outcome_pattern: Sequence[int]
) -> tuple[float, DensityMatrix | None]:
    """Z-basis measurement of selected qubits.

    Returns the Born probability and the normalized state of the remaining
    qubits (in their original order).  A zero-probability outcome returns
    ``(0.0, None)``.
    """
    n = rho.n_qubits
    idx = list(qubit_indices)
    outcome = list(outcome_pattern)
    if len(idx) != len(outcome) or len(set(idx)) != len(idx):
        raise DensityMatrixError("qubit indices and outcomes must match one-to-one")
    if any(q < 0 or q >= n for q in idx) or any(o not in (0, 1) for o in outcome):
        raise DensityMatrixError("invalid qubit index or outcome")
    t = rho.matrix.reshape([2] * (2 * n))
    sl: list = [slice(None)] * (2 * n)
    for q, o in zip(idx, outcome):
        sl[q] = o
        sl[n + q] = o
    block = t[tuple(sl)]
    r = n - len(idx)
    block = np.asarray(block).reshape(2**r, 2**r)
    p = float(np.trace(block).real)
    if p <= 1e-15:
        return 0.0, None
    return min(p, 1.0), DensityMatrix(_clean(block))


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    n = rho.n_qubits
    keep = list(keep)
    drop = [q for q in range(n) if q not in keep]
    t = rho.matrix.reshape([2] * (2 * n))
    letters = "abcdefgh"
    row = [letters[q] for q in range(n)]
    col = [letters[q].upper() for q in range(n)]
    for q in drop:
        col[q] = row[q]
    out = "".join(row[q] for q in keep) + "".join(col[q] for q in keep)
    m = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = 2 ** len(keep)
    return DensityMatrix(m.reshape(d, d))


def fidelity_with_pure(rho: DensityMatrix, ket: np.ndarray) -> float:
    """Return <ket|rho|ket>, clamped to [0, 1]."""
    v = np.asarray(ket, dtype=complex).ravel()
    if v.size != rho.dim:
        raise DensityMatrixError("ket dimension does not match state")
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise DensityMatrixError("ket is not normalized")
    f = float(np.real(v.conj() @ rho.matrix @ v))
    if f < -1e-12 or f > 1 + 1e-12:
        raise DensityMatrixError(f"fidelity {f!r} outside [0, 1]")
    return min(max(f, 0.0), 1.0)


def werner_state(fidelity: float) -> DensityMatrix:
    """Mixture of |Psi+> and white noise with the given |Psi+> fidelity."""
    p = (4.0 * fidelity - 1.0) / 3.0
    m = p * np.outer(PSI_PLUS, PSI_PLUS.conj()) + (1 - p) * np.eye(4) / 4
    return DensityMatrix(m)


def identity_channel(dim: int) -> KrausSet:
    return KrausSet([np.eye(dim, dtype=complex)])
