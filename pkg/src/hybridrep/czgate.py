"""Optical-loss model of the measurement-free C-Z gate on a coherent bus.

Basis order for all 4x4 objects is ``(++, +-, -+, --)`` in ``(Z1, Z2)``
eigenvalues, which coincides with the computational order 00, 01, 10, 11.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .densmat import (
    CNOT,
    H,
    I2,
    Z,
    DensityMatrix,
    KrausSet,
    apply_kraus,
    apply_unitary,
)

Z_PAIRS = ((1, 1), (1, -1), (-1, 1), (-1, -1))
MIN_GATE_TRANSMISSION = 0.05
EIG_CLAMP = -1e-9
H2 = np.kron(H, H)
# Character rows: I, Z2, Z1, Z1Z2 evaluated on the basis order above.
CHARACTERS = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]], dtype=float)


class GateConditionError(ValueError):
    pass


@dataclass(frozen=True)
class CZParams:
    alpha: tuple
    theta: tuple
    transmission: tuple
    semi_ideal: bool = False

    def __post_init__(self):
        for name in ("alpha", "theta", "transmission"):
            v = tuple(getattr(self, name))
            if len(v) != 4:
                raise ValueError(f"{name} must have exactly 4 entries")
            object.__setattr__(self, name, v)
        if any(not 0.0 < t <= 1.0 for t in self.transmission):
            raise ValueError("transmissions must lie in (0, 1]")

    @classmethod
    def semi_ideal_params(cls, transmission: float, theta: float, alpha: complex | None = None) -> "CZParams":
        """Equal displacements, angles and transmissions.

        With ``alpha`` omitted the amplitude satisfies the gate condition.
        """
        if alpha is None:
            alpha = math.sqrt(gate_condition(transmission)) / abs(theta)
        return cls((alpha,) * 4, (theta,) * 4, (transmission,) * 4, semi_ideal=True)


@dataclass(frozen=True, eq=False)
class DistortionMatrix:
    entries: np.ndarray
    # Walsh coefficients (const, Z1, Z2, Z1Z2) of the removed deterministic phase.
    phase_coefficients: np.ndarray = field(default_factory=lambda: np.zeros(4))


@dataclass(frozen=True, eq=False)
class GateChannel:
    kraus: KrausSet
    lambdas: np.ndarray
    amplitudes: np.ndarray
    berry: np.ndarray = field(default_factory=lambda: np.zeros(4))

    @property
    def lambda0(self) -> float:
        return float(self.lambdas[0])

    @property
    def x_kraus(self) -> KrausSet:
        """Operators with X on the target in place of Z."""
        ht = np.kron(I2, H)
        return KrausSet([ht @ k @ ht for k in self.kraus.operators])


def beta_sequence(p: CZParams, z1: int, z2: int) -> tuple[complex, complex, complex, complex]:
    a0, a1, a2, a3 = (complex(a) for a in p.alpha)
    t1, t2, t3, t4 = p.theta
    b1 = a0 * np.exp(1j * z1 * t1 / 2)
    b2 = np.exp(1j * z2 * t2 / 2) * (b1 + (1j - 1) * a1)
    b3 = np.exp(1j * z1 * t3 / 2) * (b2 - (1j + 1) * a2)
    b4 = np.exp(1j * z2 * t4 / 2) * (b3 - (1j - 1) * a3)
    return complex(b1), complex(b2), complex(b3), complex(b4)


def berry_phase(p: CZParams, z1: int, z2: int) -> float:
    b1, b2, b3, _ = beta_sequence(p, z1, z2)
    _, a1, a2, a3 = (complex(a) for a in p.alpha)
    t1, t2, t3, _ = p.transmission
    v = ((1j - 1) * t1 * b1.conjugate() * a1
         - (1j + 1) * t1 * t2 * b2.conjugate() * a2
         - (1j - 1) * t1 * t2 * t3 * b3.conjugate() * a3)
    return float(v.imag)


def walsh_coefficients(values: Sequence[float]) -> np.ndarray:
    """Coefficients (const, Z1, Z2, Z1Z2) of a function on the four basis states."""
    v = np.asarray(values, dtype=float)
    # CHARACTERS rows are (I, Z2, Z1, Z1Z2); reorder to (I, Z1, Z2, Z1Z2).
    c = CHARACTERS @ v / 4.0
    return np.array([c[0], c[2], c[1], c[3]])


def loss_weights(transmission: Sequence[float]) -> np.ndarray:
    """Fraction of photons lost at each of the four steps; the last is the bus discard."""
    t = list(transmission[:3]) + [0.0]
    w = np.empty(4)
    surv = 1.0
    for n in range(4):
        w[n] = (1.0 - t[n]) * surv
        surv *= t[n]
    return w


def _raw_exponent(p: CZParams) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude exponent M and unwrapped phase exponent Phi for each element."""
    betas = np.array([beta_sequence(p, z1, z2) for z1, z2 in Z_PAIRS])  # (4 states, 4 steps)
    berry = np.array([berry_phase(p, z1, z2) for z1, z2 in Z_PAIRS])
    w = loss_weights(p.transmission)
    bx = betas[:, None, :]
    by = betas[None, :, :]
    mag = np.sum(w * np.abs(bx - by) ** 2 / 2.0, axis=2)
    phase = berry[:, None] - berry[None, :] + np.sum(w * np.imag(np.conj(by) * bx), axis=2)
    return mag, phase


def distortion_matrix(p: CZParams) -> DistortionMatrix:
    """Loss distortion with deterministic diagonal phases factored out.

    The removed phase ``f(x)`` is the row mean of the phase exponent.  This
    is the least-squares diagonal-unitary part, so the remaining phase is
    purely non-unitary.
    """
    mag, phase = _raw_exponent(p)
    f = phase.mean(axis=1)
    entries = np.exp(-mag + 1j * (phase - f[:, None] + f[None, :]))
    return DistortionMatrix(entries, walsh_coefficients(f))


def kraus_decompose(d: DistortionMatrix | np.ndarray, berry: np.ndarray | None = None) -> GateChannel:
    m = d.entries if isinstance(d, DistortionMatrix) else np.asarray(d, dtype=complex)
    m = 0.5 * (m + m.conj().T)
    lam, vec = np.linalg.eigh(m / 4.0)
    if lam.min() < EIG_CLAMP:
        raise ValueError(f"distortion matrix is not positive semidefinite (eigenvalue {lam.min():.3e})")
    lam = np.clip(lam, 0.0, None)
    order = np.argsort(lam)[::-1]
    lam, vec = lam[order], vec[:, order]
    amps = H2 @ vec
    ops = []
    for k in range(4):
        coeff = amps[:, k] @ CHARACTERS  # A_{++} I + A_{+-} Z2 + A_{-+} Z1 + A_{--} Z1Z2
        ops.append(np.sqrt(lam[k]) * np.diag(coeff))
    return GateChannel(KrausSet(ops), lam, amps, np.zeros(4) if berry is None else berry)


def gate_channel(p: CZParams) -> GateChannel:
    berry = walsh_coefficients([berry_phase(p, z1, z2) for z1, z2 in Z_PAIRS])
    return kraus_decompose(distortion_matrix(p), berry)


def gate_condition(transmission: float) -> float:
    """|alpha theta|^2 giving a pi/4 Z1Z2 phase under loss."""
    if not 0.0 < transmission <= 1.0:
        raise ValueError("transmission must lie in (0, 1]")
    if transmission < MIN_GATE_TRANSMISSION:
        raise GateConditionError(f"transmission {transmission} below {MIN_GATE_TRANSMISSION}")
    return math.pi / (transmission * (1.0 + transmission))


def noiseless_channel() -> GateChannel:
    return kraus_decompose(np.ones((4, 4), dtype=complex))


def noisy_cx(rho: DensityMatrix, ch: GateChannel, control: int, target: int) -> DensityMatrix:
    """Loss distortion (X on target) followed by an exact C-X."""
    if control == target:
        raise ValueError("control and target must differ")
    qubits = [control, target]
    out = apply_kraus(rho, ch.x_kraus, qubits)
    return apply_unitary(out, CNOT, qubits)


def semi_ideal_offdiagonals(transmission: float, alpha_theta_sq: float, alpha_theta2_sq: float = 0.0) -> dict:
    """Lowest-order closed forms for the semi-ideal distortion entries."""
    t = transmission
    a = alpha_theta_sq
    return {
        (0, 1): np.exp(-(t * (1 - t * t) - 1j * t * (1 - t)) * a / 2 - alpha_theta2_sq / 4),
        (0, 2): np.exp(-((1 - t * t) + 1j * t * (1 - t)) * a / 2 - alpha_theta2_sq / 4),
        (0, 3): np.exp(-(1 - t * t) * (1 + t) * a / 2),
        (3, 2): np.exp(-(t * (1 - t * t) - 1j * t * (1 - t)) * a / 2 - alpha_theta2_sq / 4),
        (3, 1): np.exp(-((1 - t * t) + 1j * t * (1 - t)) * a / 2 - alpha_theta2_sq / 4),
        (1, 2): np.exp(-(1 - t * t) * (1 + t) * a / 2),
    }


def approx_lambda0(transmission: float) -> float:
    """Published approximation to the leading eigenvalue, kept for comparison."""
    return (1.0 + math.exp(-math.pi * math.sqrt(transmission) / 4.0)) ** 2 / 4.0


def cz_error_curve(theta_list, loss_grid) -> list[dict]:
    """Rows (loss, theta, 1 - lambda0) for semi-ideal gates at the gate condition."""
    thetas = list(theta_list)
    losses = list(loss_grid)
    if not thetas or not losses:
        raise ValueError("grids must be nonempty")
    rows = []
    for th in thetas:
        for loss in losses:
            ch = gate_channel(CZParams.semi_ideal_params(1.0 - loss, th))
            rows.append({"loss": float(loss), "theta": float(th), "one_minus_lambda0": 1.0 - ch.lambda0})
    return rows
