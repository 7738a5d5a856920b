"""Entanglement distribution with a bright coherent pulse and p-homodyne
post-selection.

Homodyne convention: ``p = (a - a^dagger)/2i`` so ``[x, p] = i/2``.  The
post-selected target is ``|Psi+> = (|01> + |10>)/sqrt(2)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import erf

from .densmat import (
    KET_PLUS,
    PSI_PLUS,
    Z,
    DensityMatrix,
    KrausSet,
    apply_kraus,
    apply_unitary,
    fidelity_with_pure,
    tensor_product,
)

END_DETECTION = "end"
MID_POINT = "midpoint"
GEOMETRIES = (END_DETECTION, MID_POINT)
ELL0_KM = 25.0
D_UPPER = 10.0
SMALL_ANGLE_WARN = 0.3
SQRT2 = math.sqrt(2.0)


class SingularConfigurationError(ValueError):
    pass


class QuadratureError(RuntimeError):
    def __init__(self, msg: str, achieved: float):
        super().__init__(f"{msg} (achieved tolerance {achieved:.3e})")
        self.achieved = achieved


@dataclass(frozen=True)
class LinkParams:
    """One distribution attempt.

    ``transmission`` is the fiber transmission seen by the pulse between the
    two cavities.  For mid-point detection it covers half of the link.
    """

    alpha: float
    theta1: float
    theta2: float
    transmission: float
    pc: float
    geometry: str = END_DETECTION

    def __post_init__(self):
        if not 0.0 < self.transmission <= 1.0:
            raise ValueError(f"transmission must be in (0, 1], got {self.transmission}")
        if self.pc < 0:
            raise ValueError("pc must be non-negative")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if max(abs(self.theta1), abs(self.theta2)) > SMALL_ANGLE_WARN:
            warnings.warn("phase angle outside the small-angle regime", stacklevel=2)

    @classmethod
    def from_length(cls, alpha, theta1, theta2, ell_km, pc, ell0_km=ELL0_KM, geometry=END_DETECTION):
        return cls(alpha, theta1, theta2, link_transmission(ell_km / ell0_km, geometry), pc, geometry)

    @classmethod
    def from_distinguishability(cls, d, transmission, pc, theta=0.01, geometry=END_DETECTION):
        """Matched cavities (theta1 = theta2 = theta) with amplitude set by d."""
        return cls(d / math.sin(theta), theta, theta, transmission, pc, geometry)


@dataclass(frozen=True)
class LinkDerived:
    gamma1: float
    xi1: float
    beta_T: float
    d: float
    phi_T: float


@dataclass(frozen=True)
class PostSelectionResult:
    ps: float
    fidelity: float
    rho12: DensityMatrix


def link_transmission(ell_over_ell0: float, geometry: str = END_DETECTION) -> float:
    """Fiber transmission for a link of length ``ell`` in units of ``ell0``."""
    if geometry == MID_POINT:
        return math.exp(-ell_over_ell0 / 2.0)
    return math.exp(-ell_over_ell0)


def _loss_multiplier(geometry: str) -> float:
    return 2.0 if geometry == MID_POINT else 1.0


def external_loss_params(p: LinkParams) -> tuple[float, float]:
    """Dephasing exponent and deterministic rotation of qubit 1 from fiber loss."""
    a2 = p.alpha**2 * (1.0 - p.transmission)
    gamma1 = a2 * (1.0 - math.cos(p.theta1)) * _loss_multiplier(p.geometry)
    xi1 = a2 * math.sin(p.theta1)
    return gamma1, xi1


def small_angle_gamma1(d: float, transmission: float, geometry: str = END_DETECTION) -> float:
    return d * d * (1.0 - transmission) / 2.0 * _loss_multiplier(geometry)


def q1_channel(gamma1: float, xi1: float) -> KrausSet:
    """Phase flip with probability (1 - exp(-gamma1))/2 after a Z rotation."""
    if gamma1 < 0:
        raise ValueError("gamma1 must be non-negative")
    e = math.exp(-gamma1)
    rot = np.diag(np.exp(1j * np.array([1.0, -1.0]) * xi1 / 2.0))
    return KrausSet([math.sqrt((1 + e) / 2) * rot, math.sqrt((1 - e) / 2) * (Z @ rot)])


def tuning_displacement(p: LinkParams) -> float:
    if p.theta2 == 0.0 or math.sin(p.theta2 / 2.0) == 0.0:
        raise SingularConfigurationError("theta2 = 0 makes the tuning displacement singular")
    return math.sqrt(p.transmission) * p.alpha * math.sin((p.theta1 - p.theta2) / 2.0) / math.sin(p.theta2 / 2.0)


def tuning_rotation(p: LinkParams) -> float:
    """Z rotation angle of qubit 1 induced by the tuning displacement."""
    if p.theta2 == 0.0:
        raise SingularConfigurationError("theta2 = 0 makes the tuning displacement singular")
    return -(p.transmission * p.alpha**2 * math.sin((p.theta1 - p.theta2) / 2.0)
             * math.sin(p.theta1 / 2.0) / math.sin(p.theta2 / 2.0))


def distinguishability(p: LinkParams) -> float:
    return abs(2.0 * p.alpha * math.sin(p.theta1 / 2.0) * math.cos(p.theta2 / 2.0))


def link_derived(p: LinkParams) -> LinkDerived:
    gamma1, xi1 = external_loss_params(p)
    return LinkDerived(gamma1, xi1, tuning_displacement(p), distinguishability(p), tuning_rotation(p))


def _window_bracket(d, transmission, pc):
    s = math.sqrt(transmission) * d
    return 2.0 * erf(SQRT2 * pc) + erf(SQRT2 * (pc + s)) + erf(SQRT2 * (pc - s))


def success_probability(d: float, transmission: float, pc: float) -> float:
    if pc < 0:
        raise ValueError("pc must be non-negative")
    return float(min(max(_window_bracket(d, transmission, pc) / 4.0, 0.0), 1.0))


def entanglement_fidelity(d: float, transmission: float, pc: float, gamma1: float) -> float:
    """Closed-form |Psi+> fidelity of the post-selected state.

    At ``pc = 0`` the ratio is 0/0; the returned value is its limit
    ``(1 + exp(-gamma1)) / (2 + 2 exp(-2 T d^2))``.
    """
    if pc < 0:
        raise ValueError("pc must be non-negative")
    num_factor = 1.0 + math.exp(-gamma1)
    if pc == 0.0:
        return num_factor / (2.0 + 2.0 * math.exp(-2.0 * transmission * d * d))
    den = _window_bracket(d, transmission, pc)
    return float(min(max(num_factor * erf(SQRT2 * pc) / den, 0.0), 1.0))


def _gauss_legendre(f, a, b, rtol, atol=1e-14, n0=32, nmax=8192):
    """Integrate a vector-valued f over [a, b] by node doubling."""
    prev = None
    n = n0
    err = np.inf
    while n <= nmax:
        x, w = np.polynomial.legendre.leggauss(n)
        xs = 0.5 * (b - a) * x + 0.5 * (b + a)
        val = 0.5 * (b - a) * np.tensordot(w, f(xs), axes=(0, 0))
        if prev is not None:
            err = float(np.max(np.abs(val - prev)))
            if err <= max(atol, rtol * float(np.max(np.abs(val)))):
                return val, err
        prev = val
        n *= 2
    raise QuadratureError("Gauss-Legendre quadrature did not converge", err)


def _basis_z():
    b = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])
    return 1 - 2 * b[:, 0], 1 - 2 * b[:, 1]


def homodyne_operators(p: LinkParams, pvals: np.ndarray):
    """Diagonal G(p) and U(p) over the computational basis, shape (len(p), 4)."""
    z1, z2 = _basis_z()
    s1, s2, c2 = math.sin(p.theta1 / 2), math.sin(p.theta2 / 2), math.cos(p.theta2 / 2)
    amp = math.sqrt(p.transmission) * p.alpha
    if s2 == 0.0:
        raise SingularConfigurationError("theta2 = 0 makes the tuning displacement singular")
    real_part = amp * s1 * s2 * ((c2 / s2) ** 2 - z1 * z2)
    imag_part = amp * s1 * c2 * (z1 + z2)
    pv = np.asarray(pvals, dtype=float)[:, None]
    g = (2.0 / math.pi) ** 0.25 * np.exp(-((pv + imag_part) ** 2))
    u = np.exp(-1j * (2.0 * pv + imag_part) * real_part)
    return g, u


def post_selected_state(p: LinkParams, rtol: float = 1e-8, correct_rotations: bool = True) -> PostSelectionResult:
    """Average conditional state over the window |p| < pc, by quadrature."""
    if p.pc <= 0:
        raise ValueError("post_selected_state needs pc > 0")
    gamma1, xi1 = external_loss_params(p)
    plus = DensityMatrix.from_ket(KET_PLUS)
    rho1 = apply_kraus(plus, q1_channel(gamma1, xi1))
    zdiag = np.array([1.0, -1.0])
    if correct_rotations:
        rho1 = apply_unitary(rho1, np.diag(np.exp(-1j * zdiag * xi1 / 2)))
    else:
        rho1 = apply_unitary(rho1, np.diag(np.exp(-1j * zdiag * tuning_rotation(p) / 2)))
    rho0 = tensor_product(rho1, plus).matrix

    def integrand(pvals):
        g, u = homodyne_operators(p, pvals)
        k = g * u
        return k[:, :, None] * k.conj()[:, None, :]

    kernel, _ = _gauss_legendre(integrand, -p.pc, p.pc, rtol)
    unnorm = rho0 * kernel
    ps = float(np.trace(unnorm).real)
    rho = DensityMatrix(unnorm / ps)
    return PostSelectionResult(ps, fidelity_with_pure(rho, PSI_PLUS), rho)


def _fidelity_of_d(d, transmission, pc, geometry):
    return entanglement_fidelity(d, transmission, pc, small_angle_gamma1(d, transmission, geometry))


def optimize_d(transmission: float, pc: float, geometry: str = END_DETECTION,
               d_upper: float = D_UPPER) -> tuple[float, float]:
    """Distinguishability maximizing the closed-form fidelity, small-angle loss."""
    if not 0.0 < transmission <= 1.0 or pc <= 0:
        raise ValueError("need 0 < T <= 1 and pc > 0")
    res = minimize_scalar(
        lambda d: -_fidelity_of_d(d, transmission, pc, geometry),
        bounds=(0.0, d_upper), method="bounded", options={"xatol": 1e-6},
    )
    d_star = float(res.x)
    f_star = _fidelity_of_d(d_star, transmission, pc, geometry)
    f_cap = _fidelity_of_d(d_upper, transmission, pc, geometry)
    if f_cap > f_star:
        d_star, f_star = d_upper, f_cap
    return d_star, f_star


def fidelity_ps_curve(ell_over_ell0: float, pc_grid, geometry: str = END_DETECTION) -> list[dict]:
    """Rows of (pc, d_star, Ps, F) along a post-selection window sweep."""
    pcs = list(pc_grid)
    if not pcs:
        raise ValueError("pc grid is empty")
    t = link_transmission(ell_over_ell0, geometry)
    rows = []
    for pc in pcs:
        d_star, f_star = optimize_d(t, pc, geometry)
        rows.append({"ell_over_ell0": ell_over_ell0, "pc": float(pc), "d": d_star,
                     "ps": success_probability(d_star, t, pc), "fidelity": f_star})
    return rows


def entanglement_entropy_bound(alpha: float, theta1: float) -> float:
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return 1.0 - math.exp(-4.0 * alpha**2 * math.sin(theta1 / 2.0) ** 2)
