"""Semiclassical dispersive atom-cavity interaction with a coherent pulse.

Rates are angular frequencies (rad/s) and times are seconds at the API
boundary.  Internally the Bloch equations are integrated in units where the
effective coupling ``g' = g sqrt(kappa/gamma)`` is 1.

The input pulse is resonant with the cavity and has a Gaussian intensity
profile with RMS width ``sigma_p``:
``F_in(t) = (2 pi sigma_p^2)^(-1/4) exp(-t^2 / (4 sigma_p^2))``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numba
import numpy as np
from scipy import integrate
from scipy.special import erfc, erfcx

SPEED_OF_LIGHT = 299_792_458.0
RHO11_INITIAL = 0.5
PULSE_TRUNCATION = 6.0
RINGDOWN_LIFETIMES = 8.0
S_CUTOFF = 1e-6
# D above 1 by more than this means the coherence pair diverged, not rounding.
D_EXCESS_TOL = 1e-6
CHECK_POINTS = 257
RTOL = 1e-9
ATOL = 1e-12
MAX_STEPS = 20_000_000
N_STATE = 11


class IntegrationError(RuntimeError):
    pass


class ModelBreakdownError(IntegrationError):
    """The semiclassical coherence equations left the physical region (D > 1)."""


@dataclass(frozen=True)
class EmitterCavityParams:
    name: str
    g: float
    kappa: float
    gamma_cav: float
    omega0: float
    tau_r: float
    tau_nr: float = math.inf
    delta: float = 0.0
    Q: float | None = None
    lambda_nm: float | None = None
    n_index: float | None = None
    V_mode: float | None = None
    externally_sourced: bool = False

    def __post_init__(self):
        if self.g < 0 or self.kappa <= 0 or self.gamma_cav <= 0:
            raise ValueError("need g >= 0 and kappa, gamma > 0")
        if self.kappa > self.gamma_cav * (1 + 1e-12):
            raise ValueError("output coupling kappa cannot exceed total decay gamma")
        if self.tau_r <= 0 or self.tau_nr <= 0:
            raise ValueError("lifetimes must be positive")

    @property
    def g_prime(self) -> float:
        return self.g * math.sqrt(self.kappa / self.gamma_cav)

    @property
    def tau(self) -> float:
        """Free-space excited-state lifetime."""
        return 1.0 / (1.0 / self.tau_r + 1.0 / self.tau_nr)

    def with_(self, **changes) -> "EmitterCavityParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class PulseParams:
    alpha: float
    sigma_p: float

    def __post_init__(self):
        if self.sigma_p <= 0:
            raise ValueError("sigma_p must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")


@dataclass(frozen=True, eq=False)
class BlochTrajectory:
    t: np.ndarray
    alpha_tilde: np.ndarray
    rho_ee: np.ndarray
    rho_e1: np.ndarray
    varrho_10: np.ndarray
    varrho_e0: np.ndarray
    S: np.ndarray
    D: np.ndarray
    alpha: float
    decay: float
    excited_integral: float
    final_alpha_tilde: complex
    final_rho_10: complex
    n_steps: int
    converged: bool = True
    coupling_ratio: float = math.nan


@dataclass(frozen=True)
class InteractionResult:
    theta: float
    L: float
    d: float
    F: float
    D: float
    loss_identity_error: float


@dataclass(frozen=True)
class PerturbativeResult:
    theta2: float
    theta2_narrowband: float
    L2: float
    L2_narrowband: float
    L3: float

    @property
    def loss(self) -> float:
        return self.L2 + self.L3


@dataclass(frozen=True)
class SaturationEstimate:
    d_m: float
    y: float
    x: float
    D_est: float
    d_est: float
    feasible: bool
    alpha_over_omega0: float = field(default=math.nan)


# ---------------------------------------------------------------- rates


def coupling_g(lambda_nm: float, n_index: float, V_mode: float, tau_r: float) -> float:
    """Dipole coupling for a cavity mode of volume ``V_mode`` (m^3)."""
    if min(lambda_nm, n_index, V_mode, tau_r) <= 0:
        raise ValueError("inputs must be positive")
    lam = lambda_nm * 1e-9
    omega_a = 2 * math.pi * SPEED_OF_LIGHT / lam
    g2 = 3.0 / (4 * math.pi) ** 2 * (omega_a / tau_r) * lam**3 / (n_index**3 * V_mode)
    return math.sqrt(g2)


def cavity_linewidth(lambda_nm: float, Q: float) -> float:
    return 2 * math.pi * SPEED_OF_LIGHT / (lambda_nm * 1e-9) / Q


def purcell_factor(omega: float, p: EmitterCavityParams) -> float:
    return p.tau_r * p.gamma_cav * p.g**2 / (omega**2 + p.gamma_cav**2 / 4)


def cooperativity(p: EmitterCavityParams) -> float:
    return (p.tau / p.tau_r) * (p.kappa / p.gamma_cav) * purcell_factor(0.0, p)


def total_decay(p: EmitterCavityParams) -> float:
    """Half the total excited-state decay rate, including Purcell enhancement."""
    return 0.5 * ((1 + purcell_factor(p.omega0, p)) / p.tau_r + 1 / p.tau_nr)


def stark_detuning(p: EmitterCavityParams) -> float:
    return p.omega0 * (1 + purcell_factor(p.omega0, p) / (p.gamma_cav * p.tau_r))


# ---------------------------------------------------------------- pulse


def input_envelope(t, sigma_p: float):
    t = np.asarray(t, dtype=float)
    return (2 * math.pi * sigma_p**2) ** -0.25 * np.exp(-(t**2) / (4 * sigma_p**2))


def cavity_filtered_pulse(pulse: PulseParams, p: EmitterCavityParams, t) -> np.ndarray:
    """Cavity output-mode envelope: sqrt(kappa) F_in convolved with exp(-gamma t/2)."""
    t = np.asarray(t, dtype=float)
    s = pulse.sigma_p
    gam = p.gamma_cav
    z = (gam * s * s - t) / (2 * s)
    pref = math.sqrt(p.kappa) * (2 * math.pi * s * s) ** -0.25 * math.sqrt(math.pi) * s
    with np.errstate(over="ignore", under="ignore"):
        pos = pref * np.exp(-(t**2) / (4 * s * s)) * erfcx(np.maximum(z, 0.0))
        neg = pref * np.exp(gam * gam * s * s / 4 - gam * t / 2) * erfc(np.minimum(z, 0.0))
    return np.where(z >= 0, pos, neg)


# ---------------------------------------------------------------- integrator

# Dormand-Prince 5(4) tableau, stage rows flattened (row s holds s entries).
_TABLEAU_A = (
    1 / 5,
    3 / 40, 9 / 40,
    44 / 45, -56 / 15, 32 / 9,
    19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729,
    9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656,
    35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84,
)
_TABLEAU_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_TABLEAU_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


@numba.njit(cache=True)
def bloch_rhs(t, y, args, out):
    g = args[0]
    sqrt_kappa = args[1]
    gam = args[2]
    omega = args[3]
    decay = args[4]
    sigma = args[5]
    alpha = args[6] + 1j * args[7]
    rho11 = args[8]
    ree = y[0]
    re1 = y[1] + 1j * y[2]
    at = y[3] + 1j * y[4]
    ce0 = y[5] + 1j * y[6]
    c10 = y[7] + 1j * y[8]
    s = y[9]
    f_in = (2 * np.pi * sigma * sigma) ** -0.25 * np.exp(-t * t / (4 * sigma * sigma))
    w = s * np.conj(at) * re1
    d_re1 = 1j * g * s * at * (2.0 * ree - rho11) + (1j * omega - decay) * re1
    d_at = -1j * g * s * re1 / rho11
    # Coherences are kept without the field overlap <alpha|alpha~>, which underflows
    # at large |alpha - alpha~|; c is the log-derivative of that overlap.
    c = -(np.conj(at) * d_at).real + np.conj(alpha) * d_at
    d_ce0 = -1j * g * at * s * c10 + (1j * omega - decay - c) * ce0
    d_c10 = -1j * g * np.conj(alpha) * s * ce0 - c * c10
    out[0] = -2.0 * g * w.imag - 2.0 * decay * ree
    out[1] = d_re1.real
    out[2] = d_re1.imag
    out[3] = d_at.real
    out[4] = d_at.imag
    out[5] = d_ce0.real
    out[6] = d_ce0.imag
    out[7] = d_c10.real
    out[8] = d_c10.imag
    out[9] = sqrt_kappa * f_in - 0.5 * gam * s
    out[10] = ree


@numba.njit(cache=True)
def dopri5(t0, y0, t1, args, rtol, atol, h0, max_steps, t_out):
    """Adaptive Dormand-Prince 5(4) for the Bloch system, FSAL, PI step control.

    ``bloch_rhs(t, y, args, out)`` writes the derivative into ``out``.  ``t_out``
    (increasing, inside [t0, t1]) is filled by cubic Hermite interpolation
    between accepted steps.  Status 0 is success, 1 means the step budget ran
    out, 2 means the step size collapsed.
    """
    a_tab = np.array(_TABLEAU_A)
    c_tab = np.array(_TABLEAU_C)
    e_tab = np.array(_TABLEAU_E)
    n = y0.shape[0]
    y = y0.copy()
    t = t0
    k = np.zeros((7, n))
    ys = np.zeros(n)
    ynew = np.zeros(n)
    bloch_rhs(t, y, args, k[0])
    y_out = np.zeros((t_out.shape[0], n))
    j = 0
    while j < t_out.shape[0] and t_out[j] <= t0:
        y_out[j] = y
        j += 1
    h = h0
    if h <= 0.0:
        d0 = 0.0
        d1 = 0.0
        for i in range(n):
            sc = atol + rtol * abs(y[i])
            d0 += (y[i] / sc) ** 2
            d1 += (k[0, i] / sc) ** 2
        d0 = np.sqrt(d0 / n)
        d1 = np.sqrt(d1 / n)
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h = min(h, t1 - t0)
    err_prev = 1e-4
    steps = 0
    while t < t1:
        if steps >= max_steps:
            return y, t, steps, 1, y_out
        if h < 1e-14 * max(1.0, abs(t)):
            return y, t, steps, 2, y_out
        if t + h > t1:
            h = t1 - t
        for s in range(1, 7):
            off = s * (s - 1) // 2
            for i in range(n):
                acc = y[i]
                for r in range(s):
                    acc += h * a_tab[off + r] * k[r, i]
                ys[i] = acc
            bloch_rhs(t + c_tab[s] * h, ys, args, k[s])
        err = 0.0
        for i in range(n):
            ynew[i] = ys[i]
            e = 0.0
            for r in range(7):
                e += e_tab[r] * k[r, i]
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err += (h * e / sc) ** 2
        err = np.sqrt(err / n)
        steps += 1
        if err <= 1.0:
            tn = t + h
            while j < t_out.shape[0] and t_out[j] <= tn:
                th = (t_out[j] - t) / h
                h00 = (1 + 2 * th) * (1 - th) ** 2
                h10 = th * (1 - th) ** 2
                h01 = th * th * (3 - 2 * th)
                h11 = th * th * (th - 1)
                for i in range(n):
                    y_out[j, i] = h00 * y[i] + h10 * h * k[0, i] + h01 * ynew[i] + h11 * h * k[6, i]
                j += 1
            t = tn
            for i in range(n):
                y[i] = ynew[i]
                k[0, i] = k[6, i]
            fac = 0.9 * max(err, 1e-10) ** -0.14 * err_prev**0.08
            fac = min(5.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
            h = h * fac
        else:
            h = h * max(0.2, 0.9 * err**-0.2)
    while j < t_out.shape[0]:
        y_out[j] = y
        j += 1
    return y, t, steps, 0, y_out


def _normalized_args(p: EmitterCavityParams, pulse: PulseParams):
    gp = p.g_prime
    if gp == 0.0:
        gp = p.gamma_cav
    decay = total_decay(p)
    args = np.array([
        p.g / gp,
        math.sqrt(p.kappa / gp),
        p.gamma_cav / gp,
        stark_detuning(p) / gp,
        decay / gp,
        pulse.sigma_p * gp,
        float(pulse.alpha),
        0.0,
        RHO11_INITIAL,
    ])
    return gp, decay, args


def _coherent_overlap(alpha: float, alpha_tilde):
    """<alpha|alpha~> for a real input amplitude."""
    at = np.asarray(alpha_tilde)
    return np.exp(-0.5 * alpha * alpha - 0.5 * np.abs(at) ** 2 + alpha * at)


def solve_bloch(p: EmitterCavityParams, pulse: PulseParams, n_out: int = 1001,
                rtol: float = RTOL, atol: float = ATOL) -> BlochTrajectory:
    """Integrate the Bloch equations from pulse onset until the field has gone."""
    gp, decay, args = _normalized_args(p, pulse)
    sigma = args[5]
    gam = args[2]
    t0 = -PULSE_TRUNCATION * sigma
    t_end = PULSE_TRUNCATION * sigma + RINGDOWN_LIFETIMES / gam
    y0 = np.zeros(N_STATE)
    y0[3] = pulse.alpha
    y0[7] = RHO11_INITIAL
    y0[9] = float(cavity_filtered_pulse(pulse, p, t0 / gp)[()])
    # Peak of the filtered envelope bounds the stopping threshold.
    probe = np.linspace(t0, t_end, 4001) / gp
    s_peak = float(np.max(np.abs(cavity_filtered_pulse(pulse, p, probe))))
    t_out = np.linspace(t0, t_end, n_out)
    h0 = 0.0
    steps_total = 0
    y, t, steps, status, y_out = _run(args, y0, t0, t_end, rtol, atol, h0, t_out)
    steps_total += steps
    # Extend until the filtered field is negligible.
    while status == 0 and abs(y[9]) > S_CUTOFF * s_peak:
        y, t, steps, status, _ = _run(args, y, t, t + 4.0 / gam, rtol, atol, 0.0, np.empty(0))
        steps_total += steps
    if status != 0:
        raise IntegrationError(
            f"Bloch integration failed (status {status}, t={t / gp:.3e} s, steps={steps_total})"
        )
    at = y_out[:, 3] + 1j * y_out[:, 4]
    a10 = y_out[:, 7] + 1j * y_out[:, 8]
    overlap = _coherent_overlap(pulse.alpha, at)
    return BlochTrajectory(
        t=t_out / gp,
        alpha_tilde=at,
        rho_ee=y_out[:, 0],
        rho_e1=y_out[:, 1] + 1j * y_out[:, 2],
        varrho_10=overlap * a10,
        varrho_e0=overlap * (y_out[:, 5] + 1j * y_out[:, 6]),
        S=y_out[:, 9],
        D=np.abs(a10) / RHO11_INITIAL,
        alpha=float(pulse.alpha),
        decay=decay,
        # Undriven exponential tail of the excited population.
        excited_integral=float((y[10] + y[0] / (2 * args[4])) / gp),
        final_alpha_tilde=complex(y[3], y[4]),
        final_rho_10=complex(y[7], y[8]),
        n_steps=steps_total,
        coupling_ratio=p.g / p.gamma_cav,
    )


def _run(args, y0, t0, t1, rtol, atol, h0, t_out):
    y, t, steps, status, y_out = dopri5(t0, y0, t1, args, rtol, atol, h0, MAX_STEPS, t_out)
    if status != 0:
        # Halve-and-retry once with a small initial step and a larger budget.
        y, t, steps2, status, y_out = dopri5(
            t0, y0, t1, args, rtol, atol, 1e-6, 2 * MAX_STEPS, t_out
        )
        steps += steps2
    return y, t, steps, status, y_out


def interaction_result(traj: BlochTrajectory) -> InteractionResult:
    if not traj.converged:
        raise IntegrationError("trajectory did not converge")
    a = traj.alpha
    at = traj.final_alpha_tilde
    if a == 0.0:
        return InteractionResult(0.0, 0.0, 0.0, 1.0, 1.0, 0.0)
    ratio = at / a
    absorbed = 2 * traj.decay * traj.excited_integral / RHO11_INITIAL
    loss = -0.5 * math.log1p(-absorbed / a**2)
    # exp(|alpha - alpha~|^2 / 2) |varrho_10| equals |rho_10| without the field overlap
    damp = abs(traj.final_rho_10) / RHO11_INITIAL
    peak = float(np.max(traj.D))
    if damp > 1.0 + D_EXCESS_TOL or peak > 1.0 + D_EXCESS_TOL:
        # the coherence pair has a growing mode (strong coupling, or deep saturation where
        # it amplifies rounding noise); report instead of clamping
        raise ModelBreakdownError(
            f"coherence grew past its initial value (final D={damp:.3e}, peak {peak:.3e}): the "
            f"coherence equations diverged, so this point is outside the semiclassical model "
            f"(g/gamma={traj.coupling_ratio:.3g})"
        )
    damp = min(damp, 1.0)
    identity_err = abs(abs(at) ** 2 + absorbed - a**2) / a**2
    return InteractionResult(
        theta=-math.atan2(ratio.imag, ratio.real),
        L=loss,
        d=abs(at.imag),
        F=1.0 - 2 * RHO11_INITIAL**2 * (1 - damp),
        D=damp,
        loss_identity_error=identity_err,
    )


def simulate(p: EmitterCavityParams, pulse: PulseParams) -> InteractionResult:
    # the sampled grid only feeds the coherence bound check
    return interaction_result(solve_bloch(p, pulse, n_out=CHECK_POINTS))


# ---------------------------------------------------------------- perturbative


def _pulse_spectrum(omega, sigma_p):
    """|F_in(omega)|^2 normalized so that its integral over omega/2pi is 1."""
    return 2 * math.sqrt(2 * math.pi) * sigma_p * np.exp(-2 * sigma_p**2 * np.asarray(omega) ** 2)


def perturbative_oracle(p: EmitterCavityParams, pulse: PulseParams) -> PerturbativeResult:
    """Lowest-order phase and loss for a weak off-resonant pulse."""
    if p.g == 0.0:
        return PerturbativeResult(0.0, 0.0, 0.0, 0.0, 0.0)
    g2k = p.g**2 * p.kappa
    w0 = p.omega0
    gam = p.gamma_cav
    s = pulse.sigma_p
    decay = total_decay(p)
    if w0 <= decay:
        warnings.warn("perturbative oracle needs omega0 >> Gamma", stacklevel=2)

    def weight(w):
        return _pulse_spectrum(w - w0, s) / ((w - w0) ** 2 + gam**2 / 4) / (2 * math.pi)

    half = 10.0 / s
    lo, hi = w0 - half, w0 + half
    if lo < 0.0 < hi:
        val, _ = integrate.quad(weight, lo, hi, weight="cauchy", wvar=0.0, limit=400)
    else:
        val, _ = integrate.quad(lambda w: weight(w) / w, lo, hi, limit=400,
                                points=[w0], epsabs=0.0, epsrel=1e-12)
    theta2 = g2k * val
    theta2_nb = g2k / (w0 * gam**2 / 4)
    l2 = 0.5 * g2k * float(_pulse_spectrum(w0, s)) / (w0**2 + gam**2 / 4)
    tau_total = 1.0 / (2 * decay)
    l3 = theta2 / (2 * w0 * tau_total)
    if (pulse.alpha * theta2) ** 2 > 0.1:
        warnings.warn("|alpha theta2|^2 > 0.1: perturbative expansion invalid", stacklevel=2)
    return PerturbativeResult(theta2, theta2_nb, l2, l2, l3)


# ---------------------------------------------------------------- saturation


def filtered_pulse_energy(p: EmitterCavityParams, pulse: PulseParams) -> float:
    """Integral of |S(t)|^2 over time."""
    s = pulse.sigma_p
    t = np.linspace(-8 * s, 8 * s + 40 / p.gamma_cav, 20001)
    return float(integrate.trapezoid(cavity_filtered_pulse(pulse, p, t) ** 2, t))


def saturation_estimate(p: EmitterCavityParams, pulse: PulseParams, target_d: float) -> SaturationEstimate:
    """Order-of-magnitude saturation figures used to seed sweeps.

    The mean intracavity coupling is taken as the filtered pulse energy over
    ``2 sqrt(pi) sigma_p``.
    """
    phi = cooperativity(p)
    decay = total_decay(p)
    g2s2 = p.g**2 * filtered_pulse_energy(p, pulse) / (2 * math.sqrt(math.pi) * pulse.sigma_p)
    d_m = math.sqrt(phi**2 * decay**2 / (8 * g2s2))
    y = stark_detuning(p) / decay
    a = pulse.alpha
    x = a * phi / (2 * d_m)
    d_est = a * phi * y / (1 + y * y + a * a * phi * phi / (4 * d_m * d_m))
    d = target_d
    d_est_damp = math.exp(-(d * d / phi) * (1 + d * d / (2 * d_m * d_m)))
    ratio = d * (1 + d * d / (4 * d_m * d_m)) / (phi * decay)
    return SaturationEstimate(d_m, y, x, d_est_damp, d_est, target_d <= d_m, ratio)


# ---------------------------------------------------------------- presets


def _si_preset() -> EmitterCavityParams:
    gp = 2 * math.pi * 20e6
    gamma = 2 * math.pi * 280e6
    return EmitterCavityParams(
        name="si", g=gp, kappa=gamma, gamma_cav=gamma, omega0=2 * math.pi * 2.5e9,
        tau_r=2e-3, tau_nr=1.0 / (1.0 / 300e-9 - 1.0 / 2e-3), Q=1e6, lambda_nm=1078.0,
        n_index=3.5,
    )


def _znse_preset() -> EmitterCavityParams:
    lam, n_index, q, tau_r = 440.0, 2.7, 1e3, 500e-12
    v = (lam * 1e-9 / n_index) ** 3
    gamma = cavity_linewidth(lam, q)
    g = coupling_g(lam, n_index, v, tau_r)
    return EmitterCavityParams(
        name="znse", g=g, kappa=gamma, gamma_cav=gamma, omega0=100 * g,
        tau_r=tau_r, Q=q, lambda_nm=lam, n_index=n_index, V_mode=v,
    )


def _ion_preset() -> EmitterCavityParams:
    # Representative trapped-ion cavity values; only the cooperativity is anchored.
    lam = 866.0
    gamma = 2 * math.pi * 1.25e6
    g = 2 * math.pi * 0.92e6
    tau_r = 1.7 * gamma / (4 * g * g)
    return EmitterCavityParams(
        name="ion", g=g, kappa=gamma, gamma_cav=gamma, omega0=100 * g, tau_r=tau_r,
        Q=cavity_linewidth(lam, 1.0) / gamma, lambda_nm=lam, n_index=1.0,
        externally_sourced=True,
    )


def material_presets() -> dict[str, EmitterCavityParams]:
    return {"si": _si_preset(), "znse": _znse_preset(), "ion": _ion_preset()}


def get_preset(name: str) -> EmitterCavityParams:
    presets = material_presets()
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(presets)}")
    return presets[name]


# ---------------------------------------------------------------- sweeps


def point_for_saturation(p: EmitterCavityParams, sat: float, alpha_omega0: float) -> tuple[float, float]:
    """(alpha, omega0) for saturation ``alpha g'/omega0`` at fixed ``alpha omega0``.

    ``alpha_omega0`` is in units of ``g'``.
    """
    alpha = math.sqrt(alpha_omega0 * sat)
    omega0 = p.g_prime * math.sqrt(alpha_omega0 / sat)
    return alpha, omega0


def _sweep_point(args) -> dict:
    p, prod, sig, sat = args
    alpha, omega0 = point_for_saturation(p, sat, prod)
    res = simulate(p.with_(omega0=omega0), PulseParams(alpha, sig))
    return {
        "saturation_param": sat, "alpha": alpha, "omega0": omega0,
        "sigma_p": sig, "alpha_omega0": prod, "d": res.d, "F": res.F,
        "theta": res.theta, "L": res.L,
    }


def saturation_sweep(p: EmitterCavityParams, alpha_omega0_products, sigma_p_list, saturation_grid,
                     mapper=map) -> list[dict]:
    """Rows over every (product, sigma_p, saturation) point, product outermost."""
    products = list(alpha_omega0_products)
    sigmas = list(sigma_p_list)
    sats = list(saturation_grid)
    if not products or not sigmas or not sats:
        raise ValueError("sweep grids must be nonempty")
    tasks = [(p, prod, sig, sat) for prod in products for sig in sigmas for sat in sats]
    return list(mapper(_sweep_point, tasks))
