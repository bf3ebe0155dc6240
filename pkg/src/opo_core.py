import cmath
import logging
import math
from typing import Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from src.Classes.ConfigModels import OpoParams, PumpConfig, Detuning
from src.Classes.SimulationError import AboveThreshold, SingularSystem, InvalidGain, InvalidParameter

"""
Steady-state and dynamic solutions of the seeded, pumped two-mirror cavity.

The input field is normalized to E_in = 1, so every field returned here is a
dimensionless complex ratio. The equilibrium of the round-trip equation is

    (1 − √R e^{iφ}) E_c − iγ E_c* = √(1−R1),

whose solution exists while |γ| < |1 − √R e^{iφ}|. Scalar operations raise
AboveThreshold outside that region; the array kernel returns NaN instead so that
scans can mark the samples invalid.
"""

logger = logging.getLogger(__name__)

# Smallest accepted |1 − √R e^{iφ}|² − |γ|²
THRESHOLD_EPSILON: float = 1e-9

ArrayLike = Union[float, np.ndarray]


def _denominator(sqrt_r: float, gamma_mag: float, phi: float) -> float:
    # |a|² − |γ|² with a = 1 − √R e^{iφ}; avoids the cancellation of 1+R−2√R·cosφ near resonance
    return abs(1.0 - sqrt_r * cmath.exp(1j * phi)) ** 2 - gamma_mag ** 2


def _check_below_threshold(params: OpoParams, gamma_mag: float, phi: float) -> float:
    sqrt_r = math.sqrt(params.roundtrip_reflectivity)
    denominator = _denominator(sqrt_r, gamma_mag, phi)
    if denominator <= THRESHOLD_EPSILON:
        raise AboveThreshold(
            f"Pump strength |gamma|={gamma_mag:.6g} is at or above threshold at phi={phi:.6g} "
            f"(|1-sqrt(R)e^(i phi)|={math.sqrt(denominator + gamma_mag ** 2):.6g})."
        )
    return denominator


def intracavity_field(params: OpoParams, pump: PumpConfig, det: Detuning) -> complex:
    """
    Computes the steady-state intracavity field E_c in closed form.

    E_c = √(1−R1)·(1 − √R e^{−iφ} + i|γ|e^{iφ_p}) / (|1 − √R e^{iφ}|² − |γ|²)

    Args:
        params (OpoParams): Cavity constants.
        pump (PumpConfig): Pump strength and phase.
        det (Detuning): Round-trip detuning phase.

    Returns:
        complex: E_c in units of E_in.

    Raises:
        AboveThreshold: If the denominator is not strictly positive (within THRESHOLD_EPSILON).
    """
    denominator = _check_below_threshold(params, pump.gamma_mag, det.phi)
    sqrt_r = math.sqrt(params.roundtrip_reflectivity)
    a_conj = 1.0 - sqrt_r * cmath.exp(-1j * det.phi)
    c = 1j * pump.gamma_mag * cmath.exp(1j * pump.phi_p)
    return math.sqrt(1.0 - params.r1) * (a_conj + c) / denominator


def solve_equilibrium_oracle(params: OpoParams, pump: PumpConfig, det: Detuning) -> complex:
    """
    Solves the equilibrium equation directly as a real 2x2 linear system.

    Writing E_c = x + iy, a = 1 − √R e^{iφ} and c = iγ, the equation a·E_c − c·E_c* = √(1−R1)
    splits into

        [[a_r − c_r, −a_i − c_i], [a_i − c_i, a_r + c_r]] · [x, y] = [√(1−R1), 0]

    with determinant |a|² − |γ|². This path shares no algebra with `intracavity_field`.

    Raises:
        SingularSystem: If the determinant vanishes (exactly at threshold).
    """
    sqrt_r = math.sqrt(params.roundtrip_reflectivity)
    a = 1.0 - sqrt_r * cmath.exp(1j * det.phi)
    c = 1j * pump.gamma_mag * cmath.exp(1j * pump.phi_p)

    matrix = np.array([
        [a.real - c.real, -a.imag - c.imag],
        [a.imag - c.imag, a.real + c.real],
    ])
    rhs = np.array([math.sqrt(1.0 - params.r1), 0.0])

    if abs(np.linalg.det(matrix)) <= THRESHOLD_EPSILON:
        raise SingularSystem(f"Equilibrium system is singular at |gamma|={pump.gamma_mag:.6g}, phi={det.phi:.6g}.")

    try:
        x, y = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as e:
        raise SingularSystem(f"Equilibrium system could not be solved: {e}")
    return complex(x, y)


def reflected_field(params: OpoParams, pump: PumpConfig, det: Detuning) -> complex:
    """
    Computes the reflected field E_R by composing the reflection law with the closed-form E_c.

    E_R = −√R1 + (√(1−R1)/√R1)·(√R e^{iφ} E_c + i|γ|e^{iφ_p} E_c*)

    With |γ| = 0 this is the two-mirror reflection coefficient of the empty cavity.

    Raises:
        AboveThreshold: Propagated from `intracavity_field`.
    """
    e_c = intracavity_field(params, pump, det)
    sqrt_r1 = math.sqrt(params.r1)
    sqrt_r = math.sqrt(params.roundtrip_reflectivity)
    c = 1j * pump.gamma_mag * cmath.exp(1j * pump.phi_p)
    transmitted = math.sqrt(1.0 - params.r1) / sqrt_r1
    return -sqrt_r1 + transmitted * (sqrt_r * cmath.exp(1j * det.phi) * e_c + c * e_c.conjugate())


def reflected_field_closed_form(params: OpoParams, pump: PumpConfig, det: Detuning) -> complex:
    """
    Expanded single-fraction expression of E_R, kept as a cross-check only.

        E_R = [(√R e^{iφ} − R1)(1 − √R e^{−iφ}) + i((1−R1)e^{iφ_p} + |γ|)|γ|] / (√R1·D)

    with D = 1 + R − 2√R cosφ − |γ|². The expression carries i·|γ|² where the
    substitution performed by `reflected_field` yields a real |γ|², so

        reflected_field_closed_form − reflected_field = (i − 1)·|γ|² / (√R1·D)

    exactly. The two agree when |γ| = 0. `reflected_field` is the authoritative value.

    Raises:
        AboveThreshold: If D is not strictly positive.
    """
    denominator = _check_below_threshold(params, pump.gamma_mag, det.phi)
    r = params.roundtrip_reflectivity
    sqrt_r = math.sqrt(r)
    g = pump.gamma_mag
    first = (sqrt_r * cmath.exp(1j * det.phi) - params.r1) * (1.0 - sqrt_r * cmath.exp(-1j * det.phi))
    second = 1j * ((1.0 - params.r1) * cmath.exp(1j * pump.phi_p) + g) * g
    return (first + second) / (math.sqrt(params.r1) * denominator)


def steady_state_fields(
    params: OpoParams,
    gamma_mag: float,
    phi_p: ArrayLike,
    phi: ArrayLike,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized E_c and E_R for arrays of pump phases and detunings.

    `phi_p` and `phi` are broadcast against each other. Points at or above threshold
    come back as complex NaN rather than raising, so that scans and loop samples can be
    flagged invalid and kept.

    Args:
        params (OpoParams): Cavity constants.
        gamma_mag (float): Pump strength |γ|.
        phi_p (ArrayLike): Pump phase(s) in rad.
        phi (ArrayLike): Detuning phase(s) in rad.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (E_c, E_R) as complex arrays of the broadcast shape.
    """
    phi_p, phi = np.broadcast_arrays(np.asarray(phi_p, dtype=float), np.asarray(phi, dtype=float))
    sqrt_r = math.sqrt(params.roundtrip_reflectivity)
    sqrt_r1 = math.sqrt(params.r1)
    s = math.sqrt(1.0 - params.r1)

    rotation = np.exp(1j * phi)
    a = 1.0 - sqrt_r * rotation
    c = 1j * gamma_mag * np.exp(1j * phi_p)
    denominator = np.abs(a) ** 2 - gamma_mag ** 2
    valid = denominator > THRESHOLD_EPSILON

    safe_denominator = np.where(valid, denominator, 1.0)
    e_c = s * (np.conj(a) + c) / safe_denominator
    e_r = -sqrt_r1 + (s / sqrt_r1) * (sqrt_r * rotation * e_c + c * np.conj(e_c))

    nan = complex(np.nan, np.nan)
    return np.where(valid, e_c, nan), np.where(valid, e_r, nan)


class CavityKernel:
    """
    Scalar field evaluator with the cavity constants resolved once.

    Used by per-sample loops, where the array kernel's overhead dominates. Points at or
    above threshold return complex NaN.
    """

    def __init__(self, params: OpoParams, gamma_mag: float) -> None:
        self.sqrt_r = math.sqrt(params.roundtrip_reflectivity)
        self.sqrt_r1 = math.sqrt(params.r1)
        self.source = math.sqrt(1.0 - params.r1)
        self.gamma_mag = gamma_mag

    def fields(self, phi_p: float, phi: float) -> Tuple[complex, complex]:
        """
        Returns (E_c, E_R) at one pump phase and detuning.
        """
        rotation = cmath.exp(1j * phi)
        a = 1.0 - self.sqrt_r * rotation
        denominator = a.real * a.real + a.imag * a.imag - self.gamma_mag * self.gamma_mag
        if denominator <= THRESHOLD_EPSILON:
            nan = complex(math.nan, math.nan)
            return nan, nan
        c = 1j * self.gamma_mag * cmath.exp(1j * phi_p)
        e_c = self.source * (a.conjugate() + c) / denominator
        e_r = -self.sqrt_r1 + (self.source / self.sqrt_r1) * (self.sqrt_r * rotation * e_c + c * e_c.conjugate())
        return e_c, e_r


def gain_ratio(params: OpoParams, pump_mag: float) -> float:
    """
    Computes the parametric gain G = |(1+δ)/(1−δ)|² at resonance, with δ = |γ|/(1−√R).

    G is the ratio of the resonant output powers in the amplification (φ_p = −π/2) and
    deamplification (φ_p = +π/2) regimes.

    Args:
        params (OpoParams): Cavity constants.
        pump_mag (float): Pump strength |γ|.

    Returns:
        float: The gain ratio, 1 for an unpumped cavity.

    Raises:
        InvalidParameter: If pump_mag is negative.
        AboveThreshold: If δ >= 1.
    """
    if pump_mag < 0.0:
        raise InvalidParameter(f"Pump strength must be non-negative, got {pump_mag}.")
    delta = pump_mag / params.threshold
    if delta >= 1.0:
        raise AboveThreshold(
            f"Pump strength |gamma|={pump_mag:.6g} is at or above the threshold 1-sqrt(R)={params.threshold:.6g}."
        )
    return ((1.0 + delta) / (1.0 - delta)) ** 2


def invert_gain(params: OpoParams, gain: float) -> float:
    """
    Recovers the pump strength producing a measured gain: |γ| = (1−√R)(√G−1)/(√G+1).

    Raises:
        InvalidGain: If G < 1.
    """
    if not gain >= 1.0:
        raise InvalidGain(f"Gain ratio must be at least 1, got {gain}.")
    root = math.sqrt(gain)
    return params.threshold * (root - 1.0) / (root + 1.0)


def integrate_dynamics(
    params: OpoParams,
    pump: PumpConfig,
    det: Detuning,
    e0: complex,
    t_end: float,
    dt: float,
) -> pd.Series:
    """
    Integrates the first-order round-trip equation of the intracavity field.

        τ·dE_c/dt = √(1−R1) + (√R e^{iφ} − 1)·E_c + iγ·E_c*

    The equation is solved in units of τ as a real 2-vector with scipy's solve_ivp. Above
    threshold the amplitude grows without bound; that trajectory is returned as is.

    Args:
        params (OpoParams): Cavity constants.
        pump (PumpConfig): Pump strength and phase.
        det (Detuning): Detuning phase.
        e0 (complex): Initial intracavity field.
        t_end (float): Integration horizon in s.
        dt (float): Output sampling step in s, at most one round-trip time.

    Returns:
        pd.Series: Complex E_c(t) indexed by time in seconds, from t = 0 to exactly t_end; the last
            step is shorter than dt when t_end is not a multiple of it.

    Raises:
        InvalidParameter: If t_end <= 0, dt <= 0 or dt > τ.
    """
    tau = params.roundtrip_time
    if t_end <= 0.0:
        raise InvalidParameter(f"t_end must be positive, got {t_end}.")
    if dt <= 0.0 or dt > tau * (1.0 + 1e-12):
        raise InvalidParameter(f"dt must lie in (0, tau={tau:.6g}], got {dt}.")

    sqrt_r = math.sqrt(params.roundtrip_reflectivity)
    source = math.sqrt(1.0 - params.r1)
    b = sqrt_r * cmath.exp(1j * det.phi) - 1.0
    c = 1j * pump.gamma_mag * cmath.exp(1j * pump.phi_p)

    def rhs(_u: float, y: np.ndarray) -> np.ndarray:
        field = complex(y[0], y[1])
        derivative = source + b * field + c * field.conjugate()
        return np.array([derivative.real, derivative.imag])

    # The last step is shortened so the grid closes on t_end
    times = np.arange(0.0, t_end, dt)
    times = np.append(times[times < t_end * (1.0 - 1e-12)], t_end)
    solution = solve_ivp(
        rhs,
        (0.0, t_end / tau),
        np.array([complex(e0).real, complex(e0).imag]),
        method="DOP853",
        t_eval=times / tau,
        rtol=1e-10,
        atol=1e-12,
    )
    if not solution.success:
        logger.warning("Field integration stopped early: %s", solution.message)

    values = solution.y[0] + 1j * solution.y[1]
    return pd.Series(values, index=pd.Index(times[: len(values)], name="t"), name="e_c")
