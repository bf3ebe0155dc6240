import logging
import math
from typing import Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import least_squares

from src.SEEDS import make_rng
from src.Classes.ConfigModels import GaussianStateParams
from src.Classes.ResultModels import TomographyEstimate
from src.Classes.SimulationError import DegenerateFit, InsufficientData, InvalidParameter
from src.Classes.Traces import HomodyneTrace

"""
Displaced squeezed thermal states ρ = D(α)S(ξ)ρ_th S†(ξ)D†(α) seen through homodyne detection.

Quadratures are x_θ = a·e^{−iθ} + a†·e^{iθ}, so the vacuum variance is 1 and a real
coherent amplitude α gives ⟨x_θ⟩ = 2α·cosθ. With u = θ − arg(ξ)/2,

    Var(x_θ) = (1 + 2N_th)·[e^{−2|ξ|}cos²u + e^{2|ξ|}sin²u]
             = (1 + 2N_th)·[cosh 2|ξ| − sinh 2|ξ|·cos(2θ − arg ξ)].
"""

logger = logging.getLogger(__name__)

DEFAULT_BINS: int = 50

MIN_TRACE_SAMPLES: int = 1000

# r̂ below this many standard errors leaves arg(ξ) unidentified
DEGENERACY_SIGMAS: float = 3.0

ArrayLike = Union[float, np.ndarray]


def quadrature_stats(state: GaussianStateParams, theta: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """
    Mean and variance of the homodyne quadrature x_θ.

    Args:
        state (GaussianStateParams): The state.
        theta (ArrayLike): Local-oscillator phase(s) in rad.

    Returns:
        Tuple[ArrayLike, ArrayLike]: (mean, variance), with the shape of theta.
    """
    u = np.asarray(theta, dtype=float) - state.xi_arg / 2.0
    squeeze = 2.0 * state.xi_mag
    mean = 2.0 * state.alpha * np.cos(theta)
    variance = (1.0 + 2.0 * state.n_th) * (np.exp(-squeeze) * np.cos(u) ** 2 + np.exp(squeeze) * np.sin(u) ** 2)
    if np.ndim(theta) == 0:
        return float(mean), float(variance)
    return mean, variance


def squeezing_db(xi_mag: float, n_th: float) -> float:
    """
    Squeezing level −10·log10[(1 + 2N_th)·e^{−2|ξ|}] in dB; negative for anti-squeezed states.
    """
    if xi_mag < 0.0 or n_th < 0.0:
        raise InvalidParameter("Squeezing magnitude and thermal photon number must be non-negative.")
    return -10.0 * math.log10((1.0 + 2.0 * n_th) * math.exp(-2.0 * xi_mag))


def squeezing_from_db(db: float, n_th: float) -> float:
    """
    Squeezing magnitude |ξ| reaching a squeezing level in dB at a given thermal photon number.

    Raises:
        InvalidParameter: If n_th < 0 or the level is out of reach with |ξ| >= 0.
    """
    if n_th < 0.0:
        raise InvalidParameter("Thermal photon number must be non-negative.")
    xi_mag = 0.5 * (db * math.log(10.0) / 10.0 + math.log(1.0 + 2.0 * n_th))
    if xi_mag < 0.0:
        raise InvalidParameter(f"{db} dB is below the level {squeezing_db(0.0, n_th):.4g} dB of the unsqueezed state.")
    return xi_mag


def arg_xi_from_pump(phi_p: float) -> float:
    """arg(ξ) = (φ_p + π/2) mod 2π."""
    return float(np.mod(phi_p + math.pi / 2.0, 2.0 * math.pi))


def mean_photon_number(state: GaussianStateParams) -> float:
    """⟨n⟩ = α² + (1 + 2N_th)·cosh(2|ξ|)/2 − 1/2."""
    return state.alpha ** 2 + (1.0 + 2.0 * state.n_th) * math.cosh(2.0 * state.xi_mag) / 2.0 - 0.5


def ellipse_parameters(state: GaussianStateParams) -> Tuple[float, float, float]:
    """
    Phase-space uncertainty ellipse of the state.

    Returns:
        Tuple[float, float, float]: (angle, minor, major), where angle = arg(ξ)/2 mod π is the
            quadrature phase of minimal variance and the semi-axes are standard deviations.
    """
    scale = math.sqrt(1.0 + 2.0 * state.n_th)
    angle = math.fmod(state.xi_arg / 2.0, math.pi)
    return angle, scale * math.exp(-state.xi_mag), scale * math.exp(state.xi_mag)


def synthesize_trace(
    state: GaussianStateParams,
    theta_ramp: Tuple[float, float, int],
    seed: int,
) -> HomodyneTrace:
    """
    Draws one Gaussian quadrature sample per point of a linear local-oscillator ramp.

    Args:
        state (GaussianStateParams): The state.
        theta_ramp (Tuple[float, float, int]): (theta_start, theta_end, n_samples); both ends included.
        seed (int): Seed of the draws.

    Returns:
        HomodyneTrace: The synthetic trace.

    Raises:
        InvalidParameter: If n_samples < 1.
    """
    start, end, n_samples = theta_ramp
    if n_samples < 1:
        raise InvalidParameter(f"A homodyne trace needs at least one sample, got {n_samples}.")

    theta = np.linspace(start, end, int(n_samples))
    mean, variance = quadrature_stats(state, theta)
    x = make_rng(seed).normal(mean, np.sqrt(variance))
    return HomodyneTrace(pd.DataFrame({"theta": theta, "x": x}), seed=seed, theta_start=start, theta_end=end)


def _bin_indices(theta: np.ndarray, n_bins: int) -> np.ndarray:
    low, span = theta.min(), np.ptp(theta)
    return np.minimum(((theta - low) / span * n_bins).astype(int), n_bins - 1)


def _harmonic_start(cos2: np.ndarray, sin2: np.ndarray, second_moments: np.ndarray) -> Tuple[float, float, float]:
    # v = c0 + c1·cos2θ + c2·sin2θ, with c0 = (1+2N)cosh2r and (c1, c2) = −(1+2N)sinh2r·(cos ψ, sin ψ)
    design = np.column_stack([np.ones_like(cos2), cos2, sin2])
    (c0, c1, c2), *_ = np.linalg.lstsq(design, second_moments, rcond=None)
    amplitude = math.hypot(c1, c2)
    xi_arg = math.atan2(-c2, -c1)
    c0 = max(c0, 1e-12)
    ratio = min(amplitude / c0, 0.999)
    xi_mag = 0.5 * math.atanh(ratio)
    thermal = math.sqrt(max(c0 ** 2 - amplitude ** 2, 1e-12))
    return xi_mag, xi_arg, max((thermal - 1.0) / 2.0, 0.0)


def reconstruct(trace: HomodyneTrace, n_bins: int = DEFAULT_BINS) -> TomographyEstimate:
    """
    Moment-based Gaussian tomography of a homodyne trace.

    Samples are binned by θ. A weighted linear fit of the bin means gives a first α; the
    second moments of each bin about that mean curve then seed a harmonic fit for |ξ|,
    arg(ξ) and N_th. All four parameters are finally fitted jointly with scipy
    least_squares to the bin means and bin second moments, the model being averaged over
    the samples of each bin. Standard errors come from pinv(JᵀJ) of the weighted residuals.

    Args:
        trace (HomodyneTrace): The recorded quadratures.
        n_bins (int): Number of θ bins. Defaults to 50.

    Returns:
        TomographyEstimate: The fitted state and its standard errors.

    Raises:
        InsufficientData: If the trace has fewer than 1000 samples or spans less than π in θ.
        DegenerateFit: If |ξ| is within DEGENERACY_SIGMAS standard errors of 0; the partial
            estimate with an infinite arg(ξ) error is attached.
    """
    if trace.n_samples < MIN_TRACE_SAMPLES:
        raise InsufficientData(f"Trace holds {trace.n_samples} samples, at least {MIN_TRACE_SAMPLES} are needed.")
    if trace.theta_span < math.pi:
        raise InsufficientData(f"Trace spans {trace.theta_span:.4g} rad of theta, at least pi is needed.")
    if n_bins < 4:
        raise InvalidParameter(f"At least 4 bins are needed, got {n_bins}.")

    theta, x = trace.theta, trace.x
    raw_index = _bin_indices(theta, n_bins)
    all_counts = np.bincount(raw_index, minlength=n_bins)
    used = all_counts >= 2
    keep = used[raw_index]
    theta, x = theta[keep], x[keep]
    index = (np.cumsum(used) - 1)[raw_index[keep]]
    counts = all_counts[used].astype(float)
    n_used = len(counts)

    def bin_mean(values: np.ndarray) -> np.ndarray:
        return np.bincount(index, weights=values, minlength=n_used) / counts

    cos1, cos2, sin2 = np.cos(theta), np.cos(2.0 * theta), np.sin(2.0 * theta)
    mean_x = bin_mean(x)
    mean_cos = bin_mean(cos1)
    spread = np.maximum(bin_mean(x ** 2) - mean_x ** 2, 1e-12) * counts / (counts - 1.0)
    mean_sigma = np.sqrt(spread / counts)

    weights = 1.0 / mean_sigma ** 2
    alpha0 = float(np.sum(weights * mean_x * mean_cos) / (2.0 * np.sum(weights * mean_cos ** 2)))

    second = bin_mean((x - 2.0 * alpha0 * cos1) ** 2)
    second_sigma = np.maximum(second, 1e-12) * np.sqrt(2.0 / counts)
    xi_mag0, xi_arg0, n_th0 = _harmonic_start(bin_mean(cos2), bin_mean(sin2), second)

    def residuals(p: np.ndarray) -> np.ndarray:
        alpha, xi_mag, xi_arg, n_th = p
        squeeze = 2.0 * xi_mag
        thermal = 1.0 + 2.0 * n_th
        variance = thermal * (np.cosh(squeeze) - np.sinh(squeeze) * np.cos(2.0 * theta - xi_arg))
        mean_model = 2.0 * alpha * mean_cos
        # second moment about the stage-one mean curve: variance plus the squared mean mismatch
        second_model = bin_mean(variance + (2.0 * (alpha - alpha0) * cos1) ** 2)
        return np.concatenate([(mean_x - mean_model) / mean_sigma, (second - second_model) / second_sigma])

    result = least_squares(
        residuals,
        x0=np.array([alpha0, xi_mag0, xi_arg0, n_th0]),
        bounds=([-np.inf, 0.0, -np.inf, 0.0], [np.inf, np.inf, np.inf, np.inf]),
        jac="3-point",
        method="trf",
    )
    if not result.success:
        logger.warning("Tomography fit did not converge: %s", result.message)

    jac = result.jac
    cov = np.linalg.pinv(jac.T @ jac)
    errors = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    alpha, xi_mag, xi_arg, n_th = result.x

    estimate = TomographyEstimate(
        state=GaussianStateParams(alpha=alpha, xi_mag=xi_mag, xi_arg=xi_arg, n_th=n_th),
        alpha_err=errors[0],
        xi_mag_err=errors[1],
        xi_arg_err=errors[2],
        n_th_err=errors[3],
        n_samples=len(x),
        n_bins=n_used,
    )

    if not xi_mag > DEGENERACY_SIGMAS * errors[1]:
        degenerate = estimate.model_copy(update={"xi_arg_err": math.inf})
        raise DegenerateFit(
            f"|xi|={xi_mag:.3g} is within {DEGENERACY_SIGMAS:g} standard errors ({errors[1]:.3g}) of zero; "
            "arg(xi) is not identified.",
            estimate=degenerate,
        )
    return estimate
