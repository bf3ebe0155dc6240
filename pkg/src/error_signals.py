import logging
import math
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.optimize import minimize_scalar
from sklearn.linear_model import LinearRegression

from src.opo_core import reflected_field, intracavity_field, steady_state_fields
from src.Classes.ConfigModels import OpoParams, PumpConfig, Detuning, PdhConfig, SpsConfig
from src.Classes.ResultModels import ErrorSample
from src.Classes.SimulationError import AboveThreshold, InvalidParameter, WindowTooNarrow
from src.Enums.PumpRegime import PumpRegime
from settings import N_JOBS

"""
Error signals derived from the reflected beam of the pumped cavity.

- PDH: the demodulated Pound-Drever-Hall form
  ε_PDH(φ) = Im[E_R(φ)E_R*(φ−φ_m) − E_R*(φ)E_R(φ+φ_m)], offset by the pump-induced
  value at resonance.
- SPS: the reflected power at the locked minimum, with the laser power fluctuations
  subtracted, used to hold the pump phase.
- ε_B: the alternative obtained by modulating the pump instead of reading the
  reflected minimum.
"""

logger = logging.getLogger(__name__)

# Points of the coarse grid searched before the bounded refinement of the reflected minimum
MIN_SEARCH_POINTS: int = 2001

SLOPE_STEP: float = 1e-6

ArrayLike = Union[float, np.ndarray]

SCAN_COLUMNS: List[str] = [
    "phi", "phi_p", "eps_pdh", "eps_pdh_raw", "eps_sps", "reflected_power", "transmitted_power", "valid"
]


def pdh_error_curve(params: OpoParams, gamma_mag: float, phi_p: ArrayLike, phi: ArrayLike, phi_m: float) -> np.ndarray:
    """
    Offset-free PDH error over broadcast arrays of pump phases and detunings.

    NaN wherever one of the three evaluation points is at or above threshold.
    """
    _, e_r = steady_state_fields(params, gamma_mag, phi_p, phi)
    _, e_r_lower = steady_state_fields(params, gamma_mag, phi_p, np.asarray(phi) - phi_m)
    _, e_r_upper = steady_state_fields(params, gamma_mag, phi_p, np.asarray(phi) + phi_m)
    return np.imag(e_r * np.conj(e_r_lower) - np.conj(e_r) * e_r_upper)


def _reflected_power(params: OpoParams, gamma_mag: float, phi_p: ArrayLike, phi: ArrayLike) -> np.ndarray:
    _, e_r = steady_state_fields(params, gamma_mag, phi_p, phi)
    return np.abs(e_r) ** 2


def pdh_error(params: OpoParams, pump: PumpConfig, det: Detuning, cfg: PdhConfig) -> float:
    """
    Evaluates the pump-modified PDH error signal at one detuning.

    Args:
        params (OpoParams): Cavity constants.
        pump (PumpConfig): Pump strength and phase.
        det (Detuning): Detuning phase φ.
        cfg (PdhConfig): Sideband offset φ_m and the offset to subtract.

    Returns:
        float: Im[E_R(φ)E_R*(φ−φ_m) − E_R*(φ)E_R(φ+φ_m)] − cfg.pdh_offset.

    Raises:
        AboveThreshold: If φ, φ−φ_m or φ+φ_m is at or above threshold.
    """
    e_r = reflected_field(params, pump, det)
    e_r_lower = reflected_field(params, pump, Detuning(phi=det.phi - cfg.phi_m))
    e_r_upper = reflected_field(params, pump, Detuning(phi=det.phi + cfg.phi_m))
    raw = (e_r * e_r_lower.conjugate() - e_r.conjugate() * e_r_upper).imag
    return raw - cfg.pdh_offset


def pdh_offset_at_resonance(params: OpoParams, pump: PumpConfig, cfg: PdhConfig) -> float:
    """
    The raw PDH error at φ = 0, i.e. the offset a compensation must subtract.

    It vanishes in the amplification and deamplification regimes and is negative at
    φ_p = 0, positive at φ_p = π.
    """
    return pdh_error(params, pump, Detuning(phi=0.0), cfg.model_copy(update={"pdh_offset": 0.0}))


def pdh_slope(params: OpoParams, pump: PumpConfig, cfg: PdhConfig, phi: float, step: float = SLOPE_STEP) -> float:
    """
    Central-difference dε_PDH/dφ at the given detuning.
    """
    upper = pdh_error(params, pump, Detuning(phi=phi + step), cfg)
    lower = pdh_error(params, pump, Detuning(phi=phi - step), cfg)
    return (upper - lower) / (2.0 * step)


def reflected_min(params: OpoParams, pump: PumpConfig, phi_search_window: float) -> Tuple[float, float]:
    """
    Locates the minimum of the reflected power |E_R(φ)|² inside [−w, w].

    A coarse grid of MIN_SEARCH_POINTS points brackets the minimum, which is then
    refined by a bounded Brent search to ~1e-10 rad. The refined point is kept only
    if it improves on the best grid point.

    Args:
        params (OpoParams): Cavity constants.
        pump (PumpConfig): Pump strength and phase.
        phi_search_window (float): Half-width w of the searched window in rad.

    Returns:
        Tuple[float, float]: (phi_min, power_min).

    Raises:
        InvalidParameter: If the window is not positive.
        AboveThreshold: If the whole window is above threshold.
        WindowTooNarrow: If the grid minimum sits on the window boundary.
    """
    if not phi_search_window > 0.0:
        raise InvalidParameter(f"Search window must be positive, got {phi_search_window}.")

    grid = np.linspace(-phi_search_window, phi_search_window, MIN_SEARCH_POINTS)
    power = _reflected_power(params, pump.gamma_mag, pump.phi_p, grid)
    if np.isnan(power).all():
        raise AboveThreshold(f"The whole window ±{phi_search_window} is at or above threshold.")

    index = int(np.nanargmin(power))
    if index == 0 or index == len(grid) - 1:
        raise WindowTooNarrow(
            f"Reflected-power minimum lies on the boundary of the window ±{phi_search_window} rad."
        )

    def objective(phi: float) -> float:
        value = float(_reflected_power(params, pump.gamma_mag, pump.phi_p, phi))
        return value if math.isfinite(value) else math.inf

    result = minimize_scalar(
        objective,
        bounds=(grid[index - 1], grid[index + 1]),
        method="bounded",
        options={"xatol": 1e-10},
    )

    phi_min, power_min = float(grid[index]), float(power[index])
    if result.success and result.fun < power_min:
        phi_min, power_min = float(result.x), float(result.fun)
    return phi_min, power_min


def sps_slope(
    params: OpoParams,
    pump: PumpConfig,
    phi_search_window: float,
    step: float = SLOPE_STEP,
) -> float:
    """
    Central-difference d|E_R^(min)|²/dφ_p: the discriminant slope of the SPS signal.

    Vanishes in the amplification and deamplification regimes.
    """
    upper = reflected_min(params, pump.model_copy(update={"phi_p": pump.phi_p + step}), phi_search_window)[1]
    lower = reflected_min(params, pump.model_copy(update={"phi_p": pump.phi_p - step}), phi_search_window)[1]
    return (upper - lower) / (2.0 * step)


def sps_error(reflected_power: ArrayLike, laser_power: ArrayLike, cfg: SpsConfig) -> ArrayLike:
    """
    SPS error: reflected power with the laser-power fluctuation and the lock-point offset removed.

        ε_SPS = P_R − k·(P_laser − 1) − sps_offset

    Args:
        reflected_power (ArrayLike): Measured reflected power(s).
        laser_power (ArrayLike): Measured laser power(s), normalized to 1.
        cfg (SpsConfig): Offset and compensation gain k (None is treated as 0).

    Raises:
        InvalidParameter: If a laser power is not positive.
    """
    if np.any(np.asarray(laser_power) <= 0.0):
        raise InvalidParameter("Laser power must be positive.")
    gain = cfg.power_comp_gain or 0.0
    return reflected_power - gain * (laser_power - 1.0) - cfg.sps_offset


def calibrate_power_compensation(reflected_power: np.ndarray, laser_power: np.ndarray) -> float:
    """
    Fits the laser-power compensation gain from an open-loop record.

    The gain is the least-squares slope of the reflected power against the laser power,
    clipped at zero.

    Args:
        reflected_power (np.ndarray): Reflected power samples.
        laser_power (np.ndarray): Simultaneous laser power samples.

    Returns:
        float: The compensation gain.

    Raises:
        InvalidParameter: If the records differ in length, hold fewer than two finite
            samples or the laser power does not vary.
    """
    reflected_power = np.asarray(reflected_power, dtype=float)
    laser_power = np.asarray(laser_power, dtype=float)
    if reflected_power.shape != laser_power.shape:
        raise InvalidParameter("Reflected and laser power records must have the same length.")

    finite = np.isfinite(reflected_power) & np.isfinite(laser_power)
    if finite.sum() < 2 or np.ptp(laser_power[finite]) == 0.0:
        raise InvalidParameter("Power compensation needs at least two samples with a varying laser power.")

    regression = LinearRegression().fit(laser_power[finite].reshape(-1, 1), reflected_power[finite])
    return max(float(regression.coef_[0]), 0.0)


def pump_modulation_field(params: OpoParams, pump: PumpConfig, det: Detuning) -> complex:
    """
    Field generated by a modulation of the pump: E_m = iγ·(√(1−R1)/√R1)·E_c*.
    """
    e_c = intracavity_field(params, pump, det)
    gamma = pump.gamma_mag * complex(math.cos(pump.phi_p), math.sin(pump.phi_p))
    return 1j * gamma * math.sqrt(1.0 - params.r1) / math.sqrt(params.r1) * e_c.conjugate()


def bowen_error(params: OpoParams, pump: PumpConfig, det: Detuning, beta: float = 1.0) -> float:
    """
    Error signal of the pump-modulation technique: ε_B = β·Im[E_R E_m* − E_R* E_m].

    The demodulated signal is linear in the pump modulation depth β.

    Raises:
        AboveThreshold: Propagated from the field solvers.
    """
    e_r = reflected_field(params, pump, det)
    e_m = pump_modulation_field(params, pump, det)
    return beta * (e_r * e_m.conjugate() - e_r.conjugate() * e_m).imag


def scan_cavity(
    params: OpoParams,
    pump: PumpConfig,
    cfg_pdh: PdhConfig,
    phi_range: Tuple[float, float],
    n_points: int,
    cfg_sps: Optional[SpsConfig] = None,
) -> List[ErrorSample]:
    """
    Open-loop scan of the cavity detuning over a uniform grid.

    Each sample carries the PDH error (raw and offset), the SPS error at unit laser
    power, and the reflected and transmitted powers; the transmitted power is taken
    as |E_c|². Points at or above threshold are kept with NaN observables and
    `valid=False`.

    Args:
        params (OpoParams): Cavity constants.
        pump (PumpConfig): Pump strength and phase.
        cfg_pdh (PdhConfig): PDH settings.
        phi_range (Tuple[float, float]): (phi_start, phi_end) in rad, both included.
        n_points (int): Number of grid points, at least 2.
        cfg_sps (Optional[SpsConfig]): SPS settings; defaults to no offset and no compensation.

    Returns:
        List[ErrorSample]: One sample per grid point, in scan order.

    Raises:
        InvalidParameter: If n_points < 2.
    """
    if n_points < 2:
        raise InvalidParameter(f"A scan needs at least 2 points, got {n_points}.")
    cfg_sps = cfg_sps or SpsConfig()

    phi = np.linspace(phi_range[0], phi_range[1], n_points)
    e_c, e_r = steady_state_fields(params, pump.gamma_mag, pump.phi_p, phi)
    raw = pdh_error_curve(params, pump.gamma_mag, pump.phi_p, phi, cfg_pdh.phi_m)
    reflected = np.abs(e_r) ** 2
    transmitted = np.abs(e_c) ** 2
    valid = np.isfinite(raw) & np.isfinite(reflected)
    eps_sps = sps_error(reflected, np.ones_like(reflected), cfg_sps)

    n_invalid = int((~valid).sum())
    if n_invalid:
        logger.warning("Cavity scan at phi_p=%.4f has %d samples at or above threshold.", pump.phi_p, n_invalid)

    return [
        ErrorSample(
            phi=float(phi[i]),
            phi_p=pump.phi_p,
            eps_pdh=float(raw[i] - cfg_pdh.pdh_offset),
            eps_pdh_raw=float(raw[i]),
            eps_sps=float(eps_sps[i]),
            reflected_power=float(reflected[i]),
            transmitted_power=float(transmitted[i]),
            valid=bool(valid[i]),
        )
        for i in range(n_points)
    ]


def scan_frame(samples: List[ErrorSample]) -> pd.DataFrame:
    """
    Tabulates scan samples with the columns of SCAN_COLUMNS.
    """
    return pd.DataFrame([sample.model_dump() for sample in samples], columns=SCAN_COLUMNS)


def scan_regimes(
    params: OpoParams,
    gamma_mag: float,
    cfg_pdh: PdhConfig,
    phi_range: Tuple[float, float],
    n_points: int,
    regimes: Iterable[PumpRegime] = tuple(PumpRegime),
    n_jobs: int = N_JOBS,
) -> Dict[PumpRegime, List[ErrorSample]]:
    """
    Runs one cavity scan per pump regime, fanning the scans out with joblib.

    Args:
        params (OpoParams): Cavity constants.
        gamma_mag (float): Pump strength shared by every regime.
        cfg_pdh (PdhConfig): PDH settings.
        phi_range (Tuple[float, float]): Scan range in rad.
        n_points (int): Grid points per scan.
        regimes (Iterable[PumpRegime]): Regimes to scan. Defaults to all four.
        n_jobs (int): joblib worker count. Defaults to settings.N_JOBS.

    Returns:
        Dict[PumpRegime, List[ErrorSample]]: Scans keyed by regime, in the order given.
    """
    regimes = list(regimes)
    scans = Parallel(n_jobs=n_jobs)(
        delayed(scan_cavity)(params, PumpConfig(gamma_mag=gamma_mag, phi_p=regime.phi_p), cfg_pdh, phi_range, n_points)
        for regime in regimes
    )
    return dict(zip(regimes, scans))


def calibrate_offsets(scan: List[ErrorSample]) -> Tuple[float, float]:
    """
    Electronic offset calibration from an open-loop scan.

    The PDH offset is the raw PDH error at the sample of minimal reflected power, and
    the SPS offset is that minimal reflected power, so both signals cross zero at the
    same detuning. Offsets are read from raw values, so calibrating twice gives the
    same result.

    Args:
        scan (List[ErrorSample]): Scan samples in grid order.

    Returns:
        Tuple[float, float]: (pdh_offset, sps_offset).

    Raises:
        InvalidParameter: If the scan holds no valid sample.
        WindowTooNarrow: If the minimum is the first or last sample of the scan.
    """
    reflected = np.array([s.reflected_power if s.valid else np.nan for s in scan], dtype=float)
    if not np.isfinite(reflected).any():
        raise InvalidParameter("Scan holds no valid sample to calibrate offsets from.")

    index = int(np.nanargmin(reflected))
    if index == 0 or index == len(scan) - 1:
        raise WindowTooNarrow("Reflected-power minimum lies on the boundary of the scan.")

    pdh_offset, sps_offset = scan[index].eps_pdh_raw, scan[index].reflected_power
    logger.info(
        "Offsets calibrated at phi=%.6g: pdh_offset=%.6g, sps_offset=%.6g", scan[index].phi, pdh_offset, sps_offset
    )
    return pdh_offset, sps_offset


def compare_error_signals(
    params: OpoParams,
    pump: PumpConfig,
    phi_p_grid: np.ndarray,
    phi_search_window: float,
    beta: float = 1.0,
) -> pd.DataFrame:
    """
    Tabulates the SPS and pump-modulation error signals against the pump phase.

    For each φ_p the cavity is taken as locked at its reflected minimum phi_min; the SPS
    error is the minimal reflected power referenced to its value at `pump.phi_p` (the
    chosen lock point), and ε_B is evaluated at the same detuning.

    Args:
        params (OpoParams): Cavity constants.
        pump (PumpConfig): Pump strength and the target pump phase.
        phi_p_grid (np.ndarray): Pump phases in rad, increasing.
        phi_search_window (float): Half-width of the minimum search in rad.
        beta (float): Pump modulation depth scaling ε_B.

    Returns:
        pd.DataFrame: Columns phi_p, phi_min, power_min, eps_sps, eps_bowen, d_eps_sps.
    """
    phi_p_grid = np.asarray(phi_p_grid, dtype=float)
    sps_reference = reflected_min(params, pump, phi_search_window)[1]

    rows = []
    for phi_p in phi_p_grid:
        swept = pump.model_copy(update={"phi_p": float(phi_p)})
        phi_min, power_min = reflected_min(params, swept, phi_search_window)
        rows.append({
            "phi_p": float(phi_p),
            "phi_min": phi_min,
            "power_min": power_min,
            "eps_sps": power_min - sps_reference,
            "eps_bowen": bowen_error(params, swept, Detuning(phi=phi_min), beta),
        })

    frame = pd.DataFrame(rows, columns=["phi_p", "phi_min", "power_min", "eps_sps", "eps_bowen"])
    frame["d_eps_sps"] = np.gradient(frame["eps_sps"].to_numpy(), phi_p_grid) if len(frame) > 1 else 0.0
    return frame


def zero_crossings(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Abscissae where y changes sign, linearly interpolated between neighbours.

    Exact zeros are reported once; NaN samples break the sequence.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    crossings = []
    for i in range(len(y) - 1):
        y0, y1 = y[i], y[i + 1]
        if not (np.isfinite(y0) and np.isfinite(y1)):
            continue
        if y0 == 0.0:
            if not crossings or crossings[-1] != x[i]:
                crossings.append(x[i])
        elif y0 * y1 < 0.0:
            crossings.append(x[i] - y0 * (x[i + 1] - x[i]) / (y1 - y0))
    if len(y) and y[-1] == 0.0 and (not crossings or crossings[-1] != x[-1]):
        crossings.append(x[-1])
    return np.array(crossings, dtype=float)
