import logging
import math
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.signal import periodogram

from src.SEEDS import make_rng
from src.opo_core import CavityKernel
from src.error_signals import (
    scan_cavity,
    calibrate_offsets,
    reflected_min,
    pdh_error_curve,
    pdh_slope,
    sps_slope,
    sps_error,
    calibrate_power_compensation,
)
from src.Classes.ConfigModels import ExperimentConfig, LockConfig, NoiseConfig, PumpConfig
from src.Classes.LoopState import PIState, PlantState
from src.Classes.ResultModels import LockCalibration, RinReport
from src.Classes.SimulationError import (
    CalibrationError,
    EmptyWindow,
    InvalidParameter,
    LockFailed,
)
from src.Classes.Traces import LockTrace, LOCK_TRACE_COLUMNS
from src.Enums.LockScenario import LockScenario
from src.Enums.PumpRegime import PumpRegime

"""
Discrete-time simulation of the two stabilization loops.

The plant is quasi-static: the optical fields follow the cavity phase φ and the pump
phase φ_p instantly, because the cavity buildup time is far below the servo
timescales. Each phase is the sum of a set point, a piezo displacement, a random walk
and a mechanical vibration:

    φ   = φ_set   + piezo_φ   + walk_φ   + A_φ·sin(2πf·t + ψ_φ)
    φ_p = φ_p,set + piezo_φp  + walk_φp  + A_φp·sin(2πf·t + ψ_φp)

Each piezo follows its command through a first-order low-pass and saturates at the
actuator range. The laser power is 1 + a·x with x a unit-variance low-pass process.
Every power read by the loops is scaled by the laser power.

The loop errors are divided by the discriminant slopes measured during acquisition,
so both PI controllers work in radians of the phase they act on.
"""

logger = logging.getLogger(__name__)

# Below this |dε_SPS/dφ_p| the pump loop has no discriminant and stays open
SPS_SLOPE_FLOOR: float = 1e-6

# Lower bound of the lock-failure threshold, in rad of residual cavity phase
LOCK_RMS_FLOOR_PHI: float = 1e-6

# Ratio of the closed-loop PDH residual to its open-loop value that counts as a failed lock
LOCK_RMS_FACTOR: float = 5.0


def pi_step(
    controller_state: PIState,
    error: float,
    kp: float,
    ki: float,
    dt: float,
    integrator_clamp: float = math.inf,
    actuator_range: float = math.inf,
) -> Tuple[float, PIState]:
    """
    Advances a PI controller by one sample.

    The integrator is forward Euler and clamped to ±integrator_clamp (anti-windup); the
    command is saturated to ±actuator_range.

    Args:
        controller_state (PIState): Integrator memory.
        error (float): Loop error in actuator units.
        kp (float): Proportional gain.
        ki (float): Integral gain in 1/s.
        dt (float): Sample period in s.
        integrator_clamp (float): Anti-windup bound.
        actuator_range (float): Command saturation.

    Returns:
        Tuple[float, PIState]: The command and the updated controller state.
    """
    integral = controller_state.integral + ki * error * dt
    integral = min(max(integral, -integrator_clamp), integrator_clamp)
    command = kp * error + integral
    command = min(max(command, -actuator_range), actuator_range)
    return command, PIState(integral=integral)


def step_plant(
    state: PlantState,
    command_phi: float,
    command_phip: float,
    shocks: np.ndarray,
    noise: NoiseConfig,
    lock_cfg: LockConfig,
) -> PlantState:
    """
    Advances the slow plant state by one sample period.

    Args:
        state (PlantState): Current state.
        command_phi (float): Cavity piezo command in rad.
        command_phip (float): Pump piezo command in rad.
        shocks (np.ndarray): Three standard normal draws driving the cavity walk, the pump
            walk and the laser noise.
        noise (NoiseConfig): Disturbance strengths.
        lock_cfg (LockConfig): Sample rate and actuator limits.

    Returns:
        PlantState: The state one sample later.
    """
    dt = lock_cfg.dt
    follow = 1.0 - math.exp(-2.0 * math.pi * lock_cfg.actuator_bandwidth * dt)
    limit = lock_cfg.actuator_range
    step = noise.walk_sigma * math.sqrt(dt)
    memory = math.exp(-2.0 * math.pi * noise.laser_rin_corner * dt)

    piezo_phi = state.piezo_phi + follow * (command_phi - state.piezo_phi)
    piezo_phip = state.piezo_phip + follow * (command_phip - state.piezo_phip)

    return PlantState(
        t=state.t + dt,
        piezo_phi=min(max(piezo_phi, -limit), limit),
        piezo_phip=min(max(piezo_phip, -limit), limit),
        walk_phi=state.walk_phi + step * shocks[0],
        walk_phip=state.walk_phip + step * shocks[1],
        laser_noise=memory * state.laser_noise + math.sqrt(1.0 - memory * memory) * shocks[2],
    )


def plant_phases(
    state: PlantState,
    noise: NoiseConfig,
    phi_set: float,
    phi_p_set: float,
    vibration_phases: Tuple[float, float],
) -> Tuple[float, float, float]:
    """
    Cavity phase, pump phase and laser power seen by the optics at the state's time.
    """
    angle = 2.0 * math.pi * noise.mech_freq * state.t
    phi = phi_set + state.piezo_phi + state.walk_phi + noise.mech_amp_phi * math.sin(angle + vibration_phases[0])
    phi_p = phi_p_set + state.piezo_phip + state.walk_phip + noise.mech_amp_phip * math.sin(angle + vibration_phases[1])
    laser_power = max(1.0 + noise.laser_rin_amp * state.laser_noise, 1e-9)
    return phi, phi_p, laser_power


def simulate(
    config: ExperimentConfig,
    calibration: LockCalibration,
    duration: float,
    phi_start: float,
    engage_pdh_at: Optional[float] = None,
    engage_sps_at: Optional[float] = None,
    phi_p_rate: float = 0.0,
    pdh_offset_track: Optional[np.ndarray] = None,
    seed: Optional[int] = None,
) -> LockTrace:
    """
    Runs the plant and both loops for a given duration.

    Loops with no engage time stay open (command 0). The pump set point starts at
    `config.pump.phi_p` and ramps at `phi_p_rate`. Samples where the plant wanders above
    threshold are recorded with NaN observables; the loops hold their integrators there.

    Args:
        config (ExperimentConfig): Cavity, pump, loop and noise settings.
        calibration (LockCalibration): Offsets, slopes and compensation gain used by the loops.
        duration (float): Simulated time in s.
        phi_start (float): Cavity phase set point (the detuning with the piezo at rest).
        engage_pdh_at (Optional[float]): Time at which the cavity loop closes.
        engage_sps_at (Optional[float]): Time at which the pump loop closes; ignored when
            `calibration.sps_engaged` is False.
        phi_p_rate (float): Pump set-point ramp in rad/s.
        pdh_offset_track (Optional[np.ndarray]): Per-sample PDH offsets replacing the
            calibrated one.
        seed (Optional[int]): Overrides `config.lock.seed`.

    Returns:
        LockTrace: One row per sample.

    Raises:
        InvalidParameter: If the duration holds no sample or the offset track has the wrong length.
    """
    lock_cfg, noise = config.lock, config.noise
    dt = lock_cfg.dt
    n_steps = int(round(duration * lock_cfg.sample_rate))
    if n_steps < 1:
        raise InvalidParameter(f"Duration {duration} s holds no sample at {lock_cfg.sample_rate} Hz.")
    if pdh_offset_track is not None and len(pdh_offset_track) != n_steps:
        raise InvalidParameter("PDH offset track must hold one value per sample.")

    rng = make_rng(lock_cfg.seed if seed is None else seed)
    vibration_phases = tuple(rng.uniform(0.0, 2.0 * math.pi, 2))
    state = PlantState(laser_noise=float(rng.standard_normal()))
    shocks = rng.standard_normal((n_steps, 3))

    kernel = CavityKernel(config.opo, config.pump.gamma_mag)
    phi_m = config.pdh.phi_m
    sps_cfg = config.sps.model_copy(update={
        "sps_offset": calibration.sps_offset,
        "power_comp_gain": calibration.power_comp_gain,
    })
    pdh_engage = math.inf if engage_pdh_at is None else engage_pdh_at
    sps_engage = math.inf if engage_sps_at is None or not calibration.sps_engaged else engage_sps_at

    pdh_controller, sps_controller = PIState(), PIState()
    record = np.empty((n_steps, len(LOCK_TRACE_COLUMNS)))

    for k in range(n_steps):
        t = k * dt
        state = replace(state, t=t)
        phi_p_set = config.pump.phi_p + phi_p_rate * t
        phi, phi_p, laser = plant_phases(state, noise, phi_start, phi_p_set, vibration_phases)

        e_c, e_r = kernel.fields(phi_p, phi)
        _, e_r_lower = kernel.fields(phi_p, phi - phi_m)
        _, e_r_upper = kernel.fields(phi_p, phi + phi_m)

        offset = calibration.pdh_offset if pdh_offset_track is None else pdh_offset_track[k]
        p_trans = laser * (e_c.real ** 2 + e_c.imag ** 2)
        p_refl = laser * (e_r.real ** 2 + e_r.imag ** 2)
        eps_pdh = laser * (e_r * e_r_lower.conjugate() - e_r.conjugate() * e_r_upper).imag - offset
        eps_sps = sps_error(p_refl, laser, sps_cfg)

        u_pdh = u_sps = 0.0
        if t >= pdh_engage:
            error = -eps_pdh / calibration.pdh_slope if math.isfinite(eps_pdh) else 0.0
            u_pdh, pdh_controller = pi_step(
                pdh_controller, error, lock_cfg.kp_pdh, lock_cfg.ki_pdh, dt,
                lock_cfg.integrator_clamp, lock_cfg.actuator_range,
            )
        if t >= sps_engage:
            error = -eps_sps / calibration.sps_slope if math.isfinite(eps_sps) else 0.0
            u_sps, sps_controller = pi_step(
                sps_controller, error, lock_cfg.kp_sps, lock_cfg.ki_sps, dt,
                lock_cfg.integrator_clamp, lock_cfg.actuator_range,
            )

        record[k] = (t, phi, phi_p, p_trans, p_refl, eps_pdh, eps_sps, u_pdh, u_sps, laser)
        state = step_plant(state, u_pdh, u_sps, shocks[k], noise, lock_cfg)

    frame = pd.DataFrame(record, columns=LOCK_TRACE_COLUMNS)
    n_invalid = int(frame["p_trans"].isna().sum())
    if n_invalid:
        logger.warning("%d of %d samples were at or above threshold.", n_invalid, n_steps)
    return LockTrace(frame, lock_cfg.sample_rate)


def _open_loop_calibration(config: ExperimentConfig, phi_min: float, power_min: float,
                           pdh_offset: float, sps_offset: float) -> LockCalibration:
    pdh_cfg = config.pdh.model_copy(update={"pdh_offset": pdh_offset})
    slope_pdh = pdh_slope(config.opo, config.pump, pdh_cfg, phi_min)
    slope_sps = sps_slope(config.opo, config.pump, config.lock.scan_half_width)
    engaged = config.pump.gamma_mag > 0.0 and abs(slope_sps) >= SPS_SLOPE_FLOOR
    return LockCalibration(
        pdh_offset=pdh_offset,
        sps_offset=sps_offset,
        phi_min=phi_min,
        power_min=power_min,
        pdh_slope=slope_pdh,
        sps_slope=slope_sps if engaged else 0.0,
        power_comp_gain=0.0,
        sps_engaged=engaged,
    )


def _check_lock(trace: LockTrace, settle_time: float, phi_target: float, open_loop_rms: float,
                pdh_slope_value: float, half_linewidth: float) -> None:
    tail = trace.window(0.9 * settle_time, settle_time)
    if tail.empty:
        raise LockFailed("Settle window holds no sample to judge the lock.")

    eps = tail["eps_pdh"].to_numpy()
    if not np.isfinite(eps).all():
        raise LockFailed("Cavity left the below-threshold region during the settle window.")

    residual = float(np.sqrt(np.mean(eps ** 2)))
    limit = LOCK_RMS_FACTOR * open_loop_rms + abs(pdh_slope_value) * LOCK_RMS_FLOOR_PHI
    if residual > limit:
        raise LockFailed(f"PDH residual {residual:.3g} exceeds {limit:.3g} at the end of the settle window.")

    drift = abs(float(tail["phi"].mean()) - phi_target)
    if drift > half_linewidth:
        raise LockFailed(f"Cavity locked {drift:.3g} rad away from the target, beyond half a linewidth.")


def acquire_lock(config: ExperimentConfig) -> Tuple[LockCalibration, LockTrace]:
    """
    Runs the full lock acquisition at the configured pump phase.

    1. Open-loop cavity scan and electronic offset calibration.
    2. Refinement of the reflected minimum; the offsets are re-read there.
    3. Discriminant slopes of both error signals.
    4. Laser-power compensation gain, fitted on an open-loop record taken at the
       minimum unless `config.sps.power_comp_gain` is set.
    5. Closed-loop run of `config.lock.duration` starting `capture_offset` away from
       the minimum: the cavity loop closes at t = 0, the pump loop at half the settle time.

    The lock fails when the PDH residual RMS over the last 10% of the settle window
    exceeds LOCK_RMS_FACTOR times its open-loop value, or when the cavity settles more
    than half a linewidth away from the minimum.

    Args:
        config (ExperimentConfig): Experiment settings.

    Returns:
        Tuple[LockCalibration, LockTrace]: The calibration in use and the closed-loop trace.

    Raises:
        LockFailed: If the cavity loop does not settle or has no discriminant.
        WindowTooNarrow: If the reflected minimum is outside the scan window.
    """
    params, pump, lock_cfg = config.opo, config.pump, config.lock
    width = lock_cfg.scan_half_width

    scan = scan_cavity(params, pump, config.pdh.model_copy(update={"pdh_offset": 0.0}), (-width, width),
                       lock_cfg.scan_points)
    calibrate_offsets(scan)

    phi_min, power_min = reflected_min(params, pump, width)
    pdh_offset = float(pdh_error_curve(params, pump.gamma_mag, pump.phi_p, phi_min, config.pdh.phi_m))
    calibration = _open_loop_calibration(config, phi_min, power_min, pdh_offset, power_min)
    logger.info("Refined offsets at phi_min=%.6g: pdh_offset=%.6g, sps_offset=%.6g",
                phi_min, pdh_offset, power_min)

    if abs(calibration.pdh_slope) < 1e-12:
        raise LockFailed(f"PDH signal has no slope at phi_min={phi_min:.6g}.")
    if not calibration.sps_engaged:
        logger.warning("SPS slope vanishes at phi_p=%.4f; the pump loop stays open.", pump.phi_p)

    open_loop = simulate(config, calibration, lock_cfg.settle_time, phi_min, seed=lock_cfg.seed + 1)
    open_loop_rms = float(np.sqrt(np.nanmean(open_loop["eps_pdh"] ** 2)))

    power_comp_gain = config.sps.power_comp_gain
    if power_comp_gain is None:
        try:
            power_comp_gain = calibrate_power_compensation(open_loop["p_refl"], open_loop["p_laser"])
        except InvalidParameter:
            power_comp_gain = power_min
        logger.info("Power compensation gain calibrated to %.6g", power_comp_gain)
    calibration = calibration.model_copy(update={"power_comp_gain": power_comp_gain})

    logger.info("Engaging PDH loop at t=0 and SPS loop at t=%.4g s", lock_cfg.settle_time / 2)
    trace = simulate(
        config,
        calibration,
        lock_cfg.duration,
        phi_min + lock_cfg.capture_offset,
        engage_pdh_at=0.0,
        engage_sps_at=lock_cfg.settle_time / 2,
    )

    try:
        _check_lock(trace, lock_cfg.settle_time, phi_min, open_loop_rms, calibration.pdh_slope, params.threshold / 2)
    except LockFailed as e:
        logger.warning("Lock failed: %s", e.message)
        raise
    return calibration, trace


def scan_pump_phase(
    config: ExperimentConfig,
    phi_p_rate: float,
    duration: float,
    offset_mode: str = "tracking",
) -> LockTrace:
    """
    Ramps the pump phase while the cavity stays PDH-locked; the pump loop is open.

    Starting from `config.pump.phi_p`, the pump set point increases at `phi_p_rate`. In
    "tracking" mode the PDH offset follows the value at resonance of the current set
    point, so the cavity stays on φ = 0 over the ramp. In "fixed" mode the offset of the
    starting regime is held and the cavity follows the moving zero of the uncompensated
    signal; only tracking runs are checked for lock.

    Args:
        config (ExperimentConfig): Experiment settings.
        phi_p_rate (float): Ramp rate in rad/s.
        duration (float): Ramp duration in s.
        offset_mode (str): "tracking" or "fixed".

    Returns:
        LockTrace: The ramp trace.

    Raises:
        InvalidParameter: For an unknown offset mode.
        LockFailed: If the cavity loop does not settle within the settle window.
    """
    if offset_mode not in ("tracking", "fixed"):
        raise InvalidParameter(f"Unknown offset mode '{offset_mode}', expected 'tracking' or 'fixed'.")

    params, pump, lock_cfg = config.opo, config.pump, config.lock
    n_steps = int(round(duration * lock_cfg.sample_rate))
    if n_steps < 1:
        raise InvalidParameter(f"Duration {duration} s holds no sample at {lock_cfg.sample_rate} Hz.")

    phi_p_set = pump.phi_p + phi_p_rate * np.arange(n_steps) * lock_cfg.dt
    start_offset = float(pdh_error_curve(params, pump.gamma_mag, pump.phi_p, 0.0, config.pdh.phi_m))
    offsets = None
    if offset_mode == "tracking":
        offsets = pdh_error_curve(params, pump.gamma_mag, phi_p_set, 0.0, config.pdh.phi_m)

    calibration = LockCalibration(
        pdh_offset=start_offset,
        sps_offset=0.0,
        phi_min=0.0,
        power_min=0.0,
        pdh_slope=pdh_slope(params, pump, config.pdh.model_copy(update={"pdh_offset": start_offset}), 0.0),
        sps_slope=0.0,
        power_comp_gain=0.0,
        sps_engaged=False,
    )
    logger.info("Ramping phi_p from %.4f at %.4g rad/s with %s PDH offset", pump.phi_p, phi_p_rate, offset_mode)

    open_loop = simulate(config, calibration, lock_cfg.settle_time, 0.0, seed=lock_cfg.seed + 1)
    open_loop_rms = float(np.sqrt(np.nanmean(open_loop["eps_pdh"] ** 2)))

    trace = simulate(
        config,
        calibration,
        duration,
        lock_cfg.capture_offset,
        engage_pdh_at=0.0,
        phi_p_rate=phi_p_rate,
        pdh_offset_track=offsets,
    )
    if offset_mode == "tracking" and duration >= lock_cfg.settle_time:
        _check_lock(trace, lock_cfg.settle_time, 0.0, open_loop_rms, calibration.pdh_slope, params.threshold / 2)
    return trace


def rin(trace: LockTrace, window: Tuple[float, float]) -> RinReport:
    """
    Relative intensity noise of the transmitted power: std/mean over t_start <= t < t_end.

    Raises:
        EmptyWindow: If the window holds fewer than 100 finite samples or no transmitted power.
    """
    t_start, t_end = window
    power = trace.window(t_start, t_end)["p_trans"].to_numpy()
    power = power[np.isfinite(power)]
    if len(power) < 100:
        raise EmptyWindow(f"Window {window} holds {len(power)} valid samples, at least 100 are needed.")

    mean = float(np.mean(power))
    if mean <= 0.0:
        raise EmptyWindow(f"No transmitted power in window {window}.")
    return RinReport(rin=float(np.std(power)) / mean, window=(t_start, t_end), n_samples=len(power))


def scenario_config(config: ExperimentConfig, scenario: LockScenario) -> ExperimentConfig:
    """
    Applies a stabilization scenario to an experiment config.

    The pump is switched off, or locked in the φ_p = 0 regime; the integrator-only
    scenario switches the SPS proportional gain off.
    """
    if scenario.get_setting("PUMP_ON"):
        pump = config.pump.model_copy(update={"phi_p": PumpRegime.MINUS.phi_p})
    else:
        pump = PumpConfig(gamma_mag=0.0, phi_p=config.pump.phi_p)

    lock = config.lock
    if not scenario.get_setting("SPS_PROPORTIONAL"):
        lock = lock.model_copy(update={"kp_sps": 0.0})
    return config.model_copy(update={"pump": pump, "lock": lock})


def run_scenario(config: ExperimentConfig, scenario: LockScenario) -> Tuple[RinReport, LockTrace]:
    """
    Locks the cavity under one stabilization scenario and measures the transmitted RIN
    after the settle window.
    """
    scenario_cfg = scenario_config(config, scenario)
    _, trace = acquire_lock(scenario_cfg)
    report = rin(trace, (scenario_cfg.lock.settle_time, scenario_cfg.lock.duration))
    logger.info("Scenario %s: RIN=%.4g (target %.4g)", scenario.cli_name, report.rin, scenario.target_rin)
    return report, trace


def _solve_for_target(objective, lower: float, upper: float, name: str) -> float:
    try:
        return brentq(objective, lower, upper, xtol=1e-6, rtol=1e-4, maxiter=60)
    except ValueError as e:
        raise CalibrationError(f"Could not bracket the target for {name} in [{lower}, {upper}]: {e}")


def calibrate_noise(config: ExperimentConfig) -> ExperimentConfig:
    """
    Calibrates the free noise amplitudes and the SPS proportional gain against the
    three target RINs, with the config's seed held fixed.

    1. laser_rin_amp so that the pump-off scenario reaches its target.
    2. mech_amp_phip so that the integrator-only scenario reaches its target.
    3. kp_sps so that the P+I scenario reaches its target.

    Each stage is a scipy brentq root search on RIN − target. A run that loses lock
    counts as far above target.

    Returns:
        ExperimentConfig: The config with the calibrated values.

    Raises:
        CalibrationError: If a target cannot be bracketed.
    """

    def rin_excess(candidate: ExperimentConfig, scenario: LockScenario) -> float:
        try:
            report, _ = run_scenario(candidate, scenario)
        except LockFailed:
            return 1.0
        return report.rin - scenario.target_rin

    def with_noise(base: ExperimentConfig, **update) -> ExperimentConfig:
        return base.model_copy(update={"noise": base.noise.model_copy(update=update)})

    laser = _solve_for_target(
        lambda a: rin_excess(with_noise(config, laser_rin_amp=a), LockScenario.PUMP_OFF),
        1e-4, 0.05, "laser_rin_amp",
    )
    config = with_noise(config, laser_rin_amp=laser)
    logger.info("Calibrated laser_rin_amp=%.6g", laser)

    vibration = _solve_for_target(
        lambda m: rin_excess(with_noise(config, mech_amp_phip=m), LockScenario.INTEGRAL_ONLY),
        1e-3, 0.6, "mech_amp_phip",
    )
    config = with_noise(config, mech_amp_phip=vibration)
    logger.info("Calibrated mech_amp_phip=%.6g", vibration)

    def with_kp(kp: float) -> ExperimentConfig:
        return config.model_copy(update={"lock": config.lock.model_copy(update={"kp_sps": kp})})

    kp_sps = _solve_for_target(
        lambda kp: rin_excess(with_kp(kp), LockScenario.PROPORTIONAL_INTEGRAL),
        0.0, 12.0, "kp_sps",
    )
    logger.info("Calibrated kp_sps=%.6g", kp_sps)
    return with_kp(kp_sps)


def residual_spectrum(
    trace: LockTrace,
    column: str,
    window: Optional[Tuple[float, float]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    One-sided power spectral density of a trace column (scipy periodogram, mean removed).

    Args:
        trace (LockTrace): The recorded trace.
        column (str): One of the trace columns, e.g. "phi" or "phi_p".
        window (Optional[Tuple[float, float]]): Time window; the whole trace by default.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (frequencies in Hz, PSD in unit²/Hz).

    Raises:
        InvalidParameter: For an unknown column.
        EmptyWindow: If the window holds fewer than two finite samples.
    """
    if column not in LOCK_TRACE_COLUMNS:
        raise InvalidParameter(f"Unknown trace column '{column}'.")
    frame = trace.frame if window is None else trace.window(*window)
    values = frame[column].to_numpy()
    values = values[np.isfinite(values)]
    if len(values) < 2:
        raise EmptyWindow(f"Column '{column}' has fewer than two finite samples in the window.")
    return periodogram(values, fs=trace.sample_rate, detrend="constant")
