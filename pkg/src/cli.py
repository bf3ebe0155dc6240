import argparse
import json
import logging
import math
import os
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from src import export
from src.opo_core import gain_ratio, invert_gain
from src.error_signals import (
    scan_cavity,
    scan_regimes,
    calibrate_offsets,
    compare_error_signals,
    zero_crossings,
)
from src.lock_sim import acquire_lock, scan_pump_phase, run_scenario, calibrate_noise, rin
from src.squeezed_states import (
    arg_xi_from_pump,
    synthesize_trace,
    reconstruct,
    squeezing_db,
    ellipse_parameters,
)
from src.Classes.ConfigModels import ExperimentConfig
from src.Classes.SimulationError import AboveThreshold, DegenerateFit, SimulationError
from src.Enums.ExitCode import ExitCode
from src.Enums.LockScenario import LockScenario
from src.api.api import run_api
from settings import OUTPUT_DIRECTORY, N_JOBS

"""
Command-line front end: `python main.py <command> [options]`.

Every command loads one ExperimentConfig (JSON), applies the --seed and --out
overrides, writes its outputs atomically under the output directory and prints a short
summary. Exit codes: 0 success, 1 unexpected error, 2 configuration or parameter error,
3 lock failure, 4 insufficient data.
"""

logger = logging.getLogger(__name__)


def resolve_output_dir(config: ExperimentConfig, out: Optional[str]) -> str:
    if out:
        return out
    if "output_dir" in config.model_fields_set:
        return config.output_dir
    return OUTPUT_DIRECTORY


def cmd_scan_cavity(config: ExperimentConfig, out_dir: str, phi_range: Optional[List[float]],
                    n_points: Optional[int], regimes: bool) -> None:
    """
    Writes open-loop cavity scans and prints the offset calibration of each.
    """
    width = config.lock.scan_half_width
    phi_range = tuple(phi_range) if phi_range else (-width, width)
    n_points = n_points or config.lock.scan_points

    if regimes:
        scans = {
            regime.label: samples
            for regime, samples in scan_regimes(
                config.opo, config.pump.gamma_mag, config.pdh, phi_range, n_points, n_jobs=N_JOBS
            ).items()
        }
    else:
        scans = {"": scan_cavity(config.opo, config.pump, config.pdh, phi_range, n_points, config.sps)}

    for label, samples in scans.items():
        if not any(sample.valid for sample in samples):
            raise AboveThreshold(f"Every point of the scan {phi_range} is at or above threshold.")

        pdh_offset, sps_offset = calibrate_offsets(samples)
        phi_min = min((s for s in samples if s.valid), key=lambda s: s.reflected_power).phi
        name = f"scan_cavity_{label}.csv" if label else "scan_cavity.csv"
        export.write_scan(
            os.path.join(out_dir, name),
            samples,
            export.run_metadata("scan-cavity", config, phi_p=samples[0].phi_p, regime=label or "config"),
        )
        print(f"{label or 'scan'}: pdh_offset={pdh_offset:.6g} sps_offset={sps_offset:.6g} phi_min={phi_min:.6g}")


def cmd_lock(config: ExperimentConfig, out_dir: str, scenario: Optional[str]) -> None:
    """
    Acquires the lock (the configured pump phase, or one or all stabilization scenarios),
    writes each closed-loop trace and its RIN report.
    """
    if scenario is None:
        calibration, trace = acquire_lock(config)
        report = rin(trace, (config.lock.settle_time, config.lock.duration))
        metadata = export.run_metadata("lock", config)
        export.write_lock_trace(os.path.join(out_dir, "lock_trace.csv"), trace, metadata)
        record = {key: f"{value:.12g}" if isinstance(value, float) else str(value)
                  for key, value in calibration.model_dump().items()}
        record.update(export.rin_record(report))
        export.write_record(os.path.join(out_dir, "lock_report.txt"), record, metadata)
        print(f"phi_min={calibration.phi_min:.6g} pdh_offset={calibration.pdh_offset:.6g} "
              f"sps_offset={calibration.sps_offset:.6g} RIN={100 * report.rin:.3f}%")
        return

    scenarios = list(LockScenario) if scenario == "all" else [LockScenario.from_cli_name(scenario)]
    record = {}
    for item in scenarios:
        report, trace = run_scenario(config, item)
        metadata = export.run_metadata("lock", config, scenario=item.cli_name)
        export.write_lock_trace(os.path.join(out_dir, f"lock_trace_{item.cli_name}.csv"), trace, metadata)
        record.update(export.rin_record(report, prefix=f"{item.cli_name}_"))
        print(f"{item.cli_name}: RIN={100 * report.rin:.3f}% (target {100 * item.target_rin:.1f}%)")
    export.write_record(os.path.join(out_dir, "rin_report.txt"), record, export.run_metadata("lock", config))


def cmd_calibrate_noise(config: ExperimentConfig, out_dir: str) -> None:
    """
    Calibrates the noise amplitudes and kp_sps against the scenario RINs and writes the resulting config.
    """
    calibrated = calibrate_noise(config)
    path = os.path.join(out_dir, "calibrated_experiment.json")
    export.atomic_write(path, json.dumps(calibrated.model_dump(mode="json"), indent=2, sort_keys=True) + "\n")
    print(f"laser_rin_amp={calibrated.noise.laser_rin_amp:.6g} "
          f"mech_amp_phip={calibrated.noise.mech_amp_phip:.6g} kp_sps={calibrated.lock.kp_sps:.6g}")


def cmd_scan_pump(config: ExperimentConfig, out_dir: str, rate: Optional[float], duration: Optional[float],
                  offset_mode: str) -> None:
    """
    Writes the pump-phase ramp trace taken with the cavity locked.
    """
    duration = duration or config.lock.duration
    rate = 2.0 * math.pi / duration if rate is None else rate
    trace = scan_pump_phase(config, rate, duration, offset_mode)
    export.write_lock_trace(
        os.path.join(out_dir, "scan_pump.csv"),
        trace,
        export.run_metadata("scan-pump", config, rate=rate, offset_mode=offset_mode),
    )
    p_refl = trace["p_refl"]
    print(f"phi_p ramp {trace['phi_p'][0]:.4f} -> {trace['phi_p'][-1]:.4f} rad; "
          f"reflected power max at phi_p={trace['phi_p'][np.nanargmax(p_refl)]:.4f}, "
          f"min at phi_p={trace['phi_p'][np.nanargmin(p_refl)]:.4f}")


def cmd_state(config: ExperimentConfig, out_dir: str, n_samples: int, theta_end: float) -> None:
    """
    Synthesizes a homodyne trace of the configured state with arg(ξ) set by the pump phase,
    reconstructs it, and writes the trace plus a truth/estimate record.
    """
    truth = config.state.model_copy(update={"xi_arg": arg_xi_from_pump(config.pump.phi_p)})
    trace = synthesize_trace(truth, (0.0, theta_end, n_samples), config.lock.seed)
    metadata = export.run_metadata("state", config)
    export.write_homodyne_trace(os.path.join(out_dir, "homodyne_trace.csv"), trace, metadata)

    try:
        estimate = reconstruct(trace)
    except DegenerateFit as e:
        logger.warning(e.message)
        estimate = e.estimate

    record = export.estimate_record(estimate, truth)
    angle, minor, major = ellipse_parameters(estimate.state)
    record.update({
        "squeezing_db": f"{squeezing_db(estimate.state.xi_mag, estimate.state.n_th):.12g}",
        "ellipse_angle": f"{angle:.12g}",
        "ellipse_minor": f"{minor:.12g}",
        "ellipse_major": f"{major:.12g}",
    })
    export.write_record(os.path.join(out_dir, "state_estimate.txt"), record, metadata)

    state = estimate.state
    print(f"alpha={state.alpha:.4f}±{estimate.alpha_err:.2g} |xi|={state.xi_mag:.4f}±{estimate.xi_mag_err:.2g} "
          f"arg(xi)={state.xi_arg:.4f}±{estimate.xi_arg_err:.2g} N_th={state.n_th:.4f}±{estimate.n_th_err:.2g} "
          f"({record['squeezing_db']} dB)")


def cmd_compare_error_signals(config: ExperimentConfig, out_dir: str, phi_p_range: List[float], n_points: int,
                              beta: float) -> None:
    """
    Writes SPS and pump-modulation error signals against φ_p and prints their zero crossings.
    """
    grid = np.linspace(phi_p_range[0], phi_p_range[1], n_points)
    frame = compare_error_signals(config.opo, config.pump, grid, config.lock.scan_half_width, beta)
    export.write_csv(
        os.path.join(out_dir, "compare_error_signals.csv"),
        frame,
        export.run_metadata("compare-signals", config, beta=beta),
    )
    for column in ("eps_sps", "eps_bowen"):
        crossings = zero_crossings(frame["phi_p"], frame[column])
        print(f"{column} zero crossings: {', '.join(f'{c:.4f}' for c in crossings) or 'none'}")


def cmd_gain(config: ExperimentConfig, gamma: Optional[float], gain: Optional[float]) -> None:
    if gain is not None:
        print(f"|gamma|={invert_gain(config.opo, gain):.6g}")
    else:
        gamma = config.pump.gamma_mag if gamma is None else gamma
        print(f"G={gain_ratio(config.opo, gamma):.6g}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="Experiment config JSON (default: settings CONFIG_PATH).")
    common.add_argument("--seed", type=int, default=None, help="Overrides lock.seed.")
    common.add_argument("--out", default=None, help="Output directory.")

    parser = argparse.ArgumentParser(prog="opo-lock", description="Seeded OPO stabilization and squeezed-state simulator.")
    commands = parser.add_subparsers(dest="command", required=True)

    scan = commands.add_parser("scan-cavity", parents=[common], help="Open-loop cavity scan.")
    scan.add_argument("--phi-range", nargs=2, type=float, default=None, metavar=("START", "END"))
    scan.add_argument("--points", type=int, default=None)
    scan.add_argument("--regimes", action="store_true", help="Scan the four pump regimes.")

    lock = commands.add_parser("lock", parents=[common], help="Lock acquisition and RIN report.")
    lock.add_argument("--scenario", choices=[s.cli_name for s in LockScenario] + ["all"], default=None)

    commands.add_parser("calibrate-noise", parents=[common], help="Calibrate noise amplitudes against the RIN targets.")

    pump = commands.add_parser("scan-pump", parents=[common], help="Pump-phase ramp with the cavity locked.")
    pump.add_argument("--rate", type=float, default=None, help="Ramp rate in rad/s (default: 2*pi over the duration).")
    pump.add_argument("--duration", type=float, default=None)
    pump.add_argument("--offset-mode", choices=["tracking", "fixed"], default="tracking")

    state = commands.add_parser("state", parents=[common], help="Homodyne trace synthesis and tomography.")
    state.add_argument("--samples", type=int, default=100_000)
    state.add_argument("--theta-end", type=float, default=2.0 * math.pi)

    compare = commands.add_parser("compare-signals", parents=[common], help="SPS versus pump-modulation error signal.")
    compare.add_argument("--phi-p-range", nargs=2, type=float, default=[-math.pi, math.pi], metavar=("START", "END"))
    compare.add_argument("--points", type=int, default=201)
    compare.add_argument("--beta", type=float, default=1.0)

    gain = commands.add_parser("gain", parents=[common], help="Gain ratio G or its inverse.")
    group = gain.add_mutually_exclusive_group()
    group.add_argument("--gamma", type=float, default=None)
    group.add_argument("--gain", type=float, default=None)

    commands.add_parser("serve", help="Run the HTTP API on the settings config (CONFIG_PATH, IP, PORT).")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parses arguments, runs one command and returns its exit code.
    """
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        run_api()
        return int(ExitCode.SUCCESS)

    try:
        config = export.resolve_config(args.config, args.seed)
        out_dir = resolve_output_dir(config, args.out)

        match args.command:
            case "scan-cavity":
                cmd_scan_cavity(config, out_dir, args.phi_range, args.points, args.regimes)
            case "lock":
                cmd_lock(config, out_dir, args.scenario)
            case "calibrate-noise":
                cmd_calibrate_noise(config, out_dir)
            case "scan-pump":
                cmd_scan_pump(config, out_dir, args.rate, args.duration, args.offset_mode)
            case "state":
                cmd_state(config, out_dir, args.samples, args.theta_end)
            case "compare-signals":
                cmd_compare_error_signals(config, out_dir, args.phi_p_range, args.points, args.beta)
            case "gain":
                cmd_gain(config, args.gamma, args.gain)
        return int(ExitCode.SUCCESS)

    except ValidationError as e:
        logger.error("Invalid configuration: %s", e)
        return int(ExitCode.CONFIG_ERROR)
    except SimulationError as e:
        logger.error("%s: %s", type(e).__name__, e.message)
        return int(e.exit_code)
    except Exception:
        logger.exception("Unexpected error")
        return int(ExitCode.UNEXPECTED_ERROR)
