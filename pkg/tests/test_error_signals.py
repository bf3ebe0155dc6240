import math
import unittest

import numpy as np

from src.opo_core import reflected_field, intracavity_field
from src.error_signals import (
    pdh_error,
    pdh_error_curve,
    pdh_offset_at_resonance,
    pdh_slope,
    reflected_min,
    sps_slope,
    sps_error,
    calibrate_power_compensation,
    pump_modulation_field,
    bowen_error,
    scan_cavity,
    scan_frame,
    scan_regimes,
    calibrate_offsets,
    compare_error_signals,
    zero_crossings,
    SCAN_COLUMNS,
)
from src.Classes.ConfigModels import OpoParams, PumpConfig, Detuning, PdhConfig, SpsConfig
from src.Classes.SimulationError import AboveThreshold, InvalidParameter, WindowTooNarrow
from src.Enums.PumpRegime import PumpRegime


class TestErrorSignals(unittest.TestCase):

    def setUp(self):
        self.theory = OpoParams(r1=0.999, r2=0.9, delta=3e-3)
        self.experiment = OpoParams(r1=0.9988, r2=0.917, delta=2.4e-3)
        self.pdh = PdhConfig(phi_m=0.1)

    def pump(self, phi_p, gamma_mag=2e-2):
        return PumpConfig(gamma_mag=gamma_mag, phi_p=phi_p)

    def test_pdh_vanishes_at_resonance_in_both_regimes(self):
        for regime in (PumpRegime.AMPLIFICATION, PumpRegime.DEAMPLIFICATION):
            value = pdh_error(self.theory, self.pump(regime.phi_p), Detuning(phi=0.0), self.pdh)
            self.assertLess(abs(value), 1e-12)

    def test_pdh_offset_sign_per_regime(self):
        for params, gamma in ((self.theory, 2e-2), (self.experiment, 1.85e-2)):
            for regime in PumpRegime:
                offset = pdh_offset_at_resonance(params, self.pump(regime.phi_p, gamma), self.pdh)
                if regime.offset_sign == 0:
                    self.assertLess(abs(offset), 1e-12)
                else:
                    self.assertEqual(int(np.sign(offset)), regime.offset_sign, regime.label)

    def test_empty_cavity_pdh_is_zero_at_resonance(self):
        self.assertEqual(pdh_error(self.theory, self.pump(0.3, 0.0), Detuning(phi=0.0), self.pdh), 0.0)

    def test_pdh_offset_is_antiperiodic_in_pump_phase(self):
        phi_p = np.linspace(-math.pi, math.pi, 73)
        offset = pdh_error_curve(self.theory, 2e-2, phi_p, 0.0, 0.1)
        mirrored = pdh_error_curve(self.theory, 2e-2, -phi_p - math.pi, 0.0, 0.1)
        np.testing.assert_allclose(offset, -mirrored, rtol=0.0, atol=1e-10)

    def test_pdh_is_odd_in_both_regimes(self):
        phi = np.linspace(0.0, 0.4, 81)
        for regime in (PumpRegime.AMPLIFICATION, PumpRegime.DEAMPLIFICATION):
            positive = pdh_error_curve(self.theory, 2e-2, regime.phi_p, phi, 0.1)
            negative = pdh_error_curve(self.theory, 2e-2, regime.phi_p, -phi, 0.1)
            np.testing.assert_allclose(positive, -negative, rtol=0.0, atol=1e-10)

    def test_pdh_curve_matches_scalar_error(self):
        pump = self.pump(0.8)
        for phi in (-0.2, 0.0, 0.05, 0.3):
            self.assertAlmostEqual(
                float(pdh_error_curve(self.theory, pump.gamma_mag, pump.phi_p, phi, 0.1)),
                pdh_error(self.theory, pump, Detuning(phi=phi), self.pdh),
                delta=1e-12,
            )

    def test_pdh_error_subtracts_offset(self):
        pump = self.pump(0.0)
        raw = pdh_error(self.theory, pump, Detuning(phi=0.02), self.pdh)
        shifted = pdh_error(self.theory, pump, Detuning(phi=0.02), PdhConfig(phi_m=0.1, pdh_offset=0.25))
        self.assertAlmostEqual(raw - shifted, 0.25, delta=1e-15)

    def test_pdh_error_above_threshold(self):
        with self.assertRaises(AboveThreshold):
            pdh_error(self.theory, self.pump(0.0, self.theory.threshold), Detuning(phi=0.0), self.pdh)

    def test_reflected_min_of_empty_cavity_is_at_resonance(self):
        phi_min, power_min = reflected_min(self.theory, self.pump(0.0, 0.0), 0.5)
        self.assertAlmostEqual(phi_min, 0.0, delta=1e-9)
        self.assertAlmostEqual(power_min, abs(reflected_field(self.theory, self.pump(0.0, 0.0), Detuning())) ** 2,
                               delta=1e-14)

    def test_reflected_min_extremes_over_pump_phase(self):
        phi_p = np.linspace(-math.pi, math.pi, 73)[:-1]
        power = np.array([reflected_min(self.theory, self.pump(p), 0.5)[1] for p in phi_p])
        self.assertAlmostEqual(phi_p[np.argmin(power)], -math.pi / 2, delta=1e-9)
        self.assertAlmostEqual(phi_p[np.argmax(power)], math.pi / 2, delta=1e-9)

    def test_reflected_min_is_monotone_between_regimes(self):
        phi_p = np.linspace(-math.pi / 2 + 0.05, math.pi / 2 - 0.05, 200)
        power = np.array([reflected_min(self.theory, self.pump(p), 0.5)[1] for p in phi_p])
        self.assertTrue((np.diff(power) > 0).all())

    def test_reflected_min_errors(self):
        with self.assertRaises(InvalidParameter):
            reflected_min(self.theory, self.pump(0.0), 0.0)
        with self.assertRaises(WindowTooNarrow):
            # A window this narrow cannot hold the offset minimum at phi_p=0
            reflected_min(self.theory, self.pump(0.0), 1e-6)

    def test_sps_slope_vanishes_in_both_regimes(self):
        for regime in (PumpRegime.AMPLIFICATION, PumpRegime.DEAMPLIFICATION):
            self.assertLess(abs(sps_slope(self.theory, self.pump(regime.phi_p), 0.5)), 1e-6)
        self.assertGreater(sps_slope(self.theory, self.pump(0.0), 0.5), 0.0)

    def test_sps_error_at_lock_point(self):
        cfg = SpsConfig(sps_offset=0.7, power_comp_gain=0.9)
        self.assertEqual(sps_error(0.7, 1.0, cfg), 0.0)
        self.assertAlmostEqual(sps_error(0.7, 1.1, SpsConfig(sps_offset=0.7)), 0.0, delta=1e-15)
        with self.assertRaises(InvalidParameter):
            sps_error(0.7, 0.0, cfg)

    def test_power_compensation_removes_laser_fluctuation(self):
        rng = np.random.default_rng(6)
        laser = 1.0 + 0.01 * rng.uniform(-1.0, 1.0, 5000)
        reflected = 0.83 * laser + 1e-5 * rng.standard_normal(5000)

        gain = calibrate_power_compensation(reflected, laser)
        self.assertAlmostEqual(gain, 0.83, delta=1e-3)

        raw = sps_error(reflected, laser, SpsConfig(sps_offset=0.83, power_comp_gain=0.0))
        compensated = sps_error(reflected, laser, SpsConfig(sps_offset=0.83, power_comp_gain=gain))
        self.assertGreater(np.var(raw) / np.var(compensated), 10.0)

    def test_power_compensation_is_clipped_and_validated(self):
        laser = np.linspace(0.99, 1.01, 11)
        self.assertEqual(calibrate_power_compensation(2.0 - laser, laser), 0.0)
        with self.assertRaises(InvalidParameter):
            calibrate_power_compensation(np.ones(5), np.ones(5))
        with self.assertRaises(InvalidParameter):
            calibrate_power_compensation(np.ones(5), np.ones(4))

    def test_bowen_error_identity(self):
        for phi_p, phi in ((0.0, 0.0), (0.7, 0.02), (-2.0, -0.05)):
            pump, det = self.pump(phi_p), Detuning(phi=phi)
            e_r = reflected_field(self.theory, pump, det)
            e_m = pump_modulation_field(self.theory, pump, det)
            self.assertAlmostEqual(bowen_error(self.theory, pump, det), 2.0 * (e_r * e_m.conjugate()).imag, delta=1e-14)
            self.assertAlmostEqual(bowen_error(self.theory, pump, det, beta=3.0),
                                   3.0 * bowen_error(self.theory, pump, det), delta=1e-14)

    def test_bowen_error_without_pump(self):
        self.assertEqual(bowen_error(self.theory, self.pump(0.3, 0.0), Detuning(phi=0.0)), 0.0)
        self.assertEqual(pump_modulation_field(self.theory, self.pump(0.3, 0.0), Detuning(phi=0.1)), 0j)

    def test_empty_cavity_scan_is_a_symmetric_dip(self):
        samples = scan_cavity(self.theory, self.pump(0.0, 0.0), self.pdh, (-0.5, 0.5), 1001)
        reflected = np.array([s.reflected_power for s in samples])
        self.assertEqual(int(np.argmin(reflected)), 500)
        np.testing.assert_allclose(reflected, reflected[::-1], rtol=0.0, atol=1e-12)

    def test_amplification_scan_is_centered_at_resonance(self):
        samples = scan_cavity(self.experiment, self.pump(-math.pi / 2, 1.85e-2), self.pdh, (-0.5, 0.5), 1001)
        transmitted = np.array([s.transmitted_power for s in samples])
        reflected = np.array([s.reflected_power for s in samples])
        self.assertEqual(int(np.argmax(transmitted)), 500)
        self.assertEqual(int(np.argmin(reflected)), 500)
        self.assertLess(abs(samples[500].eps_pdh_raw), 1e-12)

        e_c = intracavity_field(self.experiment, self.pump(-math.pi / 2, 1.85e-2), Detuning(phi=samples[500].phi))
        self.assertAlmostEqual(transmitted[500], abs(e_c) ** 2, delta=1e-12)

    def test_scan_marks_points_above_threshold(self):
        gamma = self.theory.threshold * 1.02
        samples = scan_cavity(self.theory, self.pump(0.0, gamma), self.pdh, (-0.5, 0.5), 101)
        self.assertFalse(samples[50].valid)
        self.assertTrue(math.isnan(samples[50].reflected_power))
        self.assertTrue(samples[0].valid)
        self.assertEqual(len(samples), 101)

    def test_scan_needs_two_points(self):
        with self.assertRaises(InvalidParameter):
            scan_cavity(self.theory, self.pump(0.0), self.pdh, (-0.5, 0.5), 1)

    def test_scan_frame_columns(self):
        samples = scan_cavity(self.theory, self.pump(0.0), self.pdh, (-0.5, 0.5), 11)
        frame = scan_frame(samples)
        self.assertEqual(list(frame.columns), SCAN_COLUMNS)
        self.assertEqual(len(frame), 11)

    def test_scan_regimes_follow_regime_order(self):
        scans = scan_regimes(self.theory, 2e-2, self.pdh, (-0.5, 0.5), 101, n_jobs=1)
        self.assertEqual(list(scans), list(PumpRegime))
        for regime, samples in scans.items():
            self.assertEqual(samples[0].phi_p, regime.phi_p)

    def test_calibrate_offsets(self):
        amplification = scan_cavity(self.experiment, self.pump(-math.pi / 2, 1.85e-2), self.pdh, (-0.5, 0.5), 1001)
        pdh_offset, _ = calibrate_offsets(amplification)
        self.assertLess(abs(pdh_offset), 1e-9)

        empty = scan_cavity(self.theory, self.pump(0.0, 0.0), self.pdh, (-0.5, 0.5), 1001)
        pdh_offset, sps_offset = calibrate_offsets(empty)
        self.assertLess(abs(pdh_offset), 1e-9)
        self.assertAlmostEqual(sps_offset, abs(reflected_field(self.theory, self.pump(0.0, 0.0), Detuning())) ** 2,
                               delta=1e-9)

    def test_calibrated_offsets_zero_both_signals_at_the_minimum(self):
        pump = self.pump(0.0)
        samples = scan_cavity(self.theory, pump, self.pdh, (-0.5, 0.5), 1001)
        pdh_offset, sps_offset = calibrate_offsets(samples)
        self.assertEqual(calibrate_offsets(samples), (pdh_offset, sps_offset))

        rescanned = scan_cavity(self.theory, pump, PdhConfig(phi_m=0.1, pdh_offset=pdh_offset), (-0.5, 0.5), 1001,
                                SpsConfig(sps_offset=sps_offset))
        index = int(np.argmin([s.reflected_power for s in rescanned]))
        self.assertEqual(rescanned[index].eps_pdh, 0.0)
        self.assertEqual(rescanned[index].eps_sps, 0.0)

        slope = pdh_slope(self.theory, pump, PdhConfig(phi_m=0.1, pdh_offset=pdh_offset), rescanned[index].phi)
        self.assertGreater(abs(slope), 0.0)

    def test_calibrate_offsets_errors(self):
        with self.assertRaises(WindowTooNarrow):
            calibrate_offsets(scan_cavity(self.theory, self.pump(0.0, 0.0), self.pdh, (0.1, 0.5), 101))
        above = scan_cavity(self.theory, self.pump(0.0, 0.5), self.pdh, (-0.1, 0.1), 11)
        with self.assertRaises(InvalidParameter):
            calibrate_offsets(above)

    def test_compare_error_signals_without_pump(self):
        frame = compare_error_signals(self.theory, self.pump(0.0, 0.0), np.linspace(-math.pi, math.pi, 9), 0.5)
        self.assertTrue((frame["eps_sps"] == 0.0).all())
        self.assertTrue((frame["eps_bowen"] == 0.0).all())

    def test_sps_derivative_vanishes_at_regime_phases(self):
        grid = np.linspace(-math.pi, math.pi, 81)
        frame = compare_error_signals(self.experiment, self.pump(0.0, 1.85e-2), grid, 0.5)
        self.assertEqual(list(frame.columns), ["phi_p", "phi_min", "power_min", "eps_sps", "eps_bowen", "d_eps_sps"])
        self.assertAlmostEqual(frame["eps_sps"].iloc[40], 0.0, delta=1e-12)

        derivative = frame["d_eps_sps"].to_numpy()
        scale = np.max(np.abs(derivative))
        self.assertLess(abs(derivative[20]), 1e-3 * scale)
        self.assertLess(abs(derivative[60]), 1e-3 * scale)

        crossings = zero_crossings(frame["phi_p"], frame["eps_sps"])
        self.assertTrue(np.any(np.abs(crossings) < 1e-9))

    def test_zero_crossings(self):
        x = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
        np.testing.assert_allclose(zero_crossings(x, np.array([-1.0, 1.0, 3.0, -1.0, -1.0])), [0.5, 2.75])
        np.testing.assert_allclose(zero_crossings(x, np.array([1.0, 0.0, -1.0, np.nan, 1.0])), [1.0])
        self.assertEqual(len(zero_crossings(x, np.ones(5))), 0)


if __name__ == '__main__':
    unittest.main()
