import math
import unittest
from unittest.mock import patch, MagicMock

import numpy as np

from src.squeezed_states import (
    quadrature_stats,
    squeezing_db,
    squeezing_from_db,
    arg_xi_from_pump,
    mean_photon_number,
    ellipse_parameters,
    synthesize_trace,
    reconstruct,
)
from src.Classes.ConfigModels import GaussianStateParams
from src.Classes.SimulationError import DegenerateFit, InsufficientData, InvalidParameter


def angle_difference(a: float, b: float) -> float:
    return (a - b + math.pi) % (2.0 * math.pi) - math.pi


class TestGaussianStates(unittest.TestCase):

    def test_squeezing_level_of_generated_state(self):
        self.assertAlmostEqual(squeezing_db(0.46, 0.13), 3.0, delta=0.1)
        self.assertEqual(squeezing_db(0.0, 0.0), 0.0)
        self.assertLess(squeezing_db(0.0, 0.5), 0.0)

    def test_squeezing_from_db_inverts_squeezing_db(self):
        for xi_mag, n_th in ((0.46, 0.13), (0.1, 0.0), (1.2, 0.4)):
            self.assertAlmostEqual(squeezing_from_db(squeezing_db(xi_mag, n_th), n_th), xi_mag, delta=1e-12)
        with self.assertRaises(InvalidParameter):
            squeezing_from_db(-5.0, 0.5)
        with self.assertRaises(InvalidParameter):
            squeezing_db(-0.1, 0.0)

    def test_arg_xi_follows_pump_phase(self):
        self.assertAlmostEqual(arg_xi_from_pump(-math.pi / 2), 0.0)
        self.assertAlmostEqual(arg_xi_from_pump(0.0), math.pi / 2)
        self.assertAlmostEqual(arg_xi_from_pump(math.pi / 2), math.pi)
        self.assertAlmostEqual(arg_xi_from_pump(-math.pi), 3 * math.pi / 2)

    def test_quadrature_stats(self):
        state = GaussianStateParams(alpha=1.5, xi_mag=0.4, xi_arg=1.0, n_th=0.2)
        mean, variance = quadrature_stats(state, 0.5)
        self.assertIsInstance(mean, float)
        self.assertAlmostEqual(mean, 3.0 * math.cos(0.5))
        self.assertAlmostEqual(variance, 1.4 * math.exp(-0.8))

        _, variance = quadrature_stats(state, 0.5 + math.pi / 2)
        self.assertAlmostEqual(variance, 1.4 * math.exp(0.8))

        _, vacuum = quadrature_stats(GaussianStateParams(alpha=0.0, xi_mag=0.0, n_th=0.0), np.linspace(0, 3, 7))
        np.testing.assert_allclose(vacuum, 1.0)

    def test_mean_photon_number(self):
        self.assertAlmostEqual(mean_photon_number(GaussianStateParams(alpha=0.0, xi_mag=0.0, n_th=0.0)), 0.0)
        self.assertAlmostEqual(mean_photon_number(GaussianStateParams(alpha=2.0, xi_mag=0.0, n_th=0.0)), 4.0)
        self.assertAlmostEqual(mean_photon_number(GaussianStateParams(alpha=0.0, xi_mag=0.0, n_th=0.3)), 0.3)
        self.assertAlmostEqual(mean_photon_number(GaussianStateParams(alpha=0.0, xi_mag=0.5, n_th=0.0)),
                               math.sinh(0.5) ** 2)

    def test_ellipse_parameters(self):
        angle, minor, major = ellipse_parameters(GaussianStateParams(xi_mag=0.46, xi_arg=math.pi, n_th=0.13))
        self.assertAlmostEqual(angle, math.pi / 2)
        self.assertAlmostEqual(minor, math.sqrt(1.26) * math.exp(-0.46))
        self.assertAlmostEqual(major, math.sqrt(1.26) * math.exp(0.46))

    def test_xi_arg_is_wrapped(self):
        self.assertAlmostEqual(GaussianStateParams(xi_arg=-math.pi / 2).xi_arg, 3 * math.pi / 2)
        self.assertAlmostEqual(GaussianStateParams(xi_arg=5 * math.pi).xi_arg, math.pi)


class TestSynthesis(unittest.TestCase):

    def test_trace_is_seeded(self):
        state = GaussianStateParams()
        first = synthesize_trace(state, (0.0, 2 * math.pi, 2000), seed=6)
        second = synthesize_trace(state, (0.0, 2 * math.pi, 2000), seed=6)
        other = synthesize_trace(state, (0.0, 2 * math.pi, 2000), seed=7)
        np.testing.assert_array_equal(first.x, second.x)
        self.assertFalse(np.array_equal(first.x, other.x))
        self.assertEqual(first.theta[0], 0.0)
        self.assertEqual(first.theta[-1], 2 * math.pi)
        self.assertEqual(first.metadata["seed"], "6")

    def test_squeezed_quadrature_spread(self):
        state = GaussianStateParams(alpha=0.0, xi_mag=2.0, xi_arg=1.2, n_th=0.0)
        trace = synthesize_trace(state, (0.6, 0.6, 100_000), seed=6)
        self.assertAlmostEqual(np.std(trace.x) / math.exp(-2.0), 1.0, delta=0.02)

    def test_displacement_free_mean_vanishes(self):
        state = GaussianStateParams(alpha=0.0, xi_mag=0.46, xi_arg=0.0, n_th=0.13)
        n = 100_000
        trace = synthesize_trace(state, (0.0, 2 * math.pi, n), seed=6)
        mean_variance = 1.26 * math.cosh(0.92)
        self.assertLess(abs(np.mean(trace.x)), 5.0 * math.sqrt(mean_variance / n))

    def test_invalid_sample_count(self):
        with self.assertRaises(InvalidParameter):
            synthesize_trace(GaussianStateParams(), (0.0, 1.0, 0), seed=6)


class TestReconstruction(unittest.TestCase):

    def assert_recovered(self, truth: GaussianStateParams, seed: int = 6):
        trace = synthesize_trace(truth, (0.0, 2 * math.pi, 100_000), seed=seed)
        estimate = reconstruct(trace)
        state = estimate.state

        self.assertAlmostEqual(state.alpha, truth.alpha, delta=0.05 * truth.alpha)
        self.assertAlmostEqual(state.xi_mag, truth.xi_mag, delta=0.05 * truth.xi_mag)
        self.assertLess(abs(angle_difference(state.xi_arg, truth.xi_arg)), 0.05)
        self.assertAlmostEqual(state.n_th, truth.n_th, delta=max(0.05 * truth.n_th, 3.0 * estimate.n_th_err))
        self.assertTrue(estimate.xi_arg_identified)
        self.assertEqual(estimate.n_samples, 100_000)
        self.assertEqual(estimate.n_bins, 50)
        return estimate

    def test_round_trip_amplified_state(self):
        self.assert_recovered(GaussianStateParams(alpha=2.93, xi_mag=0.46, xi_arg=0.0, n_th=0.13))

    def test_round_trip_quadrature_state(self):
        self.assert_recovered(GaussianStateParams(alpha=1.97, xi_mag=0.46, xi_arg=math.pi / 2, n_th=0.12))

    def test_round_trip_deamplified_state(self):
        self.assert_recovered(GaussianStateParams(alpha=1.44, xi_mag=0.46, xi_arg=math.pi, n_th=0.14))

    def test_vacuum_is_recovered(self):
        trace = synthesize_trace(GaussianStateParams(alpha=0.0, xi_mag=0.0, n_th=0.0), (0.0, 2 * math.pi, 100_000), 6)
        try:
            estimate = reconstruct(trace)
        except DegenerateFit as e:
            estimate = e.estimate
            self.assertFalse(estimate.xi_arg_identified)

        self.assertLess(abs(estimate.state.alpha), 5.0 * estimate.alpha_err)
        self.assertLess(estimate.state.xi_mag, 5.0 * estimate.xi_mag_err + 1e-3)
        self.assertLess(abs(squeezing_db(estimate.state.xi_mag, estimate.state.n_th)), 0.1)

    def test_errors_shrink_with_trace_length(self):
        truth = GaussianStateParams(alpha=2.93, xi_mag=0.46, xi_arg=0.0, n_th=0.13)
        sizes = np.array([1_000, 10_000, 100_000])
        errors = np.array([
            reconstruct(synthesize_trace(truth, (0.0, 2 * math.pi, int(n)), seed=6)).alpha_err for n in sizes
        ])
        slope = np.polyfit(np.log(sizes), np.log(errors), 1)[0]
        self.assertAlmostEqual(slope, -0.5, delta=0.1)

    def test_insufficient_data(self):
        with self.assertRaises(InsufficientData):
            reconstruct(synthesize_trace(GaussianStateParams(), (0.0, 2 * math.pi, 999), seed=6))
        with self.assertRaises(InsufficientData):
            reconstruct(synthesize_trace(GaussianStateParams(), (0.0, 3.0, 5000), seed=6))
        with self.assertRaises(InvalidParameter):
            reconstruct(synthesize_trace(GaussianStateParams(), (0.0, 2 * math.pi, 5000), seed=6), n_bins=3)

    @patch('src.squeezed_states.least_squares')
    def test_degenerate_fit_carries_estimate(self, mock_least_squares):
        mock_least_squares.return_value = MagicMock(
            x=np.array([1.0, 0.0, 0.3, 0.1]), jac=np.eye(4), success=True, message="converged"
        )
        trace = synthesize_trace(GaussianStateParams(alpha=1.0, xi_mag=0.0, n_th=0.1), (0.0, 2 * math.pi, 2000), 6)

        with self.assertRaises(DegenerateFit) as context:
            reconstruct(trace)
        estimate = context.exception.estimate
        self.assertTrue(math.isinf(estimate.xi_arg_err))
        self.assertFalse(estimate.xi_arg_identified)
        self.assertEqual(estimate.state.alpha, 1.0)
        self.assertEqual(estimate.xi_mag_err, 1.0)


if __name__ == '__main__':
    unittest.main()
