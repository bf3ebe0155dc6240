import math
import unittest

import numpy as np
import pandas as pd

from src.Classes.Traces import LockTrace, HomodyneTrace, LOCK_TRACE_COLUMNS


def lock_frame(n: int = 100, sample_rate: float = 1000.0) -> pd.DataFrame:
    frame = pd.DataFrame({column: np.zeros(n) for column in LOCK_TRACE_COLUMNS})
    frame["t"] = np.arange(n) / sample_rate
    return frame


class TestLockTrace(unittest.TestCase):

    def test_properties_and_window(self):
        trace = LockTrace(lock_frame(), 1000.0, {"scenario": "pi"})
        self.assertEqual(len(trace), 100)
        self.assertAlmostEqual(trace.dt, 1e-3)
        self.assertAlmostEqual(trace.duration, 0.1)
        self.assertEqual(len(trace.window(0.02, 0.05)), 30)
        self.assertEqual(trace.metadata, {"scenario": "pi"})

    def test_columns_are_reordered_and_extra_columns_dropped(self):
        frame = lock_frame()[list(reversed(LOCK_TRACE_COLUMNS))]
        frame["extra"] = 1.0
        trace = LockTrace(frame, 1000.0)
        self.assertEqual(list(trace.frame.columns), LOCK_TRACE_COLUMNS)

    def test_invalid_tables(self):
        with self.assertRaises(ValueError):
            LockTrace(lock_frame().drop(columns=["eps_sps"]), 1000.0)
        with self.assertRaises(ValueError):
            LockTrace(lock_frame(), 2000.0)

    def test_equality_includes_nan_positions(self):
        first = lock_frame()
        first.loc[5, "p_trans"] = np.nan
        second = first.copy()
        self.assertTrue(LockTrace(first, 1000.0).equals(LockTrace(second, 1000.0)))

        second.loc[6, "p_trans"] = np.nan
        self.assertFalse(LockTrace(first, 1000.0).equals(LockTrace(second, 1000.0)))
        self.assertFalse(LockTrace(lock_frame(50), 1000.0).equals(LockTrace(lock_frame(), 1000.0)))


class TestHomodyneTrace(unittest.TestCase):

    def test_ramp_defaults_to_sample_range(self):
        trace = HomodyneTrace(pd.DataFrame({"theta": [0.5, 1.5, 1.0], "x": [1, 2, 3]}))
        self.assertEqual(trace.theta_start, 0.5)
        self.assertEqual(trace.theta_end, 1.5)
        self.assertEqual(trace.theta_span, 1.0)
        self.assertEqual(trace.x.dtype, np.float64)
        self.assertEqual(trace.metadata["seed"], "none")

    def test_invalid_samples(self):
        with self.assertRaises(ValueError):
            HomodyneTrace(pd.DataFrame({"theta": [0.0, 1.0]}))
        with self.assertRaises(ValueError):
            HomodyneTrace(pd.DataFrame({"theta": [0.0, 1.0], "x": [0.0, math.inf]}))

    def test_empty_trace(self):
        trace = HomodyneTrace(pd.DataFrame({"theta": [], "x": []}), seed=3)
        self.assertEqual(trace.n_samples, 0)
        self.assertEqual(trace.theta_span, 0.0)
        self.assertEqual(trace.metadata["seed"], "3")


if __name__ == '__main__':
    unittest.main()
