import math
import os
import tempfile
import unittest
from unittest.mock import patch

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.export import (
    config_hash,
    load_config,
    resolve_config,
    run_metadata,
    atomic_write,
    write_csv,
    read_csv,
    read_metadata,
    write_scan,
    write_lock_trace,
    read_lock_trace,
    write_homodyne_trace,
    read_homodyne_trace,
    rin_record,
    estimate_record,
    write_record,
    read_record,
)
from src.error_signals import scan_cavity, SCAN_COLUMNS
from src.Classes.ConfigModels import ExperimentConfig, GaussianStateParams, OpoParams, PumpConfig, PdhConfig
from src.Classes.ResultModels import RinReport, TomographyEstimate
from src.Classes.SimulationError import InvalidParameter
from src.Classes.Traces import LockTrace, HomodyneTrace, LOCK_TRACE_COLUMNS


def lock_trace(n: int = 50, sample_rate: float = 1000.0) -> LockTrace:
    rng = np.random.default_rng(6)
    frame = pd.DataFrame({column: rng.normal(size=n) for column in LOCK_TRACE_COLUMNS})
    frame["t"] = np.arange(n) / sample_rate
    frame.loc[3, "p_trans"] = np.nan
    return LockTrace(frame, sample_rate, {"scenario": "pi"})


class TestConfigFiles(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write_config(self, text: str) -> str:
        path = os.path.join(self.tmp.name, "experiment.json")
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_config_hash_is_stable(self):
        config = ExperimentConfig()
        self.assertEqual(config_hash(config), config_hash(ExperimentConfig()))
        self.assertEqual(len(config_hash(config)), 32)

        reseeded = config.model_copy(update={"lock": config.lock.model_copy(update={"seed": 7})})
        self.assertNotEqual(config_hash(config), config_hash(reseeded))

    def test_load_config(self):
        path = self.write_config('{"pump": {"gamma_mag": 0.01, "phi_p": 0.0}, "lock": {"seed": 11}}')
        config = load_config(path)
        self.assertEqual(config.pump.gamma_mag, 0.01)
        self.assertEqual(config.lock.seed, 11)
        self.assertEqual(config.opo, OpoParams())

    def test_load_config_errors(self):
        with self.assertRaises(InvalidParameter):
            load_config(os.path.join(self.tmp.name, "missing.json"))
        with self.assertRaises(ValidationError):
            load_config(self.write_config('{"pump": {"gamma_mag": 0.5}}'))
        with self.assertRaises(ValidationError):
            load_config(self.write_config('{"pump": {"gamma": 0.01}}'))

    def test_resolve_config_falls_back_to_defaults(self):
        with patch('src.export.CONFIG_PATH', os.path.join(self.tmp.name, "missing.json")):
            config = resolve_config(seed=3)
        self.assertEqual(config.lock.seed, 3)
        self.assertEqual(config.pump, PumpConfig())

    def test_resolve_config_reads_settings_path(self):
        path = self.write_config('{"lock": {"seed": 11}}')
        with patch('src.export.CONFIG_PATH', path):
            self.assertEqual(resolve_config().lock.seed, 11)
            self.assertEqual(resolve_config(seed=5).lock.seed, 5)

    def test_run_metadata(self):
        config = ExperimentConfig()
        metadata = run_metadata("state", config, beta=0.5)
        self.assertEqual(metadata["command"], "state")
        self.assertEqual(metadata["config_hash"], config_hash(config))
        self.assertEqual(metadata["seed"], "6")
        self.assertEqual(metadata["beta"], "0.5")


class TestCsvFiles(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name: str) -> str:
        return os.path.join(self.tmp.name, name)

    def test_csv_with_metadata(self):
        frame = pd.DataFrame({"phi": [0.1, 1.0 / 3.0, -2.5e-7], "power": [1.0, np.nan, 3.0]})
        write_csv(self.path("table.csv"), frame, {"command": "scan-cavity", "seed": "6"})

        with open(self.path("table.csv"), encoding="utf-8") as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], "# command: scan-cavity")
        self.assertEqual(lines[2], "phi,power")

        self.assertEqual(read_metadata(self.path("table.csv")), {"command": "scan-cavity", "seed": "6"})
        loaded = read_csv(self.path("table.csv"))
        np.testing.assert_allclose(loaded["phi"], frame["phi"], rtol=1e-11)
        self.assertTrue(np.isnan(loaded["power"][1]))

    def test_atomic_write_replaces_and_leaves_no_temporary_files(self):
        target = self.path("nested/out.txt")
        atomic_write(target, "first\n")
        atomic_write(target, "second\n")
        with open(target, encoding="utf-8") as f:
            self.assertEqual(f.read(), "second\n")
        self.assertEqual(os.listdir(self.path("nested")), ["out.txt"])

    @patch('src.export.os.replace')
    def test_failed_write_keeps_previous_file(self, mock_replace):
        target = self.path("out.txt")
        with open(target, "w", encoding="utf-8") as f:
            f.write("previous\n")
        mock_replace.side_effect = OSError("disk full")

        with self.assertRaises(OSError):
            atomic_write(target, "new\n")
        with open(target, encoding="utf-8") as f:
            self.assertEqual(f.read(), "previous\n")
        self.assertEqual(os.listdir(self.tmp.name), ["out.txt"])

    def test_scan_file(self):
        samples = scan_cavity(OpoParams(), PumpConfig(), PdhConfig(), (-0.1, 0.1), 11)
        write_scan(self.path("scan.csv"), samples, {"command": "scan-cavity"})
        loaded = read_csv(self.path("scan.csv"))
        self.assertEqual(list(loaded.columns), SCAN_COLUMNS)
        self.assertEqual(len(loaded), 11)
        np.testing.assert_allclose(loaded["reflected_power"], [s.reflected_power for s in samples], rtol=1e-11)

    def test_lock_trace_file(self):
        trace = lock_trace()
        write_lock_trace(self.path("lock.csv"), trace, {"command": "lock"})

        loaded = read_lock_trace(self.path("lock.csv"))
        self.assertEqual(loaded.sample_rate, 1000.0)
        self.assertEqual(loaded.metadata["command"], "lock")
        self.assertEqual(loaded.metadata["scenario"], "pi")
        self.assertNotIn("sample_rate", loaded.metadata)
        self.assertTrue(np.isnan(loaded["p_trans"][3]))
        np.testing.assert_allclose(loaded["phi"], trace["phi"], rtol=1e-11)

    def test_lock_trace_without_rate_metadata(self):
        trace = lock_trace(sample_rate=2000.0)
        write_csv(self.path("lock.csv"), trace.frame)
        self.assertAlmostEqual(read_lock_trace(self.path("lock.csv")).sample_rate, 2000.0, delta=1e-6)

    def test_homodyne_trace_file(self):
        frame = pd.DataFrame({"theta": np.linspace(0.0, 2 * math.pi, 20), "x": np.arange(20) / 7.0})
        trace = HomodyneTrace(frame, seed=6, theta_start=0.0, theta_end=2 * math.pi)
        write_homodyne_trace(self.path("homodyne.csv"), trace, {"command": "state"})

        loaded = read_homodyne_trace(self.path("homodyne.csv"))
        self.assertEqual(loaded.seed, 6)
        self.assertEqual(loaded.n_samples, 20)
        np.testing.assert_allclose(loaded.x, trace.x, rtol=1e-11)

    def test_imported_homodyne_trace_has_no_seed(self):
        write_csv(self.path("imported.csv"), pd.DataFrame({"theta": [0.0, 1.0], "x": [0.5, -0.5]}))
        self.assertIsNone(read_homodyne_trace(self.path("imported.csv")).seed)

        write_csv(self.path("other.csv"), pd.DataFrame({"a": [0.0], "b": [1.0]}))
        with self.assertRaises(InvalidParameter):
            read_homodyne_trace(self.path("other.csv"))


class TestRecords(unittest.TestCase):

    def test_rin_record(self):
        record = rin_record(RinReport(rin=0.0191, window=(0.02, 0.1), n_samples=8000), prefix="pi_")
        self.assertEqual(record, {
            "pi_rin": "0.0191",
            "pi_window_start": "0.02",
            "pi_window_end": "0.1",
            "pi_n_samples": "8000",
        })

    def test_estimate_record(self):
        truth = GaussianStateParams()
        estimate = TomographyEstimate(
            state=GaussianStateParams(alpha=2.9, xi_mag=0.45, xi_arg=0.01, n_th=0.12),
            alpha_err=0.01, xi_mag_err=0.02, xi_arg_err=math.inf, n_th_err=0.03,
            n_samples=100_000, n_bins=50,
        )
        record = estimate_record(estimate, truth)
        self.assertEqual(record["true_alpha"], "2.93")
        self.assertEqual(record["alpha"], "2.9")
        self.assertEqual(record["xi_arg_err"], "inf")
        self.assertEqual(record["n_bins"], "50")
        self.assertNotIn("true_alpha", estimate_record(estimate))

    def test_record_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "record.txt")
            write_record(path, {"rin": "0.019", "note": "a=b"}, {"command": "lock"})
            self.assertEqual(read_record(path), {"rin": "0.019", "note": "a=b"})
            self.assertEqual(read_metadata(path), {"command": "lock"})


if __name__ == '__main__':
    unittest.main()
