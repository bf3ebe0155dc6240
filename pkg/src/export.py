import hashlib
import io
import json
import logging
import os
import tempfile
from typing import Dict, List, Optional

import pandas as pd

from src.error_signals import scan_frame
from src.Classes.ConfigModels import ExperimentConfig, GaussianStateParams
from src.Classes.ResultModels import ErrorSample, RinReport, TomographyEstimate
from src.Classes.SimulationError import InvalidParameter
from src.Classes.Traces import HomodyneTrace, LockTrace, HOMODYNE_TRACE_COLUMNS
from settings import CONFIG_PATH

"""
File formats of the simulator.

CSV files start with '#'-prefixed `key: value` metadata lines (command, config hash,
seed, ...), then a header row and comma-separated rows with floats written as %.12g.
Estimates are flat `key=value` text records. Every file is written to a temporary
file in the target directory and moved into place with os.replace.
"""

logger = logging.getLogger(__name__)

FLOAT_FORMAT: str = "%.12g"


def config_hash(config: ExperimentConfig) -> str:
    """
    md5 of the canonical JSON form of a config (sorted keys, no whitespace).
    """
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.md5(canonical.encode("utf-8")).hexdigest()


def load_config(path: str) -> ExperimentConfig:
    """
    Loads and validates an experiment config from a JSON file.

    Raises:
        InvalidParameter: If the file cannot be read.
        pydantic.ValidationError: If the content violates the config schema.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            content = f.read()
    except OSError as e:
        raise InvalidParameter(f"Cannot read config file '{path}': {e}")
    return ExperimentConfig.model_validate_json(content)


def resolve_config(config_path: Optional[str] = None, seed: Optional[int] = None) -> ExperimentConfig:
    """
    Loads the given config file, or the settings default, and applies the seed override.

    When no path is given and the default file does not exist, the built-in defaults are used.
    """
    if config_path is None and not os.path.exists(CONFIG_PATH):
        logger.info("No config file at %s, using built-in defaults", CONFIG_PATH)
        config = ExperimentConfig()
    else:
        config = load_config(config_path or CONFIG_PATH)

    if seed is not None:
        config = config.model_copy(update={"lock": config.lock.model_copy(update={"seed": seed})})
    return config


def run_metadata(command: str, config: ExperimentConfig, **extra) -> Dict[str, str]:
    """
    Metadata lines shared by every output of a command: command, config hash and seed.
    """
    metadata = {"command": command, "config_hash": config_hash(config), "seed": str(config.lock.seed)}
    metadata.update({key: str(value) for key, value in extra.items()})
    return metadata


def atomic_write(path: str, text: str) -> None:
    """
    Writes text to path through a temporary file in the same directory.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.debug("Wrote %s", path)


def write_csv(path: str, frame: pd.DataFrame, metadata: Optional[Dict[str, str]] = None) -> None:
    """
    Writes a table with leading '#' metadata lines and a header row.
    """
    buffer = io.StringIO()
    for key, value in (metadata or {}).items():
        buffer.write(f"# {key}: {value}\n")
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")
    atomic_write(path, buffer.getvalue())


def read_csv(path: str) -> pd.DataFrame:
    """
    Reads a table written by `write_csv`, skipping the metadata lines.
    """
    return pd.read_csv(path, comment="#")


def read_metadata(path: str) -> Dict[str, str]:
    """
    Reads the '#' metadata lines of a CSV file.
    """
    metadata = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            metadata[key.strip()] = value.strip()
    return metadata


def write_scan(path: str, samples: List[ErrorSample], metadata: Optional[Dict[str, str]] = None) -> None:
    write_csv(path, scan_frame(samples), metadata)


def write_lock_trace(path: str, trace: LockTrace, metadata: Optional[Dict[str, str]] = None) -> None:
    merged = dict(metadata or {})
    merged.update(trace.metadata)
    merged["sample_rate"] = FLOAT_FORMAT % trace.sample_rate
    write_csv(path, trace.frame, merged)


def read_lock_trace(path: str) -> LockTrace:
    """
    Reads a lock trace; the sample rate comes from the metadata, else from the time grid.
    """
    frame = read_csv(path)
    metadata = read_metadata(path)
    if "sample_rate" in metadata:
        sample_rate = float(metadata.pop("sample_rate"))
    else:
        sample_rate = 1.0 / float(frame["t"].iloc[1] - frame["t"].iloc[0])
    return LockTrace(frame, sample_rate, metadata)


def write_homodyne_trace(path: str, trace: HomodyneTrace, metadata: Optional[Dict[str, str]] = None) -> None:
    merged = dict(metadata or {})
    merged.update(trace.metadata)
    write_csv(path, trace.frame[HOMODYNE_TRACE_COLUMNS], merged)


def read_homodyne_trace(path: str) -> HomodyneTrace:
    """
    Reads a (theta, x) trace. The seed is taken from the metadata when present.

    Raises:
        InvalidParameter: If the file lacks the theta or x column.
    """
    frame = read_csv(path)
    try:
        trace = HomodyneTrace(frame)
    except ValueError as e:
        raise InvalidParameter(f"'{path}' is not a homodyne trace: {e}")

    seed = read_metadata(path).get("seed")
    if seed not in (None, "none"):
        trace.seed = int(seed)
    return trace


def rin_record(report: RinReport, prefix: str = "") -> Dict[str, str]:
    return {
        f"{prefix}rin": FLOAT_FORMAT % report.rin,
        f"{prefix}window_start": FLOAT_FORMAT % report.window[0],
        f"{prefix}window_end": FLOAT_FORMAT % report.window[1],
        f"{prefix}n_samples": str(report.n_samples),
    }


def estimate_record(estimate: TomographyEstimate, truth: Optional[GaussianStateParams] = None) -> Dict[str, str]:
    """
    Flat key-value view of an estimate, with the true state when it is known.
    """
    record = {}
    if truth is not None:
        for key, value in truth.model_dump().items():
            record[f"true_{key}"] = FLOAT_FORMAT % value
    for key, value in estimate.state.model_dump().items():
        record[key] = FLOAT_FORMAT % value
        record[f"{key}_err"] = FLOAT_FORMAT % getattr(estimate, f"{key}_err")
    record["n_samples"] = str(estimate.n_samples)
    record["n_bins"] = str(estimate.n_bins)
    return record


def write_record(path: str, record: Dict[str, str], metadata: Optional[Dict[str, str]] = None) -> None:
    """
    Writes `key=value` lines, preceded by '#' metadata lines.
    """
    lines = [f"# {key}: {value}" for key, value in (metadata or {}).items()]
    lines += [f"{key}={value}" for key, value in record.items()]
    atomic_write(path, "\n".join(lines) + "\n")


def read_record(path: str) -> Dict[str, str]:
    record = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                key, _, value = line.partition("=")
                record[key] = value
    return record
