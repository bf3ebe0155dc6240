from typing import Dict, List, Optional

import numpy as np
import pandas as pd


LOCK_TRACE_COLUMNS: List[str] = [
    "t", "phi", "phi_p", "p_trans", "p_refl", "eps_pdh", "eps_sps", "u_pdh", "u_sps", "p_laser"
]

HOMODYNE_TRACE_COLUMNS: List[str] = ["theta", "x"]


class LockTrace:
    """
    Time series recorded by a closed- or open-loop run.

    The table holds one row per loop sample with the columns of `LOCK_TRACE_COLUMNS`:
    time, cavity phase, pump phase, transmitted and reflected powers, both error
    signals, both actuator commands and the laser power. Rows where the plant wandered
    above threshold carry NaN powers and errors.
    """

    def __init__(self, frame: pd.DataFrame, sample_rate: float, metadata: Optional[Dict[str, str]] = None) -> None:
        """
        Wraps a recorded table.

        Args:
            frame (pd.DataFrame): The samples; must contain every column of LOCK_TRACE_COLUMNS.
            sample_rate (float): Loop rate in Hz.
            metadata (Optional[Dict[str, str]]): Free-form descriptors carried to exported files.

        Raises:
            ValueError: If a column is missing or the time grid is not uniform at 1/sample_rate.
        """
        missing = [column for column in LOCK_TRACE_COLUMNS if column not in frame.columns]
        if missing:
            raise ValueError(f"Lock trace is missing columns: {', '.join(missing)}")

        t = frame["t"].to_numpy()
        if len(t) > 1 and not np.allclose(np.diff(t), 1.0 / sample_rate, rtol=1e-9, atol=1e-15):
            raise ValueError("Lock trace time grid is not uniform at 1/sample_rate.")

        self.frame = frame[LOCK_TRACE_COLUMNS].reset_index(drop=True)
        self.sample_rate = sample_rate
        self.metadata = dict(metadata or {})

    def __len__(self) -> int:
        return len(self.frame)

    def __getitem__(self, column: str) -> np.ndarray:
        return self.frame[column].to_numpy()

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        return len(self.frame) * self.dt

    def window(self, t_start: float, t_end: float) -> pd.DataFrame:
        """
        Rows with t_start <= t < t_end.
        """
        t = self.frame["t"]
        return self.frame[(t >= t_start) & (t < t_end)]

    def equals(self, other: "LockTrace") -> bool:
        """
        Bit-level equality of two traces, NaN positions included.
        """
        if self.sample_rate != other.sample_rate or self.frame.shape != other.frame.shape:
            return False
        return all(
            np.array_equal(self.frame[column].to_numpy(), other.frame[column].to_numpy(), equal_nan=True)
            for column in LOCK_TRACE_COLUMNS
        )


class HomodyneTrace:
    """
    Quadrature samples x_θ recorded along a local-oscillator phase ramp.

    Attributes:
        frame (pd.DataFrame): Columns `theta` (rad) and `x`.
        seed (Optional[int]): Seed the samples were drawn with, None for imported data.
        theta_start, theta_end (float): Ramp end points in rad.
    """

    def __init__(
        self,
        frame: pd.DataFrame,
        seed: Optional[int] = None,
        theta_start: Optional[float] = None,
        theta_end: Optional[float] = None,
    ) -> None:
        missing = [column for column in HOMODYNE_TRACE_COLUMNS if column not in frame.columns]
        if missing:
            raise ValueError(f"Homodyne trace is missing columns: {', '.join(missing)}")

        frame = frame[HOMODYNE_TRACE_COLUMNS].astype(float).reset_index(drop=True)
        if not np.isfinite(frame.to_numpy()).all():
            raise ValueError("Homodyne trace holds non-finite samples.")

        self.frame = frame
        self.seed = seed
        self.theta_start = float(frame["theta"].min()) if theta_start is None and len(frame) else theta_start
        self.theta_end = float(frame["theta"].max()) if theta_end is None and len(frame) else theta_end

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def n_samples(self) -> int:
        return len(self.frame)

    @property
    def theta(self) -> np.ndarray:
        return self.frame["theta"].to_numpy()

    @property
    def x(self) -> np.ndarray:
        return self.frame["x"].to_numpy()

    @property
    def theta_span(self) -> float:
        if not len(self.frame):
            return 0.0
        return float(self.frame["theta"].max() - self.frame["theta"].min())

    @property
    def metadata(self) -> Dict[str, str]:
        return {
            "n_samples": str(self.n_samples),
            "seed": "none" if self.seed is None else str(self.seed),
            "theta_ramp": f"{self.theta_start!r}..{self.theta_end!r}",
        }
