# __init__.py
from .SimulationError import (
    SimulationError, InvalidParameter, AboveThreshold, SingularSystem, InvalidGain, WindowTooNarrow,
    LockFailed, EmptyWindow, InsufficientData, CalibrationError, DegenerateFit
)
from .ConfigModels import (
    OpoParams, PumpConfig, Detuning, PdhConfig, SpsConfig, LockConfig, NoiseConfig, GaussianStateParams,
    ExperimentConfig
)
from .ResultModels import ComplexAmplitude, ErrorSample, LockCalibration, RinReport, TomographyEstimate
from .Traces import LockTrace, HomodyneTrace
