# __init__.py
from .PumpRegime import PumpRegime
from .LockScenario import LockScenario
from .ExitCode import ExitCode
