import math
from enum import Enum


class PumpRegime(Enum):
    """
    Named seed-pump relative phases used by scans, locks and state generation.

    Attributes:
        AMPLIFICATION (dict): φ_p = −π/2, intracavity power maximal, PDH offset vanishes.
        DEAMPLIFICATION (dict): φ_p = +π/2, intracavity power minimal, PDH offset vanishes.
        MINUS (dict): φ_p = 0, negative PDH offset at resonance.
        PLUS (dict): φ_p = π, positive PDH offset at resonance.
    """
    AMPLIFICATION = {
        "PHI_P": -math.pi / 2,
        "OFFSET_SIGN": 0
    }
    DEAMPLIFICATION = {
        "PHI_P": math.pi / 2,
        "OFFSET_SIGN": 0
    }
    MINUS = {
        "PHI_P": 0.0,
        "OFFSET_SIGN": -1
    }
    PLUS = {
        "PHI_P": math.pi,
        "OFFSET_SIGN": 1
    }

    @property
    def phi_p(self) -> float:
        """
        Gets the pump phase of the regime in radians.

        Returns:
            float: The pump phase φ_p.
        """
        return self.value.get("PHI_P")

    @property
    def offset_sign(self) -> int:
        """
        Gets the expected sign of the PDH offset at resonance (0 when it vanishes).

        Returns:
            int: -1, 0 or +1.
        """
        return self.value.get("OFFSET_SIGN")

    @property
    def label(self):
        """
        Gets the regime name in lowercase format, used in file names.

        Returns:
            str: The lowercase regime name.
        """
        return self.name.lower()
