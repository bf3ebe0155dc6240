from enum import Enum


class LockScenario(Enum):
    """
    The three stabilization scenarios compared through the transmitted-beam RIN.

    Each member maps to the loop settings it forces on top of an experiment config
    and the RIN the scenario is calibrated against.

    Attributes:
        PUMP_OFF (dict): Pump turned off, only the cavity (PDH) loop runs.
        PROPORTIONAL_INTEGRAL (dict): Pump on, φ_p locked at 0 with both P and I of the SPS loop.
        INTEGRAL_ONLY (dict): Pump on, φ_p locked at 0 with the SPS proportional switched off.
    """
    PUMP_OFF = {
        "PUMP_ON": False,
        "SPS_PROPORTIONAL": False,
        "TARGET_RIN": 0.006,
        "CLI_NAME": "pump-off"
    }
    PROPORTIONAL_INTEGRAL = {
        "PUMP_ON": True,
        "SPS_PROPORTIONAL": True,
        "TARGET_RIN": 0.019,
        "CLI_NAME": "pi"
    }
    INTEGRAL_ONLY = {
        "PUMP_ON": True,
        "SPS_PROPORTIONAL": False,
        "TARGET_RIN": 0.062,
        "CLI_NAME": "i-only"
    }

    def get_setting(self, key: str):
        """
        Retrieves one setting of the scenario.

        Args:
            key (str): The setting name (e.g., 'PUMP_ON', 'SPS_PROPORTIONAL' or 'TARGET_RIN').

        Returns:
            The value stored for the key, or None when the key is unknown.
        """
        return self.value.get(key)

    @property
    def target_rin(self) -> float:
        return self.value.get("TARGET_RIN")

    @property
    def cli_name(self) -> str:
        return self.value.get("CLI_NAME")

    @classmethod
    def from_cli_name(cls, name: str) -> "LockScenario":
        """
        Resolves a scenario from its command-line spelling.

        Raises:
            KeyError: If no scenario uses the given name.
        """
        for scenario in cls:
            if scenario.cli_name == name:
                return scenario
        raise KeyError(name)
