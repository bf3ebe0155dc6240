from dataclasses import dataclass


@dataclass(frozen=True)
class PIState:
    """
    Integrator memory of one PI controller.

    Attributes:
        integral (float): Clamped integrator output, in actuator units (rad).
    """
    integral: float = 0.0


@dataclass(frozen=True)
class PlantState:
    """
    Slow state of the plant between two loop samples.

    Attributes:
        t (float): Time of the sample in s.
        piezo_phi (float): Cavity piezo displacement in rad of round-trip phase.
        piezo_phip (float): Pump-path piezo displacement in rad of pump phase.
        walk_phi (float): Accumulated random walk on the cavity phase, rad.
        walk_phip (float): Accumulated random walk on the pump phase, rad.
        laser_noise (float): Unit-variance low-pass laser noise state.
    """
    t: float = 0.0
    piezo_phi: float = 0.0
    piezo_phip: float = 0.0
    walk_phi: float = 0.0
    walk_phip: float = 0.0
    laser_noise: float = 0.0
