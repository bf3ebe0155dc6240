from typing import Optional

from src.export import resolve_config
from src.Classes.ConfigModels import ExperimentConfig

"""
Experiment config used by the HTTP endpoints: the settings config file with
per-request overrides, re-validated so that threshold violations are reported.
"""


def experiment_config(
    gamma_mag: Optional[float] = None,
    phi_p: Optional[float] = None,
    seed: Optional[int] = None,
) -> ExperimentConfig:
    """
    Builds the config of one request.

    Args:
        gamma_mag (Optional[float]): Overrides pump.gamma_mag.
        phi_p (Optional[float]): Overrides pump.phi_p.
        seed (Optional[int]): Overrides lock.seed.

    Returns:
        ExperimentConfig: The validated config.

    Raises:
        pydantic.ValidationError: If an override violates the config invariants.
    """
    data = resolve_config().model_dump()
    if gamma_mag is not None:
        data["pump"]["gamma_mag"] = gamma_mag
    if phi_p is not None:
        data["pump"]["phi_p"] = phi_p
    if seed is not None:
        data["lock"]["seed"] = seed
    return ExperimentConfig.model_validate(data)
