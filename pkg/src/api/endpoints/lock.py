from typing import Optional

from cachetools import TTLCache
from fastapi import APIRouter, Query
from pydantic import ValidationError

from src.lock_sim import acquire_lock, rin, run_scenario
from src.api.config import experiment_config
from src.Enums.LockScenario import LockScenario
from src.Classes.ConfigModels import ExperimentConfig
from src.Classes.SimulationError import SimulationError
from src.Classes.APIResponseModel import LockResponse, LockData

"""
This module defines the `/lock` endpoint running a closed-loop simulation of the
cavity and pump-phase locks and reporting the transmitted-power RIN. Runs are
deterministic for a given config and seed, so their results are cached.
"""

router = APIRouter()
cache = TTLCache(maxsize=100, ttl=600)


def run_lock(config: ExperimentConfig, scenario: Optional[LockScenario]) -> LockData:
    """
    Acquire the lock for the config as given, or under a stabilization scenario.

    Args:
        config (ExperimentConfig): Experiment config of the request.
        scenario (Optional[LockScenario]): Scenario to apply, None for the config as given.

    Returns:
        LockData: Calibration (config runs only) and RIN report.

    Raises:
        LockFailed: If the cavity loop does not settle.
        EmptyWindow: If the RIN window holds too few samples.
    """
    key = f"{config.model_dump_json()}_{scenario.cli_name if scenario else 'config'}"
    if key in cache:
        return cache[key]

    if scenario is None:
        calibration, trace = acquire_lock(config)
        report = rin(trace, (config.lock.settle_time, config.lock.duration))
        data = LockData(calibration=calibration, rin=report)
    else:
        report, _ = run_scenario(config, scenario)
        data = LockData(scenario=scenario.cli_name, rin=report)

    cache[key] = data
    return data


@router.post("/lock", response_model=LockResponse)
def lock(
    scenario: Optional[str] = Query(None, description="pump-off, pi or i-only"),
    seed: Optional[int] = Query(None),
) -> LockResponse:
    """
    Run one closed-loop lock simulation.

    Args:
        scenario (Optional[str]): Stabilization scenario; without it the configured pump is used.
        seed (Optional[int]): Overrides the seed of the run.

    Returns:
        LockResponse: Calibration and RIN, or an error envelope (409 if the lock fails,
            422 for an unknown scenario).
    """
    try:
        try:
            selected = LockScenario.from_cli_name(scenario) if scenario else None
        except KeyError:
            names = ", ".join(item.cli_name for item in LockScenario)
            return LockResponse(success=False, status=422, message=f"Unknown scenario '{scenario}', use one of: {names}.")

        data = run_lock(experiment_config(seed=seed), selected)
        return LockResponse(success=True, status=200, message="Lock simulated successfully.", data=data)
    except SimulationError as e:
        return LockResponse(success=False, status=e.status, message=e.message, data=None)
    except ValidationError as e:
        return LockResponse(success=False, status=422, message=f"Invalid configuration: {e}", data=None)
    except Exception as e:
        return LockResponse(success=False, status=500, message=f"Internal server error: {e}", data=None)
