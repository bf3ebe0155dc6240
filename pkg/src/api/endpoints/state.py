import math
from typing import Optional

from fastapi import APIRouter, Query
from pydantic import ValidationError

from src.squeezed_states import arg_xi_from_pump, reconstruct, squeezing_db, synthesize_trace
from src.api.config import experiment_config
from src.Classes.SimulationError import DegenerateFit, SimulationError
from src.Classes.APIResponseModel import StateResponse, StateData

"""
This module defines the `/state` endpoint: it synthesizes a homodyne trace of the
configured squeezed state, with arg(ξ) set by the pump phase, and returns the
tomographic reconstruction next to the truth.
"""

router = APIRouter()


@router.get("/state", response_model=StateResponse)
def state(
    phi_p: Optional[float] = Query(None),
    samples: int = Query(100_000, ge=1, le=2_000_000),
    theta_end: float = Query(2.0 * math.pi, gt=0.0),
    seed: Optional[int] = Query(None),
) -> StateResponse:
    """
    Generate and reconstruct one homodyne measurement.

    A degenerate fit (squeezing indistinguishable from zero) is not an error: the
    estimate is returned with an infinite arg(ξ) uncertainty.

    Args:
        phi_p (Optional[float]): Overrides the pump phase; arg(ξ) = φ_p + π/2.
        samples (int): Number of quadrature samples.
        theta_end (float): End of the local oscillator phase ramp starting at 0, rad.
        seed (Optional[int]): Overrides the seed of the draw.

    Returns:
        StateResponse: Truth, estimate and squeezing level, or an error envelope
            (422 for fewer than 1000 samples or a ramp shorter than π).
    """
    try:
        config = experiment_config(phi_p=phi_p, seed=seed)
        truth = config.state.model_copy(update={"xi_arg": arg_xi_from_pump(config.pump.phi_p)})
        trace = synthesize_trace(truth, (0.0, theta_end, samples), config.lock.seed)

        message = "State reconstructed successfully."
        try:
            estimate = reconstruct(trace)
        except DegenerateFit as e:
            estimate = e.estimate
            message = f"State reconstructed; {e.message}"

        return StateResponse(
            success=True,
            status=200,
            message=message,
            data=StateData(
                truth=truth,
                estimate=estimate,
                squeezing_db=squeezing_db(estimate.state.xi_mag, estimate.state.n_th),
            ),
        )
    except SimulationError as e:
        return StateResponse(success=False, status=e.status, message=e.message, data=None)
    except ValidationError as e:
        return StateResponse(success=False, status=422, message=f"Invalid configuration: {e}", data=None)
    except Exception as e:
        return StateResponse(success=False, status=500, message=f"Internal server error: {e}", data=None)
