from typing import Optional

from fastapi import APIRouter, Query
from pydantic import ValidationError

from src.opo_core import gain_ratio, invert_gain
from src.api.config import experiment_config
from src.Classes.SimulationError import SimulationError
from src.Classes.APIResponseModel import GainResponse, GainData

"""
This module defines the `/gain` endpoint converting between the measured parametric
gain G and the pump strength |γ| of the configured cavity.
"""

router = APIRouter()


@router.post("/gain", response_model=GainResponse)
async def gain(
    gamma_mag: Optional[float] = Query(None, ge=0.0),
    gain_value: Optional[float] = Query(None, alias="gain"),
) -> GainResponse:
    """
    Compute G for a pump strength, or the pump strength producing a measured G.

    With neither parameter, G is computed for the configured pump strength.

    Args:
        gamma_mag (Optional[float]): Pump strength |γ|.
        gain_value (Optional[float]): Measured gain ratio G (query name `gain`).

    Returns:
        GainResponse: G, |γ| and the cavity threshold, or an error envelope
            (422 for both parameters at once, a gain below 1 or a pump above threshold).
    """
    try:
        if gamma_mag is not None and gain_value is not None:
            return GainResponse(success=False, status=422, message="Give either gamma_mag or gain, not both.")

        config = experiment_config()
        opo = config.opo
        if gain_value is not None:
            gamma_mag = invert_gain(opo, gain_value)
        elif gamma_mag is None:
            gamma_mag = config.pump.gamma_mag

        return GainResponse(
            success=True,
            status=200,
            message="Gain computed successfully.",
            data=GainData(gain=gain_ratio(opo, gamma_mag), gamma_mag=gamma_mag, threshold=opo.threshold),
        )
    except SimulationError as e:
        return GainResponse(success=False, status=e.status, message=e.message, data=None)
    except ValidationError as e:
        return GainResponse(success=False, status=422, message=f"Invalid configuration: {e}", data=None)
    except Exception as e:
        return GainResponse(success=False, status=500, message=f"Internal server error: {e}", data=None)
