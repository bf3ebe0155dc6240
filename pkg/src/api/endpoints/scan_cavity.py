from typing import Optional

from cachetools import TTLCache
from fastapi import APIRouter, Query
from pydantic import ValidationError

from src.opo_core import reflected_field
from src.error_signals import scan_cavity as run_scan, calibrate_offsets, reflected_min
from src.api.config import experiment_config
from src.Classes.ConfigModels import Detuning, ExperimentConfig
from src.Classes.ResultModels import ComplexAmplitude
from src.Classes.SimulationError import SimulationError
from src.Classes.APIResponseModel import ScanCavityResponse, ScanCavityData

"""
This module defines the `/scan_cavity` endpoint returning an open-loop scan of the
cavity detuning, the offsets calibrated from it and the reflected field at the minimum.
Scans are cached per configuration.
"""

router = APIRouter()
cache = TTLCache(maxsize=100, ttl=600)


def compute_scan(config: ExperimentConfig, n_points: int, half_width: float) -> ScanCavityData:
    """
    Scan the detuning over ±half_width and calibrate the offsets, caching the result.

    Args:
        config (ExperimentConfig): Experiment config of the request.
        n_points (int): Number of scan points.
        half_width (float): Half-width of the scan in rad.

    Returns:
        ScanCavityData: Samples, offsets, phi_min and E_R at phi_min.

    Raises:
        AboveThreshold: If no sample of the scan is below threshold.
        WindowTooNarrow: If the reflected minimum lies on the scan boundary.
    """
    key = f"{config.model_dump_json()}_{n_points}_{half_width}"
    if key in cache:
        return cache[key]

    samples = run_scan(config.opo, config.pump, config.pdh, (-half_width, half_width), n_points, config.sps)
    pdh_offset, sps_offset = calibrate_offsets(samples)
    phi_min, _ = reflected_min(config.opo, config.pump, half_width)
    field = reflected_field(config.opo, config.pump, Detuning(phi=phi_min))

    data = ScanCavityData(
        samples=samples,
        pdh_offset=pdh_offset,
        sps_offset=sps_offset,
        phi_min=phi_min,
        reflected_min_field=ComplexAmplitude.from_complex(field),
    )
    cache[key] = data
    return data


@router.get("/scan_cavity", response_model=ScanCavityResponse)
def scan_cavity(
    gamma_mag: Optional[float] = Query(None, ge=0.0),
    phi_p: Optional[float] = Query(None),
    points: Optional[int] = Query(None, ge=3, le=100_001),
    half_width: Optional[float] = Query(None, gt=0.0),
) -> ScanCavityResponse:
    """
    Open-loop cavity scan for the configured (or overridden) pump.

    Args:
        gamma_mag (Optional[float]): Overrides the pump strength |γ|.
        phi_p (Optional[float]): Overrides the pump phase in rad.
        points (Optional[int]): Number of scan points. Defaults to lock.scan_points.
        half_width (Optional[float]): Scan half-width in rad. Defaults to lock.scan_half_width.

    Returns:
        ScanCavityResponse: The scan, or an error envelope (422 above threshold or for
            a minimum on the scan boundary).
    """
    try:
        config = experiment_config(gamma_mag=gamma_mag, phi_p=phi_p)
        data = compute_scan(
            config,
            points or config.lock.scan_points,
            half_width or config.lock.scan_half_width,
        )
        return ScanCavityResponse(success=True, status=200, message="Cavity scanned successfully.", data=data)
    except SimulationError as e:
        return ScanCavityResponse(success=False, status=e.status, message=e.message, data=None)
    except ValidationError as e:
        return ScanCavityResponse(success=False, status=422, message=f"Invalid configuration: {e}", data=None)
    except Exception as e:
        return ScanCavityResponse(success=False, status=500, message=f"Internal server error: {e}", data=None)
