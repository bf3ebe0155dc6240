from typing import Generic, List, Optional, TypeVar

from pydantic import BaseModel

from src.Classes.ResultModels import ComplexAmplitude, ErrorSample, LockCalibration, RinReport, TomographyEstimate
from src.Classes.ConfigModels import GaussianStateParams

DataT = TypeVar("DataT")


class APIResponseModel(BaseModel, Generic[DataT]):
    """
    A generic model representing the structure of an API response.

    Every endpoint answers with this envelope, failures included: a domain error is
    reported through its status and message with no data.

    Attributes:
        success (bool): Indicates whether the API request was successful.
        status (int): The HTTP-like status code associated with the response.
        message (str): A message describing the result of the API request.
        data (Optional[DataT]): The payload, if any.
    """
    success: bool
    status: int
    message: str
    data: Optional[DataT] = None


class GainData(BaseModel):
    """
    Gain ratio G and the pump strength |γ| it corresponds to, for one cavity.

    Attributes:
        gain (float): G at resonance.
        gamma_mag (float): Pump strength |γ|.
        threshold (float): 1−√R of the cavity.
    """
    gain: float
    gamma_mag: float
    threshold: float


class ScanCavityData(BaseModel):
    """
    An open-loop cavity scan with its offset calibration.

    Attributes:
        samples (List[ErrorSample]): Scan samples in grid order.
        pdh_offset (float): PDH offset at the reflected minimum of the scan.
        sps_offset (float): Minimal reflected power of the scan.
        phi_min (float): Refined reflected-power minimum, rad.
        reflected_min_field (ComplexAmplitude): E_R at phi_min.
    """
    samples: List[ErrorSample]
    pdh_offset: float
    sps_offset: float
    phi_min: float
    reflected_min_field: ComplexAmplitude


class StateData(BaseModel):
    """
    Truth and reconstruction of a synthetic homodyne measurement.

    Attributes:
        truth (GaussianStateParams): The state the trace was drawn from.
        estimate (TomographyEstimate): The reconstruction.
        squeezing_db (float): Squeezing level of the estimate in dB.
    """
    truth: GaussianStateParams
    estimate: TomographyEstimate
    squeezing_db: float


class LockData(BaseModel):
    """
    Calibration and transmitted RIN of a lock run.

    Attributes:
        scenario (Optional[str]): Scenario name, None for the configured pump phase.
        calibration (Optional[LockCalibration]): Offsets and slopes in use.
        rin (RinReport): Transmitted-power RIN after the settle window.
    """
    scenario: Optional[str] = None
    calibration: Optional[LockCalibration] = None
    rin: RinReport


class GainResponse(APIResponseModel[GainData]):
    """
    Represents the response model of the gain conversion endpoint.
    """
    pass


class ScanCavityResponse(APIResponseModel[ScanCavityData]):
    """
    Represents the response model of the cavity scan endpoint.
    """
    pass


class StateResponse(APIResponseModel[StateData]):
    """
    Represents the response model of the state generation and tomography endpoint.

    A degenerate fit is still a successful response: its estimate carries an infinite
    arg(ξ) error and the message says so.
    """
    pass


class LockResponse(APIResponseModel[LockData]):
    """
    Represents the response model of the lock endpoint.
    """
    pass
