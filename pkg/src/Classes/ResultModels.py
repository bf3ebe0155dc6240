import math
from typing import Optional, Tuple

from pydantic import BaseModel, Field, field_serializer, model_validator

from src.Classes.ConfigModels import GaussianStateParams


class ComplexAmplitude(BaseModel):
    """
    Serialized complex field value, in units of the input field E_in = 1.

    The numerical core works with Python complex numbers; this model is their
    transport form in API responses and exported records.

    Attributes:
        re (float): Real part.
        im (float): Imaginary part.
    """
    re: float = Field(allow_inf_nan=False)
    im: float = Field(allow_inf_nan=False)

    @classmethod
    def from_complex(cls, value: complex) -> "ComplexAmplitude":
        return cls(re=value.real, im=value.imag)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def power(self) -> float:
        return self.re ** 2 + self.im ** 2


class ErrorSample(BaseModel):
    """
    One point of an open-loop cavity scan.

    Samples above threshold are kept with NaN observables and `valid=False`.

    Attributes:
        phi (float): Detuning phase in rad.
        phi_p (float): Pump phase in rad.
        eps_pdh (float): PDH error with the configured offset removed.
        eps_pdh_raw (float): PDH error without offset.
        eps_sps (float): SPS error at unit laser power.
        reflected_power (float): |E_R|².
        transmitted_power (float): |E_c|², proportional to the OPO output.
        valid (bool): False when the point is at or above threshold.
    """
    phi: float
    phi_p: float
    eps_pdh: float
    eps_pdh_raw: float
    eps_sps: float
    reflected_power: float
    transmitted_power: float
    valid: bool = True

    @field_serializer("eps_pdh", "eps_pdh_raw", "eps_sps", "reflected_power", "transmitted_power", when_used="json")
    def _serialize_observable(self, value: float) -> Optional[float]:
        return value if math.isfinite(value) else None

    @model_validator(mode="after")
    def _check_powers(self) -> "ErrorSample":
        if self.valid and (self.reflected_power < 0.0 or self.transmitted_power < 0.0):
            raise ValueError("Powers of a valid sample must be non-negative.")
        return self


class LockCalibration(BaseModel):
    """
    Everything acquisition measures before the loops are engaged.

    Attributes:
        pdh_offset (float): Offset zeroing the PDH error at the reflected minimum.
        sps_offset (float): Offset zeroing the reflected power at the same point.
        phi_min (float): Located reflected-power minimum, rad.
        power_min (float): Reflected power at phi_min.
        pdh_slope (float): dε_PDH/dφ at phi_min.
        sps_slope (float): d|E_R^(min)|²/dφ_p at the target pump phase.
        power_comp_gain (float): Laser-power compensation gain in use.
        sps_engaged (bool): False when the SPS slope vanishes and the pump loop stays open.
    """
    pdh_offset: float
    sps_offset: float
    phi_min: float
    power_min: float
    pdh_slope: float
    sps_slope: float
    power_comp_gain: float = Field(ge=0.0)
    sps_engaged: bool


class RinReport(BaseModel):
    """
    Relative intensity noise of the transmitted beam over an analysis window.

    Attributes:
        rin (float): Standard deviation over mean of the transmitted power.
        window (Tuple[float, float]): (t_start, t_end) in s.
        n_samples (int): Samples inside the window.
    """
    rin: float = Field(ge=0.0)
    window: Tuple[float, float]
    n_samples: int = Field(ge=0)


class TomographyEstimate(BaseModel):
    """
    Reconstructed state parameters with asymptotic standard errors.

    An infinite `xi_arg_err` marks an unidentified squeezing phase.

    Attributes:
        state (GaussianStateParams): Point estimate.
        alpha_err, xi_mag_err, xi_arg_err, n_th_err (float): Standard errors.
        n_samples (int): Samples used.
        n_bins (int): Phase bins used.
    """
    state: GaussianStateParams
    alpha_err: float = Field(ge=0.0)
    xi_mag_err: float = Field(ge=0.0)
    xi_arg_err: float = Field(ge=0.0)
    n_th_err: float = Field(ge=0.0)
    n_samples: int
    n_bins: int

    @field_serializer("alpha_err", "xi_mag_err", "xi_arg_err", "n_th_err", when_used="json")
    def _serialize_error(self, value: float) -> Optional[float]:
        return value if math.isfinite(value) else None

    @property
    def xi_arg_identified(self) -> bool:
        return math.isfinite(self.xi_arg_err)
