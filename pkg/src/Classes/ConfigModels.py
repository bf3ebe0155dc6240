import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class FrozenModel(BaseModel):
    """
    Base for every configuration model: immutable, and unknown keys are rejected.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)


class OpoParams(FrozenModel):
    """
    Constants of the two-mirror OPO cavity.

    Attributes:
        r1 (float): Power reflectivity of the input coupler M1, 0 < R1 < 1.
        r2 (float): Power reflectivity of the output coupler M2, 0 < R2 <= 1.
        delta (float): Internal power loss Δ of a single round trip, 0 <= Δ < 1.
        fsr (float): Free spectral range Γ in Hz.
    """
    r1: float = Field(0.9988, gt=0.0, lt=1.0)
    r2: float = Field(0.917, gt=0.0, le=1.0)
    delta: float = Field(2.4e-3, ge=0.0, lt=1.0)
    fsr: float = Field(3.025e9, gt=0.0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_roundtrip_reflectivity(self) -> "OpoParams":
        if not 0.0 < self.roundtrip_reflectivity < 1.0:
            raise ValueError(f"Round-trip reflectivity R={self.roundtrip_reflectivity} must lie in (0, 1).")
        return self

    @property
    def roundtrip_reflectivity(self) -> float:
        """R = R1·R2·(1−Δ)²."""
        return self.r1 * self.r2 * (1.0 - self.delta) ** 2

    @property
    def roundtrip_time(self) -> float:
        """τ = 1/Γ in seconds."""
        return 1.0 / self.fsr

    @property
    def threshold(self) -> float:
        """Resonant threshold 1−√R of the pump strength |γ|."""
        return 1.0 - math.sqrt(self.roundtrip_reflectivity)


class PumpConfig(FrozenModel):
    """
    Pump seen by the nonlinear crystal: γ = |γ|·exp(iφ_p).

    Attributes:
        gamma_mag (float): Nonlinear coupling magnitude |γ| per round trip.
        phi_p (float): Pump phase relative to the seed, in radians.
    """
    gamma_mag: float = Field(1.85e-2, ge=0.0, allow_inf_nan=False)
    phi_p: float = Field(-math.pi / 2, allow_inf_nan=False)


class Detuning(FrozenModel):
    """
    Round-trip phase φ = 2πν/Γ of the seed relative to the cavity resonance.

    Attributes:
        phi (float): Round-trip phase in radians.
    """
    phi: float = Field(0.0, allow_inf_nan=False)

    @classmethod
    def from_frequency(cls, nu: float, fsr: float) -> "Detuning":
        """
        Builds a detuning from the frequency offset ν = ν_in − ν_c.

        Args:
            nu (float): Detuning in Hz.
            fsr (float): Free spectral range Γ in Hz.
        """
        return cls(phi=2.0 * math.pi * nu / fsr)

    def frequency(self, fsr: float) -> float:
        """
        Returns the detuning ν in Hz for the given free spectral range.
        """
        return self.phi * fsr / (2.0 * math.pi)


class PdhConfig(FrozenModel):
    """
    Pound-Drever-Hall demodulated error signal settings.

    Attributes:
        phi_m (float): Sideband offset 2πν_m/Γ in round-trip phase units.
        pdh_offset (float): Offset subtracted from the raw error signal.
    """
    phi_m: float = Field(0.1, gt=0.0, lt=math.pi)
    pdh_offset: float = Field(0.0, allow_inf_nan=False)


class SpsConfig(FrozenModel):
    """
    Seed-pump stabilizer error signal settings.

    Attributes:
        sps_offset (float): Offset subtracted from the reflected power.
        power_comp_gain (Optional[float]): Scale of the laser-power subtraction; None means
            calibrate it from an open-loop noise record.
    """
    sps_offset: float = Field(0.0, allow_inf_nan=False)
    power_comp_gain: Optional[float] = Field(None, ge=0.0)


class LockConfig(FrozenModel):
    """
    Discrete PI loops and run timing.

    Errors are normalized by the discriminant slopes measured during acquisition, so
    kp is dimensionless (rad per rad) and ki is in 1/s.

    Attributes:
        sample_rate (float): Loop rate in Hz.
        kp_pdh, ki_pdh (float): Cavity (PDH) loop gains.
        kp_sps, ki_sps (float): Pump-phase (SPS) loop gains.
        actuator_range (float): Piezo saturation, ±rad.
        actuator_bandwidth (float): First-order corner of the piezo drive in Hz.
        integrator_clamp (float): Anti-windup bound of each integrator, rad.
        seed (int): Seed of every random draw of a run.
        duration (float): Length of a closed-loop run in s.
        settle_time (float): Settle window after engaging the loops in s.
        capture_offset (float): Cavity detuning from the located minimum when the PDH loop engages, rad.
        scan_points (int): Points of the open-loop acquisition scan.
        scan_half_width (float): Half-width of the acquisition scan in rad.
    """
    sample_rate: float = Field(100e3, gt=0.0, allow_inf_nan=False)
    kp_pdh: float = Field(4.0, allow_inf_nan=False)
    ki_pdh: float = Field(5000.0, allow_inf_nan=False)
    kp_sps: float = Field(3.2, allow_inf_nan=False)
    ki_sps: float = Field(1571.0, allow_inf_nan=False)
    actuator_range: float = Field(3.0, gt=0.0, allow_inf_nan=False)
    actuator_bandwidth: float = Field(1000.0, gt=0.0, allow_inf_nan=False)
    integrator_clamp: float = Field(2.5, gt=0.0, allow_inf_nan=False)
    seed: int = 6
    duration: float = Field(0.1, gt=0.0, allow_inf_nan=False)
    settle_time: float = Field(0.02, gt=0.0, allow_inf_nan=False)
    capture_offset: float = Field(5e-3, allow_inf_nan=False)
    scan_points: int = Field(1001, ge=3)
    scan_half_width: float = Field(0.5, gt=0.0, lt=math.pi)

    @model_validator(mode="after")
    def _check_timing(self) -> "LockConfig":
        if self.settle_time >= self.duration:
            raise ValueError("settle_time must be shorter than duration.")
        return self

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate


class NoiseConfig(FrozenModel):
    """
    Disturbances acting on the two actuator paths and on the laser power.

    The defaults are calibrated, not measured: they reproduce the transmitted-beam RIN
    of the three stabilization scenarios (see `lock_sim.calibrate_noise`).

    Attributes:
        mech_amp_phi (float): Mechanical vibration amplitude on the cavity phase, rad.
        mech_amp_phip (float): Mechanical vibration amplitude on the pump phase, rad.
        mech_freq (float): Vibration frequency in Hz.
        walk_sigma (float): Random-walk strength per actuator path, rad/√s.
        laser_rin_amp (float): RMS relative laser power fluctuation.
        laser_rin_corner (float): Corner frequency of the laser power noise in Hz.
    """
    mech_amp_phi: float = Field(2e-3, ge=0.0, allow_inf_nan=False)
    mech_amp_phip: float = Field(0.11, ge=0.0, allow_inf_nan=False)
    mech_freq: float = Field(1000.0, gt=0.0, allow_inf_nan=False)
    walk_sigma: float = Field(1e-3, ge=0.0, allow_inf_nan=False)
    laser_rin_amp: float = Field(0.006, ge=0.0, allow_inf_nan=False)
    laser_rin_corner: float = Field(10e3, gt=0.0, allow_inf_nan=False)

    @classmethod
    def quiet(cls) -> "NoiseConfig":
        """A disturbance-free configuration."""
        return cls(mech_amp_phi=0.0, mech_amp_phip=0.0, walk_sigma=0.0, laser_rin_amp=0.0)


class GaussianStateParams(FrozenModel):
    """
    Displaced squeezed thermal state D(α)S(ξ)ρ_th S†(ξ)D†(α).

    Attributes:
        alpha (float): Real coherent amplitude.
        xi_mag (float): Squeezing magnitude |ξ|.
        xi_arg (float): Squeezing phase arg(ξ), wrapped into [0, 2π).
        n_th (float): Mean thermal photon number N_th.
    """
    alpha: float = Field(2.93, allow_inf_nan=False)
    xi_mag: float = Field(0.46, ge=0.0, allow_inf_nan=False)
    xi_arg: float = Field(0.0, allow_inf_nan=False)
    n_th: float = Field(0.13, ge=0.0, allow_inf_nan=False)

    @field_validator("xi_arg")
    @classmethod
    def _wrap_xi_arg(cls, value: float) -> float:
        wrapped = math.fmod(value, 2.0 * math.pi)
        if wrapped < 0.0:
            wrapped += 2.0 * math.pi
        return 0.0 if wrapped >= 2.0 * math.pi else wrapped


class ExperimentConfig(FrozenModel):
    """
    Everything a CLI command or API call needs, loaded from one JSON file.

    Attributes:
        opo (OpoParams): Cavity constants.
        pump (PumpConfig): Pump strength and phase.
        pdh (PdhConfig): PDH error signal settings.
        sps (SpsConfig): SPS error signal settings.
        lock (LockConfig): Loop gains and timing.
        noise (NoiseConfig): Disturbance model.
        state (GaussianStateParams): Generated state (arg(ξ) is taken from the pump phase by the CLI).
        output_dir (str): Directory where outputs are written.
    """
    opo: OpoParams = OpoParams()
    pump: PumpConfig = PumpConfig()
    pdh: PdhConfig = PdhConfig()
    sps: SpsConfig = SpsConfig()
    lock: LockConfig = LockConfig()
    noise: NoiseConfig = NoiseConfig()
    state: GaussianStateParams = GaussianStateParams()
    output_dir: str = "output"

    @model_validator(mode="after")
    def _check_below_threshold(self) -> "ExperimentConfig":
        threshold = self.opo.threshold
        if self.pump.gamma_mag >= threshold:
            raise ValueError(
                f"Pump strength |gamma|={self.pump.gamma_mag} is at or above the threshold "
                f"1-sqrt(R)={threshold:.6g} of this cavity."
            )
        return self
