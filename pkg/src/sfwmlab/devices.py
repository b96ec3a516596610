"""Domain types describing the source: waveguide, pump, detection arms, noise.

All objects are immutable after construction and validated on construction;
every stored quantity is in SI base units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ExtrapolationError
from .units import (
    db_to_linear,
    effective_length,
    frequency_to_wavelength,
    gamma_from_n2,
    prop_loss_to_alpha,
    wavelength_to_frequency,
)

# Relative tolerance for internal consistency of derived quantities.
DERIVED_RTOL = 1e-9


@dataclass(frozen=True)
class WaveguideSpec:
    """Geometry, loss, nonlinearity and dispersion of the nonlinear medium.

    ``eta_alpha_mode`` selects how the in-waveguide pair-photon survival is
    obtained: ``"analytic"`` uses L_eff/L for uniform generation along the
    guide, ``"calibrated"`` uses ``eta_alpha_value`` fitted from a measured
    coincidence rate.  The two can differ substantially for a lossy guide;
    they are never merged silently.
    """

    length_m: float
    prop_loss_db_per_cm: float
    gamma_per_w_m: float
    beta2_s2_per_m: float
    eta_alpha_mode: str = "analytic"
    eta_alpha_value: float | None = None
    # Optional provenance for gamma; validated for consistency when present.
    n2_m2_per_w: float | None = None
    a_eff_m2: float | None = None
    gamma_ref_wavelength_m: float | None = None

    def __post_init__(self):
        if self.length_m <= 0.0:
            raise ConfigError(f"waveguide length must be positive, got {self.length_m}")
        if self.prop_loss_db_per_cm < 0.0:
            raise ConfigError("propagation loss must be non-negative")
        if self.gamma_per_w_m <= 0.0:
            raise ConfigError(f"gamma must be positive, got {self.gamma_per_w_m}")
        if self.eta_alpha_mode not in ("analytic", "calibrated"):
            raise ConfigError(f"unknown eta_alpha_mode {self.eta_alpha_mode!r}")
        if self.eta_alpha_mode == "calibrated":
            v = self.eta_alpha_value
            if v is None or not 0.0 < v <= 1.0:
                raise ConfigError(f"calibrated eta_alpha must be in (0, 1], got {v}")
        if self.a_eff_m2 is not None and self.a_eff_m2 <= 0.0:
            raise ConfigError("a_eff must be positive")
        if self.n2_m2_per_w is not None:
            if self.a_eff_m2 is None or self.gamma_ref_wavelength_m is None:
                raise ConfigError("n2 requires a_eff and a reference wavelength")
            derived = gamma_from_n2(self.n2_m2_per_w, self.a_eff_m2, self.gamma_ref_wavelength_m)
            if not math.isclose(derived, self.gamma_per_w_m, rel_tol=DERIVED_RTOL):
                raise ConfigError(
                    f"gamma {self.gamma_per_w_m} inconsistent with n2/a_eff (expected {derived})"
                )

    @classmethod
    def from_n2(
        cls,
        length_m: float,
        prop_loss_db_per_cm: float,
        n2_m2_per_w: float,
        a_eff_m2: float,
        wavelength_m: float,
        beta2_s2_per_m: float,
        **kwargs,
    ) -> "WaveguideSpec":
        """Build with gamma derived from the nonlinear index and mode area."""
        gamma = gamma_from_n2(n2_m2_per_w, a_eff_m2, wavelength_m)
        return cls(
            length_m=length_m,
            prop_loss_db_per_cm=prop_loss_db_per_cm,
            gamma_per_w_m=gamma,
            beta2_s2_per_m=beta2_s2_per_m,
            n2_m2_per_w=n2_m2_per_w,
            a_eff_m2=a_eff_m2,
            gamma_ref_wavelength_m=wavelength_m,
            **kwargs,
        )

    @property
    def alpha_np_per_m(self) -> float:
        return prop_loss_to_alpha(self.prop_loss_db_per_cm)

    @property
    def effective_length_m(self) -> float:
        return effective_length(self.alpha_np_per_m, self.length_m)

    def eta_alpha(self) -> float:
        """In-waveguide survival probability of one pair photon."""
        if self.eta_alpha_mode == "calibrated":
            return float(self.eta_alpha_value)
        return self.effective_length_m / self.length_m


@dataclass(frozen=True)
class PumpConfig:
    """Pump laser: wavelength, in-waveguide power and temporal mode.

    ``power_w`` is the in-waveguide power; for pulsed operation it is the
    PEAK power, so rate formulas evaluated with it give in-pulse rates and
    the duty cycle converts to time averages.
    """

    wavelength_m: float
    power_w: float
    mode: str = "cw"
    tau_s: float | None = None
    rep_rate_hz: float | None = None

    def __post_init__(self):
        if self.wavelength_m <= 0.0:
            raise ConfigError(f"pump wavelength must be positive, got {self.wavelength_m}")
        if self.power_w < 0.0:
            raise ConfigError(f"pump power must be non-negative, got {self.power_w}")
        if self.mode == "cw":
            if self.tau_s is not None or self.rep_rate_hz is not None:
                raise ConfigError("cw pump takes no pulse parameters")
        elif self.mode == "pulsed":
            if self.tau_s is None or self.rep_rate_hz is None:
                raise ConfigError("pulsed pump requires tau_s and rep_rate_hz")
            if self.tau_s <= 0.0 or self.rep_rate_hz <= 0.0:
                raise ConfigError("pulse duration and repetition rate must be positive")
            if not 0.0 < self.tau_s * self.rep_rate_hz <= 1.0:
                raise ConfigError(
                    f"duty cycle tau*B must be in (0, 1], got {self.tau_s * self.rep_rate_hz}"
                )
        else:
            raise ConfigError(f"unknown pump mode {self.mode!r}")

    @classmethod
    def from_frequency(cls, frequency_hz: float, **kwargs) -> "PumpConfig":
        return cls(wavelength_m=frequency_to_wavelength(frequency_hz), **kwargs)

    @property
    def frequency_hz(self) -> float:
        return wavelength_to_frequency(self.wavelength_m)

    @property
    def duty_cycle(self) -> float:
        """Fraction of time the pump is on: 1 for CW, tau*B for pulses."""
        if self.mode == "cw":
            return 1.0
        return self.tau_s * self.rep_rate_hz


@dataclass(frozen=True)
class DetectionChannel:
    """One collection arm: filter passband, losses, detector properties.

    ``detuning_hz`` is signed: the signal arm sits above the pump
    (detuning > 0), the idler arm below (detuning < 0).  The idler side is
    the Stokes side for thermal-noise bookkeeping.
    """

    detuning_hz: float
    bandwidth_hz: float
    filter_loss_db: float
    detector_qe: float
    dark_rate_hz: float = 0.0
    jitter_fwhm_s: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.bandwidth_hz <= 0.0:
            raise ConfigError(f"channel bandwidth must be positive, got {self.bandwidth_hz}")
        if not 0.0 < self.detector_qe <= 1.0:
            raise ConfigError(f"detector QE must be in (0, 1], got {self.detector_qe}")
        if self.filter_loss_db < 0.0:
            raise ConfigError("filter loss must be non-negative")
        if self.dark_rate_hz < 0.0:
            raise ConfigError("dark rate must be non-negative")
        if self.jitter_fwhm_s < 0.0:
            raise ConfigError("jitter must be non-negative")
        if self.collection_efficiency <= 0.0 or self.collection_efficiency > 1.0:
            raise ConfigError("collection efficiency out of (0, 1]")

    @property
    def collection_efficiency(self) -> float:
        """Filter transmission times detector QE (the eta_i of the rate model)."""
        return self.detector_qe * db_to_linear(self.filter_loss_db)

    @property
    def is_stokes(self) -> bool:
        return self.detuning_hz < 0.0


def coupling_from_insertion(
    total_db: float, prop_loss_db_per_cm: float, length_m: float, split: float = 0.5
) -> tuple[float, float, float]:
    """Split a fiber-to-fiber insertion loss into facet losses.

    Returns ``(input_facet_db, output_facet_db, output_efficiency)``.  The
    propagation part ``prop_loss * L`` is removed first; ``split`` is the
    fraction of the remaining coupling loss assigned to the input facet.
    """
    if not 0.0 <= split <= 1.0:
        raise ConfigError(f"facet split must be in [0, 1], got {split}")
    prop_db = prop_loss_db_per_cm * length_m * 100.0
    coupling_db = total_db - prop_db
    if coupling_db < 0.0:
        raise ConfigError(
            f"total insertion loss {total_db} dB is below the propagation loss {prop_db} dB"
        )
    input_db = split * coupling_db
    output_db = (1.0 - split) * coupling_db
    return input_db, output_db, db_to_linear(output_db)


@dataclass(frozen=True)
class CouplingSpec:
    """Chip insertion-loss budget and the output-coupling knob.

    ``output_scale`` models deliberate output misalignment (0 < scale <= 1)
    and multiplies the output-facet efficiency; the dB budget identity
    input + output + propagation = total always holds for the facet losses
    themselves.
    """

    total_insertion_loss_db: float
    input_split: float = 0.5
    output_scale: float = 1.0

    def __post_init__(self):
        if self.total_insertion_loss_db < 0.0:
            raise ConfigError("total insertion loss must be non-negative")
        if not 0.0 <= self.input_split <= 1.0:
            raise ConfigError(f"input_split must be in [0, 1], got {self.input_split}")
        if not 0.0 < self.output_scale <= 1.0:
            raise ConfigError(f"output_scale must be in (0, 1], got {self.output_scale}")

    def facet_losses_db(self, waveguide: WaveguideSpec) -> tuple[float, float]:
        in_db, out_db, _ = coupling_from_insertion(
            self.total_insertion_loss_db,
            waveguide.prop_loss_db_per_cm,
            waveguide.length_m,
            self.input_split,
        )
        return in_db, out_db

    def output_efficiency(self, waveguide: WaveguideSpec) -> float:
        """Chip-to-fiber survival of one photon at the output facet."""
        _, out_db = self.facet_losses_db(waveguide)
        return self.output_scale * db_to_linear(out_db)


@dataclass(frozen=True)
class PumpRejection:
    """Out-of-band suppression of residual pump light by the channel filters.

    The curve ramps linearly from ``base_db`` at zero detuning to
    ``floor_db`` at ``ramp_hz`` and stays at the floor beyond; it is
    monotone non-decreasing in |detuning| by construction.
    """

    base_db: float = 40.0
    floor_db: float = 120.0
    ramp_hz: float = 0.6e12

    def __post_init__(self):
        if self.floor_db < self.base_db:
            raise ConfigError("rejection floor must be at least the base rejection")
        if self.ramp_hz <= 0.0:
            raise ConfigError("rejection ramp width must be positive")

    def rejection_db(self, detuning_hz: float) -> float:
        frac = min(1.0, abs(detuning_hz) / self.ramp_hz)
        return self.base_db + (self.floor_db - self.base_db) * frac


@dataclass(frozen=True)
class NoiseModel:
    """Spectral noise coefficient table plus temperature and pump rejection.

    ``raman_table`` maps signed detuning (Hz) to a spontaneous-scattering
    coefficient rho in photons / (s Hz W m), linearly interpolated between
    nodes.  Lookups outside the tabulated span raise; nothing extrapolates
    silently.
    """

    raman_table: tuple[tuple[float, float], ...]
    temperature_k: float = 300.0
    pump_rejection: PumpRejection = field(default_factory=PumpRejection)
    note: str = ""

    def __post_init__(self):
        if self.temperature_k <= 0.0:
            raise ConfigError(f"temperature must be positive, got {self.temperature_k}")
        if len(self.raman_table) < 1:
            raise ConfigError("raman_table must have at least one entry")
        det = [d for d, _ in self.raman_table]
        rho = [r for _, r in self.raman_table]
        if any(b <= a for a, b in zip(det, det[1:])):
            raise ConfigError("raman_table detunings must be strictly increasing")
        if any(r < 0.0 for r in rho):
            raise ConfigError("raman coefficients must be non-negative")

    def rho(self, detuning_hz: float) -> float:
        """Interpolated noise coefficient at a signed detuning."""
        det = np.array([d for d, _ in self.raman_table])
        if detuning_hz < det[0] or detuning_hz > det[-1]:
            raise ExtrapolationError(
                f"detuning {detuning_hz:.4g} Hz outside raman table span "
                f"[{det[0]:.4g}, {det[-1]:.4g}] Hz"
            )
        rho = np.array([r for _, r in self.raman_table])
        return float(np.interp(detuning_hz, det, rho))

    def rejection_db(self, detuning_hz: float) -> float:
        return self.pump_rejection.rejection_db(detuning_hz)
