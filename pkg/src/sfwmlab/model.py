"""Analytic count-rate model for a four-wave-mixing pair source.

The chain is: a phase-matched pair-generation rate, per-photon collection
efficiencies, spontaneous-scattering and residual-pump noise terms, dark
counts, and the coincidence/accidental bookkeeping that yields the CAR.
All functions are pure and operate in SI units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .constants import BOLTZMANN_K, PLANCK_H
from .devices import (
    CouplingSpec,
    DetectionChannel,
    NoiseModel,
    PumpConfig,
    WaveguideSpec,
)
from .errors import ConfigError, InconsistentMeasurementError
from .units import effective_length

# Matching tolerance for the signal/idler detuning symmetry check.
DETUNING_RTOL = 1e-9


def sinc(x: float) -> float:
    """Unnormalized sinc: sin(x)/x with sinc(0) = 1."""
    if x == 0.0:
        return 1.0
    return math.sin(x) / x


def phase_mismatch(
    waveguide: WaveguideSpec, pump: PumpConfig, detuning_hz: float
) -> float:
    """Phase argument beta2*(2*pi*nu)^2*L/2 + gamma*P*L, in radians."""
    nu = abs(detuning_hz)
    linear = waveguide.beta2_s2_per_m * (2.0 * math.pi * nu) ** 2 * waveguide.length_m / 2.0
    nonlinear = waveguide.gamma_per_w_m * pump.power_w * waveguide.length_m
    return linear + nonlinear


def pair_generation_rate(
    waveguide: WaveguideSpec, pump: PumpConfig, channel: DetectionChannel
) -> float:
    """In-waveguide pair generation rate into the channel passband, pairs/s.

    rate = dnu * (gamma * P * L_eff)^2 * sinc^2(phase); P is the pump power
    field directly, so in pulsed mode this is the in-pulse (peak) rate.
    """
    amplitude = (
        waveguide.gamma_per_w_m * pump.power_w * waveguide.effective_length_m
    )
    envelope = sinc(phase_mismatch(waveguide, pump, channel.detuning_hz)) ** 2
    return channel.bandwidth_hz * amplitude**2 * envelope


def eta_alpha_analytic(alpha_np_per_m: float, length_m: float) -> float:
    """Mean survival of one photon generated uniformly along a lossy guide.

    Equals L_eff/L: generation is uniform in z while survival from z to the
    output facet is exp(-alpha*(L - z)).
    """
    return effective_length(alpha_np_per_m, length_m) / length_m


def thermal_occupancy(frequency_hz: float, temperature_k: float) -> float:
    """Bose-Einstein phonon occupancy 1/(exp(h*nu/k*T) - 1)."""
    if frequency_hz <= 0.0:
        raise ValueError(f"occupancy requires a positive frequency, got {frequency_hz}")
    if temperature_k <= 0.0:
        raise ValueError(f"occupancy requires a positive temperature, got {temperature_k}")
    x = PLANCK_H * frequency_hz / (BOLTZMANN_K * temperature_k)
    if x > 700.0:
        return 0.0  # expm1 would overflow; occupancy underflows anyway
    return 1.0 / math.expm1(x)


def raman_occupancy(channel: DetectionChannel, temperature_k: float) -> float:
    """Occupancy weight for a channel: n+1 on the Stokes (red) side, n above."""
    if channel.detuning_hz == 0.0:
        raise ConfigError("noise model undefined at zero detuning (channel overlaps the pump)")
    n = thermal_occupancy(abs(channel.detuning_hz), temperature_k)
    return n + 1.0 if channel.is_stokes else n


def raman_noise_rate(
    noise: NoiseModel,
    channel: DetectionChannel,
    pump: PumpConfig,
    waveguide: WaveguideSpec,
) -> float:
    """Spontaneous-scattering photon rate into the channel, photons/s.

    rate = rho(detuning) * dnu * P * L_eff * occupancy; linear in pump power
    (in-pulse rate when the pump is pulsed).
    """
    rho = noise.rho(channel.detuning_hz)
    occ = raman_occupancy(channel, noise.temperature_k)
    return (
        rho
        * channel.bandwidth_hz
        * pump.power_w
        * waveguide.effective_length_m
        * occ
    )


def pump_leakage_rate(
    noise: NoiseModel, channel: DetectionChannel, pump: PumpConfig
) -> float:
    """Residual pump photon rate passing the channel filter, photons/s.

    The rejection curve is the out-of-band suppression relative to the
    filter's in-band transmission (the in-band insertion loss lives in the
    channel's collection efficiency), so this rate slots into the singles
    budget exactly like a noise-generation rate.
    """
    flux = pump.power_w / (PLANCK_H * pump.frequency_hz)
    return flux * 10.0 ** (-noise.rejection_db(channel.detuning_hz) / 10.0)


@dataclass(frozen=True)
class ModelObservables:
    """Predicted observables for one configuration.

    ``pair_rate`` is the in-waveguide generation rate r; ``coincidences``,
    ``singles0``, ``singles1`` and ``accidentals`` are detected rates in
    counts/s; ``car`` is coincidences/accidentals for the stated window and
    accidental mode.  ``meta`` echoes the conventions used (duty cycle,
    eta_alpha, passbands) and ``singles_parts`` splits each singles rate
    into pair / scattering / leakage / dark contributions that sum to the
    total exactly.
    """

    pair_rate: float
    coincidences: float
    singles0: float
    singles1: float
    accidentals: float
    car: float
    window_s: float
    accidental_mode: str
    singles_parts: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        return {
            "r": self.pair_rate,
            "C": self.coincidences,
            "N0": self.singles0,
            "N1": self.singles1,
            "A": self.accidentals,
            "CAR": self.car,
        }


def _check_channel_pair(ch0: DetectionChannel, ch1: DetectionChannel) -> None:
    if ch0.detuning_hz >= 0.0 or ch1.detuning_hz <= 0.0:
        raise ConfigError(
            "expected channel 0 below the pump (detuning < 0) and channel 1 above"
        )
    if not math.isclose(-ch0.detuning_hz, ch1.detuning_hz, rel_tol=DETUNING_RTOL):
        raise ConfigError(
            f"channel detunings must be symmetric about the pump, got "
            f"{ch0.detuning_hz:.6g} and {ch1.detuning_hz:.6g}"
        )


def singles_rate_parts(
    waveguide: WaveguideSpec,
    pump: PumpConfig,
    coupling: CouplingSpec,
    channel: DetectionChannel,
    noise: NoiseModel,
) -> dict:
    """Detected singles rate for one arm, split by physical origin.

    parts: pair photons sigma*eta*eta_i*eta_alpha*r, scattering noise
    sigma*eta*eta_i*r_n, pump leakage sigma*eta_i*leak, darks d_i.
    """
    sigma = pump.duty_cycle
    eta_out = coupling.output_efficiency(waveguide)
    eta_i = channel.collection_efficiency
    r = pair_generation_rate(waveguide, pump, channel)
    r_n = raman_noise_rate(noise, channel, pump, waveguide)
    leak = pump_leakage_rate(noise, channel, pump)
    parts = {
        "pairs": sigma * eta_out * eta_i * waveguide.eta_alpha() * r,
        "scattering": sigma * eta_out * eta_i * r_n,
        "leakage": sigma * eta_out * eta_i * leak,
        "dark": channel.dark_rate_hz,
    }
    parts["total"] = parts["pairs"] + parts["scattering"] + parts["leakage"] + parts["dark"]
    return parts


def predict_observables(
    waveguide: WaveguideSpec,
    pump: PumpConfig,
    coupling: CouplingSpec,
    ch0: DetectionChannel,
    ch1: DetectionChannel,
    noise: NoiseModel,
    window_s: float,
    accidental_mode: str = "binned",
) -> ModelObservables:
    """Evaluate the full rate model for a signal/idler channel pair.

    ``accidental_mode``: "binned" counts accidentals in a window t as
    A = N0*N1*t; "gated" (pulsed pump only) treats all same-pulse counts as
    coincident, A = N0*N1/B, and ignores the window.
    """
    _check_channel_pair(ch0, ch1)
    if accidental_mode not in ("binned", "gated"):
        raise ConfigError(f"unknown accidental mode {accidental_mode!r}")
    if accidental_mode == "gated" and pump.mode != "pulsed":
        raise ConfigError("gated accidentals require a pulsed pump")
    if accidental_mode == "binned" and window_s <= 0.0:
        raise ConfigError(f"coincidence window must be positive, got {window_s}")

    sigma = pump.duty_cycle
    eta_alpha = waveguide.eta_alpha()
    eta_out = coupling.output_efficiency(waveguide)
    r = pair_generation_rate(waveguide, pump, ch0)

    coincidences = (
        sigma
        * eta_alpha**2
        * eta_out**2
        * ch0.collection_efficiency
        * ch1.collection_efficiency
        * r
    )
    parts0 = singles_rate_parts(waveguide, pump, coupling, ch0, noise)
    parts1 = singles_rate_parts(waveguide, pump, coupling, ch1, noise)
    n0 = parts0["total"]
    n1 = parts1["total"]

    if accidental_mode == "gated":
        accidentals = n0 * n1 / pump.rep_rate_hz
    else:
        accidentals = n0 * n1 * window_s

    if accidentals > 0.0:
        car = coincidences / accidentals
    else:
        car = math.inf if coincidences > 0.0 else math.nan

    return ModelObservables(
        pair_rate=r,
        coincidences=coincidences,
        singles0=n0,
        singles1=n1,
        accidentals=accidentals,
        car=car,
        window_s=window_s,
        accidental_mode=accidental_mode,
        singles_parts={"N0": parts0, "N1": parts1},
        meta={
            "duty_cycle": sigma,
            "eta_alpha": eta_alpha,
            "eta_alpha_mode": waveguide.eta_alpha_mode,
            "output_efficiency": eta_out,
            "bandwidth0_hz": ch0.bandwidth_hz,
            "bandwidth1_hz": ch1.bandwidth_hz,
        },
    )


def calibrate_eta_alpha(
    measured_coincidences: float,
    waveguide: WaveguideSpec,
    pump: PumpConfig,
    coupling: CouplingSpec,
    ch0: DetectionChannel,
    ch1: DetectionChannel,
) -> float:
    """Fit the in-waveguide survival from a measured coincidence rate.

    Inverts C = sigma * eta_alpha^2 * eta^2 * eta_0 * eta_1 * r.  Raises if
    the measurement exceeds what a lossless guide could deliver.
    """
    if measured_coincidences <= 0.0:
        raise InconsistentMeasurementError(
            f"measured coincidence rate must be positive, got {measured_coincidences}"
        )
    r = pair_generation_rate(waveguide, pump, ch0)
    lossless = (
        pump.duty_cycle
        * coupling.output_efficiency(waveguide) ** 2
        * ch0.collection_efficiency
        * ch1.collection_efficiency
        * r
    )
    if measured_coincidences > lossless:
        raise InconsistentMeasurementError(
            f"measured coincidence rate {measured_coincidences:.6g}/s exceeds the "
            f"lossless-guide bound {lossless:.6g}/s"
        )
    return math.sqrt(measured_coincidences / lossless)


def calibrate_raman(
    measured_n0: float,
    measured_n1: float,
    waveguide: WaveguideSpec,
    pump: PumpConfig,
    coupling: CouplingSpec,
    ch0: DetectionChannel,
    ch1: DetectionChannel,
    noise: NoiseModel,
) -> tuple[float, float]:
    """Fit the per-arm noise coefficients rho from measured singles rates.

    The waveguide's eta_alpha must already be fixed (analytic or previously
    calibrated).  Dark counts and pump leakage are removed before inverting
    the singles equation; the returned pair is (rho at ch0's detuning,
    rho at ch1's detuning).
    """
    _check_channel_pair(ch0, ch1)
    sigma = pump.duty_cycle
    eta_out = coupling.output_efficiency(waveguide)
    eta_alpha = waveguide.eta_alpha()
    r = pair_generation_rate(waveguide, pump, ch0)

    rhos = []
    for ch, measured in ((ch0, measured_n0), (ch1, measured_n1)):
        eta_i = ch.collection_efficiency
        leak = sigma * eta_out * eta_i * pump_leakage_rate(noise, ch, pump)
        floor = sigma * eta_out * eta_i * eta_alpha * r + ch.dark_rate_hz + leak
        if measured <= floor:
            raise InconsistentMeasurementError(
                f"measured singles {measured:.6g}/s for {ch.label or 'channel'} are at or "
                f"below the pair+dark+leakage floor {floor:.6g}/s"
            )
        r_n = (measured - ch.dark_rate_hz - leak) / (sigma * eta_out * eta_i) - eta_alpha * r
        occ = raman_occupancy(ch, noise.temperature_k)
        rho = r_n / (
            ch.bandwidth_hz * pump.power_w * waveguide.effective_length_m * occ
        )
        rhos.append(rho)
    return rhos[0], rhos[1]


@dataclass(frozen=True)
class RamanWindow:
    """A reduced-noise region of the scattering spectrum, symmetric in +/-nu.

    ``rho`` is the coefficient inside the window (same on both sides; the
    Stokes/anti-Stokes asymmetry still enters through the occupancy).
    """

    center_hz: float
    halfwidth_hz: float
    rho: float
    ramp_hz: float = 0.15e12

    def __post_init__(self):
        if self.center_hz <= 0.0 or self.halfwidth_hz <= 0.0 or self.ramp_hz <= 0.0:
            raise ConfigError("window center, halfwidth and ramp must be positive")
        if self.rho < 0.0:
            raise ConfigError("window rho must be non-negative")


def build_raman_table(
    rho_stokes: float,
    rho_anti_stokes: float,
    anchor_hz: float,
    temperature_k: float,
    span_hz: float = 8.5e12,
    min_hz: float = 0.05e12,
    window: RamanWindow | None = None,
) -> tuple[tuple[float, float], ...]:
    """Build a signed-detuning rho table anchored at measured values.

    Away from any window the shape is occupancy-compensated per side:
    rho(nu) * occ(nu) is flat at the anchored level, reflecting that the
    scattering gain grows with shift roughly as fast as the thermal
    occupancy falls at small shifts (and matching the observed flatness of
    the correlation quality across the measured detuning range).  A
    ``RamanWindow`` overrides the coefficient inside its span.
    """
    if anchor_hz < min_hz or anchor_hz > span_hz:
        raise ConfigError("anchor detuning outside the table span")
    if rho_stokes < 0.0 or rho_anti_stokes < 0.0:
        raise ConfigError("anchored rho values must be non-negative")

    grid = []
    nu = min_hz
    while nu < 1.0e12:
        grid.append(nu)
        nu += 0.05e12
    while nu < 2.0e12:
        grid.append(nu)
        nu += 0.1e12
    while nu <= span_hz:
        grid.append(nu)
        nu += 0.25e12
    if grid[-1] < span_hz:
        grid.append(span_hz)
    if window is not None:
        edges = [
            window.center_hz - window.halfwidth_hz - window.ramp_hz,
            window.center_hz - window.halfwidth_hz,
            window.center_hz + window.halfwidth_hz,
            window.center_hz + window.halfwidth_hz + window.ramp_hz,
        ]
        grid = sorted(set(g for g in grid if not edges[0] < g < edges[3]) | set(edges))

    def compensated(nu: float, rho_anchor: float, stokes: bool) -> float:
        occ_anchor = thermal_occupancy(anchor_hz, temperature_k) + (1.0 if stokes else 0.0)
        occ_nu = thermal_occupancy(nu, temperature_k) + (1.0 if stokes else 0.0)
        return rho_anchor * occ_anchor / occ_nu

    def value(nu: float, rho_anchor: float, stokes: bool) -> float:
        if window is not None:
            if window.center_hz - window.halfwidth_hz <= nu <= window.center_hz + window.halfwidth_hz:
                return window.rho
        return compensated(nu, rho_anchor, stokes)

    table = [(-nu, value(nu, rho_stokes, True)) for nu in reversed(grid)]
    table += [(nu, value(nu, rho_anti_stokes, False)) for nu in grid]
    return tuple(table)
