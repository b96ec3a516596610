"""Acceptance suite: one test per grading criterion, stated tolerances only.

Run with ``pytest -v -s tests/test_acceptance.py`` to see one PASS line per
criterion.  The two simulation criteria are the slow ones (about a minute
and a few minutes respectively); everything else is instant.
"""

import copy
import math

import numpy as np
import pytest

from sfwmlab import units
from sfwmlab.config import load_config, set_path
from sfwmlab.devices import DetectionChannel
from sfwmlab.eventsim import TiaConfig, analyze_histogram, run_tia
from sfwmlab.explore import (
    SweepSpec,
    car_vs_mu,
    fit_power_law,
    power_for_pairs_per_pulse,
    sweep,
)
from sfwmlab.model import thermal_occupancy

from conftest import make_noise_free

SEED = 1549315


def _report(criterion: str, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: PASS ({detail})")


class TestCriterion1UnitConversions:
    def test_dispersion_and_nonlinearity(self):
        beta2 = units.beta2_from_dispersion(-239.0, 1550e-9)
        assert beta2 == pytest.approx(3.048e-25, rel=5e-3)
        gamma = units.gamma_from_n2(3e-18, 0.86e-12, 1550e-9)
        assert gamma == pytest.approx(14.0, abs=0.2)
        _report("1 unit conversions",
                f"beta2={beta2:.4e} s^2/m, gamma={gamma:.3f} /W/m")


class TestCriterion2CollectionEfficiency:
    def test_channel_efficiencies(self):
        eta0 = DetectionChannel(detuning_hz=-1.4e12, bandwidth_hz=50e9,
                                filter_loss_db=6.51, detector_qe=0.18
                                ).collection_efficiency
        eta1 = DetectionChannel(detuning_hz=+1.4e12, bandwidth_hz=50e9,
                                filter_loss_db=6.75, detector_qe=0.08
                                ).collection_efficiency
        assert eta0 == pytest.approx(0.040, rel=0.05)
        assert eta1 == pytest.approx(0.017, rel=0.05)
        _report("2 collection efficiencies", f"eta0={eta0:.4f}, eta1={eta1:.4f}")


class TestCriterion3CalibrationRoundTrip:
    def test_round_trip_to_1e9(self, paper_cfg):
        obs = paper_cfg.setup.predict()
        assert obs.coincidences == pytest.approx(80.0, rel=1e-9)
        assert obs.singles0 == pytest.approx(3.45e6, rel=1e-9)
        assert obs.singles1 == pytest.approx(1.34e6, rel=1e-9)
        _report("3 calibration round-trip",
                f"C={obs.coincidences:.6f}/s, N0={obs.singles0:.1f}/s, "
                f"N1={obs.singles1:.1f}/s at 57 mW")


class TestCriterion4QuadraticLaws:
    def test_power_exponent_band(self, paper_cfg):
        curve = sweep(paper_cfg.setup, SweepSpec.linear("pump.power_w", 0.010, 0.060, 11))
        fit = fit_power_law(zip(curve.column("param"), curve.column("C")))
        assert 1.95 <= fit.exponent <= 2.05
        curve_eta = sweep(paper_cfg.setup,
                          SweepSpec.linear("coupling.output_scale", 0.2, 1.0, 11))
        fit_eta = fit_power_law(zip(curve_eta.column("param"), curve_eta.column("C")))
        assert fit_eta.exponent == pytest.approx(2.0, abs=1e-6)
        _report("4 quadratic laws",
                f"C~P^{fit.exponent:.3f} over 10-60 mW, C~eta^{fit_eta.exponent:.8f}")


class TestCriterion5MonteCarloVsAnalytic:
    def test_sixty_second_run(self, paper_cfg):
        setup = paper_cfg.setup
        obs = setup.predict()
        duration = 60.0
        # multi-stop: the accidental floor per bin is exactly N0*N1*t*T,
        # free of the first-stop exponential depletion bias.
        tia = TiaConfig(bin_width_s=16e-12, range_s=(10e-9, 12.208e-9),
                        policy="multi-stop", stop_delay_s=11.1e-9)
        result = run_tia(setup, duration, SEED, tia=tia)

        for label, n, rate in (("N0", result.n_starts, obs.singles0),
                               ("N1", result.n_stops, obs.singles1)):
            expected = rate * duration
            z = (n - expected) / math.sqrt(expected)
            assert abs(z) < 3.0, f"{label}: z={z:.2f}"

        analysis = analyze_histogram(result.histogram, peak_window_s=800e-12)
        dc = analysis.coincidence_rate - obs.coincidences
        sigma_c = analysis.uncertainties["coincidence_rate"]
        assert abs(dc) < 3.0 * sigma_c

        counts = result.histogram.counts.astype(float)
        centers = result.histogram.bin_centers
        imax = int(np.argmax(counts))
        off = np.abs(centers - centers[imax]) > 400e-12
        expected_floor = obs.singles0 * obs.singles1 * 16e-12 * duration
        mean_floor = counts[off].mean()
        z_floor = (mean_floor - expected_floor) / math.sqrt(expected_floor / off.sum())
        assert abs(z_floor) < 3.0

        # CAR estimate converges too: predicted C over accidentals in the
        # same 800 ps analysis window.
        car_predicted = obs.coincidences / (obs.singles0 * obs.singles1 * 800e-12)
        d_car = analysis.car_estimate - car_predicted
        assert abs(d_car) < 3.0 * analysis.uncertainties["car"]

        _report("5 Monte Carlo vs analytic",
                f"60 s run: C={analysis.coincidence_rate:.1f}/s "
                f"(analytic {obs.coincidences:.1f}, {dc/sigma_c:+.2f} sigma), "
                f"CAR={analysis.car_estimate:.4f} vs {car_predicted:.4f}, "
                f"floor {mean_floor:.1f} vs {expected_floor:.1f} counts/bin "
                f"({z_floor:+.2f} sigma)")


class TestCriterion6HistogramReproduction:
    def test_three_hundred_second_histogram(self, paper_cfg):
        setup = paper_cfg.setup
        duration = 300.0
        result = run_tia(setup, duration, SEED)
        analysis = analyze_histogram(result.histogram, peak_window_s=800e-12)

        assert analysis.peak_delay_s == pytest.approx(11.1e-9, abs=20e-12)
        assert analysis.peak_fwhm_s == pytest.approx(200e-12, abs=40e-12)

        counts = result.histogram.counts.astype(float)
        centers = result.histogram.bin_centers
        imax = int(np.argmax(counts))
        off = np.abs(centers - centers[imax]) > 400e-12
        floor = float(np.median(counts[off]))
        excess = (counts[imax] - floor) / floor
        assert 0.04 <= excess <= 0.10

        _report("6 histogram reproduction",
                f"300 s run: peak {analysis.peak_delay_s * 1e9:.4f} ns, "
                f"FWHM {analysis.peak_fwhm_s * 1e12:.0f} ps, "
                f"max-bin excess {excess * 100:.1f}%")


class TestCriterion7PulsedCarCurves:
    """Pulsed predictions with the calibrated noise model.

    The coincidence-window accidental mode is used with the shipped 400 ps
    window (twice the predicted coincidence-peak FWHM): counting every
    same-pulse event as coincident instead would bound the CAR by 1/mu
    (100 at mu = 0.01) no matter how small the noise, which contradicts the
    targets here; see the README caveats.  Percent-level reproduction is
    not claimed; the checks are the factor-of-two band, the constructed
    window value, and monotonicity.
    """

    def test_car_at_centipair_within_factor_two_of_fifty(self, paper_pulsed_cfg):
        curve = car_vs_mu(paper_pulsed_cfg.setup, [0.01])
        car = curve.observables[0].car
        assert 25.0 <= car <= 100.0
        _report("7a pulsed CAR", f"CAR(mu=0.01)={car:.1f}, within 2x of 50")

    def test_engineered_window_hits_250_by_construction(self, engineered_cfg):
        setup = engineered_cfg.setup
        power = power_for_pairs_per_pulse(setup, 0.01)
        car = set_path(setup, "pump.power_w", power).predict().car
        assert car == pytest.approx(250.0, rel=1e-6)
        _report("7b engineered window", f"CAR(mu=0.01)={car:.4f} (inverse-calibrated)")

    def test_curves_monotone_decreasing(self, paper_pulsed_cfg, engineered_cfg):
        # Above the dark-count knee (mu around 0.004 for the measured
        # device, 0.008 for the low-noise design) accidentals outgrow
        # coincidences and the curves fall monotonically.
        mus_paper = np.geomspace(0.004, 0.02, 7)
        cars = car_vs_mu(paper_pulsed_cfg.setup, mus_paper).column("CAR")
        assert np.all(np.diff(cars) < 0)
        mus_eng = np.geomspace(0.008, 0.025, 7)
        cars_eng = car_vs_mu(engineered_cfg.setup, mus_eng).column("CAR")
        assert np.all(np.diff(cars_eng) < 0)
        _report("7c curve shape",
                f"monotone decreasing: measured {cars[0]:.1f}->{cars[-1]:.1f} "
                f"over mu {mus_paper[0]:.3f}-{mus_paper[-1]:.3f}, "
                f"engineered {cars_eng[0]:.1f}->{cars_eng[-1]:.1f}")


class TestCriterion8PropertySuites:
    def test_car_sigma_invariant(self, paper_pulsed_cfg):
        # Exact once darks (which do not scale with duty cycle) are absent.
        raw = copy.deepcopy(paper_pulsed_cfg.raw)
        for ch in raw["channels"].values():
            ch["dark_rate_per_s"] = 0.0
        setup = set_path(load_config(raw).setup, "pump.power_w", 0.45)
        products = []
        for tau_ps, rep_mhz in ((5.0, 100.0), (2.0, 500.0), (20.0, 50.0), (50.0, 20.0)):
            s = set_path(setup, "pump.tau_s", tau_ps * 1e-12)
            s = set_path(s, "pump.rep_rate_hz", rep_mhz * 1e6)
            products.append(s.predict().car * s.pump.duty_cycle)
        spread = max(products) / min(products) - 1.0
        assert spread < 0.01
        _report("8a CAR*sigma", f"constant to {spread * 100:.2e}% over 4 duty cycles")

    def test_noise_free_car_identity(self, paper_cfg):
        raw = make_noise_free(paper_cfg.raw)
        setup = load_config(raw).setup
        obs = setup.predict()
        assert obs.car == pytest.approx(
            1.0 / (obs.pair_rate * setup.window_s), rel=1e-9
        )
        _report("8b noise-free CAR", "CAR = 1/(r*t) to 1e-9")

    def test_occupancy_ratio(self):
        n = thermal_occupancy(0.1e12, 300.0)
        assert (n + 1.0) / n < 1.02
        ratios = [
            (thermal_occupancy(nu, 300.0) + 1.0) / thermal_occupancy(nu, 300.0)
            for nu in (0.05e12, 0.1e12, 0.5e12, 1.4e12, 7.4e12)
        ]
        assert all(b > a for a, b in zip(ratios, ratios[1:]))
        _report("8c occupancy ratio",
                f"(n+1)/n={ratios[1]:.4f} at 0.1 THz, monotone in detuning")

    def test_phase_matching_null(self, paper_cfg):
        from sfwmlab.model import pair_generation_rate, phase_mismatch

        setup = paper_cfg.setup
        wg, pump = setup.waveguide, setup.pump
        target = math.pi - wg.gamma_per_w_m * pump.power_w * wg.length_m
        nu_null = math.sqrt(
            2.0 * target / (wg.beta2_s2_per_m * wg.length_m)
        ) / (2.0 * math.pi)
        assert phase_mismatch(wg, pump, nu_null) == pytest.approx(math.pi, rel=1e-12)
        ch = setup.idler
        from dataclasses import replace

        peak = pair_generation_rate(wg, pump, replace(ch, detuning_hz=-1e9))
        at_null = pair_generation_rate(wg, pump, replace(ch, detuning_hz=-nu_null))
        assert at_null < 1e-9 * peak
        _report("8d phase-matching null",
                f"r(null at {nu_null / 1e12:.3f} THz) / r(peak) = {at_null / peak:.2e}")

    def test_fixed_seed_runs_are_byte_identical(self, paper_cfg, tmp_path):
        files = []
        for name in ("one.csv", "two.csv"):
            result = run_tia(paper_cfg.setup, 0.2, SEED)
            path = tmp_path / name
            result.histogram.write_csv(path)
            files.append(path.read_bytes())
        assert files[0] == files[1]
        _report("8e determinism", "fixed-seed histogram CSVs byte-identical")
