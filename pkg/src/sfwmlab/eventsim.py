"""Monte Carlo photon-counting simulator and start-stop delay histograms.

Detection timestamp streams are synthesized from the analytic rate model,
passed through detector imperfections (thinning, timing jitter, dark
counts, dead time), and histogrammed start-against-stop the way a time
interval analyzer does.  The result is an independent statistical check of
the analytic predictions.

Determinism: every stochastic routine takes a seed and uses a counter-based
Philox generator; identical seeds and configurations give bit-identical
outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import RNG_ALGORITHM
from .errors import ConfigError
from .model import predict_observables

# Gaussian FWHM to standard deviation.
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class EventStream:
    """Sorted detection timestamps (seconds) over [0, duration)."""

    times: np.ndarray
    duration: float
    label: str = ""

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        object.__setattr__(self, "times", times)
        if self.duration < 0.0:
            raise ConfigError(f"duration must be non-negative, got {self.duration}")
        if times.size:
            if np.any(np.diff(times) < 0.0):
                raise ConfigError("event times must be non-decreasing")
            if times[0] < 0.0 or times[-1] >= self.duration:
                raise ConfigError("event times must lie within [0, duration)")

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def rate(self) -> float:
        return len(self) / self.duration if self.duration > 0 else 0.0


def poisson_stream(rate_hz: float, duration_s: float, rng_seed) -> EventStream:
    """Homogeneous Poisson arrivals at ``rate_hz`` over [0, duration)."""
    if rate_hz < 0.0:
        raise ConfigError(f"rate must be non-negative, got {rate_hz}")
    rng = _generator(rng_seed)
    times = _poisson_times(rate_hz, 0.0, duration_s, rng)
    return EventStream(times=times, duration=duration_s, label="poisson")


def _poisson_times(rate_hz, t0, t1, rng) -> np.ndarray:
    # Exponential inter-arrival sampling, conditioned on the count:
    # normalized cumulative exponential gaps are the order statistics of
    # uniforms, so the output is sorted without an O(n log n) sort.
    span = t1 - t0
    if span <= 0.0 or rate_hz == 0.0:
        return np.empty(0, dtype=np.float64)
    n = rng.poisson(rate_hz * span)
    if n == 0:
        return np.empty(0, dtype=np.float64)
    gaps = rng.standard_exponential(n + 1)
    cum = np.cumsum(gaps)
    np.multiply(cum, span / cum[-1], out=cum)
    times = cum[:-1]
    if t0 != 0.0:
        np.add(times, t0, out=times)
    return times


def _merge_sorted(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Merge two sorted arrays into one sorted array."""
    if b.size == 0:
        return a
    if a.size == 0:
        return b
    if a.size < b.size:
        a, b = b, a
    return np.insert(a, np.searchsorted(a, b), b)


def pulsed_stream(
    in_pulse_rate_hz: float,
    tau_s: float,
    rep_rate_hz: float,
    duration_s: float,
    rng_seed,
) -> EventStream:
    """Arrivals confined to pulse windows [k/B, k/B + tau).

    Within a window the process is homogeneous at ``in_pulse_rate_hz``;
    the long-run mean count is in_pulse_rate * tau * B * duration.
    """
    if in_pulse_rate_hz < 0.0:
        raise ConfigError(f"rate must be non-negative, got {in_pulse_rate_hz}")
    if tau_s <= 0.0 or rep_rate_hz <= 0.0:
        raise ConfigError("tau and rep rate must be positive")
    if tau_s * rep_rate_hz > 1.0 + 1e-12:
        raise ConfigError(f"duty cycle tau*B must be <= 1, got {tau_s * rep_rate_hz}")
    rng = _generator(rng_seed)
    times = _pulsed_times(in_pulse_rate_hz, tau_s, rep_rate_hz, 0.0, duration_s, rng)
    times = times[times < duration_s]
    return EventStream(times=times, duration=duration_s, label="pulsed")


def _pulsed_times(rate_hz, tau_s, rep_rate_hz, t0, t1, rng) -> np.ndarray:
    # Windows are anchored to the absolute grid k/B so chunked generation
    # with boundaries on that grid is exactly equivalent to one pass.
    if t1 <= t0 or rate_hz == 0.0:
        return np.empty(0, dtype=np.float64)
    k0 = int(math.ceil(t0 * rep_rate_hz - 1e-9))
    k1 = int(math.ceil(t1 * rep_rate_hz - 1e-9))
    n_windows = k1 - k0
    if n_windows <= 0:
        return np.empty(0, dtype=np.float64)
    n = rng.poisson(rate_hz * tau_s * n_windows)
    window = k0 + rng.integers(0, n_windows, n)
    times = window / rep_rate_hz + rng.random(n) * tau_s
    return np.sort(times)


def _prune_dead_time(times: np.ndarray, dead_time_s: float) -> np.ndarray:
    # Non-paralyzable dead time: drop events within dead_time of the last
    # accepted one.  Inherently sequential.
    if dead_time_s <= 0.0 or times.size == 0:
        return times
    keep = np.empty(times.size, dtype=bool)
    last = -math.inf
    for i, t in enumerate(times):
        ok = (t - last) >= dead_time_s
        keep[i] = ok
        if ok:
            last = t
    return times[keep]


def detect(
    source: EventStream,
    survival_prob: float,
    jitter_fwhm_s: float = 0.0,
    dark_rate_hz: float = 0.0,
    dead_time_s: float = 0.0,
    rng_seed=0,
) -> EventStream:
    """Pass a stream through a detector: thin, smear, add darks, prune.

    Bernoulli thinning at ``survival_prob``, Gaussian timestamp smear with
    the given FWHM, an independent dark-count Poisson stream, then dead-time
    pruning.  Smeared events leaving [0, duration) are dropped.
    """
    if not 0.0 <= survival_prob <= 1.0:
        raise ConfigError(f"survival probability must be in [0, 1], got {survival_prob}")
    rng = _generator(rng_seed)
    times = source.times
    if survival_prob < 1.0:
        times = times[rng.random(times.size) < survival_prob]
    if jitter_fwhm_s > 0.0:
        times = times + rng.normal(0.0, jitter_fwhm_s * FWHM_TO_SIGMA, times.size)
    darks = _poisson_times(dark_rate_hz, 0.0, source.duration, rng)
    if darks.size:
        times = np.concatenate([times, darks])
    times = np.sort(times)
    times = times[(times >= 0.0) & (times < source.duration)]
    times = _prune_dead_time(times, dead_time_s)
    return EventStream(times=times, duration=source.duration, label=source.label)


@dataclass(frozen=True)
class TiaConfig:
    """Start-stop histogrammer settings.

    ``policy``: "first-stop" pairs each start with the earliest stop at or
    after it; "multi-stop" counts every stop falling inside the delay range
    of each start.  ``range_s`` must span the inserted ``stop_delay_s``.
    """

    bin_width_s: float
    range_s: tuple[float, float]
    policy: str = "first-stop"
    stop_delay_s: float = 0.0

    def __post_init__(self):
        if self.bin_width_s <= 0.0:
            raise ConfigError(f"bin width must be positive, got {self.bin_width_s}")
        lo, hi = self.range_s
        if hi <= lo:
            raise ConfigError(f"empty delay range {self.range_s}")
        if not lo <= self.stop_delay_s <= hi:
            raise ConfigError(
                f"delay range {self.range_s} does not span the stop delay {self.stop_delay_s}"
            )
        if self.policy not in ("first-stop", "multi-stop"):
            raise ConfigError(f"unknown TIA policy {self.policy!r}")

    @property
    def n_bins(self) -> int:
        lo, hi = self.range_s
        return max(1, int(math.ceil((hi - lo) / self.bin_width_s - 1e-9)))

    @property
    def bin_edges(self) -> np.ndarray:
        lo, _ = self.range_s
        return lo + np.arange(self.n_bins + 1) * self.bin_width_s


@dataclass
class HistogramResult:
    """Binned start-stop delays plus the run metadata needed to reproduce it."""

    bin_edges: np.ndarray
    counts: np.ndarray
    acquisition_time: float
    metadata: dict = field(default_factory=dict)

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def total_counts(self) -> int:
        return int(self.counts.sum())

    def scaled(self) -> np.ndarray:
        """Counts per second of acquisition."""
        return self.counts / self.acquisition_time

    def write_csv(self, path) -> None:
        write_histogram_csv(self, path)


def write_histogram_csv(hist: HistogramResult, path) -> None:
    """CSV with '#' metadata comment lines, then 'delay_s,counts' per bin.

    delay_s is the bin center; floats use shortest round-trip formatting and
    lines end with LF.  The format is byte-stable for fixed inputs.
    """
    lines = []
    for key in sorted(hist.metadata):
        lines.append(f"# {key}={hist.metadata[key]}")
    lines.append(f"# acquisition_time_s={hist.acquisition_time!r}")
    lines.append("delay_s,counts")
    for center, count in zip(hist.bin_centers, hist.counts):
        lines.append(f"{float(center)!r},{int(count)}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _expand_start_ranges(starts, stops, i0, i1):
    """Delays stop - start for start indices [i0[j], i1[j]) of each stop."""
    counts = i1 - i0
    nz = np.nonzero(counts > 0)[0]
    if nz.size == 0:
        return np.empty(0, dtype=np.float64)
    counts = counts[nz]
    total = int(counts.sum())
    shift = np.repeat(np.cumsum(counts) - counts - i0[nz], counts)
    flat = np.arange(total) - shift
    delays = np.repeat(stops[nz], counts)
    np.subtract(delays, starts[flat], out=delays)
    return delays


def _pair_delays(
    starts: np.ndarray, stops: np.ndarray, cfg: TiaConfig
) -> np.ndarray:
    """Delays (stop - start) selected by the TIA policy, limited to delays
    below the histogram range maximum (larger delays cannot be binned).

    Enumerated per stop rather than per start: the candidate starts of one
    stop form a contiguous index range, which keeps the work proportional
    to the matched pairs instead of the (much larger) start count.
    """
    if starts.size == 0 or stops.size == 0:
        return np.empty(0, dtype=np.float64)
    lo, hi = cfg.range_s
    if cfg.policy == "first-stop":
        # Stop p is the first stop of start s iff s <= p and no stop lies in
        # (s, p); with delay < hi that means s in (max(prev_stop, p - hi), p].
        lower = stops - hi
        np.maximum(lower[1:], stops[:-1], out=lower[1:])
        i0 = np.searchsorted(starts, lower, side="right")
        i1 = np.searchsorted(starts, stops, side="right")
        return _expand_start_ranges(starts, stops, i0, i1)
    # multi-stop: every pair with lo <= delay < hi, i.e. s in (p-hi, p-lo].
    i0 = np.searchsorted(starts, stops - hi, side="right")
    i1 = np.searchsorted(starts, stops - lo, side="right")
    return _expand_start_ranges(starts, stops, i0, i1)


def tia_histogram(starts: EventStream, stops: EventStream, cfg: TiaConfig) -> HistogramResult:
    """Histogram start-stop delays over the configured range."""
    delays = _pair_delays(starts.times, stops.times, cfg)
    counts, edges = np.histogram(delays, bins=cfg.bin_edges)
    return HistogramResult(
        bin_edges=edges,
        counts=counts.astype(np.int64),
        acquisition_time=starts.duration,
        metadata={
            "policy": cfg.policy,
            "bin_width_s": cfg.bin_width_s,
            "stop_delay_s": cfg.stop_delay_s,
            "n_starts": int(starts.times.size),
            "n_stops": int(stops.times.size),
            "rng_algorithm": RNG_ALGORITHM,
        },
    )


@dataclass
class AnalysisResult:
    """Peak and floor statistics extracted from a delay histogram.

    ``coincidence_rate`` is the floor-subtracted peak-window rate (clamped
    at zero, flagged, if the net is negative); uncertainties are Poisson,
    propagated from raw counts.
    """

    peak_delay_s: float
    peak_fwhm_s: float
    coincidence_rate: float
    accidental_rate_per_bin: float
    car_estimate: float
    uncertainties: dict = field(default_factory=dict)
    flags: tuple = ()


def analyze_histogram(hist: HistogramResult, peak_window_s: float) -> AnalysisResult:
    """Extract peak position/width and the net coincidence rate.

    The floor is the median of bins outside ``peak_window_s`` around the
    maximum bin (median for robustness against the peak tail); the net rate
    is the peak-window sum minus floor times the number of window bins.
    """
    centers = hist.bin_centers
    counts = hist.counts.astype(np.float64)
    span = hist.bin_edges[-1] - hist.bin_edges[0]
    if peak_window_s >= span:
        raise ConfigError(
            f"peak window {peak_window_s:.3g}s must be narrower than the range {span:.3g}s"
        )
    if counts.sum() == 0:
        return AnalysisResult(
            peak_delay_s=math.nan,
            peak_fwhm_s=math.nan,
            coincidence_rate=0.0,
            accidental_rate_per_bin=0.0,
            car_estimate=math.nan,
            flags=("empty",),
        )

    imax = int(np.argmax(counts))
    in_peak = np.abs(centers - centers[imax]) <= peak_window_s / 2.0
    n_peak = int(in_peak.sum())
    n_off = int((~in_peak).sum())
    if n_off == 0:
        raise ConfigError("peak window leaves no off-peak bins for the floor estimate")

    floor = float(np.median(counts[~in_peak]))
    net = float(counts[in_peak].sum() - floor * n_peak)
    t_acq = hist.acquisition_time

    flags = []
    if net <= 0.0:
        flags.append("nonpositive_net")
        rate = 0.0
    else:
        rate = net / t_acq

    excess = counts[in_peak] - floor
    pos = np.clip(excess, 0.0, None)
    if pos.sum() > 0.0:
        centroid = float(np.sum(centers[in_peak] * pos) / pos.sum())
        fwhm = _fwhm_interpolated(centers[in_peak], excess)
    else:
        centroid = float(centers[imax])
        fwhm = math.nan
        flags.append("no_peak_excess")

    # Poisson errors: window sum plus the floor-median uncertainty
    # (pi/2 factor for median vs mean efficiency), propagated linearly.
    var_net = float(counts[in_peak].sum()) + n_peak**2 * (math.pi / 2.0) * max(floor, 1.0) / n_off
    sigma_net = math.sqrt(var_net)
    floor_counts_in_window = floor * n_peak
    car = net / floor_counts_in_window if floor_counts_in_window > 0 else math.inf

    return AnalysisResult(
        peak_delay_s=centroid,
        peak_fwhm_s=fwhm,
        coincidence_rate=rate,
        accidental_rate_per_bin=floor / t_acq,
        car_estimate=car,
        uncertainties={
            "net_counts": sigma_net,
            "coincidence_rate": sigma_net / t_acq,
            "car": sigma_net / floor_counts_in_window if floor_counts_in_window > 0 else math.nan,
        },
        flags=tuple(flags),
    )


def _fwhm_interpolated(x: np.ndarray, y: np.ndarray) -> float:
    """Full width at half maximum via linear interpolation of crossings."""
    imax = int(np.argmax(y))
    half = y[imax] / 2.0
    left = math.nan
    for i in range(imax, 0, -1):
        if y[i - 1] <= half <= y[i]:
            frac = (half - y[i - 1]) / (y[i] - y[i - 1])
            left = x[i - 1] + frac * (x[i] - x[i - 1])
            break
    right = math.nan
    for i in range(imax, y.size - 1):
        if y[i + 1] <= half <= y[i]:
            frac = (y[i] - half) / (y[i] - y[i + 1])
            right = x[i] + frac * (x[i + 1] - x[i])
            break
    return right - left


def component_rates(setup) -> dict:
    """Time-averaged detected rates for each independent event category.

    A pair emission survives to arm 0 with probability s0 and to arm 1 with
    s1, independently; splitting the Poisson emission process by outcome
    (both arms / arm 0 only / arm 1 only) yields independent Poisson
    processes whose rates reproduce the analytic singles and coincidence
    rates exactly.  Scattering noise, pump leakage and darks are independent
    per arm by construction.
    """
    obs = predict_observables(
        setup.waveguide,
        setup.pump,
        setup.coupling,
        setup.idler,
        setup.signal,
        setup.noise,
        window_s=setup.analysis.window_s,
        accidental_mode="binned",
    )
    both = obs.coincidences
    pairs0 = obs.singles_parts["N0"]["pairs"]
    pairs1 = obs.singles_parts["N1"]["pairs"]
    noise0 = obs.singles_parts["N0"]["scattering"] + obs.singles_parts["N0"]["leakage"]
    noise1 = obs.singles_parts["N1"]["scattering"] + obs.singles_parts["N1"]["leakage"]
    return {
        "both": both,
        "only0": pairs0 - both,
        "only1": pairs1 - both,
        "noise0": noise0,
        "noise1": noise1,
        "dark0": setup.idler.dark_rate_hz,
        "dark1": setup.signal.dark_rate_hz,
        "observables": obs,
    }


# Fixed spawn order of the per-category child seeds; changing it would
# change every simulated stream for a given seed.
_CATEGORIES = ("both", "jitter0", "jitter1", "bulk0", "bulk1",
               "only0", "only1", "noise0", "noise1", "dark0", "dark1",
               "jbulk0", "jbulk1")


def _category_times(rate_hz, pump, t0, t1, rng, gated) -> np.ndarray:
    if rate_hz < 0.0:
        raise ConfigError(f"negative component rate {rate_hz}")
    if gated and pump.mode == "pulsed":
        in_pulse = rate_hz / pump.duty_cycle
        return _pulsed_times(in_pulse, pump.tau_s, pump.rep_rate_hz, t0, t1, rng)
    return _poisson_times(rate_hz, t0, t1, rng)


def _jittered(times, fwhm_s, rng) -> np.ndarray:
    if fwhm_s <= 0.0 or times.size == 0:
        return times
    smear = rng.standard_normal(times.size)
    np.multiply(smear, fwhm_s * FWHM_TO_SIGMA, out=smear)
    np.add(smear, times, out=smear)
    return smear


def _uncorrelated_arm_times(setup, rates, arm, t0, t1, children) -> np.ndarray:
    """Sorted timestamps of all non-pair events of one arm in [t0, t1).

    CW: the one-arm pair leftovers, scattering/leakage noise and darks are
    independent homogeneous processes, so they merge into a single Poisson
    bulk; Gaussian timing jitter displaces a homogeneous process into an
    identically distributed one and is skipped.  Pulsed: the pulse comb
    makes jitter observable (it smears the comb), so gated components are
    generated and jittered explicitly.
    """
    pump = setup.pump
    ch = setup.idler if arm == 0 else setup.signal
    if pump.mode == "cw":
        bulk_rate = rates[f"only{arm}"] + rates[f"noise{arm}"] + rates[f"dark{arm}"]
        rng = _generator(children[f"bulk{arm}"])
        return _poisson_times(bulk_rate, t0, t1, rng)
    parts = [
        _category_times(rates[f"only{arm}"], pump, t0, t1,
                        _generator(children[f"only{arm}"]), gated=True),
        _category_times(rates[f"noise{arm}"], pump, t0, t1,
                        _generator(children[f"noise{arm}"]), gated=True),
        _poisson_times(rates[f"dark{arm}"], t0, t1,
                       _generator(children[f"dark{arm}"])),
    ]
    merged = np.concatenate(parts)
    merged = _jittered(merged, ch.jitter_fwhm_s, _generator(children[f"jbulk{arm}"]))
    merged.sort()
    return merged


def _arm_chunk(setup, rates, t0, t1, duration, seed_seq, stop_delay_s):
    """Raw (arm0, arm1) timestamp arrays for emissions in [t0, t1).

    Events may leave the interval after jitter or the stop-arm delay; they
    are clipped to [0, duration) only, so adjacent chunks tile the full run
    exactly.
    """
    children = dict(zip(_CATEGORIES, seed_seq.spawn(len(_CATEGORIES))))
    pump = setup.pump

    pair_times = _category_times(rates["both"], pump, t0, t1,
                                 _generator(children["both"]), gated=True)

    out = []
    for arm, ch in ((0, setup.idler), (1, setup.signal)):
        pairs = _jittered(pair_times, ch.jitter_fwhm_s,
                          _generator(children[f"jitter{arm}"]))
        if pairs is pair_times:
            pairs = pair_times.copy()
        pairs.sort()
        a = _merge_sorted(_uncorrelated_arm_times(setup, rates, arm, t0, t1, children),
                          pairs)
        if arm == 1 and stop_delay_s != 0.0 and a.size:
            a = a + stop_delay_s
        lo = int(np.searchsorted(a, 0.0, side="left"))
        hi = int(np.searchsorted(a, duration, side="left"))
        out.append(a[lo:hi])
    return out[0], out[1]


def make_pair_streams(setup, duration_s: float, rng_seed, stop_delay_s=None):
    """Synthesize correlated (start, stop) detection streams for a setup.

    Pair emissions are shared between arms; each photon independently
    survives the collection chain, picks up its arm's timing jitter, and is
    merged with that arm's noise and dark events.  The stop arm is shifted
    by ``stop_delay_s`` (defaults to the TIA setting).  Singles and
    coincidence rates converge to the analytic observables.
    """
    if stop_delay_s is None:
        stop_delay_s = setup.analysis.tia.stop_delay_s
    rates = component_rates(setup)
    seed_seq = np.random.SeedSequence(rng_seed)
    arm0, arm1 = _arm_chunk(setup, rates, 0.0, duration_s, duration_s, seed_seq, stop_delay_s)
    return (
        EventStream(times=arm0, duration=duration_s, label="start"),
        EventStream(times=arm1, duration=duration_s, label="stop"),
    )


@dataclass
class TiaRunResult:
    """Chunked virtual TIA run: histogram plus raw singles counters."""

    histogram: HistogramResult
    n_starts: int
    n_stops: int
    duration: float

    @property
    def singles_rate0(self) -> float:
        return self.n_starts / self.duration

    @property
    def singles_rate1(self) -> float:
        return self.n_stops / self.duration


def run_tia(
    setup,
    duration_s: float,
    rng_seed,
    tia: TiaConfig | None = None,
    max_events_per_chunk: float = 2.0e7,
) -> TiaRunResult:
    """Simulate a full counting run, chunked in time to bound memory.

    Chunks are statistically independent intervals of the same Poisson
    processes; counts are additive, and start-stop pairs that straddle a
    boundary are resolved by carrying the unpaired tail into the next
    chunk, so the result is identical in distribution to a single pass.
    Deterministic for a fixed seed, config and chunk size.
    """
    if tia is None:
        tia = setup.analysis.tia
    if duration_s < 0.0:
        raise ConfigError(f"duration must be non-negative, got {duration_s}")

    rates = component_rates(setup)
    obs = rates["observables"]
    arm0_rate = max(obs.singles0, 1.0)
    chunk = min(duration_s, max(max_events_per_chunk / arm0_rate, 1e-3)) or duration_s
    if setup.pump.mode == "pulsed" and chunk < duration_s:
        # Align chunk boundaries to the pulse grid.
        chunk = max(round(chunk * setup.pump.rep_rate_hz), 1) / setup.pump.rep_rate_hz

    jitter_pad = 10.0 * (setup.idler.jitter_fwhm_s + setup.signal.jitter_fwhm_s)
    guard = tia.range_s[1] + tia.stop_delay_s + jitter_pad + 1e-9

    edges = [0.0]
    while duration_s - edges[-1] > chunk * 1.5:
        edges.append(edges[-1] + chunk)
    edges.append(duration_s)

    seed_seq = np.random.SeedSequence(rng_seed)
    chunk_seeds = seed_seq.spawn(len(edges) - 1)

    counts = np.zeros(tia.n_bins, dtype=np.int64)
    bin_edges = tia.bin_edges
    carry_starts = np.empty(0, dtype=np.float64)
    carry_stops = np.empty(0, dtype=np.float64)
    n0 = 0
    n1 = 0

    for k, (t0, t1) in enumerate(zip(edges[:-1], edges[1:])):
        arm0, arm1 = _arm_chunk(
            setup, rates, t0, t1, duration_s, chunk_seeds[k], tia.stop_delay_s
        )
        n0 += arm0.size
        n1 += arm1.size
        # The carried tails are tiny (a guard interval's worth of events),
        # so merging beats a full re-sort.
        starts = _merge_sorted(arm0, carry_starts)
        stops = _merge_sorted(arm1, carry_stops)
        last = k == len(edges) - 2
        boundary = math.inf if last else t1 - guard
        resolvable = starts < boundary
        delays = _pair_delays(starts[resolvable], stops, tia)
        c, _ = np.histogram(delays, bins=bin_edges)
        counts += c
        carry_starts = starts[~resolvable]
        carry_stops = stops[stops >= (t1 - guard)] if not last else np.empty(0)

    hist = HistogramResult(
        bin_edges=bin_edges,
        counts=counts,
        acquisition_time=duration_s,
        metadata={
            "policy": tia.policy,
            "bin_width_s": tia.bin_width_s,
            "stop_delay_s": tia.stop_delay_s,
            "seed": rng_seed,
            "rng_algorithm": RNG_ALGORITHM,
            "n_starts": n0,
            "n_stops": n1,
        },
    )
    return TiaRunResult(histogram=hist, n_starts=n0, n_stops=n1, duration=duration_s)
