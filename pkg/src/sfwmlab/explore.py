"""Parameter sweeps, power-law fits, CAR curves and a small design search.

Everything here drives the analytic model; sweeps and grid scans are pure
functions of the configuration and are deterministic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import Setup, set_path
from .errors import ConfigError, NumericsError, PowerSolveError
from .model import pair_generation_rate

CURVE_COLUMNS = ("param", "r", "C", "N0", "N1", "A", "CAR")


@dataclass(frozen=True)
class SweepSpec:
    """One swept parameter (dot-addressed SI field) and its values."""

    param: str
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ConfigError("sweep needs at least one value")
        diffs = [b - a for a, b in zip(vals, vals[1:])]
        if diffs and not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise ConfigError("sweep values must be strictly monotone")

    @classmethod
    def linear(cls, param: str, lo: float, hi: float, count: int) -> "SweepSpec":
        return cls(param, tuple(np.linspace(lo, hi, count)))

    @classmethod
    def log(cls, param: str, lo: float, hi: float, count: int) -> "SweepSpec":
        if lo <= 0 or hi <= 0:
            raise ConfigError("log spacing requires positive endpoints")
        return cls(param, tuple(np.geomspace(lo, hi, count)))


@dataclass
class CurveResult:
    """Rows of (parameter value, observables), order preserved."""

    param: str
    values: tuple
    observables: list
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        if name == "param":
            return np.asarray(self.values, dtype=float)
        return np.array([obs.as_row()[name] for obs in self.observables])

    def write_csv(self, path) -> None:
        lines = [f"# param={self.param}"]
        for key in sorted(self.meta):
            lines.append(f"# {key}={self.meta[key]}")
        lines.append(",".join(CURVE_COLUMNS))
        for v, obs in zip(self.values, self.observables):
            row = obs.as_row()
            cells = [repr(float(v))] + [repr(float(row[c])) for c in CURVE_COLUMNS[1:]]
            lines.append(",".join(cells))
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def sweep(setup: Setup, spec: SweepSpec) -> CurveResult:
    """Evaluate the model at each value of one parameter, all else frozen."""
    observables = []
    for v in spec.values:
        observables.append(set_path(setup, spec.param, v).predict())
    return CurveResult(param=spec.param, values=spec.values, observables=observables)


@dataclass(frozen=True)
class FitResult:
    """Power-law fit y = coefficient * x^exponent in log-log space."""

    exponent: float
    coefficient: float
    residual_rms: float
    n_points: int


def fit_power_law(points) -> FitResult:
    """Least-squares line through (log x, log y); the slope is the exponent."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise ConfigError(f"power-law fit needs at least 3 points, got {len(pts)}")
    if any(x <= 0 or y <= 0 for x, y in pts):
        raise ConfigError("power-law fit requires positive data")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return FitResult(
        exponent=float(slope),
        coefficient=float(np.exp(intercept)),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_points=len(pts),
    )


def _rate_at_power(setup: Setup, power_w: float) -> float:
    pump = replace(setup.pump, power_w=power_w)
    return pair_generation_rate(setup.waveguide, pump, setup.idler)


def _turnover_power(setup: Setup, p_max: float = 1e4) -> float:
    """Upper end of the monotone-increasing branch of rate vs peak power.

    The rate grows quadratically until the nonlinear phase pushes the
    envelope over; scan geometrically for the first decrease, then golden-
    section to the maximum.
    """
    grid = np.geomspace(1e-6, p_max, 400)
    rates = [_rate_at_power(setup, p) for p in grid]
    # First local maximum, not the global one: the envelope oscillates at
    # high power and only the first lobe is the monotone branch.
    i_peak = len(grid) - 1
    for i in range(1, len(grid)):
        if rates[i] < rates[i - 1]:
            i_peak = i - 1
            break
    if i_peak == len(grid) - 1:
        return float(grid[-1])
    lo = grid[max(i_peak - 1, 0)]
    hi = grid[min(i_peak + 1, len(grid) - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = _rate_at_power(setup, c), _rate_at_power(setup, d)
    for _ in range(120):
        if (b - a) <= 1e-12 * max(b, 1.0):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = _rate_at_power(setup, c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = _rate_at_power(setup, d)
    return 0.5 * (a + b)


def power_for_pairs_per_pulse(setup: Setup, mu: float) -> float:
    """Peak power at which the in-pulse rate times tau equals ``mu``.

    Bisection on the monotone-increasing branch below the phase-envelope
    turnover; raises if ``mu`` is unreachable there.
    """
    if mu <= 0.0:
        raise ConfigError(f"pairs per pulse must be positive, got {mu}")
    if setup.pump.mode != "pulsed":
        raise ConfigError("pairs-per-pulse solve requires a pulsed pump")
    tau = setup.pump.tau_s
    p_turn = _turnover_power(setup)
    mu_max = _rate_at_power(setup, p_turn) * tau
    if mu > mu_max:
        raise PowerSolveError(
            f"mu={mu:.4g} unreachable on the monotone branch (max {mu_max:.4g} "
            f"at peak power {p_turn:.4g} W)"
        )
    lo, hi = 0.0, p_turn
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _rate_at_power(setup, mid) * tau < mu:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(hi, 1e-30):
            break
    return 0.5 * (lo + hi)


def car_vs_mu(setup: Setup, mus, accidental_mode: str | None = None) -> CurveResult:
    """CAR versus expected pairs per pulse; solves peak power per point."""
    observables = []
    mus = tuple(float(m) for m in mus)
    for mu in mus:
        power = power_for_pairs_per_pulse(setup, mu)
        s = set_path(setup, "pump.power_w", power)
        observables.append(s.predict(accidental_mode=accidental_mode))
    return CurveResult(
        param="pairs_per_pulse",
        values=mus,
        observables=observables,
        meta={"accidental_mode": accidental_mode or setup.analysis.accidental_mode},
    )


def car_vs_detuning(setup: Setup, detunings_hz) -> CurveResult:
    """CAR versus channel detuning magnitude, noise and leakage included."""
    values = tuple(float(v) for v in detunings_hz)
    if any(v <= 0 for v in values):
        raise ConfigError("detuning sweep values must be positive magnitudes")
    observables = [setup.with_detuning(nu).predict() for nu in values]
    return CurveResult(param="detuning_hz", values=values, observables=observables)


def calibrate_raman_window(
    setup: Setup,
    mu: float,
    target_car: float,
    center_hz: float,
    halfwidth_hz: float,
) -> float:
    """Scattering coefficient inside a spectral window that hits a CAR target.

    Bisects the (monotone decreasing) CAR-vs-rho relation at ``mu`` pairs
    per pulse with both channels inside the window.  Raises if the target
    exceeds the zero-scattering ceiling set by pair statistics and darks.
    """
    power = power_for_pairs_per_pulse(setup, mu)
    base = set_path(setup, "pump.power_w", power)

    def car_for_rho(rho: float) -> float:
        table = ((-center_hz - halfwidth_hz, rho), (-center_hz + halfwidth_hz, rho),
                 (center_hz - halfwidth_hz, rho), (center_hz + halfwidth_hz, rho))
        noise = replace(base.noise, raman_table=table)
        return replace(base, noise=noise).predict().car

    ceiling = car_for_rho(0.0)
    if target_car > ceiling:
        raise PowerSolveError(
            f"target CAR {target_car:.4g} exceeds the zero-noise ceiling "
            f"{ceiling:.4g} at mu={mu:.4g} in {base.analysis.accidental_mode} mode"
        )
    lo, hi = 0.0, 1.0
    while car_for_rho(hi) > target_car:
        hi *= 2.0
        if hi > 1e12:
            raise PowerSolveError("window calibration failed to bracket the target")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if car_for_rho(mid) > target_car:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(hi, 1e-30):
            break
    return 0.5 * (lo + hi)


# ------------------------------------------------------------------
# Constrained design search

# Search dimensions: name -> setup path.
_SEARCH_PATHS = {
    "detuning_hz": "channels.detuning_hz",
    "tau_s": "pump.tau_s",
    "rep_rate_hz": "pump.rep_rate_hz",
    "peak_power_w": "pump.power_w",
}


@dataclass
class DesignResult:
    """Best feasible point of a CAR maximization plus its search trace."""

    best: dict
    car: float
    pairs_per_pulse: float
    coincidence_rate: float
    trace: list = field(default_factory=list)


def _apply_point(setup: Setup, names, point) -> Setup:
    s = setup
    for name, value in zip(names, point):
        s = set_path(s, _SEARCH_PATHS[name], float(value))
    return s


def _evaluate(setup: Setup, constraint) -> tuple[float, float, float, bool]:
    obs = setup.predict()
    mu = obs.pair_rate * setup.pump.tau_s if setup.pump.mode == "pulsed" else math.nan
    kind, bound = constraint
    if kind == "mu_min":
        feasible = mu >= bound
    elif kind == "c_min":
        feasible = obs.coincidences >= bound
    else:
        raise ConfigError(f"unknown constraint kind {kind!r}")
    return obs.car, mu, obs.coincidences, feasible


def optimize_car(
    setup: Setup,
    bounds: dict,
    constraint: tuple,
    grid_points: int = 7,
    rel_tol: float = 1e-3,
) -> DesignResult:
    """Maximize CAR over box bounds with a coarse grid then coordinate descent.

    ``bounds`` maps a subset of {detuning_hz, tau_s, rep_rate_hz,
    peak_power_w} to (lo, hi); ``constraint`` is ("mu_min", x) or
    ("c_min", x).  Deterministic: a fixed grid, then per-coordinate steps
    halved until below ``rel_tol`` of each span.  The result is never an
    infeasible point and is at least as good as the best grid point.
    """
    if not bounds:
        raise ConfigError("optimize_car needs at least one bounded parameter")
    unknown = set(bounds) - set(_SEARCH_PATHS)
    if unknown:
        raise ConfigError(f"unknown search parameter(s): {sorted(unknown)}")
    names = sorted(bounds)
    lows = np.array([float(bounds[n][0]) for n in names])
    highs = np.array([float(bounds[n][1]) for n in names])
    if np.any(highs < lows):
        raise ConfigError("each bound must satisfy lo <= hi")
    spans = highs - lows

    trace = []

    def infeasible_safe_eval(point):
        try:
            s = _apply_point(setup, names, point)
            car, mu, c, feasible = _evaluate(s, constraint)
        except (ConfigError, NumericsError):
            # Out-of-domain points (noise table span, unreachable power)
            # count as infeasible rather than aborting the search.
            return -math.inf, math.nan, math.nan, False
        trace.append({"point": dict(zip(names, map(float, point))), "car": car,
                      "feasible": feasible})
        return (car if feasible else -math.inf), mu, c, feasible

    axes = [
        np.linspace(lo, hi, grid_points) if hi > lo else np.array([lo])
        for lo, hi in zip(lows, highs)
    ]
    best_point, best_car, best_mu, best_c = None, -math.inf, math.nan, math.nan
    for point in itertools.product(*axes):
        car, mu, c, feasible = infeasible_safe_eval(np.array(point))
        if feasible and car > best_car:
            best_point, best_car, best_mu, best_c = np.array(point), car, mu, c
    if best_point is None:
        raise ConfigError("no feasible point in the search box")

    steps = np.where(spans > 0, spans / max(grid_points - 1, 1) / 2.0, 0.0)
    while np.any(steps > rel_tol * np.maximum(spans, 1e-300)):
        improved = False
        for i in range(len(names)):
            if steps[i] == 0.0:
                continue
            for direction in (+1.0, -1.0):
                candidate = best_point.copy()
                candidate[i] = np.clip(candidate[i] + direction * steps[i], lows[i], highs[i])
                if candidate[i] == best_point[i]:
                    continue
                car, mu, c, feasible = infeasible_safe_eval(candidate)
                if feasible and car > best_car:
                    best_point, best_car, best_mu, best_c = candidate, car, mu, c
                    improved = True
                    break
        if not improved:
            steps = steps / 2.0

    return DesignResult(
        best=dict(zip(names, map(float, best_point))),
        car=float(best_car),
        pairs_per_pulse=float(best_mu),
        coincidence_rate=float(best_c),
        trace=trace,
    )
