"""Synthetic estuary generator with a planted closure rule.

Produces the four raw observation CSVs so they round-trip through the
ingest pipeline.  Per-feature marginals are truncated normals (hydrology,
nutrients, upwelling, stratification) or shifted truncated lognormals
(chlorophylls and plankton counts, whose max/mean ratios are huge), each
calibrated so the truncated mean hits its target; the spread is set so the
configured maximum sits near the 99.9th percentile before truncation.
Values are drawn by jittered-stratified inverse CDF, which keeps sample
means on target even for the heavy-tailed counts at a few hundred weeks.

Labels come from a hysteresis rule on the weighted Dinophysis load
(mean over stations of the weighted species counts): the next Monday is
closed iff the load exceeds tau_hi, or the area is already closed and the
load still exceeds tau_lo.  Thresholds are calibrated by bisection on the
generated load sequence itself until the closure fraction lands within
0.03 of its target.  Optional missing-value injection blanks one non-rule
variable in a fraction of station-weeks so the null filter has work to do;
the Dinophysis counts are never blanked, keeping the emitted files a
sufficient record for recomputing every label exactly.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .errors import CalibrationError, ConfigError, DataError
from .ingest import EstuaryConfig, SurfaceRecord, iso_week_key

Z999 = norm.ppf(0.999)
START_MONDAY = dt.date(2010, 1, 4)  # an ISO week-1 Monday
CALIBRATION_TOLERANCE = 0.03
MAX_BISECTION_STEPS = 50

FAMILIES = ("truncated-normal", "truncated-lognormal")

SPECIES = ("d_acuminata", "d_acuta", "d_caudata", "d_spp")
DEFAULT_SPECIES_WEIGHTS = {"d_acuminata": 1.0, "d_acuta": 1.0, "d_caudata": 0.5, "d_spp": 0.5}

SURFACE_FEATURES = (
    "chl_a", "chl_b", "chl_c",
    "d_acuminata", "d_acuta", "d_caudata", "d_spp",
    "ammonium", "phosphate", "nitrate", "nitrite",
)
PROFILE_FEATURES = ("temperature", "salinity", "oxygen", "thermocline", "halocline")
STATION_FEATURE_NAMES = SURFACE_FEATURES + PROFILE_FEATURES
REQUIRED_FEATURES = STATION_FEATURE_NAMES + ("upwelling",)

# variables eligible for missing-value injection: everything except the
# rule inputs, so labels stay recomputable from the emitted files
_INJECTABLE = tuple(name for name in STATION_FEATURE_NAMES if name not in SPECIES)


@dataclass(frozen=True)
class FeatureDistributionSpec:
    name: str
    family: str
    mean: float
    min_value: float
    max_value: float

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"{self.name}: unknown family {self.family!r}")
        if not (self.min_value <= self.mean <= self.max_value):
            raise ConfigError(
                f"{self.name}: need min <= mean <= max, got "
                f"({self.min_value}, {self.mean}, {self.max_value})"
            )
        if not (self.min_value < self.mean < self.max_value):
            raise ConfigError(f"{self.name}: calibration needs min < mean < max strictly")


@dataclass
class SyntheticEstuarySpec:
    config: EstuaryConfig
    features: dict[str, FeatureDistributionSpec]
    closure_fraction: float
    weeks: int
    seed: int
    label_noise: float = 0.0
    missing_rate: float = 0.1
    species_weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_SPECIES_WEIGHTS))
    tau_hi: float | None = None
    tau_lo: float | None = None

    def __post_init__(self) -> None:
        missing = [name for name in REQUIRED_FEATURES if name not in self.features]
        if missing:
            raise ConfigError(f"feature distributions missing: {missing}")
        if not 0.0 < self.closure_fraction < 1.0:
            raise ConfigError(f"closure_fraction must be in (0, 1), got {self.closure_fraction}")
        if not 0.0 <= self.label_noise <= 0.1:
            raise ConfigError(f"label_noise must be in [0, 0.1], got {self.label_noise}")
        if not 0.0 <= self.missing_rate < 1.0:
            raise ConfigError(f"missing_rate must be in [0, 1), got {self.missing_rate}")
        if self.weeks < 20:
            raise ConfigError("need at least 20 weeks for a meaningful dataset")
        if set(self.species_weights) != set(SPECIES):
            raise ConfigError(f"species_weights must cover exactly {SPECIES}")
        if (self.tau_hi is None) != (self.tau_lo is None):
            raise ConfigError("tau_hi and tau_lo must be given together")
        if self.tau_hi is not None and not 0.0 < self.tau_lo < self.tau_hi:
            raise ConfigError("thresholds must satisfy 0 < tau_lo < tau_hi")

    @classmethod
    def from_json(cls, path) -> "SyntheticEstuarySpec":
        with open(path) as fh:
            obj = json.load(fh)
        try:
            features = {
                name: FeatureDistributionSpec(
                    name=name, family=d["family"], mean=d["mean"],
                    min_value=d["min"], max_value=d["max"],
                )
                for name, d in obj["features"].items()
            }
            return cls(
                config=EstuaryConfig(name=obj["name"], stations=tuple(obj["stations"]),
                                     zones=tuple(obj["zones"])),
                features=features,
                closure_fraction=obj["closure_fraction"],
                weeks=obj["weeks"],
                seed=obj["seed"],
                label_noise=obj.get("label_noise", 0.0),
                missing_rate=obj.get("missing_rate", 0.1),
                species_weights=obj.get("species_weights", dict(DEFAULT_SPECIES_WEIGHTS)),
                tau_hi=obj.get("tau_hi"),
                tau_lo=obj.get("tau_lo"),
            )
        except KeyError as exc:
            raise ConfigError(f"{path}: missing spec key {exc}") from exc


# ---------------------------------------------------------- distributions

@dataclass(frozen=True)
class CalibratedDistribution:
    """Frozen sampling parameters for one feature."""

    family: str
    mu: float
    sigma: float
    lo: float
    hi: float

    def quantile(self, u: np.ndarray) -> np.ndarray:
        if self.family == "truncated-normal":
            za = norm.cdf((self.lo - self.mu) / self.sigma)
            zb = norm.cdf((self.hi - self.mu) / self.sigma)
            values = self.mu + self.sigma * norm.ppf(za + u * (zb - za))
        else:
            zc = norm.cdf((math.log(self.hi - self.lo) - self.mu) / self.sigma)
            values = self.lo + np.exp(self.mu + self.sigma * norm.ppf(u * zc))
        # keep a hair inside the bounds so downstream float round-off in
        # weekly means cannot escape [lo, hi]
        pad = 1e-9 * (self.hi - self.lo)
        return np.clip(values, self.lo + pad, self.hi - pad)


def _truncated_normal_mean(mu: float, sigma: float, lo: float, hi: float) -> float:
    a, b = (lo - mu) / sigma, (hi - mu) / sigma
    # survival-function form keeps the mass denominator from underflowing
    # when the window sits far in one tail
    mass = norm.sf(a) - norm.sf(b) if a > 0 else norm.cdf(b) - norm.cdf(a)
    if mass <= 0.0:
        return lo if mu < lo else hi
    return mu + sigma * (norm.pdf(a) - norm.pdf(b)) / mass


def _truncated_lognormal_mean(mu: float, sigma: float, lo: float, hi: float) -> float:
    zc = (math.log(hi - lo) - mu) / sigma
    return lo + math.exp(mu + sigma * sigma / 2.0) * norm.cdf(zc - sigma) / norm.cdf(zc)


def calibrate_distribution(spec: FeatureDistributionSpec) -> CalibratedDistribution:
    """Pick (mu, sigma) so the truncated mean equals the target mean.

    sigma follows the percentile rule (max near the 99.9th percentile);
    mu is then found by bisection, which converges because the truncated
    mean is monotone in the location parameter.
    """
    m, lo, hi = spec.mean, spec.min_value, spec.max_value
    if spec.family == "truncated-normal":
        sigma = (hi - m) / Z999
        mean_at = lambda mu: _truncated_normal_mean(mu, sigma, lo, hi)
        low, high = lo - 10.0 * sigma, hi + 10.0 * sigma
    else:
        ratio = (hi - lo) / (m - lo)
        disc = Z999 * Z999 - 2.0 * math.log(ratio)
        sigma = Z999 - math.sqrt(disc) if disc > 0 else Z999
        sigma = max(sigma, 1e-6)
        c = math.log(hi - lo)
        mean_at = lambda mu: _truncated_lognormal_mean(mu, sigma, lo, hi)
        low, high = c - 80.0 * sigma, c + 10.0 * sigma
    for _ in range(200):
        mid = 0.5 * (low + high)
        if mean_at(mid) > m:
            high = mid
        else:
            low = mid
    mu = 0.5 * (low + high)
    return CalibratedDistribution(family=spec.family, mu=mu, sigma=sigma, lo=lo, hi=hi)


def stratified_uniform(n: int, rng: np.random.Generator) -> np.ndarray:
    """One draw per stratum of width 1/n, jittered around the stratum
    midpoint and shuffled.  The narrow jitter keeps sample means close to
    the calibrated distribution mean even for heavy-tailed features."""
    u = (np.arange(n) + 0.375 + 0.25 * rng.random(n)) / n
    return rng.permutation(u)


# -------------------------------------------------------------- the rule

def hysteresis_states(loads: np.ndarray, tau_hi: float, tau_lo: float,
                      start_closed: bool = False) -> np.ndarray:
    """Next-Monday states s_1..s_W driven by the weekly loads.

    Closed iff load > tau_hi (strict), or already closed and load > tau_lo.
    """
    if not 0.0 < tau_lo < tau_hi:
        raise CalibrationError(f"need 0 < tau_lo < tau_hi, got ({tau_lo}, {tau_hi})")
    state = 1 if start_closed else 0
    out = np.empty(len(loads), dtype=np.int64)
    for i, load in enumerate(np.asarray(loads, dtype=np.float64)):
        state = 1 if (load > tau_hi or (state == 1 and load > tau_lo)) else 0
        out[i] = state
    return out


def weekly_loads(counts: dict[str, np.ndarray], weights: dict[str, float]) -> np.ndarray:
    """Mean over stations of the weighted species counts; counts arrays are
    (stations, weeks)."""
    total = sum(weights[name] * counts[name] for name in SPECIES)
    return total.mean(axis=0)


def _draw_features(spec: SyntheticEstuarySpec, seed: int) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """All station-week values, keyed by feature as (stations, weeks) arrays,
    plus the weekly upwelling series."""
    n_stations, weeks = len(spec.config.stations), spec.weeks
    feature_index = {name: i for i, name in enumerate(REQUIRED_FEATURES)}
    values: dict[str, np.ndarray] = {}
    for name in STATION_FEATURE_NAMES:
        dist = calibrate_distribution(spec.features[name])
        rows = []
        for st in range(n_stations):
            rng = np.random.default_rng((seed, feature_index[name], st))
            rows.append(dist.quantile(stratified_uniform(weeks, rng)))
        values[name] = np.stack(rows)
    up_dist = calibrate_distribution(spec.features["upwelling"])
    up_rng = np.random.default_rng((seed, feature_index["upwelling"], 0))
    upwelling = up_dist.quantile(stratified_uniform(weeks, up_rng))
    return values, upwelling


def calibrate_thresholds(spec: SyntheticEstuarySpec, seed: int | None = None):
    """Bisect tau_hi (tau_lo = tau_hi / 2) on the generated load sequence
    until the label closure fraction is within 0.03 of target.

    Returns (tau_hi, tau_lo, trace); the trace lists every (tau_hi,
    fraction) probe for the failure diagnostics.
    """
    seed = spec.seed if seed is None else seed
    values, _ = _draw_features(spec, seed)
    loads = weekly_loads(values, spec.species_weights)
    target = spec.closure_fraction
    lo_tau, hi_tau = 0.0, float(loads.max()) * 1.0001
    if hi_tau <= 0.0:
        raise CalibrationError("loads are all zero; cannot plant a closure rule")
    trace: list[tuple[float, float]] = []
    for _ in range(MAX_BISECTION_STEPS):
        tau = 0.5 * (lo_tau + hi_tau)
        fraction = float(hysteresis_states(loads, tau, tau / 2.0).mean())
        trace.append((tau, fraction))
        if abs(fraction - target) <= CALIBRATION_TOLERANCE:
            return tau, tau / 2.0, trace
        if fraction > target:
            lo_tau = tau
        else:
            hi_tau = tau
    lines = ", ".join(f"(tau={t:.4g}, frac={f:.4f})" for t, f in trace[-5:])
    raise CalibrationError(
        f"no threshold reached closure fraction {target} +- {CALIBRATION_TOLERANCE} "
        f"within {MAX_BISECTION_STEPS} bisection steps; last probes: {lines}"
    )


# -------------------------------------------------------------- generate

def _fmt(value: float) -> str:
    return repr(float(value))


@dataclass
class GenerationResult:
    out_dir: Path
    tau_hi: float
    tau_lo: float
    pilot_fraction: float
    states: np.ndarray          # true s_0..s_W before any label noise
    loads: np.ndarray

    @property
    def label_fraction(self) -> float:
        return float(self.states[1:].mean())


def generate(spec: SyntheticEstuarySpec, out_dir, seed: int | None = None) -> GenerationResult:
    """Write profiles.csv, surface.csv, zone_status.csv, upwelling.csv and
    truth_rule.json into out_dir; byte-identical for a fixed (spec, seed)."""
    seed = spec.seed if seed is None else seed
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stations, zones = spec.config.stations, spec.config.zones
    weeks = spec.weeks

    values, upwelling = _draw_features(spec, seed)
    loads = weekly_loads(values, spec.species_weights)
    if spec.tau_hi is not None:
        tau_hi, tau_lo = spec.tau_hi, spec.tau_lo
    else:
        tau_hi, tau_lo, _ = calibrate_thresholds(spec, seed)
    next_states = hysteresis_states(loads, tau_hi, tau_lo)
    states = np.concatenate([[0], next_states])  # s_0 .. s_W
    pilot_fraction = float(next_states.mean())

    # missing-value injection: at most one non-rule variable per station-week
    missing_rng = np.random.default_rng((seed, 999))
    hit = missing_rng.random((len(stations), weeks)) < spec.missing_rate
    which = missing_rng.integers(0, len(_INJECTABLE), size=(len(stations), weeks))

    def blanked(st: int, w: int, name: str) -> bool:
        return bool(hit[st, w]) and _INJECTABLE[which[st, w]] == name

    mondays = [START_MONDAY + dt.timedelta(days=7 * w) for w in range(weeks + 1)]

    with open(out_dir / "profiles.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station_id", "date", "depth_m", "temperature_c", "salinity", "oxygen_ml_l"])
        for w in range(weeks):
            sample_date = mondays[w] + dt.timedelta(days=2)
            for st, station in enumerate(stations):
                temp = values["temperature"][st, w]
                sal = values["salinity"][st, w]
                oxy = values["oxygen"][st, w]
                dtemp = values["thermocline"][st, w]
                dsal = values["halocline"][st, w]
                temp_gone = blanked(st, w, "temperature")
                sal_gone = blanked(st, w, "salinity")
                oxy_gone = blanked(st, w, "oxygen")
                upper_temp_gone = temp_gone or blanked(st, w, "thermocline")
                upper_sal_gone = sal_gone or blanked(st, w, "halocline")
                writer.writerow([
                    station, sample_date.isoformat(), 3,
                    "" if upper_temp_gone else _fmt(temp + dtemp / 2.0),
                    "" if upper_sal_gone else _fmt(sal + dsal / 2.0),
                    "" if oxy_gone else _fmt(oxy),
                ])
                writer.writerow([
                    station, sample_date.isoformat(), 9,
                    "" if temp_gone else _fmt(temp - dtemp / 2.0),
                    "" if sal_gone else _fmt(sal - dsal / 2.0),
                    "" if oxy_gone else _fmt(oxy),
                ])

    with open(out_dir / "surface.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station_id", "date"] + list(SURFACE_FEATURES))
        for w in range(weeks):
            sample_date = mondays[w] + dt.timedelta(days=2)
            for st, station in enumerate(stations):
                row = [station, sample_date.isoformat()]
                for name in SURFACE_FEATURES:
                    row.append("" if blanked(st, w, name) else _fmt(values[name][st, w]))
                writer.writerow(row)

    noise_rng = np.random.default_rng((seed, 1000))
    with open(out_dir / "zone_status.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["zone_id", "date", "state"])
        for zone in zones:
            flips = noise_rng.random(weeks + 1) < spec.label_noise
            for w in range(weeks + 1):
                state = int(states[w]) ^ int(flips[w])
                writer.writerow([zone, mondays[w].isoformat(), "closed" if state else "open"])

    with open(out_dir / "upwelling.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "index"])
        for w in range(weeks):
            for day in range(7):
                writer.writerow([(mondays[w] + dt.timedelta(days=day)).isoformat(),
                                 _fmt(upwelling[w])])

    truth = {
        "format": "shellcast-truth-v1",
        "name": spec.config.name,
        "seed": seed,
        "tau_hi": tau_hi,
        "tau_lo": tau_lo,
        "closure_target": spec.closure_fraction,
        "pilot_fraction": pilot_fraction,
        "species_weights": spec.species_weights,
        "weeks": weeks,
        "label_noise": spec.label_noise,
        "missing_rate": spec.missing_rate,
    }
    with open(out_dir / "truth_rule.json", "w") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return GenerationResult(out_dir=out_dir, tau_hi=tau_hi, tau_lo=tau_lo,
                            pilot_fraction=pilot_fraction, states=states, loads=loads)


# ---------------------------------------------------------------- oracle

def oracle_labels(spec: SyntheticEstuarySpec, surfaces: list[SurfaceRecord],
                  tau_hi: float, tau_lo: float):
    """Recompute every week's next-Monday label from emitted surface rows.

    Independent path for pipeline integrity: aggregates the weekly species
    maxima per station, averages the weighted load over stations, and runs
    the hysteresis rule from the open start state.  Returns (week_keys,
    labels) where labels[i] is the label of week_keys[i].
    """
    per_station_week: dict[tuple[str, tuple[int, int]], dict[str, float]] = {}
    week_keys: set[tuple[int, int]] = set()
    for rec in surfaces:
        key = (rec.station_id, iso_week_key(rec.date))
        week_keys.add(iso_week_key(rec.date))
        bucket = per_station_week.setdefault(key, {})
        for name in SPECIES:
            value = getattr(rec, name)
            if value is None:
                raise DataError(
                    f"{name} missing for {rec.station_id} on {rec.date}; "
                    "labels cannot be recomputed"
                )
            bucket[name] = max(bucket.get(name, -math.inf), value)
    ordered_weeks = sorted(week_keys)
    loads = np.empty(len(ordered_weeks))
    for i, week in enumerate(ordered_weeks):
        station_loads = []
        for station in spec.config.stations:
            bucket = per_station_week.get((station, week))
            if bucket is None:
                raise DataError(f"no surface rows for station {station} in week {week}")
            station_loads.append(sum(spec.species_weights[name] * bucket[name]
                                     for name in SPECIES))
        loads[i] = sum(station_loads) / len(station_loads)
    return ordered_weeks, hysteresis_states(loads, tau_hi, tau_lo)
