"""Shared test fixtures: a tiny hand-written raw corpus with every
aggregation rule exercised, its hand-computed expected matrix, and the
independent reference optimizer used to audit the SVM solver."""

import numpy as np

from shellcast.ingest import EstuaryConfig
from shellcast.synth import FeatureDistributionSpec, SyntheticEstuarySpec

SMALL_FEATURES = {
    "chl_a": ("truncated-lognormal", 2.5, 0.04, 60.0),
    "chl_b": ("truncated-lognormal", 0.0, -1.2, 4.0),
    "chl_c": ("truncated-lognormal", 0.7, 0.0, 20.0),
    "d_acuminata": ("truncated-lognormal", 200.0, 0.0, 8000.0),
    "d_acuta": ("truncated-lognormal", 10.0, 0.0, 1000.0),
    "d_caudata": ("truncated-lognormal", 5.0, 0.0, 400.0),
    "d_spp": ("truncated-lognormal", 30.0, 0.0, 5000.0),
    "ammonium": ("truncated-normal", 1.2, 0.1, 6.0),
    "phosphate": ("truncated-normal", 0.4, 0.05, 1.2),
    "nitrate": ("truncated-normal", 3.9, 0.0, 15.0),
    "nitrite": ("truncated-normal", 0.3, 0.03, 1.2),
    "temperature": ("truncated-normal", 14.7, 10.6, 19.3),
    "salinity": ("truncated-normal", 35.1, 21.0, 36.8),
    "oxygen": ("truncated-normal", 4.7, 0.2, 7.3),
    "thermocline": ("truncated-normal", 0.6, 0.0, 4.4),
    "halocline": ("truncated-normal", 0.7, 0.0, 7.5),
    "upwelling": ("truncated-normal", 50.0, -4000.0, 2500.0),
}


def small_spec(weeks=150, closure=0.3, noise=0.0, missing=0.0, seed=777):
    """Compact two-station/two-zone synthetic spec for fast tests."""
    features = {
        name: FeatureDistributionSpec(name=name, family=fam, mean=m, min_value=lo, max_value=hi)
        for name, (fam, m, lo, hi) in SMALL_FEATURES.items()
    }
    return SyntheticEstuarySpec(
        config=EstuaryConfig(name="toyria", stations=("T1", "T2"), zones=("TZ1", "TZ2")),
        features=features,
        closure_fraction=closure,
        weeks=weeks,
        seed=seed,
        label_noise=noise,
        missing_rate=missing,
    )


def spec_to_json_dict(spec):
    return {
        "name": spec.config.name,
        "stations": list(spec.config.stations),
        "zones": list(spec.config.zones),
        "closure_fraction": spec.closure_fraction,
        "weeks": spec.weeks,
        "seed": spec.seed,
        "label_noise": spec.label_noise,
        "missing_rate": spec.missing_rate,
        "species_weights": spec.species_weights,
        "tau_hi": spec.tau_hi,
        "tau_lo": spec.tau_lo,
        "features": {
            name: {"family": f.family, "mean": f.mean, "min": f.min_value, "max": f.max_value}
            for name, f in spec.features.items()
        },
    }


def subgradient_reference(X, y_pm, C, iters=50_000):
    """Best objective seen by plain projected-subgradient descent on the
    bias-augmented hinge problem: 0.5*||v||^2 + C * sum hinge.

    Step size 1/t (unit strong convexity); tracks the best iterate, which
    is what makes the slow method a usable long-run reference.  Kept fully
    independent of the coordinate-descent solver it audits.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y_pm = np.asarray(y_pm, dtype=float)
    n, d = X.shape
    aug = np.hstack([X, np.ones((n, 1))])
    v = np.zeros(d + 1)
    best = np.inf
    for t in range(1, iters + 1):
        margins = y_pm * (aug @ v)
        violated = margins < 1.0
        g = v.copy()
        if violated.any():
            g -= C * (y_pm[violated, None] * aug[violated]).sum(axis=0)
        v -= g / t
        obj = 0.5 * float(v @ v) + C * float(np.maximum(0.0, 1.0 - y_pm * (aug @ v)).sum())
        if obj < best:
            best = obj
    return best


def separable_2d_instance(rng, n_min=10, n_max=30):
    """Random linearly separable 2-D instance with an explicit margin."""
    n = int(rng.integers(n_min, n_max))
    margin = 0.5 + rng.random()
    direction = rng.normal(size=2)
    direction /= np.linalg.norm(direction)
    points, labels = [], []
    while len(points) < n or abs(sum(labels)) == len(labels):
        p = rng.normal(size=2) * 2
        score = p @ direction
        if abs(score) < margin / 2:
            continue
        if len(points) == n:
            points.pop(), labels.pop()
        points.append(p)
        labels.append(1.0 if score > 0 else -1.0)
    return np.array(points), np.array(labels)

GOLDEN_CONFIG = EstuaryConfig(name="goldenria", stations=("S1", "S2"), zones=("ZA", "ZB"))

GOLDEN_PROFILES = """\
station_id,date,depth_m,temperature_c,salinity,oxygen_ml_l
S1,2010-03-02,2,15.0,35.0,6.0
S1,2010-03-02,4,15.0,35.2,5.8
S1,2010-03-02,8,13.0,35.6,5.0
S1,2010-03-02,10,13.0,35.8,4.8
S1,2010-03-04,3,14.0,35.1,5.9
S1,2010-03-04,9,12.0,35.7,5.1
S2,2010-03-03,5,14.5,34.8,6.2
S2,2010-03-03,11,12.5,35.9,4.9
S1,2010-03-09,4,14.2,35.0,5.5
S1,2010-03-09,8,13.2,35.4,5.2
S2,2010-03-10,4,14.0,34.9,5.6
S2,2010-03-10,8,13.1,35.3,5.3
S1,2010-03-16,4,14.8,35.2,5.4
S1,2010-03-16,8,13.5,35.5,5.0
S1,2010-03-16,20,11.0,36.0,4.0
S2,2010-03-17,4,14.6,35.1,5.5
S2,2010-03-17,8,13.4,35.6,5.1
"""

GOLDEN_SURFACE = """\
station_id,date,chl_a,chl_b,chl_c,d_acuminata,d_acuta,d_caudata,d_spp,ammonium,phosphate,nitrate,nitrite
S1,2010-03-02,2.0,0.1,0.5,100,0,0,40,1.0,0.2,3.0,0.3
S1,2010-03-04,61.56,-0.2,0.4,80,20,0,0,1.2,0.4,3.4,0.5
S2,2010-03-03,3.0,0.0,0.6,0,0,0,0,0.9,0.3,2.8,0.2
S1,2010-03-09,2.5,0.05,0.45,150,10,5,0,1.1,0.25,3.1,0.35
S2,2010-03-10,2.2,0.02,0.4,50,0,0,10,0.95,0.28,,0.22
S1,2010-03-16,4.0,0.15,0.7,300,60,20,10,1.3,0.35,3.6,0.45
S2,2010-03-17,3.5,0.1,0.65,250,40,10,5,1.25,0.3,3.5,0.4
"""

GOLDEN_STATUS = """\
zone_id,date,state
ZA,2010-03-01,open
ZA,2010-03-08,closed
ZA,2010-03-15,closed
ZA,2010-03-22,open
ZB,2010-03-01,open
ZB,2010-03-05,closed
ZB,2010-03-08,closed
ZB,2010-03-15,open
"""

GOLDEN_UPWELLING = """\
date,index
2010-03-01,100
2010-03-02,200
2010-03-03,300
2010-03-04,400
2010-03-05,500
2010-03-06,600
2010-03-07,700
2010-03-08,-100
2010-03-10,0
2010-03-12,100
2010-03-18,250.5
"""


def write_golden_raw(directory):
    """Write the four raw CSVs into directory; returns their paths."""
    paths = {}
    for name, text in [
        ("profiles.csv", GOLDEN_PROFILES),
        ("surface.csv", GOLDEN_SURFACE),
        ("zone_status.csv", GOLDEN_STATUS),
        ("upwelling.csv", GOLDEN_UPWELLING),
    ]:
        path = directory / name
        path.write_text(text)
        paths[name.split(".")[0]] = path
    return paths


def _s1_week09():
    return [
        61.56, 0.1, 0.5,              # chl maxima over the two sampling events
        100.0, 20.0, 0.0, 40.0,       # plankton weekly maxima
        (1.0 + 1.2) / 2, (0.2 + 0.4) / 2, (3.0 + 3.4) / 2, (0.3 + 0.5) / 2,
        (15.0 + 15.0 + 13.0 + 13.0 + 14.0 + 12.0) / 6,
        (35.0 + 35.2 + 35.6 + 35.8 + 35.1 + 35.7) / 6,
        (6.0 + 5.8 + 5.0 + 4.8 + 5.9 + 5.1) / 6,
        abs((15.0 + 15.0 + 14.0) / 3 - (13.0 + 13.0 + 12.0) / 3),
        abs((35.0 + 35.2 + 35.1) / 3 - (35.6 + 35.8 + 35.7) / 3),
    ]


def _s2_week09():
    return [
        3.0, 0.0, 0.6,
        0.0, 0.0, 0.0, 0.0,
        0.9, 0.3, 2.8, 0.2,
        (14.5 + 12.5) / 2, (34.8 + 35.9) / 2, (6.2 + 4.9) / 2,
        abs(14.5 - 12.5), abs(34.8 - 35.9),
    ]


def _s1_week11():
    # the 20 m observation joins the depth-wide means but not the
    # stratification bins
    return [
        4.0, 0.15, 0.7,
        300.0, 60.0, 20.0, 10.0,
        1.3, 0.35, 3.6, 0.45,
        (14.8 + 13.5 + 11.0) / 3, (35.2 + 35.5 + 36.0) / 3, (5.4 + 5.0 + 4.0) / 3,
        abs(14.8 - 13.5), abs(35.2 - 35.5),
    ]


def _s2_week11():
    return [
        3.5, 0.1, 0.65,
        250.0, 40.0, 10.0, 5.0,
        1.25, 0.3, 3.5, 0.4,
        (14.6 + 13.4) / 2, (35.1 + 35.6) / 2, (5.5 + 5.1) / 2,
        abs(14.6 - 13.4), abs(35.1 - 35.6),
    ]


def golden_expected():
    """Expected complete matrix, labels and keys after the full pipeline.

    Week 10 rows are removed by the null filter (S2 nitrate missing);
    ZB week 11 and both zones of week 12 lack a next-Monday status.
    """
    up_w09 = (100 + 200 + 300 + 400 + 500 + 600 + 700) / 7
    rows = [
        [9.0, up_w09] + _s1_week09() + _s2_week09() + [1.0, 0.0, 0.0],  # ZA: Friday open
        [9.0, up_w09] + _s1_week09() + _s2_week09() + [0.0, 1.0, 1.0],  # ZB: closed on Friday itself
        [11.0, 250.5] + _s1_week11() + _s2_week11() + [1.0, 0.0, 1.0],  # ZA: Friday closed (step rule)
    ]
    labels = [1, 1, 0]
    keys = [("ZA", 2010, 9), ("ZB", 2010, 9), ("ZA", 2010, 11)]
    return np.array(rows, dtype=np.float64), np.array(labels), keys
