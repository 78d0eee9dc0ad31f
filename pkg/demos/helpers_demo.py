"""Compact synthetic spec shared by the demo scripts."""

from shellcast.ingest import EstuaryConfig
from shellcast.synth import FeatureDistributionSpec, SyntheticEstuarySpec

_FEATURES = {
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


def make_demo_spec(name="demo_ria", weeks=160, closure=0.3, seed=500,
                   missing=0.05, noise=0.0):
    features = {
        key: FeatureDistributionSpec(name=key, family=fam, mean=m,
                                     min_value=lo, max_value=hi)
        for key, (fam, m, lo, hi) in _FEATURES.items()
    }
    return SyntheticEstuarySpec(
        config=EstuaryConfig(name=name, stations=("D1", "D2"), zones=("DZ1", "DZ2")),
        features=features,
        closure_fraction=closure,
        weeks=weeks,
        seed=seed,
        label_noise=noise,
        missing_rate=missing,
    )
