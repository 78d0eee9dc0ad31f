"""From raw observation files to a model-ready sample matrix.

One sample = one (production zone, ISO week).  The inputs are the week's
station aggregates (chlorophyll and plankton maxima, nutrient means,
temperature/salinity/oxygen means, stratification indices), the weekly
upwelling mean, the zone one-hot, and the zone's Friday state.  The label
is the zone's state on the following Monday.  Rows with any missing value
are dropped and logged.
"""

import tempfile
from pathlib import Path

import numpy as np

from shellcast.ingest import build_dataset, parse_raw
from shellcast.synth import SyntheticEstuarySpec, generate

preset = Path(__file__).resolve().parents[1] / "src" / "shellcast" / "presets" / "ares_betanzos.json"
spec = SyntheticEstuarySpec.from_json(preset)
raw = Path(tempfile.mkdtemp(prefix="shellcast_demo_"))
generate(spec, raw)

records = parse_raw(raw / "profiles.csv", raw / "surface.csv",
                    raw / "zone_status.csv", raw / "upwelling.csv", spec.config)
profiles, surfaces, statuses, upwelling = records
print(f"parsed {len(profiles)} profile rows, {len(surfaces)} surface rows, "
      f"{len(statuses)} status rows, {len(upwelling)} upwelling days")

dataset, drops, nulls = build_dataset(spec.config, *records)
print(f"\ndataset: {dataset.n} complete samples x {dataset.X.shape[1]} features")
print(f"  width = 2 + 16*{len(spec.config.stations)} stations "
      f"+ {len(spec.config.zones)} zones + 1 (friday state)")
print(f"  closures: {int(dataset.y.sum())} ({dataset.y.mean():.1%})")
print(f"  dropped for missing values: {nulls}")
print(f"  dropped for missing status records: {len(drops)}")

print("\nfirst feature names:", dataset.feature_names[:5], "...")
print("last feature names: ...", dataset.feature_names[-4:])

# the one-hot block always sums to one, and Friday states are binary
zone_block = dataset.X[:, 2 + 16 * len(spec.config.stations):-1]
assert np.all(zone_block.sum(axis=1) == 1.0)
assert set(np.unique(dataset.X[:, -1])) <= {0.0, 1.0}
print("\ninvariants hold: one-hot block sums to 1, friday_state is binary")

out = raw / "dataset.csv"
dataset.save_csv(out)
print(f"saved {out}")
