"""Coordinate-spread statistic along decimated synthetic signals (smooth and one-hot)."""

import sys

from kernel_lens.diagnostics import one_hot_vectors, random_phase_sinusoids, write_raw_vectors

from _run import RESULTS, run

RESULTS.mkdir(exist_ok=True)
sines, hots = RESULTS / "sinusoids_4096.f64", RESULTS / "one_hot_4096.f64"
write_raw_vectors(sines, random_phase_sinusoids(1000, 4096, seed=0))
write_raw_vectors(hots, one_hot_vectors(1000, 4096, seed=0))

codes = []
for label, path in (("sinusoids", sines), ("one_hot", hots)):
    for stat in ("linear", "quartic"):
        codes.append(run(f"spread_{label}_{stat}", "hypothesis-scan", "--input", str(path), "--format", "raw", "--factors", "1,4,16,64", "--statistic", stat))
sys.exit(max(codes))
