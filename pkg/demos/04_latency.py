"""Per-frame tracker latency (p50/p90, nearest rank) on a synthetic clip.

Run: python demos/04_latency.py [repeats]
"""

import sys

from overhead_mot import compare_variants
from overhead_mot.cli import format_latency
from overhead_mot.synthetic import simulate_walkers

repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 5
scene = simulate_walkers(n_persons=10, n_frames=100, min_separation=0.9, seed=1)
reports = compare_variants(scene.detections, repeats=repeats)
print(format_latency(list(reports.values())), end="")
