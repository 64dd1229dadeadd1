"""Generate the four synthetic task families and inspect their anatomy.

Each family is a balanced binary problem on univariate length-512
series, built so that exactly one kind of temporal structure carries the
label: coarse spike position, the relation between two distant bursts,
agreement between a fine and a coarse phase, or pure motif presence.
"""

import numpy as np

from roman.synth import gen_invariance, gen_longrange, gen_multiscale, gen_position

# --- coarse position -------------------------------------------------------
task = gen_position(seed=0)
md = task.metadata
print("position: two identical spikes at distance d from either border")
print("  class ranges for d:", md["class_ranges"], "(gap", md["gap"], ")")
d = md["instances"]["train"][0]["d"]
print(f"  first train instance: label {task.train.labels[0]}, spikes at {d} and {511 - d}")

# --- long-range correlation ------------------------------------------------
task = gen_longrange(seed=0)
md = task.metadata
print("\nlongrange: same-or-different spike patterns in two distant bursts")
print("  burst windows start at", md["burst_starts"], "width", md["burst_len"])
print("  pattern library (spike offsets):", md["library"])
print("  first train instance patterns:", md["instances"]["train"][0]["patterns"],
      "-> label", task.train.labels[0])

# --- multiscale interaction -------------------------------------------------
task = gen_multiscale(seed=0)
md = task.metadata
print("\nmultiscale: does the fine burst phase match the masked coarse phase?")
print(f"  mask [{md['mask_start']}, {md['mask_start'] + md['mask_len']}),"
      f" burst [{md['burst_start']}, {md['burst_start'] + md['burst_len']})")
info = md["instances"]["train"][0]
print(f"  first train instance: coarse phase {info['coarse_phase']},"
      f" fine phase {info['fine_phase']} -> label {task.train.labels[0]}")

# --- positional invariance (negative control) -------------------------------
task = gen_invariance(seed=0)
md = task.metadata
print("\ninvariance: target motif present (anywhere) vs distractors only")
info = md["instances"]["train"][1]
print("  instance motif starts:", info["starts"], "target slot:", info["target_slot"])

# Every series in every family is z-normalized per series.
values = task.train.values
print("\nper-series normalization: max |mean| =",
      float(np.abs(values.mean(axis=2)).max()),
      " max |std-1| =", float(np.abs(values.std(axis=2) - 1).max()))
