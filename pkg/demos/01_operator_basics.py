"""Walk through the routing operator on a single series.

A series of length L is turned into an anti-aliased pyramid (each level
half as long as the one before), every level is tiled with windows of
the coarsest level's length, and the windows are stacked as
pseudochannels. Depth 1 leaves the input untouched.
"""

import numpy as np

from roman import RomanConfig, apply_roman, build_pyramid, representation_size, resolve_depth

rng = np.random.default_rng(0)
x = rng.normal(size=(1, 512))

# The pyramid alone: lengths halve (rounding up) at every level.
pyramid = build_pyramid(x, 4)
print("pyramid level lengths:", pyramid.realized_lengths)

# The full operator at depth 4 with half-overlapping windows.
routed = apply_roman(x, RomanConfig(scales=4, alpha=0.5))
plan = routed.plan
print("windows per scale:   ", plan.window_counts)
print("base window length:  ", plan.base_length)
print("pseudochannels:      ", plan.total_pseudochannels)
print("output tensor:       ", routed.tensor.shape,
      "=", representation_size(plan), "values")

# Every output row is a contiguous slice of some pyramid level; the plan
# records which (scale, window, channel) each row came from.
scale, window, channel = plan.pseudochannel_order[17]
start = plan.starts[scale - 1][window - 1]
level = pyramid.level(scale)
row = routed.tensor[17]
assert np.array_equal(row, level[channel - 1, start - 1 : start - 1 + plan.base_length])
print(f"row 17 <- scale {scale}, window {window} (start {start}), channel {channel}")

# Depth 1 is the identity, bit for bit.
identity = apply_roman(x, RomanConfig(scales=1))
assert np.array_equal(identity.tensor, x)
print("depth 1 returns the input exactly")

# Instead of a fixed depth, ask for the deepest pyramid whose coarsest
# level still has at least 64 samples.
print("resolved depth for min base 64:", resolve_depth(512, RomanConfig(min_base_length=64)))
