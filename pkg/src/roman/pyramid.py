"""Anti-aliased dyadic pyramid construction.

A series is a float64 array of shape (C, L): C channels, L time steps.
Each pyramid level above the first is produced by smoothing with the
fixed binomial filter 1/4*[1, 2, 1] and keeping every second sample.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DepthTooLarge

# Filter taps are exactly representable in binary floating point, so
# constant inputs are preserved exactly at every level.
SMOOTHING_TAPS = (0.25, 0.5, 0.25)

#: Boundary rule for the smoothing convolution: mirror the neighbours
#: without repeating the edge sample (x[-1] == x[1], x[L] == x[L-2]).
BOUNDARY_MODE = "reflect"


def as_series(x) -> np.ndarray:
    """Coerce input to a (C, L) float64 array; 1-d input becomes (1, L)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise ValueError(f"series must be 1-d or 2-d, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"series must be non-empty, got shape {arr.shape}")
    return arr


def smooth(x: np.ndarray) -> np.ndarray:
    """Channelwise 3-tap binomial smoothing with mirrored boundaries.

    y[t] = 0.25*x[t-1] + 0.5*x[t] + 0.25*x[t+1], with the out-of-range
    neighbours taken as x[1] on the left and x[L-2] on the right.
    """
    x = as_series(x)
    padded = np.pad(x, ((0, 0), (1, 1)), mode=BOUNDARY_MODE)
    return (
        SMOOTHING_TAPS[0] * padded[:, :-2]
        + SMOOTHING_TAPS[1] * padded[:, 1:-1]
        + SMOOTHING_TAPS[2] * padded[:, 2:]
    )


def decimate(x: np.ndarray) -> np.ndarray:
    """Keep samples at even indices; output length is ceil(L/2)."""
    x = as_series(x)
    return x[:, ::2].copy()


def level_lengths(length: int, depth: int) -> list[int]:
    """Realized level lengths L_1..L_S for an input of the given length.

    L_1 = length and L_s = ceil(L_{s-1} / 2). Raises DepthTooLarge if a
    level would be empty (impossible under the ceil convention for
    length >= 1, but guarded so alternative conventions stay safe).
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    lengths = [length]
    for _ in range(depth - 1):
        nxt = -(-lengths[-1] // 2)
        if nxt < 1:
            raise DepthTooLarge(
                f"level of length 0 at depth {len(lengths) + 1} for input length {length}"
            )
        lengths.append(nxt)
    return lengths


@dataclass
class Pyramid:
    """Ordered pyramid levels; levels[0] is the untouched input."""

    levels: list[np.ndarray]

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def realized_lengths(self) -> list[int]:
        return [lvl.shape[1] for lvl in self.levels]

    def level(self, s: int) -> np.ndarray:
        """Level by 1-based scale index (s=1 is the input)."""
        if not 1 <= s <= self.depth:
            raise IndexError(f"scale {s} outside 1..{self.depth}")
        return self.levels[s - 1]


def build_pyramid(x: np.ndarray, depth: int) -> Pyramid:
    """Construct the pyramid: level 1 is the input itself, each further
    level is decimate(smooth(previous)). Pure function, input not mutated.
    """
    x = as_series(x)
    level_lengths(x.shape[1], depth)  # validates depth up front
    levels = [x]
    for _ in range(depth - 1):
        levels.append(decimate(smooth(levels[-1])))
    return Pyramid(levels=levels)
