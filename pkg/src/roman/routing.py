"""Window bookkeeping and assembly of the routed pseudochannel tensor.

Given a pyramid with realized level lengths L_1..L_S, every scale is
tiled with windows of the common base length L_base = L_S. The window
count at scale s is

    W_s = 1 + ceil((L_s - L_base) / ((1 - alpha) * L_base))

and the 1-based start indices spread the windows uniformly over the
admissible range:

    a_{s,w} = 1 + floor((w - 1) * (L_s - L_base) / (W_s - 1))   (W_s > 1)

Counts and starts are computed in exact rational/integer arithmetic, so
the plan is a pure function of (lengths, C, alpha) with no float rounding.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BaseLengthUnreachable, InvalidAlpha
from .pyramid import Pyramid, as_series, build_pyramid, level_lengths


@dataclass(frozen=True)
class RomanConfig:
    """Operator configuration: explicit depth or a minimum base length.

    Exactly one of `scales` and `min_base_length` must be set. alpha is
    the target fractional overlap between consecutive windows at each
    scale; the realized overlap differs only by integer rounding.
    """

    scales: int | None = None
    min_base_length: int | None = None
    alpha: float = 0.5

    def __post_init__(self):
        if (self.scales is None) == (self.min_base_length is None):
            raise ValueError("set exactly one of scales / min_base_length")
        if self.scales is not None and self.scales < 1:
            raise ValueError(f"scales must be >= 1, got {self.scales}")
        if self.min_base_length is not None and self.min_base_length < 1:
            raise ValueError(f"min_base_length must be >= 1, got {self.min_base_length}")
        if not 0.0 <= self.alpha < 1.0:
            raise InvalidAlpha(f"alpha must be in [0, 1), got {self.alpha}")


def resolve_depth(length: int, config: RomanConfig) -> int:
    """Number of pyramid levels implied by the configuration.

    In explicit mode this is just `scales`. In min-base-length mode it
    is the largest depth whose realized coarsest length stays at or
    above the requested minimum, computed with the exact length
    recursion. Levels of length 1 cannot shrink further, so the search
    also stops there.
    """
    if config.scales is not None:
        level_lengths(length, config.scales)  # propagates DepthTooLarge
        return config.scales
    l_min = config.min_base_length
    if length < l_min:
        raise BaseLengthUnreachable(
            f"series length {length} is below the minimum base length {l_min}"
        )
    depth = 1
    current = length
    while current > 1:
        nxt = -(-current // 2)
        if nxt < l_min:
            break
        depth += 1
        current = nxt
    return depth


def _window_count(level_length: int, base_length: int, alpha: Fraction) -> int:
    if level_length == base_length:
        return 1
    spacing = (1 - alpha) * base_length
    return 1 + math.ceil(Fraction(level_length - base_length) / spacing)


def _window_starts(level_length: int, base_length: int, count: int) -> list[int]:
    # 1-based starts; uniform spread over the admissible range so the
    # last window ends exactly at the level's final sample.
    if count == 1:
        return [1]
    span = level_length - base_length
    return [1 + ((w - 1) * span) // (count - 1) for w in range(1, count + 1)]


@dataclass(frozen=True)
class RoutingPlan:
    """Deterministic bookkeeping for one (lengths, C, alpha) combination.

    `starts` holds 1-based window start indices per scale.
    `pseudochannel_order` lists (scale, window, channel) triples, all
    1-based, scale-major then window then original channel.
    """

    base_length: int
    channel_count: int
    alpha: float
    level_lengths: tuple[int, ...]
    window_counts: tuple[int, ...]
    starts: tuple[tuple[int, ...], ...]
    pseudochannel_order: tuple[tuple[int, int, int], ...] = field(repr=False)

    @property
    def total_pseudochannels(self) -> int:
        return len(self.pseudochannel_order)

    def to_dict(self) -> dict:
        """JSON-ready form, used by tensor sidecar metadata."""
        return {
            "base_length": self.base_length,
            "channel_count": self.channel_count,
            "alpha": self.alpha,
            "level_lengths": list(self.level_lengths),
            "window_counts": list(self.window_counts),
            "starts": [list(s) for s in self.starts],
            "total_pseudochannels": self.total_pseudochannels,
            "pseudochannel_order": [list(t) for t in self.pseudochannel_order],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoutingPlan":
        return cls(
            base_length=d["base_length"],
            channel_count=d["channel_count"],
            alpha=d["alpha"],
            level_lengths=tuple(d["level_lengths"]),
            window_counts=tuple(d["window_counts"]),
            starts=tuple(tuple(s) for s in d["starts"]),
            pseudochannel_order=tuple(tuple(t) for t in d["pseudochannel_order"]),
        )


def plan_routing(realized_lengths, channel_count: int, alpha: float) -> RoutingPlan:
    """Compute window counts, start indices and the pseudochannel order."""
    if not 0.0 <= alpha < 1.0:
        raise InvalidAlpha(f"alpha must be in [0, 1), got {alpha}")
    lengths = [int(v) for v in realized_lengths]
    if not lengths or lengths[-1] < 1:
        raise ValueError(f"invalid level lengths {lengths}")
    if any(a < b for a, b in zip(lengths, lengths[1:])):
        raise ValueError(f"level lengths must be non-increasing, got {lengths}")
    if channel_count < 1:
        raise ValueError(f"channel_count must be >= 1, got {channel_count}")

    base = lengths[-1]
    alpha_exact = Fraction(alpha)
    counts = [_window_count(l, base, alpha_exact) for l in lengths]
    starts = [_window_starts(l, base, w) for l, w in zip(lengths, counts)]
    order = [
        (s, w, c)
        for s in range(1, len(lengths) + 1)
        for w in range(1, counts[s - 1] + 1)
        for c in range(1, channel_count + 1)
    ]
    return RoutingPlan(
        base_length=base,
        channel_count=channel_count,
        alpha=alpha,
        level_lengths=tuple(lengths),
        window_counts=tuple(counts),
        starts=tuple(tuple(s) for s in starts),
        pseudochannel_order=tuple(order),
    )


def representation_size(plan: RoutingPlan) -> int:
    """Element count of any tensor produced under the plan: C' * L_base."""
    return plan.total_pseudochannels * plan.base_length


def _slice_window(level: np.ndarray, start_1based: int, base_length: int,
                  channel_1based: int) -> np.ndarray:
    # The single place where the plan's 1-based indices meet 0-based arrays.
    lo = start_1based - 1
    return level[channel_1based - 1, lo:lo + base_length]


@dataclass
class RoutedRepresentation:
    """Routed tensor of shape (C', L_base) plus its provenance plan."""

    tensor: np.ndarray
    plan: RoutingPlan


def route_pyramid(pyramid: Pyramid, plan: RoutingPlan) -> RoutedRepresentation:
    """Slice and stack windows from an existing pyramid under a plan."""
    out = np.empty((plan.total_pseudochannels, plan.base_length), dtype=np.float64)
    for k, (s, w, c) in enumerate(plan.pseudochannel_order):
        start = plan.starts[s - 1][w - 1]
        out[k] = _slice_window(pyramid.level(s), start, plan.base_length, c)
    return RoutedRepresentation(tensor=out, plan=plan)


def apply_roman(x: np.ndarray, config: RomanConfig) -> RoutedRepresentation:
    """Full operator: pyramid, plan, window slicing, channel stacking.

    With a single scale the output tensor is a bit-exact copy of the
    input (identity case).
    """
    x = as_series(x)
    depth = resolve_depth(x.shape[1], config)
    pyramid = build_pyramid(x, depth)
    plan = plan_routing(pyramid.realized_lengths, x.shape[0], config.alpha)
    return route_pyramid(pyramid, plan)


def transform_batch(values: np.ndarray, config: RomanConfig, threads: int = 1):
    """Apply the operator to a (N, C, L) batch of equal-length series.

    All instances share one plan. Returns the (N, C', L_base) routed
    batch and the plan. With threads > 1 instances are processed by a
    thread pool; each worker writes only its own output slot, so the
    result is identical to the sequential one.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 3:
        raise ValueError(f"batch must be (N, C, L), got shape {values.shape}")
    n, channels, length = values.shape
    depth = resolve_depth(length, config)
    plan = plan_routing(level_lengths(length, depth), channels, config.alpha)
    out = np.empty((n, plan.total_pseudochannels, plan.base_length), dtype=np.float64)

    def fill(i):
        pyramid = build_pyramid(values[i], depth)
        out[i] = route_pyramid(pyramid, plan).tensor

    if threads > 1 and n > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(n)))
    else:
        for i in range(n):
            fill(i)
    return out, plan
