"""Release engines: disjoint, sliding-window, and hierarchical releases.

The engines evaluate the exact linear-query change for every scheduled
filter and perturb it with Laplace noise from a per-node stream, so a
run is reproducible from its seed regardless of evaluation order. Exact
values ride along in the in-memory results for verification; the
serializers drop them unless explicitly asked.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Mapping

from .accounting import HdcrParams, ReleaseSchedule, SwcrParams
from .changelog import (
    AtMostK,
    Changelog,
    Hybrid,
    TimeBounded,
    TimeRangeFilter,
)
from .mechanisms import LinearQuerySpec, NoiseSpec, linear_query_change, named_stream, perturb


class RangeTooWideError(ValueError):
    """The requested range is wider than the hierarchy can cover."""


class UnsupportedConstraintError(TypeError):
    """The variance comparison is defined for atomic constraints only."""


@dataclass(frozen=True)
class ReleaseRecord:
    """One scheduled query's outcome; ``exact`` is for verification only."""

    index: int
    window: TimeRangeFilter
    noisy: float
    exact: float
    node_count: int | None = None
    variance: float | None = None


@dataclass(frozen=True)
class ReleaseResult:
    records: tuple[ReleaseRecord, ...]

    def noisy_values(self) -> list[float]:
        return [r.noisy for r in self.records]

    def exact_values(self) -> list[float]:
        return [r.exact for r in self.records]


def run_dcr(
    log: Changelog,
    schedule: ReleaseSchedule,
    spec: LinearQuerySpec,
    noise: NoiseSpec,
) -> ReleaseResult:
    """Disjoint release: query ``i`` reads the mutations since query ``i-1``.

    The first query reads everything up to the first endpoint. Queries
    are non-adaptive and use mutually independent noise streams.
    """
    records = []
    for i, window in enumerate(schedule.filters()):
        exact = linear_query_change(log.filter(window), spec)
        rng = named_stream(noise.seed, "dcr", i)
        records.append(ReleaseRecord(i, window, perturb(exact, noise, rng), exact))
    return ReleaseResult(tuple(records))


def run_swcr(
    log: Changelog,
    params: SwcrParams,
    spec: LinearQuerySpec,
    noise: NoiseSpec,
) -> ReleaseResult:
    """Sliding-window release: query ``i`` reads ``(t_i - window, t_i]``."""
    records = []
    for i, window in enumerate(params.filters()):
        exact = linear_query_change(log.filter(window), spec)
        rng = named_stream(noise.seed, "swcr", i)
        records.append(ReleaseRecord(i, window, perturb(exact, noise, rng), exact))
    return ReleaseResult(tuple(records))


@dataclass(frozen=True)
class RangeCover:
    """Disjoint ``(layer, index)`` nodes exactly covering a grid range."""

    nodes: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.nodes)


def cover_range(low: int, high: int, branching: int, height: int) -> RangeCover:
    """Cover grid range ``(low, high]`` with aligned hierarchy nodes.

    A node ``(layer, j)`` spans ``(j * branching**layer,
    (j+1) * branching**layer]`` grid units. The range is split at the
    most-aligned grid point inside it; each side is then peeled off
    greedily with the widest aligned node that still fits, which needs at
    most ``branching - 1`` nodes per layer per side.
    """
    if low < 0 or high <= low:
        raise ValueError(f"need 0 <= low < high, got ({low}, {high}]")
    if high - low > branching**height:
        raise RangeTooWideError(
            f"range ({low}, {high}] is wider than {branching}**{height} grid units"
        )
    level = height - 1
    while level > 0 and (low // branching**level + 1) * branching**level > high:
        level -= 1
    split = (low // branching**level + 1) * branching**level

    left: list[tuple[int, int]] = []
    pos = split
    for lv in range(level, -1, -1):
        width = branching**lv
        while pos % width == 0 and pos - width >= low:
            pos -= width
            left.append((lv, pos // width))
    left.reverse()

    right: list[tuple[int, int]] = []
    pos = split
    for lv in range(level, -1, -1):
        width = branching**lv
        while pos % width == 0 and pos + width <= high:
            right.append((lv, pos // width))
            pos += width
    return RangeCover(tuple(left) + tuple(right))


@dataclass(frozen=True)
class HdcrNode:
    layer: int
    index: int
    window: TimeRangeFilter
    exact: float
    noisy: float


@dataclass(frozen=True)
class HdcrTree:
    """All per-node results of a hierarchical release."""

    params: HdcrParams
    noise: NoiseSpec
    nodes: Mapping[tuple[int, int], HdcrNode]

    def node(self, layer: int, index: int) -> HdcrNode:
        return self.nodes[(layer, index)]


def build_hdcr(
    log: Changelog,
    params: HdcrParams,
    spec: LinearQuerySpec,
    noise_per_node: NoiseSpec,
) -> HdcrTree:
    """Evaluate every node of the hierarchy over the changelog.

    Each node holds the exact change over its own (possibly truncated)
    filter plus one independent Laplace draw.
    """
    nodes = {}
    for layer in range(params.height):
        for index in range(params.layer_size(layer)):
            window = params.node_filter(layer, index)
            exact = linear_query_change(log.filter(window), spec)
            rng = named_stream(noise_per_node.seed, "hdcr", layer, index)
            nodes[(layer, index)] = HdcrNode(
                layer, index, window, exact, perturb(exact, noise_per_node, rng)
            )
    return HdcrTree(params, noise_per_node, nodes)


@dataclass(frozen=True)
class AggregateResult:
    """Sum over a node cover; ``variance`` is the nominal Laplace total."""

    noisy: float
    exact: float
    node_count: int
    variance: float
    cover: RangeCover


def aggregate(tree: HdcrTree, low: int, high: int) -> AggregateResult:
    """Answer the grid range ``(low, high]`` by summing a node cover.

    Grid units are bottom-layer intervals from the hierarchy start; the
    real range answered is capped at the hierarchy end when the span is
    not a multiple of the top node width. Variance is
    ``node_count * 2 * scale**2`` for the per-node Laplace scale.
    """
    if high > tree.params.grid_size():
        raise ValueError(
            f"range ({low}, {high}] ends beyond the {tree.params.grid_size()}-unit grid"
        )
    cover = cover_range(low, high, tree.params.branching, tree.params.height)
    noisy = 0.0
    exact = 0.0
    for layer, index in cover.nodes:
        node = tree.node(layer, index)
        noisy += node.noisy
        exact += node.exact
    variance = len(cover) * 2 * tree.noise.scale**2
    return AggregateResult(noisy, exact, len(cover), variance, cover)


def swcr_equivalent_hdcr_params(
    swcr: SwcrParams, branching: int, interval: int | None = None
) -> HdcrParams:
    """The hierarchy whose aggregates answer every window of ``swcr``.

    The bottom interval is ``gcd(window, period)`` and the height is the
    smallest that lets one cover span a window, floored at one layer
    (the formula gives zero height for window == interval).
    """
    dt = interval if interval is not None else math.gcd(swcr.window, swcr.period)
    if swcr.window % dt or swcr.period % dt:
        raise ValueError(f"interval {dt} does not divide window and period")
    height = max(1, _ceil_log(branching, swcr.window // dt))
    return HdcrParams(
        height=height,
        branching=branching,
        start=swcr.first_release - swcr.window,
        span=swcr.window + (swcr.count - 1) * swcr.period,
        interval=dt,
    )


def derive_swcr_from_hdcr(
    log: Changelog,
    swcr: SwcrParams,
    branching: int,
    noise_per_node: NoiseSpec,
    spec: LinearQuerySpec,
) -> tuple[ReleaseResult, HdcrTree]:
    """Answer a sliding-window release from hierarchy aggregates.

    Each window ``(t_i - window, t_i]`` maps to a grid range of the
    equivalent hierarchy and is answered by ``aggregate``; the expected
    answer equals the exact window change.
    """
    params = swcr_equivalent_hdcr_params(swcr, branching)
    tree = build_hdcr(log, params, spec, noise_per_node)
    dt = params.interval
    records = []
    for i, window in enumerate(swcr.filters()):
        low = (int(window.start) - params.start) // dt
        high = (window.end - params.start) // dt
        agg = aggregate(tree, low, high)
        records.append(
            ReleaseRecord(i, window, agg.noisy, agg.exact, agg.node_count, agg.variance)
        )
    return ReleaseResult(tuple(records)), tree


@dataclass(frozen=True)
class VarianceComparison:
    """Outcome of the equal-privacy hierarchy-vs-window variance test.

    ``hdcr_wins`` is exact (integer/rational arithmetic); ``lhs < rhs``
    means the hierarchy-derived release has the lower per-window
    variance at equal total privacy loss, with per-node epsilon scaled
    by ``epsilon_prime_factor``.
    """

    lhs: float
    rhs: float
    hdcr_wins: bool
    epsilon_prime_factor: float
    height: int


def compare_hdcr_swcr(
    swcr: SwcrParams, branching: int, constraint: AtMostK | TimeBounded
) -> VarianceComparison:
    """Evaluate the variance-comparison inequality for pure epsilon noise.

    At-most-k: ``2(c-1)h^3 < ceil(W/P)^2``. Time-bounded:
    ``2(c-1)h(q*ceil(B/dt) + h)^2 < ceil((W+B)/P)^2`` with
    ``q = (c^h - 1)/(c^h - c^(h-1))``. Both sides are evaluated exactly.
    """
    if isinstance(constraint, Hybrid):
        raise UnsupportedConstraintError("compare one atomic constraint at a time")
    c = branching
    dt = math.gcd(swcr.window, swcr.period)
    h = max(1, _ceil_log(c, swcr.window // dt))
    if isinstance(constraint, AtMostK):
        lhs = Fraction(2 * (c - 1) * h**3)
        per_window = -(-swcr.window // swcr.period)
        rhs = Fraction(per_window**2)
        factor = Fraction(per_window, h)
    elif isinstance(constraint, TimeBounded):
        q = Fraction(c**h - 1, c**h - c ** (h - 1))
        term = q * -(-constraint.bound // dt) + h
        lhs = 2 * (c - 1) * h * term**2
        folds = -(-(swcr.window + constraint.bound) // swcr.period)
        rhs = Fraction(folds**2)
        factor = folds / term
    else:
        raise UnsupportedConstraintError(f"unsupported constraint {constraint!r}")
    return VarianceComparison(
        lhs=float(lhs),
        rhs=float(rhs),
        hdcr_wins=lhs < rhs,
        epsilon_prime_factor=float(factor),
        height=h,
    )


def _ceil_log(base: int, value: int) -> int:
    """Smallest ``e`` with ``base**e >= value`` (exact integer search)."""
    if value < 1:
        raise ValueError(f"value must be >= 1, got {value}")
    e, power = 0, 1
    while power < value:
        power *= base
        e += 1
    return e


def result_to_csv(
    result: ReleaseResult, fh: IO[str], include_exact: bool = False
) -> None:
    """Columns ``query_index, t_start, t_end, noisy`` (+ ``exact`` if asked)."""
    writer = csv.writer(fh, lineterminator="\n")
    header = ["query_index", "t_start", "t_end", "noisy"]
    if include_exact:
        header.append("exact")
    writer.writerow(header)
    for r in result.records:
        row = [r.index, _start_repr(r.window.start), r.window.end, repr(r.noisy)]
        if include_exact:
            row.append(repr(r.exact))
        writer.writerow(row)


def result_to_jsonl(
    result: ReleaseResult, fh: IO[str], include_exact: bool = False
) -> None:
    """One JSON object per query; aggregates carry node_count and variance."""
    for r in result.records:
        rec: dict[str, object] = {
            "query_index": r.index,
            "t_start": None if r.window.start == float("-inf") else int(r.window.start),
            "t_end": r.window.end,
            "noisy": r.noisy,
        }
        if r.node_count is not None:
            rec["node_count"] = r.node_count
            rec["variance"] = r.variance
        if include_exact:
            rec["exact"] = r.exact
        fh.write(json.dumps(rec))
        fh.write("\n")


def _start_repr(start: float) -> str:
    return "-inf" if start == float("-inf") else str(int(start))
