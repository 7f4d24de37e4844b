"""Privacy-loss algebra and closed-form bounds for continual releases.

Everything here is parameter-only arithmetic: fold counts say how many
times a single entry's privacy loss composes, and bounds turn a fold
count into a composed ``(epsilon, delta)`` pair. Fold counts for the
release shapes:

================  ======================  ==============================
release           at-most-k mutations     time-bounded mutations
================  ======================  ==============================
disjoint          ``k``                   ``most_span(endpoints, bound)``
sliding window    ``k * ceil(W/P)``       ``ceil((bound + W) / P)``
hierarchical      ``height * k``          per-layer ``most_span``, summed
================  ======================  ==============================

Hybrid constraints take the componentwise max over branch bounds, and
local (per-entry) guarantees double the fold count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .changelog import (
    AtMostK,
    Hybrid,
    Mutation,
    MutationConstraint,
    NEG_INF,
    TimeBounded,
    TimeRangeFilter,
)


class HeterogeneousAdvancedError(ValueError):
    """Advanced composition is only defined here for identical losses."""


@dataclass(frozen=True)
class PrivacyLoss:
    """An ``(epsilon, delta)`` differential-privacy loss.

    The partial order is componentwise: a loss covers another iff both
    components are at least as large.
    """

    epsilon: float
    delta: float = 0.0

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0 <= self.delta <= 1:
            raise ValueError(f"delta must be in [0, 1], got {self.delta}")

    def covers(self, other: "PrivacyLoss") -> bool:
        return self.epsilon >= other.epsilon and self.delta >= other.delta


def sup(losses: Iterable[PrivacyLoss]) -> PrivacyLoss:
    """Least upper bound in the componentwise order."""
    losses = list(losses)
    if not losses:
        raise ValueError("sup of no losses is undefined")
    return PrivacyLoss(
        max(l.epsilon for l in losses), max(l.delta for l in losses)
    )


@dataclass(frozen=True)
class Naive:
    """Sequential composition by componentwise summation."""


@dataclass(frozen=True)
class Advanced:
    """Advanced composition of k identical losses with a delta slack."""

    delta_slack: float

    def __post_init__(self) -> None:
        if not self.delta_slack > 0:
            raise ValueError(f"delta_slack must be > 0, got {self.delta_slack}")


CompositionStrategy = Naive | Advanced


def compose(
    losses: Sequence[PrivacyLoss], strategy: CompositionStrategy = Naive()
) -> PrivacyLoss:
    """Sequential composition of a batch of losses.

    Naive composition sums componentwise (delta capped at 1, where the
    guarantee is vacuous anyway). Advanced composition requires a
    homogeneous batch and returns
    ``eps' = eps*sqrt(2k*ln(1/slack)) + k*eps*(e^eps - 1)``,
    ``delta' = k*delta + slack``.
    """
    if not losses:
        raise ValueError("cannot compose an empty sequence of losses")
    if isinstance(strategy, Naive):
        return PrivacyLoss(
            sum(l.epsilon for l in losses),
            min(1.0, sum(l.delta for l in losses)),
        )
    first = losses[0]
    if any(l != first for l in losses):
        raise HeterogeneousAdvancedError(
            "advanced composition implemented for identical losses only"
        )
    k = len(losses)
    eps = first.epsilon
    eps_prime = eps * math.sqrt(2 * k * math.log(1 / strategy.delta_slack)) + (
        k * eps * (math.exp(eps) - 1)
    )
    return PrivacyLoss(eps_prime, min(1.0, k * first.delta + strategy.delta_slack))


def compose_fold(
    loss: PrivacyLoss, folds: int, strategy: CompositionStrategy = Naive()
) -> PrivacyLoss:
    """k-fold sequential composition; zero folds cost nothing."""
    if folds < 0:
        raise ValueError(f"fold count must be >= 0, got {folds}")
    if folds == 0:
        return PrivacyLoss(0.0, 0.0)
    return compose([loss] * folds, strategy)


@dataclass(frozen=True)
class ReleaseSchedule:
    """Strictly ascending filter endpoints of a disjoint release.

    The release's queries read ``(-inf, t1]``, then ``(t1, t2]`` and so
    on: one query per endpoint.
    """

    ticks: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.ticks:
            raise ValueError("a schedule needs at least one endpoint")
        if any(b <= a for a, b in zip(self.ticks, self.ticks[1:])):
            raise ValueError(f"schedule endpoints must strictly increase: {self.ticks}")

    @classmethod
    def uniform(cls, start: int, interval: int, count: int) -> "ReleaseSchedule":
        if interval < 1 or count < 1:
            raise ValueError("uniform schedule needs interval >= 1 and count >= 1")
        return cls(tuple(start + interval * i for i in range(count)))

    def filters(self) -> tuple[TimeRangeFilter, ...]:
        starts = (NEG_INF,) + self.ticks[:-1]
        return tuple(TimeRangeFilter(s, e) for s, e in zip(starts, self.ticks))


@dataclass(frozen=True)
class SwcrParams:
    """Sliding-window release: windows ``(t_i - window, t_i]`` every ``period``."""

    window: int
    period: int
    first_release: int
    count: int

    def __post_init__(self) -> None:
        if self.window < 1 or self.period < 1 or self.count < 1:
            raise ValueError(
                f"window, period and count must be >= 1, got "
                f"({self.window}, {self.period}, {self.count})"
            )

    def release_times(self) -> tuple[int, ...]:
        return tuple(self.first_release + self.period * i for i in range(self.count))

    def filters(self) -> tuple[TimeRangeFilter, ...]:
        return tuple(TimeRangeFilter(t - self.window, t) for t in self.release_times())


@dataclass(frozen=True)
class HdcrParams:
    """Hierarchy of disjoint releases with exponentially growing intervals.

    Layer ``i`` (0-based, bottom first) covers ``(start, start + span]``
    with intervals of ``branching**i * interval`` ticks; the last node of
    a layer is truncated at ``start + span`` when the span is not a
    multiple of the layer interval.
    """

    height: int
    branching: int
    start: int
    span: int
    interval: int

    def __post_init__(self) -> None:
        if self.height < 1:
            raise ValueError(f"height must be >= 1, got {self.height}")
        if self.branching < 2:
            raise ValueError(f"branching must be >= 2, got {self.branching}")
        if self.span < 1 or self.interval < 1:
            raise ValueError(
                f"span and interval must be >= 1, got ({self.span}, {self.interval})"
            )

    def layer_interval(self, layer: int) -> int:
        return self.branching**layer * self.interval

    def layer_size(self, layer: int) -> int:
        """Number of nodes in a layer."""
        return -(-self.span // self.layer_interval(layer))

    def layer_schedule(self, layer: int) -> ReleaseSchedule:
        """Endpoint grid of one layer, starting at ``start``."""
        step = self.layer_interval(layer)
        return ReleaseSchedule(
            tuple(self.start + step * j for j in range(self.layer_size(layer) + 1))
        )

    def node_filter(self, layer: int, index: int) -> TimeRangeFilter:
        step = self.layer_interval(layer)
        if not 0 <= layer < self.height or not 0 <= index < self.layer_size(layer):
            raise ValueError(f"no node at layer {layer}, index {index}")
        return TimeRangeFilter(
            self.start + step * index,
            min(self.start + step * (index + 1), self.start + self.span),
        )

    def grid_size(self) -> int:
        """Bottom-layer node count; the unit grid for range covers."""
        return self.layer_size(0)


def most_span(ticks: Sequence[int], span: int) -> int:
    """Most consecutive schedule ranges a window of length ``span`` can touch.

    Two-pointer evaluation of the quadratic reference procedure (see
    ``oracles.most_span_oracle``): for each start endpoint, count the
    endpoints passed until the spread first reaches ``span``. Single-
    endpoint schedules give 0, and so does a window wider than the whole
    schedule, which understates the true overlap; bounds built from this
    function inherit that quirk deliberately.
    """
    n = len(ticks)
    best = 0
    j = 1
    for i in range(n - 1):
        if j <= i:
            j = i + 1
        while j < n and ticks[j] - ticks[i] < span:
            j += 1
        if j < n:
            best = max(best, j - i + 1)
    return best


def dcr_folds(schedule: ReleaseSchedule, constraint: AtMostK | TimeBounded) -> int:
    """Queries of a disjoint release one entry can affect."""
    if isinstance(constraint, AtMostK):
        return constraint.k
    if isinstance(constraint, TimeBounded):
        return most_span(schedule.ticks, constraint.bound)
    raise TypeError(f"fold counts are defined per atomic constraint, got {constraint!r}")


def swcr_folds(params: SwcrParams, constraint: AtMostK | TimeBounded) -> int:
    """Queries of a sliding-window release one entry can affect."""
    if isinstance(constraint, AtMostK):
        return constraint.k * -(-params.window // params.period)
    if isinstance(constraint, TimeBounded):
        return -(-(constraint.bound + params.window) // params.period)
    raise TypeError(f"fold counts are defined per atomic constraint, got {constraint!r}")


def hdcr_folds(params: HdcrParams, constraint: AtMostK | TimeBounded) -> int:
    """Nodes of a hierarchical release one entry can affect.

    The time-bounded count sums the exact per-layer ``most_span`` values
    rather than any closed-form approximation of them; see
    ``hdcr_time_bounded_nominal_folds`` for the commonly quoted figure.
    """
    if isinstance(constraint, AtMostK):
        return params.height * constraint.k
    if isinstance(constraint, TimeBounded):
        return sum(
            most_span(params.layer_schedule(i).ticks, constraint.bound)
            for i in range(params.height)
        )
    raise TypeError(f"fold counts are defined per atomic constraint, got {constraint!r}")


def hdcr_time_bounded_nominal_folds(params: HdcrParams, bound: int) -> float:
    """Closed-form layer sum ``sum_i((1/c^i) * ceil(bound/interval) + 1)``.

    Reported alongside the exact count: the two disagree for small
    bound-to-interval ratios (the closed form can dip below the true
    per-layer overlap), so it is never used for enforcement.
    """
    base = -(-bound // params.interval)
    return sum(
        base / params.branching**i + 1 for i in range(params.height)
    )


def dcr_bound(
    schedule: ReleaseSchedule,
    per_query: PrivacyLoss,
    constraint: MutationConstraint,
    strategy: CompositionStrategy = Naive(),
) -> PrivacyLoss:
    """Total loss of a disjoint release under a mutation constraint."""
    if isinstance(constraint, Hybrid):
        return sup(dcr_bound(schedule, per_query, b, strategy) for b in constraint.branches)
    return compose_fold(per_query, dcr_folds(schedule, constraint), strategy)


def swcr_bound(
    params: SwcrParams,
    per_query: PrivacyLoss,
    constraint: MutationConstraint,
    strategy: CompositionStrategy = Naive(),
) -> PrivacyLoss:
    """Total loss of a sliding-window release under a mutation constraint."""
    if isinstance(constraint, Hybrid):
        return sup(swcr_bound(params, per_query, b, strategy) for b in constraint.branches)
    return compose_fold(per_query, swcr_folds(params, constraint), strategy)


def hdcr_bound(
    params: HdcrParams,
    per_node: PrivacyLoss,
    constraint: MutationConstraint,
    strategy: CompositionStrategy = Naive(),
) -> PrivacyLoss:
    """Total loss of a hierarchical release under a mutation constraint."""
    if isinstance(constraint, Hybrid):
        return sup(hdcr_bound(params, per_node, b, strategy) for b in constraint.branches)
    return compose_fold(per_node, hdcr_folds(params, constraint), strategy)


def local_folds(global_folds: int) -> int:
    """Fold count of the same release as a per-entry (local) guarantee."""
    if global_folds < 0:
        raise ValueError(f"fold count must be >= 0, got {global_folds}")
    return 2 * global_folds


def local_bound(
    global_folds: int,
    per_query: PrivacyLoss,
    strategy: CompositionStrategy = Naive(),
) -> PrivacyLoss:
    """Per-entry loss: twice the folds of the corresponding global bound."""
    return compose_fold(per_query, local_folds(global_folds), strategy)


def affected_query_count(
    entry_muts: Sequence[Mutation], filters: Sequence[TimeRangeFilter]
) -> int:
    """How many filters accept at least one of the entry's mutations."""
    return sum(
        1 for f in filters if any(f.accepts(m.time) for m in entry_muts)
    )
