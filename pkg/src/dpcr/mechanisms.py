"""Query mechanisms: exact linear-query change, sensitivity, Laplace noise.

A linear query sums a per-value function ``f`` over the database; its
change over a mutation batch is ``sum(f(new) - f(prev))`` with
``f(None) = 0``. Outputs of ``f`` are clamped into the declared closed
range so the change of a single value moves the query by at most the
range width.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .changelog import Mutation

VALUE_FN_KINDS = ("identity", "indicator", "second_moment", "table")


class InvalidNoiseError(ValueError):
    """Noise parameters do not define a positive Laplace scale."""


@dataclass(frozen=True)
class LinearQuerySpec:
    """Per-value function plus the closed range its outputs are clamped to.

    ``fn`` is one of ``identity``, ``indicator`` (needs ``predicate``),
    ``second_moment``, or ``table`` (needs ``table``; missing keys map
    to 0 before clamping). ``None`` values always contribute 0.
    """

    fn: str = "identity"
    lower: float = 0.0
    upper: float = 1.0
    predicate: Callable[[float], bool] | None = None
    table: Mapping[float, float] | None = None

    def __post_init__(self) -> None:
        if self.fn not in VALUE_FN_KINDS:
            raise ValueError(f"unknown value function {self.fn!r}")
        if self.lower > self.upper:
            raise ValueError(f"bounds [{self.lower}, {self.upper}] are reversed")
        if self.fn == "indicator" and self.predicate is None:
            raise ValueError("indicator query needs a predicate")
        if self.fn == "table" and self.table is None:
            raise ValueError("table query needs a lookup table")

    def evaluate(self, value: float | None) -> float:
        """``f(value)`` clamped into ``[lower, upper]``; ``None`` gives 0."""
        if value is None:
            return 0.0
        if self.fn == "identity":
            raw = value
        elif self.fn == "indicator":
            raw = 1.0 if self.predicate(value) else 0.0  # type: ignore[misc]
        elif self.fn == "second_moment":
            raw = value * value
        else:
            raw = self.table.get(value, 0.0)  # type: ignore[union-attr]
        return min(max(raw, self.lower), self.upper)


def linear_query_change(mutations: Iterable[Mutation], spec: LinearQuerySpec) -> float:
    """Exact change of the linear query over an ordered mutation batch."""
    change = 0.0
    for m in mutations:
        change -= spec.evaluate(m.prev_value)
        change += spec.evaluate(m.new_value)
    return change


def sensitivity(spec: LinearQuerySpec) -> float:
    """Worst-case swing of the per-value function: the range width."""
    return spec.upper - spec.lower


@dataclass(frozen=True)
class NoiseSpec:
    """Laplace perturbation parameters; ``scale = sensitivity / epsilon``."""

    epsilon: float
    sensitivity: float
    seed: int
    kind: str = "laplace"

    def __post_init__(self) -> None:
        if self.kind != "laplace":
            raise InvalidNoiseError(f"unsupported noise kind {self.kind!r}")
        _check_positive(self.epsilon, self.sensitivity)

    @property
    def scale(self) -> float:
        return self.sensitivity / self.epsilon


def _check_positive(epsilon: float, sens: float) -> None:
    if not epsilon > 0:
        raise InvalidNoiseError(f"epsilon must be > 0, got {epsilon}")
    if not sens > 0:
        raise InvalidNoiseError(f"sensitivity must be > 0, got {sens}")


def named_stream(seed: int, *parts: int | str) -> np.random.Generator:
    """Independent, reproducible random stream for ``(seed, *parts)``.

    Streams with distinct names are statistically independent
    (counter-based Philox keyed off the hashed name), and a stream's
    draws depend only on the seed, the name, and the draw position.
    """
    words = [seed & 0xFFFFFFFFFFFFFFFF]
    for part in parts:
        if isinstance(part, int):
            words.append(part & 0xFFFFFFFFFFFFFFFF)
        else:
            digest = hashlib.sha256(part.encode("utf-8")).digest()
            words.append(int.from_bytes(digest[:8], "little"))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def perturb(value: float, noise: NoiseSpec, rng: np.random.Generator) -> float:
    """Add one Laplace(0, sensitivity/epsilon) draw from the given stream."""
    _check_positive(noise.epsilon, noise.sensitivity)
    return value + rng.laplace(0.0, noise.scale)
