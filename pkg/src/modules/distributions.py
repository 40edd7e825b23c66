"""
Exact finite-support subdistributions

Probabilities are `fractions.Fraction` values, so every comparison made by
the engines is exact. A `Dist` never stores a zero entry and its total mass
never exceeds one; the missing mass models stuck or unfinished executions.
"""

from __future__ import annotations

from fractions import Fraction
from typing import (
    Any,
    Callable,
    Generic,
    Hashable,
    Iterable,
    Iterator,
    Mapping,
    Tuple,
    TypeVar,
    Union
)

A = TypeVar("A", bound=Hashable)
B = TypeVar("B", bound=Hashable)

Weight = Union[Fraction, int]

ZERO = Fraction(0)
ONE = Fraction(1)


def _order_key(outcome: Any) -> tuple:
    """Total order used for canonical rendering of mixed outcomes"""
    if hasattr(outcome, "sort_key"):
        return (1, outcome.sort_key())
    if isinstance(outcome, (bool, int, Fraction)):
        return (0, outcome)
    if isinstance(outcome, tuple):
        return (2, tuple(_order_key(item) for item in outcome))
    return (3, repr(outcome))


class Dist(Generic[A]):
    """
    Immutable subdistribution over hashable outcomes

    Construction merges duplicate outcomes, drops zero weights and rejects
    negative weights or a total mass above one.
    """

    __slots__ = ("_weights", "_hash")

    def __init__(self, weights: Union[Mapping[A, Weight], Iterable[Tuple[A, Weight]]] = ()):
        items = weights.items() if isinstance(weights, Mapping) else weights
        merged: dict = {}
        for outcome, weight in items:
            weight = Fraction(weight)
            if weight < 0:
                raise ValueError(f"Negative probability {weight} for outcome {outcome!r}")
            if weight == 0:
                continue
            merged[outcome] = merged.get(outcome, ZERO) + weight
        if sum(merged.values(), ZERO) > 1:
            raise ValueError("Total mass of a subdistribution must not exceed 1")
        self._weights = merged
        self._hash = None

    @classmethod
    def from_trusted(cls, weights: dict) -> "Dist":
        """Wrap a dict of positive Fraction weights with mass <= 1, unchecked"""
        dist = cls.__new__(cls)
        dist._weights = weights
        dist._hash = None
        return dist

    # Monad structure

    @classmethod
    def ret(cls, outcome: A) -> "Dist[A]":
        return cls.from_trusted({outcome: ONE})

    @classmethod
    def null(cls) -> "Dist[A]":
        return _EMPTY

    @classmethod
    def uniform(cls, bound: int) -> "Dist[int]":
        """Uniform distribution over {0, ..., bound}"""
        if bound < 0:
            raise ValueError(f"uniform bound must be non-negative, got {bound}")
        weight = Fraction(1, bound + 1)
        return cls.from_trusted({n: weight for n in range(bound + 1)})

    @classmethod
    def uniform_over(cls, outcomes: Iterable[A]) -> "Dist[A]":
        outcomes = list(outcomes)
        if not outcomes:
            return _EMPTY
        weight = Fraction(1, len(outcomes))
        acc: dict = {}
        for outcome in outcomes:
            acc[outcome] = acc.get(outcome, ZERO) + weight
        return cls.from_trusted(acc)

    def bind(self, f: Callable[[A], "Dist[B]"]) -> "Dist[B]":
        acc: dict = {}
        for outcome, weight in self._weights.items():
            for result, inner in f(outcome)._weights.items():
                acc[result] = acc.get(result, ZERO) + weight * inner
        return Dist.from_trusted(acc)

    def __rshift__(self, f: Callable[[A], "Dist[B]"]) -> "Dist[B]":
        return self.bind(f)

    def map(self, f: Callable[[A], B]) -> "Dist[B]":
        acc: dict = {}
        for outcome, weight in self._weights.items():
            result = f(outcome)
            acc[result] = acc.get(result, ZERO) + weight
        return Dist.from_trusted(acc)

    def filter(self, predicate: Callable[[A], bool]) -> "Dist[A]":
        return Dist.from_trusted({a: w for a, w in self._weights.items() if predicate(a)})

    def scale(self, factor: Weight) -> "Dist[A]":
        factor = Fraction(factor)
        if factor < 0 or factor > 1:
            raise ValueError(f"Scale factor must lie in [0, 1], got {factor}")
        if factor == 0:
            return _EMPTY
        return Dist.from_trusted({a: w * factor for a, w in self._weights.items()})

    # Measures

    def mass(self) -> Fraction:
        return sum(self._weights.values(), ZERO)

    def expect(self, X: Callable[[A], Weight]) -> Fraction:
        """
        Expected value of a [0, 1]-valued function

        Raises:
            ValueError: If X maps an outcome in the support outside [0, 1]
        """
        total = ZERO
        for outcome, weight in self._weights.items():
            value = Fraction(X(outcome))
            if value < 0 or value > 1:
                raise ValueError(f"Expectation argument maps {outcome!r} to {value}, outside [0, 1]")
            total += weight * value
        return total

    def prob(self, predicate: Callable[[A], bool]) -> Fraction:
        return sum((w for a, w in self._weights.items() if predicate(a)), ZERO)

    # Mapping-like access

    def __getitem__(self, outcome: A) -> Fraction:
        return self._weights.get(outcome, ZERO)

    def __contains__(self, outcome: object) -> bool:
        return outcome in self._weights

    def __iter__(self) -> Iterator[A]:
        return iter(self._weights)

    def __len__(self) -> int:
        return len(self._weights)

    def __bool__(self) -> bool:
        return bool(self._weights)

    def items(self):
        return self._weights.items()

    def support(self) -> frozenset:
        return frozenset(self._weights)

    def sorted_items(self) -> list:
        return sorted(self._weights.items(), key=lambda item: _order_key(item[0]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dist):
            return NotImplemented
        return self._weights == other._weights

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._weights.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"Dist({self.to_text()})"

    def to_text(self, render: Callable[[A], str] = str) -> str:
        """Canonical `{outcome: p/q, ...}` text, sorted by outcome"""
        body = ", ".join(
            f"{render(outcome)}: {weight.numerator}/{weight.denominator}"
            for outcome, weight in self.sorted_items()
        )
        return "{" + body + "}"


_EMPTY: Dist = Dist.from_trusted({})


# Functional aliases

def dret(outcome: A) -> Dist[A]:
    return Dist.ret(outcome)


def dbind(dist: Dist[A], f: Callable[[A], Dist[B]]) -> Dist[B]:
    return dist.bind(f)


def uniform(bound: int) -> Dist[int]:
    return Dist.uniform(bound)


def mass(dist: Dist) -> Fraction:
    return dist.mass()


def expect(dist: Dist[A], X: Callable[[A], Weight]) -> Fraction:
    return dist.expect(X)


def prob(dist: Dist[A], predicate: Callable[[A], bool]) -> Fraction:
    return dist.prob(predicate)


def empty() -> Dist:
    return _EMPTY
