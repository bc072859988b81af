"""Increasing chains of finite groups K(1) < K(2) < ... and their Haar weights.

Only finite levels are supported. Level 0 exists internally as the trivial
group so that constructions needing K(n-1) work for n = 1, but public
helpers such as :func:`enumerate_level` only accept levels >= 1.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

DEFAULT_LEVEL_CAP = 24


class LevelError(ValueError):
    """A level index outside the range a chain (or model) can represent."""


class GroupElement:
    """An element of K(n), identified across levels through the embeddings.

    ``level`` is the level the element was declared at and ``value`` its
    integer code there. Two elements are equal when their images in a common
    level coincide.
    """

    __slots__ = ("level", "value", "chain")

    def __init__(self, level: int, value: int, chain: "GroupChain"):
        self.level = level
        self.value = value
        self.chain = chain

    def reduced(self) -> "GroupElement":
        return self.chain.reduce(self)

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        if other.chain != self.chain:
            return False
        top = max(self.level, other.level)
        return self.chain.lift(self, top).value == self.chain.lift(other, top).value

    def __hash__(self):
        r = self.chain.reduce(self)
        return hash((r.level, r.value))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return self.chain.multiply(self, other)

    def __invert__(self) -> "GroupElement":
        return self.chain.invert(self)

    def __repr__(self):
        return f"GroupElement(level={self.level}, value={self.value})"


class LevelQuadrature(abc.ABC):
    """Quadrature rule for the Haar measure of one level.

    Extension point for chains whose levels are infinite compact groups; no
    such implementation ships with this package.
    """

    @abc.abstractmethod
    def nodes_and_weights(self, n: int) -> Sequence[tuple[GroupElement, float]]:
        ...


class GroupChain(LevelQuadrature):
    """Abstract increasing chain of finite groups with injective embeddings.

    Subclasses provide the per-level group law on integer codes and the
    one-step embedding K(n) -> K(n+1). Nothing here assumes commutativity.
    """

    name = "abstract"

    def __init__(self, max_level: int):
        self.max_level = max_level

    # max_level only bounds enumeration; chains of one kind are the same group
    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self))

    # -- per-level structure, on integer codes -------------------------------

    @abc.abstractmethod
    def order(self, n: int) -> int:
        """|K(n)|; ``order(0) == 1``."""

    @abc.abstractmethod
    def _mul_codes(self, n: int, a: int, b: int) -> int: ...

    @abc.abstractmethod
    def _inv_code(self, n: int, a: int) -> int: ...

    @abc.abstractmethod
    def _embed_code(self, n: int, a: int) -> int:
        """Image in K(n+1) of the code ``a`` of K(n)."""

    @abc.abstractmethod
    def _restrict_code(self, n: int, a: int) -> int | None:
        """Preimage in K(n-1) of the code ``a`` of K(n), or None."""

    identity_code = 0

    # -- element-level API ----------------------------------------------------

    def check_level(self, n: int, *, allow_zero: bool = False) -> None:
        lo = 0 if allow_zero else 1
        if not lo <= n <= self.max_level:
            raise LevelError(f"level {n} outside [{lo}, {self.max_level}]")

    def element(self, level: int, value: int) -> GroupElement:
        self.check_level(level, allow_zero=True)
        if not 0 <= value < self.order(level):
            raise ValueError(f"code {value} invalid at level {level}")
        return GroupElement(level, value, self)

    def identity(self, level: int = 0) -> GroupElement:
        return self.element(level, self.identity_code)

    def elements(self, n: int) -> Iterator[GroupElement]:
        """All of K(n) in ascending code order (identity first)."""
        self.check_level(n, allow_zero=True)
        for code in range(self.order(n)):
            yield GroupElement(n, code, self)

    def embed(self, g: GroupElement) -> GroupElement:
        if g.level >= self.max_level:
            raise LevelError(f"cannot embed past level {self.max_level}")
        return GroupElement(g.level + 1, self._embed_code(g.level, g.value), self)

    def lift(self, g: GroupElement, level: int) -> GroupElement:
        if level < g.level:
            raise LevelError(f"cannot lift level {g.level} element down to {level}")
        code = g.value
        for n in range(g.level, level):
            code = self._embed_code(n, code)
        return GroupElement(level, code, self)

    def reduce(self, g: GroupElement) -> GroupElement:
        """Same element, declared at the smallest level containing it."""
        level, code = g.level, g.value
        while level > 0:
            lower = self._restrict_code(level, code)
            if lower is None:
                break
            level, code = level - 1, lower
        return GroupElement(level, code, self)

    def first_level(self, g: GroupElement) -> int:
        return self.reduce(g).level

    def multiply(self, a: GroupElement, b: GroupElement) -> GroupElement:
        if a.chain != self or b.chain != self:
            raise ValueError("elements belong to a different chain")
        top = max(a.level, b.level)
        x, y = self.lift(a, top), self.lift(b, top)
        return GroupElement(top, self._mul_codes(top, x.value, y.value), self)

    def invert(self, a: GroupElement) -> GroupElement:
        return GroupElement(a.level, self._inv_code(a.level, a.value), self)

    def haar_weight(self, n: int) -> Fraction:
        """Mass of each element of K(n) under the normalized Haar measure."""
        return Fraction(1, self.order(n))

    def nodes_and_weights(self, n: int):
        w = 1.0 / self.order(n)
        return [(g, w) for g in self.elements(n)]


class DyadicChain(GroupChain):
    """K(n) = Z/2^n Z with embedding k -> 2k (the Prufer 2-group chain).

    The code k at level n is the dyadic rational k / 2^n mod 1.
    """

    name = "dyadic"

    def order(self, n):
        return 1 << n

    def _mul_codes(self, n, a, b):
        return (a + b) & ((1 << n) - 1)

    def _inv_code(self, n, a):
        return (-a) & ((1 << n) - 1)

    def _embed_code(self, n, a):
        return a << 1

    def _restrict_code(self, n, a):
        return None if a & 1 else a >> 1

    def as_fraction(self, g: GroupElement) -> Fraction:
        return Fraction(g.value, 1 << g.level)

    def __repr__(self):
        return f"DyadicChain(max_level={self.max_level})"


def dyadic_chain(max_level: int, *, level_cap: int = DEFAULT_LEVEL_CAP) -> DyadicChain:
    if max_level < 1:
        raise ValueError("max_level must be >= 1")
    if max_level > level_cap:
        raise ValueError(f"max_level {max_level} exceeds cap {level_cap}")
    return DyadicChain(max_level)


def enumerate_level(chain: GroupChain, n: int) -> list[GroupElement]:
    chain.check_level(n)
    return list(chain.elements(n))


@dataclass(frozen=True)
class CosetDecomposition:
    """K(n+1) as the disjoint union of left cosets r K(n)."""

    chain: GroupChain
    level: int
    representatives: tuple[GroupElement, ...]

    def cosets(self) -> list[list[GroupElement]]:
        sub = list(self.chain.elements(self.level))
        return [
            sorted((self.chain.multiply(r, h) for h in sub), key=lambda g: g.value)
            for r in self.representatives
        ]


def coset_split(chain: GroupChain, n: int) -> CosetDecomposition:
    chain.check_level(n)
    chain.check_level(n + 1)
    sub = [chain.lift(h, n + 1).value for h in chain.elements(n)]
    covered: set[int] = set()
    reps = []
    for r in chain.elements(n + 1):
        if r.value in covered:
            continue
        reps.append(r)
        covered.update(chain._mul_codes(n + 1, r.value, h) for h in sub)
    return CosetDecomposition(chain, n, tuple(reps))
