"""Configurations {0,1}^K(M) over a level-M truncation of the Prufer 2-group.

Bit ``j`` of a configuration is its value at the group element j / 2^M, so
K(n) inside K(M) is the set of indices divisible by 2^(M-n).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from ..group_chain import DEFAULT_LEVEL_CAP, GroupChain, GroupElement, LevelError


@dataclass(frozen=True, eq=False)
class PruferConfig:
    truncation_level: int
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        M = self.truncation_level
        if not 0 <= M <= DEFAULT_LEVEL_CAP:
            raise ValueError(f"truncation level {M} outside [0, {DEFAULT_LEVEL_CAP}]")
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.shape != (1 << M,):
            raise ValueError(f"expected {1 << M} bits, got shape {bits.shape}")
        if bits.max(initial=0) > 1:
            raise ValueError("configuration values must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def constant(cls, value: int, M: int) -> "PruferConfig":
        return cls(M, np.full(1 << M, value, dtype=np.uint8))

    @classmethod
    def indicator(cls, indices: Iterable[int], M: int) -> "PruferConfig":
        bits = np.zeros(1 << M, dtype=np.uint8)
        bits[list(indices)] = 1
        return cls(M, bits)

    def complement(self) -> "PruferConfig":
        return PruferConfig(self.truncation_level, 1 - self.bits)

    def index_of(self, level: int, code: int) -> int:
        if level > self.truncation_level:
            raise LevelError(
                f"element at level {level} not in truncation K({self.truncation_level})"
            )
        return code << (self.truncation_level - level)

    def at(self, level: int, code: int) -> int:
        return int(self.bits[self.index_of(level, code)])

    def restrict(self, n: int) -> np.ndarray:
        """Values on K(n), indexed by the level-n code."""
        if not 0 <= n <= self.truncation_level:
            raise LevelError(f"cannot restrict to K({n})")
        return self.bits[:: 1 << (self.truncation_level - n)]

    def translate(self, shift: int) -> "PruferConfig":
        """(g.x)(h) = x(h - g) for g of level-M code ``shift``."""
        return PruferConfig(self.truncation_level, np.roll(self.bits, shift))

    def key(self) -> bytes:
        return self.bits.tobytes()

    def __eq__(self, other):
        if not isinstance(other, PruferConfig):
            return NotImplemented
        return (
            self.truncation_level == other.truncation_level
            and np.array_equal(self.bits, other.bits)
        )

    def __hash__(self):
        return hash((self.truncation_level, self.key()))

    def __repr__(self):
        head = "".join(map(str, self.bits[:16]))
        more = "..." if len(self.bits) > 16 else ""
        return f"PruferConfig(M={self.truncation_level}, bits={head}{more})"


def zero_config(M: int) -> PruferConfig:
    return PruferConfig.constant(0, M)


def one_config(M: int) -> PruferConfig:
    return PruferConfig.constant(1, M)


def mismatch_counts(x: PruferConfig, y: PruferConfig) -> list[int]:
    """|{g in K(n): x(g) != y(g)}| for n = 1..M."""
    if x.truncation_level != y.truncation_level:
        raise ValueError(
            f"truncation levels differ: {x.truncation_level} vs {y.truncation_level}"
        )
    M = x.truncation_level
    diff = x.bits != y.bits
    return [int(np.count_nonzero(diff[:: 1 << (M - n)])) for n in range(1, M + 1)]


def prufer_metric_exact(x: PruferConfig, y: PruferConfig) -> Fraction:
    counts = mismatch_counts(x, y)
    M = x.truncation_level
    numerator = sum(c << (2 * (M - n)) for n, c in enumerate(counts, start=1))
    return Fraction(numerator, 1 << (2 * M))


def prufer_metric(x: PruferConfig, y: PruferConfig) -> float:
    """sum_{n=1..M} 4^-n |{g in K(n): x(g) != y(g)}|.

    Computed as an integer over 4^M, so the float result is exact for M <= 24.
    Truncation error against the full space is at most 2^-M.
    """
    counts = mismatch_counts(x, y)
    M = x.truncation_level
    numerator = sum(c << (2 * (M - n)) for n, c in enumerate(counts, start=1))
    return numerator / float(1 << (2 * M))


def metric_tail_bound(M: int) -> float:
    return 2.0 ** -M


def prufer_point(n: int, M: int, *, coset_code: int = 1) -> PruferConfig:
    """The configuration x_n, materialized on K(M).

    On K(n) it is the indicator of K(n-1). Each further level m -> m+1 fills
    the nontrivial K(m)-coset g_m + K(m) by translating the values on K(m),
    where g_m has odd code ``coset_code`` at level m+1 (default: 1/2^(m+1)).
    """
    if not 1 <= n:
        raise ValueError("n must be >= 1")
    if n > M:
        raise LevelError(f"x_{n} needs truncation level >= {n}, got {M}")
    if coset_code % 2 == 0:
        raise ValueError("coset representative must lie outside K(m), i.e. odd code")
    vals = np.zeros(1 << n, dtype=np.uint8)
    vals[::2] = 1
    for m in range(n, M):
        size = 1 << (m + 1)
        nxt = np.empty(size, dtype=np.uint8)
        nxt[::2] = vals
        r = coset_code % size
        odd = np.arange(1, size, 2)
        # x(h) = x(h - g_m) on the coset; h - g_m is even, i.e. in K(m)
        nxt[odd] = vals[((odd - r) % size) >> 1]
        vals = nxt
    return PruferConfig(M, vals)


def element_shift(g: GroupElement, chain: GroupChain, M: int) -> int:
    """Index shift on K(M) realizing translation by ``g``."""
    r = chain.reduce(g)
    if r.level > M:
        raise LevelError(
            f"element of level {r.level} cannot act on truncation level {M}"
        )
    return r.value << (M - r.level)


@dataclass(frozen=True)
class TwoPointOrbitReport:
    n: int
    truncation_level: int
    coset_code: int
    to_self: tuple[int, ...]  # level-n codes g with g.x_n == x_n
    to_complement: tuple[int, ...]  # ... with g.x_n == 1 - x_n
    other: tuple[int, ...]

    @property
    def holds(self) -> bool:
        return not self.other

    @property
    def both_attained(self) -> bool:
        return bool(self.to_self) and bool(self.to_complement)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "truncation_level": self.truncation_level,
            "coset_code": self.coset_code,
            "to_self": list(self.to_self),
            "to_complement": list(self.to_complement),
            "other": list(self.other),
            "holds": self.holds,
            "both_attained": self.both_attained,
        }


def verify_two_point_orbit(n: int, M: int, *, coset_code: int = 1) -> TwoPointOrbitReport:
    """Translate x_n by every element of K(n) and sort results into x_n / 1 - x_n / other."""
    x = prufer_point(n, M, coset_code=coset_code)
    xc = x.complement()
    same, comp, other = [], [], []
    for k in range(1 << n):
        y = x.translate(k << (M - n))
        if y == x:
            same.append(k)
        elif y == xc:
            comp.append(k)
        else:
            other.append(k)
    return TwoPointOrbitReport(n, M, coset_code, tuple(same), tuple(comp), tuple(other))
