"""Actions of chain levels on spaces, and the isometry audit."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .group_chain import DyadicChain, GroupChain, GroupElement, LevelError
from .prufer.config import PruferConfig, element_shift
from .spaces import CirclePoint, CircleSpace, CompactSpace, PruferSpace


class ChainAction:
    """(g, x) -> g.x for every level of ``chain`` acting on ``space``."""

    name = "abstract"
    is_isometric_claim = False

    def __init__(self, chain: GroupChain, space: CompactSpace):
        self.chain = chain
        self.space = space

    def apply(self, g: GroupElement, x):
        raise NotImplementedError

    def max_level(self) -> int:
        return self.chain.max_level

    def check_level(self, n: int) -> None:
        if not 0 <= n <= self.max_level():
            raise LevelError(f"level {n} outside [0, {self.max_level()}] for {self.name}")

    def orbit(self, n: int, x) -> list:
        """[g.x for g in K(n)], in ascending code order of g."""
        self.check_level(n)
        return [self.apply(g, x) for g in self.chain.elements(n)]

    def batch_orbit(self, n: int, points: Sequence, *, new_only: bool = False) -> np.ndarray | None:
        """Orbit coordinates as an array of shape (len(points), |K(n)|), if supported.

        With ``new_only`` only g in K(n) \\ K(n-1) are included.
        """
        return None

    def adversarial_pairs(self) -> list[tuple[Any, Any]]:
        return []

    def describe(self) -> dict:
        return {
            "name": self.name,
            "chain": self.chain.name,
            "space": self.space.name,
            "is_isometric_claim": self.is_isometric_claim,
        }


class DyadicRotation(ChainAction):
    """Code k at level n rotates the circle by k / 2^n."""

    name = "dyadic_rotation"
    is_isometric_claim = True

    def apply(self, g: GroupElement, x: CirclePoint) -> CirclePoint:
        return CirclePoint(x.t + math.ldexp(g.value, -g.level))

    def orbit(self, n, x):
        self.check_level(n)
        step = math.ldexp(1.0, -n)
        return [CirclePoint(x.t + k * step) for k in range(1 << n)]

    def batch_orbit(self, n, points, *, new_only=False):
        self.check_level(n)
        t = np.array([p.t for p in points], dtype=float)
        codes = np.arange(1, 1 << n, 2) if new_only and n > 0 else np.arange(1 << n)
        shifts = codes.astype(float) * math.ldexp(1.0, -n)
        return np.mod(t[:, None] + shifts[None, :], 1.0)


class PruferTranslation(ChainAction):
    """(g.x)(h) = x(h - g) on the level-M truncation."""

    name = "prufer_translation"
    is_isometric_claim = False

    def __init__(self, chain: GroupChain, M: int):
        super().__init__(chain, PruferSpace(M))
        self.truncation_level = M

    def max_level(self):
        return min(self.chain.max_level, self.truncation_level)

    def apply(self, g: GroupElement, x: PruferConfig) -> PruferConfig:
        if x.truncation_level != self.truncation_level:
            raise ValueError("configuration truncation does not match the action")
        return x.translate(element_shift(g, self.chain, self.truncation_level))

    def orbit(self, n, x):
        self.check_level(n)
        step = 1 << (self.truncation_level - n)
        return [x.translate(k * step) for k in range(1 << n)]

    def adversarial_pairs(self, depth: int = 4):
        """Indicators of single coordinates of K(depth) against 0-bar, ordered by first level."""
        M = self.truncation_level
        depth = min(depth, M)
        zero = PruferConfig.constant(0, M)
        coords = sorted(
            (self.chain.reduce(g) for g in self.chain.elements(depth)),
            key=lambda r: (r.level, r.value),
        )
        return [
            (PruferConfig.indicator([r.value << (M - r.level)], M), zero) for r in coords
        ]

    def describe(self):
        return {**super().describe(), "truncation_level": self.truncation_level}


def dyadic_rotation_action(chain: GroupChain, space: CircleSpace | None = None) -> DyadicRotation:
    if not isinstance(chain, DyadicChain):
        raise TypeError("dyadic rotations need the dyadic chain")
    return DyadicRotation(chain, space or CircleSpace())


def prufer_translation_action(chain: GroupChain, truncation_level: int) -> PruferTranslation:
    if not isinstance(chain, DyadicChain):
        raise TypeError("Prufer translations need the dyadic chain")
    if truncation_level < 1:
        raise ValueError("truncation level must be >= 1")
    return PruferTranslation(chain, truncation_level)


@dataclass(frozen=True)
class IsometryWitness:
    g: GroupElement
    y: Any
    z: Any
    distance_before: float
    distance_after: float
    pair_index: int

    def to_dict(self, encode) -> dict:
        return {
            "g": {"level": self.g.level, "code": self.g.value},
            "y": encode(self.y),
            "z": encode(self.z),
            "distance_before": self.distance_before,
            "distance_after": self.distance_after,
            "pair_index": self.pair_index,
        }


@dataclass(frozen=True)
class IsometryAuditReport:
    verdict: str  # "PASS" | "FAIL"
    witness: IsometryWitness | None
    samples_checked: int
    tolerance: float
    max_level: int
    adversarial_pairs: int
    random_pairs: int

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_dict(self, encode) -> dict:
        return {
            "verdict": self.verdict,
            "witness": None if self.witness is None else self.witness.to_dict(encode),
            "samples_checked": self.samples_checked,
            "tolerance": self.tolerance,
            "max_level": self.max_level,
            "adversarial_pairs": self.adversarial_pairs,
            "random_pairs": self.random_pairs,
        }


def audit_isometry(
    action: ChainAction,
    space: CompactSpace | None = None,
    max_level: int = 4,
    sample_pairs: int = 64,
    tolerance: float = 1e-12,
    seed: int = 0,
    *,
    workers: int = 1,
) -> IsometryAuditReport:
    """Check |d(g.y, g.z) - d(y, z)| <= tolerance for all g in K(max_level).

    Pairs are the action's deterministic adversarial battery followed by
    ``sample_pairs`` seeded random pairs. Group elements are scanned in
    (first level, code) order and the first failing (g, pair) is the witness,
    whatever the worker count.
    """
    space = space or action.space
    action.check_level(max_level)
    battery = action.adversarial_pairs()
    rng = np.random.default_rng(seed)
    ys = space.sample(rng, sample_pairs)
    zs = space.sample(rng, sample_pairs)
    pairs = battery + list(zip(ys, zs))
    before = [space.distance(y, z) for y, z in pairs]
    chain = action.chain
    group = sorted(
        (chain.reduce(g) for g in chain.elements(max_level)),
        key=lambda r: (r.level, r.value),
    )

    def first_violation(g):
        for i, (y, z) in enumerate(pairs):
            after = space.distance(action.apply(g, y), action.apply(g, z))
            if abs(after - before[i]) > tolerance:
                return i, after
        return None

    witness = None
    checked = len(group) * len(pairs)
    chunk = max(1, workers)
    with ThreadPoolExecutor(max_workers=chunk) as pool:
        for start in range(0, len(group), chunk):
            block = group[start : start + chunk]
            results = list(pool.map(first_violation, block)) if chunk > 1 else [first_violation(block[0])]
            for offset, res in enumerate(results):
                if res is not None:
                    i, after = res
                    g = block[offset]
                    y, z = pairs[i]
                    witness = IsometryWitness(g, y, z, before[i], after, i)
                    checked = (start + offset) * len(pairs) + i + 1
                    break
            if witness is not None:
                break
    return IsometryAuditReport(
        verdict="PASS" if witness is None else "FAIL",
        witness=witness,
        samples_checked=checked,
        tolerance=tolerance,
        max_level=max_level,
        adversarial_pairs=len(battery),
        random_pairs=sample_pairs,
    )
