"""Compact metric spaces and graded families of test functions on them."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from .prufer.config import PruferConfig, prufer_metric

DEFAULT_FAMILY_CAP = 5000

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, slots=True)
class CirclePoint:
    """A point of R/Z, stored as its representative in [0, 1)."""

    t: float

    def __post_init__(self):
        t = float(self.t) % 1.0
        # -tiny % 1.0 rounds to 1.0
        if t == 1.0:
            t = 0.0
        object.__setattr__(self, "t", t)


SpacePoint = CirclePoint | PruferConfig


# Trig evaluation with exact symmetric argument reduction: for dyadic inputs
# the reductions below are exact, so e.g. cos2pi(1/4) == 0.0 and
# cos2pi(u + 1/2) == -cos2pi(u) bit for bit. The array versions attached to
# test functions use plain numpy trig and may differ in the last ulp.

def cos2pi(u: float) -> float:
    u = u % 1.0
    if u > 0.5:
        u = 1.0 - u
    sign = 1.0
    if u > 0.25:
        sign, u = -1.0, 0.5 - u
    if u > 0.125:
        return sign * math.sin(_TWO_PI * (0.25 - u))
    return sign * math.cos(_TWO_PI * u)


def sin2pi(u: float) -> float:
    u = u % 1.0
    sign = 1.0
    if u >= 0.5:
        sign, u = -1.0, u - 0.5
    if u > 0.25:
        u = 0.5 - u
    if u > 0.125:
        return sign * math.cos(_TWO_PI * (0.25 - u))
    return sign * math.sin(_TWO_PI * u)


class CompactSpace:
    """A compact metric space with the hooks the measure layer needs."""

    name = "abstract"
    diameter_bound: float
    truncation_error_bound: float = 0.0
    default_merge_radius: float = 0.0

    def distance(self, x, y) -> float:
        raise NotImplementedError

    def key(self, x) -> Any:
        """Hashable key; equal keys imply equal (or merge-identified) points."""
        raise NotImplementedError

    def sort_key(self, x) -> Any:
        return self.key(x)

    def sample(self, rng: np.random.Generator, count: int) -> list:
        raise NotImplementedError

    def contains(self, x) -> bool:
        raise NotImplementedError

    def sample_pairs(self, rng: np.random.Generator, count: int) -> tuple[list, list]:
        return self.sample(rng, count), self.sample(rng, count)

    def merge(self, points: Sequence, weights: Sequence[float], radius: float):
        """Identify points within ``radius``; return [(point, [weights])] in sort order.

        The representative of a merged atom is its first point in input order.
        Generic O(k^2) greedy pass; subclasses override with faster sweeps.
        """
        atoms: list[tuple[Any, list[float]]] = []
        if radius == 0:
            index: dict = {}
            for p, w in zip(points, weights):
                k = self.key(p)
                if k in index:
                    index[k][1].append(w)
                else:
                    index[k] = (p, [w])
                    atoms.append(index[k])
        else:
            for p, w in zip(points, weights):
                for q, ws in atoms:
                    if self.distance(p, q) <= radius:
                        ws.append(w)
                        break
                else:
                    atoms.append((p, [w]))
        return sorted(atoms, key=lambda a: self.sort_key(a[0]))

    def describe(self) -> dict:
        return {
            "name": self.name,
            "diameter_bound": self.diameter_bound,
            "truncation_error_bound": self.truncation_error_bound,
        }


class CircleSpace(CompactSpace):
    """R/Z with the angular metric min(|s-t|, 1-|s-t|)."""

    name = "circle"
    diameter_bound = 0.5
    truncation_error_bound = 0.0
    default_merge_radius = 1e-12
    _KEY_SCALE = float(1 << 40)

    def distance(self, x: CirclePoint, y: CirclePoint) -> float:
        d = abs(x.t - y.t)
        return min(d, 1.0 - d)

    def key(self, x: CirclePoint) -> int:
        return int(round(x.t * self._KEY_SCALE)) % (1 << 40)

    def sort_key(self, x: CirclePoint) -> float:
        return x.t

    def sample(self, rng, count):
        return [CirclePoint(t) for t in rng.random(count)]

    def contains(self, x) -> bool:
        return isinstance(x, CirclePoint)

    def sample_pairs(self, rng, count):
        """Half independent pairs, half close pairs at log-uniform separations."""
        far = count // 2
        ys = rng.random(count)
        zs = rng.random(count)
        offsets = 10.0 ** rng.uniform(-8.0, -0.5, count - far)
        signs = np.where(rng.random(count - far) < 0.5, -1.0, 1.0)
        zs[far:] = ys[far:] + signs * offsets
        return [CirclePoint(t) for t in ys], [CirclePoint(t) for t in zs]

    def merge(self, points, weights, radius):
        if radius == 0:
            return super().merge(points, weights, 0)
        order = sorted(range(len(points)), key=lambda i: (points[i].t, i))
        atoms: list[tuple[CirclePoint, list[float], int]] = []
        for i in order:
            p = points[i]
            if atoms and self.distance(p, atoms[-1][0]) <= radius:
                atoms[-1][1].append(weights[i])
            else:
                atoms.append((p, [weights[i]], i))
        if len(atoms) > 1 and self.distance(atoms[0][0], atoms[-1][0]) <= radius:
            p, ws, _ = atoms.pop()
            atoms[0] = (atoms[0][0], atoms[0][1] + ws, atoms[0][2])
        return [(p, ws) for p, ws, _ in atoms]


class PruferSpace(CompactSpace):
    """{0,1}^K(M) with the level-weighted mismatch metric, truncated at M."""

    name = "prufer"
    default_merge_radius = 0.0

    def __init__(self, M: int):
        self.truncation_level = M
        self.diameter_bound = 1.0
        self.truncation_error_bound = 2.0 ** -M

    def distance(self, x: PruferConfig, y: PruferConfig) -> float:
        return prufer_metric(x, y)

    def key(self, x: PruferConfig) -> bytes:
        return x.key()

    def sample(self, rng, count):
        size = 1 << self.truncation_level
        return [
            PruferConfig(self.truncation_level, rng.integers(0, 2, size, dtype=np.uint8))
            for _ in range(count)
        ]

    def contains(self, x) -> bool:
        return isinstance(x, PruferConfig) and x.truncation_level == self.truncation_level

    def sample_pairs(self, rng, count):
        """Half independent pairs; half pairs agreeing on a random K(L), with
        the rest of y all ones and the rest of z all zeros (d(y, z) ~ 2^-L)."""
        M = self.truncation_level
        far = count // 2
        ys, zs = self.sample(rng, far), self.sample(rng, far)
        size = 1 << M
        for _ in range(count - far):
            L = int(rng.integers(0, M))
            inner = np.zeros(size, dtype=bool)
            inner[:: 1 << (M - L)] = True
            bits = rng.integers(0, 2, size, dtype=np.uint8)
            ys.append(PruferConfig(M, np.where(inner, bits, 1)))
            zs.append(PruferConfig(M, np.where(inner, bits, 0)))
        return ys, zs

    def describe(self):
        return {**super().describe(), "truncation_level": self.truncation_level}


def encode_point(x) -> dict:
    """JSON-ready form of a point."""
    if isinstance(x, CirclePoint):
        return {"circle": x.t}
    if isinstance(x, PruferConfig):
        return {
            "prufer": {
                "truncation_level": x.truncation_level,
                "bits_hex": np.packbits(x.bits).tobytes().hex(),
                "ones": int(np.count_nonzero(x.bits)),
            }
        }
    raise TypeError(f"cannot encode {type(x).__name__}")


def circle_space() -> CircleSpace:
    return CircleSpace()


def prufer_space(M: int) -> PruferSpace:
    return PruferSpace(M)


@dataclass(frozen=True)
class TestFunction:
    label: str
    evaluate: Callable[[Any], float] = field(repr=False)
    sup_bound: float
    lipschitz_bound: float
    # array-in / array-out version, used for batched circle evaluations
    vectorized: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    __test__ = False

    def __call__(self, x) -> float:
        return self.evaluate(x)


@dataclass(frozen=True)
class TestFamily:
    functions: tuple[TestFunction, ...]
    params: dict = field(default_factory=dict)

    __test__ = False

    def __iter__(self) -> Iterator[TestFunction]:
        return iter(self.functions)

    def __len__(self):
        return len(self.functions)

    def __getitem__(self, i):
        return self.functions[i]

    def by_label(self, label: str) -> TestFunction:
        for f in self.functions:
            if f.label == label:
                return f
        raise KeyError(label)


def constant_function(c: float = 1.0) -> TestFunction:
    return TestFunction(
        label="1" if c == 1.0 else f"const({c!r})",
        evaluate=lambda x: c,
        sup_bound=abs(c),
        lipschitz_bound=0.0,
        vectorized=lambda t: np.full(np.shape(t), c),
    )


def trig_function(kind: str, k: int) -> TestFunction:
    if kind == "cos":
        scalar, vec = cos2pi, np.cos
    elif kind == "sin":
        scalar, vec = sin2pi, np.sin
    else:
        raise ValueError(f"unknown trig kind {kind!r}")
    return TestFunction(
        label=f"{kind}(2pi*{k}t)",
        evaluate=lambda x: scalar(k * x.t),
        sup_bound=1.0,
        lipschitz_bound=_TWO_PI * k,
        vectorized=lambda t: vec(_TWO_PI * k * t),
    )


def circle_test_family(max_frequency: int) -> TestFamily:
    """Constant 1 plus cos(2 pi k t), sin(2 pi k t) for 1 <= k <= max_frequency."""
    if max_frequency < 1:
        raise ValueError("max_frequency must be >= 1")
    funcs = [constant_function(1.0)]
    for k in range(1, max_frequency + 1):
        funcs.append(trig_function("cos", k))
        funcs.append(trig_function("sin", k))
    return TestFamily(tuple(funcs), {"kind": "trigonometric", "max_frequency": max_frequency})


def _coordinate_label(code: int, level: int) -> str:
    if code == 0:
        return "x(e)"
    q = Fraction(code, 1 << level)
    return f"x({q.numerator}/{q.denominator})"


def coordinate_weight(first_level: int, space_truncation: int | None) -> float:
    """Metric contribution of flipping one coordinate first seen in K(first_level)."""
    n = max(first_level, 1)
    if space_truncation is None:
        return 4.0 ** -n * 4.0 / 3.0
    return math.fsum(4.0 ** -m for m in range(n, space_truncation + 1))


def cylinder_function(
    coords: Sequence[int], level: int, space_truncation: int | None = None
) -> TestFunction:
    """x -> prod_{g in coords} x(g), coordinates given as level-``level`` codes."""
    coords = tuple(sorted(coords))
    firsts = []
    for c in coords:
        n = level
        while n > 0 and c % 2 == 0 and c:
            c //= 2
            n -= 1
        firsts.append(0 if c == 0 else n)
    weight = min(coordinate_weight(n, space_truncation) for n in firsts)

    def evaluate(x: PruferConfig) -> float:
        for c in coords:
            if not x.at(level, c):
                return 0.0
        return 1.0

    label = "*".join(_coordinate_label(c, level) for c in coords)
    return TestFunction(label=label, evaluate=evaluate, sup_bound=1.0, lipschitz_bound=1.0 / weight)


def cylinder_test_family(
    truncation_level: int,
    max_coordinates: int,
    *,
    space_truncation: int | None = None,
    max_size: int = DEFAULT_FAMILY_CAP,
) -> TestFamily:
    """Constant 1 plus products of at most ``max_coordinates`` coordinates of K(truncation_level).

    Lipschitz bounds use the exact coordinate weights of the level-``space_truncation``
    metric when given (the full-space weights otherwise).
    """
    if truncation_level < 1 or max_coordinates < 1:
        raise ValueError("truncation_level and max_coordinates must be >= 1")
    if space_truncation is not None and space_truncation < truncation_level:
        raise ValueError("space truncation must be >= the family's truncation level")
    size = 1 << truncation_level
    count = 1 + sum(math.comb(size, r) for r in range(1, min(max_coordinates, size) + 1))
    if count > max_size:
        raise ValueError(f"cylinder family would have {count} functions (cap {max_size})")
    funcs = [constant_function(1.0)]
    for r in range(1, max_coordinates + 1):
        for coords in itertools.combinations(range(size), r):
            funcs.append(cylinder_function(coords, truncation_level, space_truncation))
    return TestFamily(
        tuple(funcs),
        {
            "kind": "cylinder",
            "truncation_level": truncation_level,
            "max_coordinates": max_coordinates,
            "space_truncation": space_truncation,
        },
    )
