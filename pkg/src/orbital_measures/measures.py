"""Finitely supported probability measures and weak-convergence analysis."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

from .actions import ChainAction
from .spaces import CompactSpace, TestFamily, TestFunction

WEIGHT_TOLERANCE = 1e-12
DEFAULT_PRUNE_FLOOR = 1e-9

CONVERGED = "CONVERGED"
NOT_CONVERGED = "NOT_CONVERGED"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class Atom:
    point: Any
    weight: float


@dataclass(frozen=True)
class AtomicMeasure:
    """sum_i w_i delta_{p_i}; atoms are kept in the space's canonical sort order."""

    atoms: tuple[Atom, ...]
    merge_radius: float = 0.0
    space: CompactSpace | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("a probability measure needs at least one atom")
        if any(a.weight <= 0 for a in self.atoms):
            raise ValueError("atom weights must be positive")
        total = math.fsum(a.weight for a in self.atoms)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"weights sum to {total!r}, not 1")

    @classmethod
    def dirac(cls, point, space: CompactSpace | None = None) -> "AtomicMeasure":
        return cls((Atom(point, 1.0),), 0.0, space)

    @classmethod
    def from_points(
        cls,
        points: Sequence,
        weights: Sequence[float],
        space: CompactSpace,
        merge_radius: float | None = None,
    ) -> "AtomicMeasure":
        radius = space.default_merge_radius if merge_radius is None else merge_radius
        merged = space.merge(points, weights, radius)
        atoms = tuple(Atom(p, math.fsum(ws)) for p, ws in merged)
        return cls(atoms, radius, space)

    @property
    def points(self) -> list:
        return [a.point for a in self.atoms]

    @property
    def weights(self) -> list[float]:
        return [a.weight for a in self.atoms]

    def __len__(self):
        return len(self.atoms)

    def pushforward(self, fn, merge_radius: float | None = None) -> "AtomicMeasure":
        if self.space is None:
            raise ValueError("pushforward needs the measure's space")
        return AtomicMeasure.from_points(
            [fn(a.point) for a in self.atoms],
            self.weights,
            self.space,
            self.merge_radius if merge_radius is None else merge_radius,
        )

    def pruned(self, floor: float = DEFAULT_PRUNE_FLOOR) -> "AtomicMeasure":
        kept = [a for a in self.atoms if a.weight >= floor]
        total = math.fsum(a.weight for a in kept)
        return AtomicMeasure(
            tuple(Atom(a.point, a.weight / total) for a in kept), self.merge_radius, self.space
        )


def orbital_measure(
    action: ChainAction, n: int, x, merge_radius: float | None = None
) -> AtomicMeasure:
    """Pushforward of the Haar measure of K(n) under g -> g.x."""
    orbit = action.orbit(n, x)
    w = 1.0 / len(orbit)
    return AtomicMeasure.from_points(orbit, [w] * len(orbit), action.space, merge_radius)


def integrate(mu: AtomicMeasure, f: TestFunction) -> float:
    # fsum is correctly rounded, hence independent of evaluation scheduling
    return math.fsum(a.weight * f.evaluate(a.point) for a in mu.atoms)


def integrals(mu: AtomicMeasure, family: TestFamily) -> list[float]:
    return [integrate(mu, f) for f in family]


def discrepancy_from_integrals(a: Sequence[float], b: Sequence[float], family: TestFamily) -> float:
    worst = 0.0
    for f, u, v in zip(family, a, b):
        if f.sup_bound > 0:
            worst = max(worst, abs(u - v) / f.sup_bound)
    return worst


def discrepancy(mu: AtomicMeasure, nu: AtomicMeasure, family: TestFamily) -> float:
    """max_f |int f dmu - int f dnu| / sup|f| over the family."""
    return discrepancy_from_integrals(integrals(mu, family), integrals(nu, family), family)


@dataclass(frozen=True)
class ConvergenceReport:
    labels: tuple[str, ...]
    integral_table: tuple[tuple[float, ...], ...]  # [n][function]
    tail_discrepancies: tuple[float, ...]  # D_F(mu_n, mu_last) for every n
    verdict: str
    limit_representative: AtomicMeasure | None
    epsilon: float
    window: int
    family_params: dict

    def to_dict(self, encode) -> dict:
        limit = None
        if self.limit_representative is not None:
            limit = [
                {"point": encode(a.point), "weight": a.weight}
                for a in self.limit_representative.atoms
            ]
        return {
            "verdict": self.verdict,
            "epsilon": self.epsilon,
            "window": self.window,
            "family": self.family_params,
            "labels": list(self.labels),
            "integrals": [list(row) for row in self.integral_table],
            "tail_discrepancies": list(self.tail_discrepancies),
            "limit_representative": limit,
        }


def analyze_sequence(
    measures: Sequence[AtomicMeasure],
    family: TestFamily,
    epsilon: float,
    window: int,
    *,
    prune_floor: float = DEFAULT_PRUNE_FLOOR,
    workers: int = 1,
) -> ConvergenceReport:
    """Cauchy-window test of weak convergence relative to a finite family.

    CONVERGED when each of the last ``window`` measures is within ``epsilon``
    of the last one. Otherwise INCONCLUSIVE if those discrepancies strictly
    shrink towards the end of the window, else NOT_CONVERGED.
    """
    if not measures:
        raise ValueError("empty measure sequence")
    if window < 2:
        raise ValueError("window must be >= 2")
    if len(measures) < window:
        raise ValueError(f"need at least {window} measures, got {len(measures)}")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            table = list(pool.map(lambda m: integrals(m, family), measures))
    else:
        table = [integrals(m, family) for m in measures]
    last = table[-1]
    tails = [discrepancy_from_integrals(row, last, family) for row in table]
    tail_window = tails[-window:]
    if max(tail_window) <= epsilon:
        verdict = CONVERGED
    else:
        head = tail_window[:-1]
        shrinking = len(head) > 1 and all(a > b for a, b in zip(head, head[1:]))
        verdict = INCONCLUSIVE if shrinking else NOT_CONVERGED
    limit = measures[-1].pruned(prune_floor) if verdict == CONVERGED else None
    return ConvergenceReport(
        labels=tuple(f.label for f in family),
        integral_table=tuple(tuple(row) for row in table),
        tail_discrepancies=tuple(tails),
        verdict=verdict,
        limit_representative=limit,
        epsilon=epsilon,
        window=window,
        family_params=dict(family.params),
    )
