"""The averaging operators A_n f(x) = int_{K(n)} f(g.x) dm_n(g) and what is built on them."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .actions import ChainAction, IsometryAuditReport, audit_isometry
from .measures import (
    CONVERGED,
    INCONCLUSIVE,
    NOT_CONVERGED,
    AtomicMeasure,
    integrate,
    orbital_measure,
)
from .spaces import CompactSpace, TestFamily, TestFunction

LIPSCHITZ_SLACK = 1e-10

ERGODIC_CONSISTENT = "ERGODIC_CONSISTENT"
NON_ERGODIC = "NON_ERGODIC"


class HypothesisError(RuntimeError):
    """A certified check was requested but its hypothesis (isometric action) fails."""


def average(action: ChainAction, n: int, f: TestFunction, x) -> float:
    """(1/|K(n)|) sum_{g in K(n)} f(g.x), correctly rounded sum."""
    orbit = action.orbit(n, x)
    return math.fsum(f.evaluate(y) for y in orbit) / len(orbit)


def level_averages(
    action: ChainAction,
    functions: Sequence[TestFunction],
    points: Sequence,
    N: int,
    *,
    chunk: int = 512,
) -> np.ndarray:
    """A_n f(x) for every f, n = 1..N and x, as an array of shape (F, N, P).

    When the action exposes batched orbits and every f is vectorized, level
    sums are accumulated by doubling (the sum over K(n) is the sum over
    K(n-1) plus the sum over K(n) minus K(n-1)) with numpy's pairwise
    summation; results can then differ from :func:`average` by a few ulps.
    """
    out = np.empty((len(functions), N, len(points)))
    batched = all(f.vectorized is not None for f in functions) and action.batch_orbit(0, points[:1]) is not None
    if not batched:
        for i, f in enumerate(functions):
            for n in range(1, N + 1):
                out[i, n - 1] = [average(action, n, f, x) for x in points]
        return out
    for start in range(0, len(points), chunk):
        block = points[start : start + chunk]
        base = action.batch_orbit(0, block)[:, 0]
        sums = [f.vectorized(base) for f in functions]
        for n in range(1, N + 1):
            fresh = action.batch_orbit(n, block, new_only=True)
            for i, f in enumerate(functions):
                sums[i] = sums[i] + f.vectorized(fresh).sum(axis=1)
                out[i, n - 1, start : start + len(block)] = sums[i] / float(1 << n)
    return out


class OrbitalMeasureCache:
    """Memoizes mu_n^x, sharing one measure across its whole support.

    Since mu_n^y = mu_n^x for every y in K(n).x, a computed measure is filed
    under the key of each of its atoms. A miss only costs a recomputation.
    """

    def __init__(self, action: ChainAction):
        self.action = action
        self._measures: dict[tuple[int, Any], AtomicMeasure] = {}
        self._integrals: dict[tuple[int, str], float] = {}

    def measure(self, n: int, x) -> AtomicMeasure:
        key = self.action.space.key
        hit = self._measures.get((n, key(x)))
        if hit is not None:
            return hit
        mu = orbital_measure(self.action, n, x)
        for a in mu.atoms:
            self._measures.setdefault((n, key(a.point)), mu)
        self._measures.setdefault((n, key(x)), mu)
        return mu

    def integral(self, mu: AtomicMeasure, f: TestFunction) -> float:
        k = (id(mu), f.label)
        val = self._integrals.get(k)
        if val is None:
            val = self._integrals[k] = integrate(mu, f)
        return val

    def average(self, n: int, f: TestFunction, x) -> float:
        return self.integral(self.measure(n, x), f)


def cauchy_verdict(values: Sequence[float], epsilon: float, window: int) -> str:
    tail = values[-window:]
    if max(tail) - min(tail) <= epsilon:
        return CONVERGED
    steps = [abs(b - a) for a, b in zip(tail, tail[1:])]
    if len(steps) > 1 and all(a > b for a, b in zip(steps, steps[1:])):
        return INCONCLUSIVE
    return NOT_CONVERGED


@dataclass(frozen=True)
class AverageTrace:
    label: str
    point: Any
    values: tuple[float, ...]  # A_n f(x) for n = 1..N
    cauchy_verdict: str
    limit_estimate: float | None
    epsilon: float
    window: int

    @property
    def converged(self) -> bool:
        return self.cauchy_verdict == CONVERGED

    def to_dict(self, encode) -> dict:
        return {
            "label": self.label,
            "point": encode(self.point),
            "values": list(self.values),
            "verdict": self.cauchy_verdict,
            "limit_estimate": self.limit_estimate,
        }


def _make_trace(label, x, values, epsilon, window) -> AverageTrace:
    verdict = cauchy_verdict(values, epsilon, window)
    return AverageTrace(
        label, x, tuple(values), verdict,
        values[-1] if verdict == CONVERGED else None, epsilon, window,
    )


def trace(
    action: ChainAction,
    f: TestFunction,
    x,
    N: int,
    epsilon: float = 1e-6,
    window: int = 3,
    *,
    cache: OrbitalMeasureCache | None = None,
) -> AverageTrace:
    """(A_n f(x))_{n=1..N} with a Cauchy-window convergence verdict."""
    if window < 2 or N < window:
        raise ValueError(f"need N >= window >= 2, got N={N}, window={window}")
    if cache is None:
        values = [average(action, n, f, x) for n in range(1, N + 1)]
    else:
        values = [cache.average(n, f, x) for n in range(1, N + 1)]
    return _make_trace(f.label, x, values, epsilon, window)


def _require_isometric(action, audit, diagnostic, what) -> IsometryAuditReport | None:
    if audit is None and not diagnostic:
        audit = audit_isometry(action, max_level=min(action.max_level(), 8), sample_pairs=16)
    if audit is not None and not audit.passed and not diagnostic:
        raise HypothesisError(
            f"{what} requires an isometric action; the audit of {action.name} failed"
        )
    return audit


@dataclass(frozen=True)
class EquicontinuityReport:
    label: str
    lipschitz_bound: float
    max_level: int
    pairs_checked: int
    max_ratio: float
    violations: int
    first_violation: dict | None
    mode: str  # "certified" | "diagnostic"

    @property
    def holds(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "lipschitz_bound": self.lipschitz_bound,
            "max_level": self.max_level,
            "pairs_checked": self.pairs_checked,
            "max_ratio": self.max_ratio,
            "violations": self.violations,
            "first_violation": self.first_violation,
            "mode": self.mode,
        }


def equicontinuity_check(
    action: ChainAction,
    f: TestFunction | Sequence[TestFunction],
    N: int,
    pair_samples: int,
    seed: int,
    *,
    space: CompactSpace | None = None,
    audit: IsometryAuditReport | None = None,
    diagnostic: bool = False,
    slack: float = LIPSCHITZ_SLACK,
):
    """sup_{n<=N} |A_n f(y) - A_n f(z)| <= Lip(f) d(y, z) + slack on seeded pairs.

    Refuses (HypothesisError) unless the action passes the isometry audit,
    except in diagnostic mode, where violations are counted and reported.
    Given a sequence of functions, all share the same pairs and a list of
    reports is returned.
    """
    single = isinstance(f, TestFunction)
    functions = [f] if single else list(f)
    space = space or action.space
    audit = _require_isometric(action, audit, diagnostic, "equicontinuity certification")
    mode = "certified" if audit is not None and audit.passed else "diagnostic"
    rng = np.random.default_rng(seed)
    ys, zs = space.sample_pairs(rng, pair_samples)
    dist = np.array([space.distance(y, z) for y, z in zip(ys, zs)])
    gaps = np.abs(level_averages(action, functions, ys, N) - level_averages(action, functions, zs, N))
    reports = []
    for i, fn in enumerate(functions):
        bound = fn.lipschitz_bound * dist + slack
        bad = gaps[i] > bound[None, :]  # (N, P)
        first = None
        if bad.any():
            n_idx, p_idx = map(int, np.argwhere(bad)[0])
            first = {
                "level": n_idx + 1,
                "pair_index": p_idx,
                "gap": float(gaps[i, n_idx, p_idx]),
                "bound": float(bound[p_idx]),
            }
        worst = gaps[i].max(axis=0)
        ratios = np.divide(worst, dist, out=np.zeros_like(worst), where=dist > 0)
        reports.append(
            EquicontinuityReport(
                label=fn.label,
                lipschitz_bound=fn.lipschitz_bound,
                max_level=N,
                pairs_checked=len(ys),
                max_ratio=float(ratios.max(initial=0.0)),
                violations=int(bad.any(axis=0).sum()),
                first_violation=first,
                mode=mode,
            )
        )
    return reports[0] if single else reports


@dataclass(frozen=True)
class UniformityReport:
    label: str
    points: int
    sup_deviation: tuple[float, ...]  # sup_x |A_n f(x) - limit(x)| per n
    tail_sup_deviation: float
    limits: tuple[float, ...]
    limit_spread: float
    limits_disagree: bool
    epsilon: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "points": self.points,
            "sup_deviation": list(self.sup_deviation),
            "tail_sup_deviation": self.tail_sup_deviation,
            "limits": list(self.limits),
            "limit_spread": self.limit_spread,
            "limits_disagree": self.limits_disagree,
        }


def uniformity_diagnostic(traces: Sequence[AverageTrace], epsilon: float | None = None) -> UniformityReport:
    """Joint decay of |A_n f(x) - lim A_n f(x)| over a finite sample of points.

    Raises when pointwise limits differ by more than epsilon: on an orbit
    closure of an isometric action they must agree.
    """
    if not traces:
        raise ValueError("no traces")
    if not all(t.converged for t in traces):
        raise ValueError("uniformity diagnostic needs every trace CONVERGED")
    labels = {t.label for t in traces}
    if len(labels) != 1:
        raise ValueError(f"traces mix functions: {sorted(labels)}")
    eps = traces[0].epsilon if epsilon is None else epsilon
    N = min(len(t.values) for t in traces)
    sup_dev = tuple(
        max(abs(t.values[n] - t.limit_estimate) for t in traces) for n in range(N)
    )
    limits = tuple(t.limit_estimate for t in traces)
    spread = max(limits) - min(limits)
    window = traces[0].window
    return UniformityReport(
        label=traces[0].label,
        points=len(traces),
        sup_deviation=sup_dev,
        tail_sup_deviation=max(sup_dev[-window:]),
        limits=limits,
        limit_spread=spread,
        limits_disagree=spread > eps,
        epsilon=eps,
    )


@dataclass(frozen=True)
class MovingBasepointReport:
    label: str
    distances: tuple[float, ...]  # d(x_n, x_0)
    gaps: tuple[float, ...]  # |A_n f(x_n) - A_n f(x_0)|
    bounds: tuple[float, ...]
    moving_values: tuple[float, ...]
    fixed_values: tuple[float, ...]
    gaps_within_bounds: bool
    moving_verdict: str
    fixed_verdict: str
    limit_gap: float | None
    shared_limit: bool
    mode: str

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "distances": list(self.distances),
            "gaps": list(self.gaps),
            "bounds": list(self.bounds),
            "moving_values": list(self.moving_values),
            "fixed_values": list(self.fixed_values),
            "gaps_within_bounds": self.gaps_within_bounds,
            "moving_verdict": self.moving_verdict,
            "fixed_verdict": self.fixed_verdict,
            "limit_gap": self.limit_gap,
            "shared_limit": self.shared_limit,
            "mode": self.mode,
        }


def moving_basepoint_compare(
    action: ChainAction,
    f: TestFunction,
    basepoints: Sequence,
    x0,
    *,
    epsilon: float = 1e-6,
    window: int = 3,
    audit: IsometryAuditReport | None = None,
    diagnostic: bool = False,
    slack: float = LIPSCHITZ_SLACK,
) -> MovingBasepointReport:
    """Compare A_n f(x_n) with A_n f(x_0) where ``basepoints[n-1]`` is x_n."""
    audit = _require_isometric(action, audit, diagnostic, "moving-basepoint certification")
    mode = "certified" if audit is not None and audit.passed else "diagnostic"
    space = action.space
    N = len(basepoints)
    moving = [average(action, n, f, x) for n, x in enumerate(basepoints, start=1)]
    fixed = [average(action, n, f, x0) for n in range(1, N + 1)]
    dists = [space.distance(x, x0) for x in basepoints]
    gaps = [abs(a - b) for a, b in zip(moving, fixed)]
    bounds = [f.lipschitz_bound * d + slack for d in dists]
    mv = cauchy_verdict(moving, epsilon, window)
    fv = cauchy_verdict(fixed, epsilon, window)
    limit_gap = abs(moving[-1] - fixed[-1]) if mv == fv == CONVERGED else None
    return MovingBasepointReport(
        label=f.label,
        distances=tuple(dists),
        gaps=tuple(gaps),
        bounds=tuple(bounds),
        moving_values=tuple(moving),
        fixed_values=tuple(fixed),
        gaps_within_bounds=all(g <= b for g, b in zip(gaps, bounds)),
        moving_verdict=mv,
        fixed_verdict=fv,
        limit_gap=limit_gap,
        shared_limit=limit_gap is not None and limit_gap <= epsilon,
        mode=mode,
    )


@dataclass(frozen=True)
class ErgodicityWitness:
    label: str
    atom_indices: tuple[int, ...]
    points: tuple[Any, ...]
    limits: tuple[float | None, ...]
    expected: float
    deviating: tuple[int, ...]

    def to_dict(self, encode) -> dict:
        return {
            "label": self.label,
            "atom_indices": list(self.atom_indices),
            "points": [encode(p) for p in self.points],
            "limits": list(self.limits),
            "expected_integral": self.expected,
            "deviating_atoms": list(self.deviating),
        }


@dataclass(frozen=True)
class ErgodicityVerdict:
    verdict: str
    witnesses: tuple[ErgodicityWitness, ...]
    traces_total: int
    traces_converged: int
    parameters: dict = field(default_factory=dict)

    @property
    def witness(self) -> ErgodicityWitness | None:
        return self.witnesses[0] if self.witnesses else None

    def to_dict(self, encode) -> dict:
        return {
            "verdict": self.verdict,
            "witnesses": [w.to_dict(encode) for w in self.witnesses],
            "traces_total": self.traces_total,
            "traces_converged": self.traces_converged,
            "parameters": self.parameters,
        }


def certify_ergodicity(
    mu: AtomicMeasure,
    family: TestFamily,
    action: ChainAction,
    N: int,
    epsilon: float = 1e-6,
    window: int = 3,
    *,
    workers: int = 1,
) -> ErgodicityVerdict:
    """Test lim_n A_n psi(x) == int psi dmu at every atom x, for psi in the family.

    NON_ERGODIC as soon as a converged trace misses the integral by more than
    epsilon; ERGODIC_CONSISTENT when every trace converges onto it;
    INCONCLUSIVE otherwise. Witnesses are listed in family order.
    """
    if len(family) == 0:
        raise ValueError("empty test family")
    if not mu.atoms:
        raise ValueError("empty support")
    cache = OrbitalMeasureCache(action)
    # fill the cache in a fixed order so shared measures do not depend on scheduling
    grid = [[cache.measure(n, a.point) for n in range(1, N + 1)] for a in mu.atoms]

    def traces_for(psi: TestFunction) -> list[AverageTrace]:
        return [
            _make_trace(psi.label, a.point, [cache.integral(m, psi) for m in row], epsilon, window)
            for a, row in zip(mu.atoms, grid)
        ]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            all_traces = list(pool.map(traces_for, family))
    else:
        all_traces = [traces_for(psi) for psi in family]

    witnesses = []
    converged = 0
    consistent = True
    for psi, traces in zip(family, all_traces):
        expected = integrate(mu, psi)
        deviating = []
        for i, t in enumerate(traces):
            if not t.converged:
                consistent = False
                continue
            converged += 1
            if abs(t.limit_estimate - expected) > epsilon:
                deviating.append(i)
        if deviating:
            witnesses.append(
                ErgodicityWitness(
                    label=psi.label,
                    atom_indices=tuple(range(len(traces))),
                    points=tuple(t.point for t in traces),
                    limits=tuple(t.limit_estimate for t in traces),
                    expected=expected,
                    deviating=tuple(deviating),
                )
            )
    if witnesses:
        verdict = NON_ERGODIC
    elif consistent:
        verdict = ERGODIC_CONSISTENT
    else:
        verdict = INCONCLUSIVE
    return ErgodicityVerdict(
        verdict=verdict,
        witnesses=tuple(witnesses),
        traces_total=len(family) * len(mu.atoms),
        traces_converged=converged,
        parameters={
            "trace_levels": N,
            "epsilon": epsilon,
            "window": window,
            "atoms": len(mu.atoms),
            "family": dict(family.params),
        },
    )
