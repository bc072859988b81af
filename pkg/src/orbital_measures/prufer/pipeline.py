"""End-to-end run of the non-isometric counterexample on the Prufer 2-group.

x_n converges to 1-bar, mu_n^{x_n} = (delta_{x_n} + delta_{1-x_n}) / 2 converges
weakly to (delta_0 + delta_1) / 2, and that limit is not ergodic because both
constant configurations are fixed by every translation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..actions import IsometryAuditReport, audit_isometry, prufer_translation_action
from ..averaging import (
    EquicontinuityReport,
    ErgodicityVerdict,
    UniformityReport,
    certify_ergodicity,
    equicontinuity_check,
    trace,
    uniformity_diagnostic,
)
from ..group_chain import dyadic_chain
from ..measures import AtomicMeasure, Atom, ConvergenceReport, analyze_sequence, orbital_measure
from ..spaces import cylinder_test_family, encode_point
from .config import (
    TwoPointOrbitReport,
    one_config,
    prufer_metric,
    prufer_point,
    verify_two_point_orbit,
    zero_config,
)

WITNESS_LABEL = "x(e)"


@dataclass(frozen=True)
class DistanceRow:
    n: int
    to_one: float  # d(x_n, 1-bar)
    to_zero: float  # d(1 - x_n, 0-bar)
    expected: float  # 2^-n - 2^-(M+1)

    def to_dict(self):
        return {"n": self.n, "d_xn_one": self.to_one, "d_complement_zero": self.to_zero,
                "expected": self.expected}


@dataclass(frozen=True)
class CounterexampleReport:
    N: int
    M: int
    epsilon: float
    window: int
    distances: tuple[DistanceRow, ...]
    orbits: tuple[TwoPointOrbitReport, ...]
    measures: tuple[AtomicMeasure, ...]
    convergence: ConvergenceReport
    limit_distances: tuple[dict, ...]
    audit: IsometryAuditReport
    ergodicity: ErgodicityVerdict | None
    stated_limit_ergodicity: ErgodicityVerdict
    uniformity: UniformityReport | None
    equicontinuity: EquicontinuityReport | None

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "M": self.M,
            "epsilon": self.epsilon,
            "window": self.window,
            "distances": [r.to_dict() for r in self.distances],
            "two_point_orbits": [o.to_dict() for o in self.orbits],
            "orbital_measures": [
                {"n": n, "atoms": [{"point": encode_point(a.point), "weight": a.weight}
                                   for a in m.atoms]}
                for n, m in enumerate(self.measures, start=1)
            ],
            "convergence": self.convergence.to_dict(encode_point),
            "limit_distances": list(self.limit_distances),
            "audit": self.audit.to_dict(encode_point),
            "ergodicity": None if self.ergodicity is None else self.ergodicity.to_dict(encode_point),
            "stated_limit_ergodicity": self.stated_limit_ergodicity.to_dict(encode_point),
            "uniformity": None if self.uniformity is None else self.uniformity.to_dict(),
            "equicontinuity": None if self.equicontinuity is None else self.equicontinuity.to_dict(),
        }


def counterexample_pipeline(
    N: int = 8,
    M: int = 12,
    *,
    truncation_level: int = 3,
    max_coordinates: int = 2,
    epsilon: float = 1e-3,
    window: int = 3,
    audit_sample_pairs: int = 64,
    audit_tolerance: float = 1e-12,
    seed: int = 0,
    equicontinuity_pairs: int = 16,
    workers: int = 1,
) -> CounterexampleReport:
    """Build x_1..x_N on K(M), their orbital measures, and every verdict about them.

    The limit representative mu_N^{x_N} only agrees with its weak limit on the
    coordinates seen by levels below N, so its ergodicity traces run to level
    N - 1.
    """
    if M < N + 2:
        raise ValueError(f"need M >= N + 2 for truncation headroom, got N={N}, M={M}")
    if N - 1 < window:
        raise ValueError(f"need N - 1 >= window, got N={N}, window={window}")
    if truncation_level > M:
        raise ValueError("test-family truncation level exceeds M")
    chain = dyadic_chain(M)
    action = prufer_translation_action(chain, M)
    space = action.space
    zero, one = zero_config(M), one_config(M)

    xs = [prufer_point(n, M) for n in range(1, N + 1)]
    distances = tuple(
        DistanceRow(n, prufer_metric(x, one), prufer_metric(x.complement(), zero),
                    2.0 ** -n - 2.0 ** -(M + 1))
        for n, x in enumerate(xs, start=1)
    )
    orbits = tuple(verify_two_point_orbit(n, M) for n in range(1, N + 1))
    measures = tuple(orbital_measure(action, n, x) for n, x in enumerate(xs, start=1))

    family = cylinder_test_family(truncation_level, max_coordinates, space_truncation=M)
    convergence = analyze_sequence(measures, family, epsilon, window, workers=workers)
    audit = audit_isometry(
        action, max_level=N, sample_pairs=audit_sample_pairs,
        tolerance=audit_tolerance, seed=seed, workers=workers,
    )

    limit = convergence.limit_representative
    ergodicity = None
    uniformity = None
    limit_distances: tuple[dict, ...] = ()
    if limit is not None:
        limit_distances = tuple(
            {"point": encode_point(a.point), "weight": a.weight,
             "d_to_zero": prufer_metric(a.point, zero), "d_to_one": prufer_metric(a.point, one)}
            for a in limit.atoms
        )
        ergodicity = certify_ergodicity(limit, family, action, N - 1, epsilon, window, workers=workers)
        witness_fn = family.by_label(WITNESS_LABEL)
        traces = [trace(action, witness_fn, a.point, N - 1, epsilon, window) for a in limit.atoms]
        if all(t.converged for t in traces):
            uniformity = uniformity_diagnostic(traces, epsilon)

    stated = AtomicMeasure((Atom(zero, 0.5), Atom(one, 0.5)), 0.0, space)
    stated_verdict = certify_ergodicity(stated, family, action, N, epsilon, window, workers=workers)

    equicontinuity = None
    if equicontinuity_pairs:
        equicontinuity = equicontinuity_check(
            action, family.by_label(WITNESS_LABEL), N, equicontinuity_pairs, seed,
            audit=audit, diagnostic=True,
        )

    return CounterexampleReport(
        N=N, M=M, epsilon=epsilon, window=window,
        distances=distances, orbits=orbits, measures=measures,
        convergence=convergence, limit_distances=limit_distances, audit=audit,
        ergodicity=ergodicity, stated_limit_ergodicity=stated_verdict,
        uniformity=uniformity, equicontinuity=equicontinuity,
    )


def limit_matches_stated(report: CounterexampleReport, tolerance: float | None = None) -> bool:
    """Two atoms of weight 1/2, one near 0-bar and one near 1-bar."""
    tol = 2.0 ** -report.N + 2.0 ** -report.M if tolerance is None else tolerance
    rows = report.limit_distances
    if len(rows) != 2:
        return False
    if any(not math.isclose(r["weight"], 0.5, abs_tol=1e-9) for r in rows):
        return False
    near_zero = sorted(r["d_to_zero"] for r in rows)[0]
    near_one = sorted(r["d_to_one"] for r in rows)[0]
    return near_zero <= tol and near_one <= tol
