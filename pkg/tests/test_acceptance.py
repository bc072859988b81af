"""Exit criteria for the package, one test per criterion.

Each test records a one-line PASS/FAIL summary; the lines are printed at the
end of a pytest session (see conftest.py) or when this file is run directly.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from orbital_measures import (
    CONVERGED,
    ERGODIC_CONSISTENT,
    NON_ERGODIC,
    CirclePoint,
    audit_isometry,
    average,
    certify_ergodicity,
    circle_test_family,
    dyadic_chain,
    dyadic_rotation_action,
    equicontinuity_check,
    integrate,
    moving_basepoint_compare,
    orbital_measure,
    prufer_translation_action,
    trig_function,
)
from orbital_measures.prufer import one_config, prufer_metric, prufer_point, verify_two_point_orbit, zero_config
from orbital_measures.prufer.pipeline import counterexample_pipeline
from orbital_measures.runner import emit_machine, parse_config, run_scenario
from orbital_measures.spaces import cylinder_test_family

pytestmark = pytest.mark.acceptance

RESULTS: dict[int, str] = {}


def record(number: int, title: str, ok: bool, detail: str) -> None:
    RESULTS[number] = f"criterion {number} [{title}]: {'PASS' if ok else 'FAIL'} - {detail}"
    assert ok, RESULTS[number]


def test_criterion_1_prufer_counterexample():
    start = time.perf_counter()
    rep = counterexample_pipeline(8, 12, truncation_level=3, max_coordinates=2, epsilon=1e-2)
    again = counterexample_pipeline(8, 12, truncation_level=3, max_coordinates=2, epsilon=1e-2, seed=99)
    elapsed = time.perf_counter() - start

    zero, one = zero_config(12), one_config(12)
    limit = rep.convergence.limit_representative
    radius = 2.0**-8 + 2.0**-12
    atoms_ok = (
        limit is not None
        and len(limit) == 2
        and all(abs(w - 0.5) <= 1e-9 for w in limit.weights)
        and min(prufer_metric(p, zero) for p in limit.points) <= radius
        and min(prufer_metric(p, one) for p in limit.points) <= radius
    )
    w = rep.ergodicity.witness if rep.ergodicity else None
    ergodic_ok = (
        rep.ergodicity is not None
        and rep.ergodicity.verdict == NON_ERGODIC
        and w.label == "x(e)"
        and sorted(w.limits) == [0.0, 1.0]
        and w.expected == 0.5
    )
    a, b = rep.audit.witness, again.audit.witness
    audit_ok = (
        rep.audit.verdict == "FAIL"
        and a is not None
        and b is not None
        and (a.g, a.y, a.z, a.distance_before, a.distance_after) == (b.g, b.y, b.z, b.distance_before, b.distance_after)
    )
    ok = rep.convergence.verdict == CONVERGED and atoms_ok and ergodic_ok and audit_ok and elapsed < 10
    record(
        1, "Prufer counterexample", ok,
        f"{rep.convergence.verdict}, {len(limit) if limit else 0} atoms, ergodicity "
        f"{rep.ergodicity.verdict if rep.ergodicity else None} via {w.label if w else None} "
        f"limits {w.limits if w else None} vs {w.expected if w else None}, audit {rep.audit.verdict} "
        f"at g=(level {a.g.level}, code {a.g.value}) {a.distance_before:.8f}->{a.distance_after:.8f}, "
        f"{elapsed:.2f}s (limit 10s)",
    )


def test_criterion_2_two_point_orbit():
    start = time.perf_counter()
    reports = [verify_two_point_orbit(n, n + 4) for n in range(1, 7)]
    elapsed = time.perf_counter() - start
    ok = all(r.holds and r.both_attained for r in reports) and elapsed < 1
    record(2, "two-point orbit", ok,
           f"n=1..6, M=n+4, other translates {sum(len(r.other) for r in reports)}, {elapsed:.3f}s (limit 1s)")


def _metric_oracle(x, y) -> float:
    """Per-level mismatch counts over the group elements k/2^n, summed with integer weights."""
    M = x.truncation_level
    numerator = 0
    for n in range(1, M + 1):
        step = 2 ** (M - n)
        mismatches = sum(1 for k in range(2**n) if x.bits[k * step] != y.bits[k * step])
        numerator += mismatches * 4 ** (M - n)
    return numerator / 4**M


def test_criterion_3_metric_closed_forms():
    failures = 0
    checked = 0
    for M in range(1, 13):
        zero, one = zero_config(M), one_config(M)
        for got in (prufer_metric(zero, one), _metric_oracle(zero, one)):
            checked += 1
            failures += got != 1 - 2.0**-M
        for n in range(1, min(6, M) + 1):
            x = prufer_point(n, M)
            expected = 2.0**-n - 2.0 ** -(M + 1)
            for got in (prufer_metric(x, one), _metric_oracle(x, one)):
                checked += 1
                failures += got != expected
    record(3, "metric closed forms", failures == 0,
           f"{checked} exact comparisons (library and oracle), {failures} mismatches, tolerance 0")


def test_criterion_4_isometric_scenario():
    start = time.perf_counter()
    chain = dyadic_chain(12)
    rot = dyadic_rotation_action(chain)
    audit = audit_isometry(rot, max_level=12, sample_pairs=16, tolerance=1e-12, seed=0)

    nonzero = 0
    checked = 0
    x0 = CirclePoint(0.0)
    for n in range(1, 13):
        mu = orbital_measure(rot, n, x0)
        # exhaustive in k up to level 8, a seeded spread of k above that
        ks = range(1, 2**n) if n <= 8 else sorted(
            {1, 2, 3, 2 ** (n - 1), 2**n - 1, *np.random.default_rng(n).integers(1, 2**n, 24).tolist()}
        )
        for k in ks:
            checked += 1
            nonzero += integrate(mu, trig_function("cos", int(k))) != 0.0

    verdict = certify_ergodicity(orbital_measure(rot, 12, x0), circle_test_family(4), rot, 12, 1e-6, 3)
    elapsed = time.perf_counter() - start
    ok = audit.passed and nonzero == 0 and verdict.verdict == ERGODIC_CONSISTENT and elapsed < 5
    record(4, "isometric scenario", ok,
           f"audit {audit.verdict} over {audit.samples_checked} checks at levels<=12, "
           f"{checked} cosine integrals with {nonzero} nonzero, certify {verdict.verdict}, "
           f"{elapsed:.2f}s (limit 5s)")


def test_criterion_5_equicontinuity():
    rot = dyadic_rotation_action(dyadic_chain(12))
    funcs = [f for f in circle_test_family(4) if f.label != "1"]
    reports = equicontinuity_check(rot, funcs, 12, 10_000, seed=2024, slack=1e-10)
    violations = sum(r.violations for r in reports)
    ok = violations == 0 and all(r.mode == "certified" for r in reports)
    record(5, "equicontinuity", ok,
           f"{len(funcs)} functions x {reports[0].pairs_checked} pairs x levels 1..12, {violations} violations")


def test_criterion_6_orbit_stabilization():
    rot = dyadic_rotation_action(dyadic_chain(8))
    family = circle_test_family(4)
    basepoints = [CirclePoint(0.0)] + [CirclePoint(t) for t in np.random.default_rng(6).random(3)]
    worst = 0.0
    checked = 0
    for x in basepoints:
        base = {(n, f.label): average(rot, n, f, x) for n in range(4, 9) for f in family}
        for m in range(1, 5):
            for g in rot.chain.elements(m):
                x2 = rot.apply(g, x)
                for n in range(4, 9):
                    for f in family:
                        worst = max(worst, abs(average(rot, n, f, x2) - base[n, f.label]))
                        checked += 1
    record(6, "orbit stabilization", worst <= 1e-12,
           f"{checked} comparisons, m<=4<=n<=8, max deviation {worst:.3g} (tol 1e-12)")


def test_criterion_7_moving_basepoint():
    rot = dyadic_rotation_action(dyadic_chain(12))
    f = trig_function("sin", 1)
    xs = [CirclePoint(2.0**-n) for n in range(1, 13)]
    rep = moving_basepoint_compare(rot, f, xs, CirclePoint(0.0), epsilon=1e-6, window=3, slack=1e-10)
    explicit = all(g <= 2 * math.pi * 2.0**-n + 1e-10 for n, g in enumerate(rep.gaps, start=1))
    ok = rep.gaps_within_bounds and explicit and rep.shared_limit
    record(7, "moving basepoint", ok,
           f"max gap/bound {max(g / b for g, b in zip(rep.gaps, rep.bounds)):.3g}, verdicts "
           f"{rep.moving_verdict}/{rep.fixed_verdict}, limit gap {rep.limit_gap}")


def test_criterion_8_two_path_agreement():
    rng = np.random.default_rng(8)
    rot = dyadic_rotation_action(dyadic_chain(12))
    trig = circle_test_family(4)
    M = 10
    pru = prufer_translation_action(dyadic_chain(M), M)
    cyl = cylinder_test_family(3, 2, space_truncation=M)
    worst = 0.0
    for i in range(1000):
        if i % 2 == 0:
            n, f, x = int(rng.integers(1, 13)), trig[int(rng.integers(len(trig)))], CirclePoint(rng.random())
            act = rot
        else:
            n, f = int(rng.integers(1, 9)), cyl[int(rng.integers(len(cyl)))]
            x = pru.space.sample(rng, 1)[0]
            act = pru
        worst = max(worst, abs(average(act, n, f, x) - integrate(orbital_measure(act, n, x), f)))
    record(8, "two-path agreement", worst <= 1e-12,
           f"1000 seeded triples (500 circle, 500 Prufer), max difference {worst:.3g} (tol 1e-12)")


def test_criterion_9_determinism():
    configs = {
        "prufer_counterexample": 'scenario = "prufer_counterexample"\nprufer.N = 8\nprufer.M = 12\n'
        "convergence.epsilon = 1e-2\n",
        "dyadic_rotation_circle": 'scenario = "dyadic_rotation_circle"\nequicontinuity.pairs = 64\n',
    }
    same = {}
    for name, text in configs.items():
        cfg = parse_config(text)
        docs = [emit_machine(run_scenario(cfg, workers=w), include_wall_time=False) for w in (1, 4)]
        same[name] = docs[0] == docs[1]
    record(9, "determinism", all(same.values()),
           ", ".join(f"{k}: {'identical' if v else 'DIFFERENT'}" for k, v in same.items())
           + " (workers 1 vs 4)")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    for k in sorted(RESULTS):
        print(RESULTS[k])
    sys.exit(1 if failed else 0)
