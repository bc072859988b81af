import math

import pytest
from hypothesis import given, settings, strategies as st

from orbital_measures import (
    CONVERGED,
    INCONCLUSIVE,
    NOT_CONVERGED,
    Atom,
    AtomicMeasure,
    CirclePoint,
    CircleSpace,
    analyze_sequence,
    circle_test_family,
    discrepancy,
    integrate,
    orbital_measure,
)
from orbital_measures.prufer import prufer_point

CIRCLE = CircleSpace()
TRIG = circle_test_family(4)


def dirac(t):
    return AtomicMeasure.dirac(CirclePoint(t), CIRCLE)


def test_weights_must_form_a_probability_vector():
    with pytest.raises(ValueError):
        AtomicMeasure((Atom(CirclePoint(0), 0.5),))
    with pytest.raises(ValueError):
        AtomicMeasure((Atom(CirclePoint(0), 1.5), Atom(CirclePoint(0.5), -0.5)))
    with pytest.raises(ValueError):
        AtomicMeasure(())


@pytest.mark.parametrize("n", range(1, 11))
def test_orbital_measure_of_rotation_is_uniform(rotation, n):
    mu = orbital_measure(rotation, n, CirclePoint(0.1))
    assert len(mu) == 2**n
    assert all(w == 2.0**-n for w in mu.weights)
    assert math.fsum(mu.weights) == 1.0


@pytest.mark.parametrize("n", range(1, 13))
def test_trig_integrals_vanish_below_the_level(rotation, n):
    mu = orbital_measure(rotation, n, CirclePoint(0.0))
    for f in TRIG:
        k = int(f.label.split("*")[1][:-2]) if f.label != "1" else 0
        expected = 1.0 if k == 0 or (k % 2**n == 0 and f.label.startswith("cos")) else 0.0
        assert integrate(mu, f) == expected


@pytest.mark.parametrize("n", range(1, 9))
def test_orbital_measure_is_invariant(rotation, n):
    mu = orbital_measure(rotation, n, CirclePoint(0.3))
    for g in list(rotation.chain.elements(n))[::7]:
        nu = mu.pushforward(lambda p: rotation.apply(g, p))
        assert len(nu) == len(mu)
        assert discrepancy(mu, nu, TRIG) <= 1e-12


def test_orbital_measure_dedups_prufer_orbit(prufer_action):
    for n in range(1, 7):
        mu = orbital_measure(prufer_action, n, prufer_point(n, 8))
        assert mu.weights == [0.5, 0.5]
        assert mu.points[0] == mu.points[1].complement()


def test_pushforward_merges_coinciding_images():
    mu = AtomicMeasure.from_points([CirclePoint(t) for t in (0.1, 0.6)], [0.5, 0.5], CIRCLE)
    nu = mu.pushforward(lambda p: CirclePoint(2 * p.t))
    assert len(nu) == 1
    assert nu.weights == [1.0]


def test_pruned_renormalizes():
    mu = AtomicMeasure(
        (Atom(CirclePoint(0), 0.5 - 1e-13), Atom(CirclePoint(0.5), 0.5), Atom(CirclePoint(0.2), 1e-13)),
        space=CIRCLE,
    )
    p = mu.pruned(1e-9)
    assert len(p) == 2
    assert math.fsum(p.weights) == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=3, max_size=3))
def test_discrepancy_is_a_pseudometric(ts):
    a, b, c = (dirac(t) for t in ts)
    assert discrepancy(a, a, TRIG) == 0
    assert discrepancy(a, b, TRIG) == discrepancy(b, a, TRIG)
    assert discrepancy(a, c, TRIG) <= discrepancy(a, b, TRIG) + discrepancy(b, c, TRIG) + 1e-15


def test_constant_sequence_converges():
    report = analyze_sequence([dirac(0.25)] * 5, TRIG, 1e-12, 3)
    assert report.verdict == CONVERGED
    assert report.tail_discrepancies == (0.0,) * 5
    assert report.limit_representative.points == [CirclePoint(0.25)]


def test_alternating_sequence_does_not_converge():
    seq = [dirac(0.0), dirac(0.5)] * 4
    report = analyze_sequence(seq, TRIG, 1e-3, 3)
    assert report.verdict == NOT_CONVERGED
    assert report.limit_representative is None


def test_slowly_converging_sequence_is_inconclusive():
    seq = [dirac(2.0**-n) for n in range(1, 11)]
    report = analyze_sequence(seq, TRIG, 1e-9, 3)
    assert report.verdict == INCONCLUSIVE
    assert analyze_sequence(seq, TRIG, 1e-1, 3).verdict == CONVERGED


def test_window_two_needs_two_steps_for_inconclusive():
    seq = [dirac(2.0**-n) for n in range(1, 11)]
    assert analyze_sequence(seq, TRIG, 1e-9, 2).verdict == NOT_CONVERGED


def test_orbital_measures_from_zero_converge_to_haar(rotation):
    seq = [orbital_measure(rotation, n, CirclePoint(0.0)) for n in range(1, 13)]
    report = analyze_sequence(seq, TRIG, 1e-6, 3)
    assert report.verdict == CONVERGED
    assert report.tail_discrepancies[-4:] == (0.0,) * 4
    assert len(report.limit_representative) == 4096


def test_analyze_sequence_rejects_short_input():
    with pytest.raises(ValueError):
        analyze_sequence([dirac(0)], TRIG, 1e-3, 3)
    with pytest.raises(ValueError):
        analyze_sequence([dirac(0)] * 4, TRIG, 1e-3, 1)


def test_workers_do_not_change_report(rotation):
    seq = [orbital_measure(rotation, n, CirclePoint(0.17)) for n in range(1, 9)]
    a = analyze_sequence(seq, TRIG, 1e-6, 3, workers=1)
    b = analyze_sequence(seq, TRIG, 1e-6, 3, workers=4)
    assert a == b


def test_limit_atoms_lie_in_the_orbit_supports(prufer_action):
    from orbital_measures.spaces import cylinder_test_family

    seq = [orbital_measure(prufer_action, n, prufer_point(n, 8)) for n in range(1, 7)]
    report = analyze_sequence(seq, cylinder_test_family(3, 2, space_truncation=8), 1e-2, 2)
    assert report.verdict == CONVERGED
    supports = [p for mu in seq for p in mu.points]
    for atom in report.limit_representative.points:
        assert min(prufer_action.space.distance(atom, p) for p in supports) <= 1e-2
