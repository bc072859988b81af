import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbital_measures import (
    CirclePoint,
    audit_isometry,
    dyadic_chain,
    dyadic_rotation_action,
    prufer_translation_action,
)
from orbital_measures.group_chain import LevelError
from orbital_measures.prufer import one_config, prufer_point, zero_config

CHAIN = dyadic_chain(20)
ROT = dyadic_rotation_action(CHAIN)
PRU = prufer_translation_action(dyadic_chain(10), 8)


def _prufer_samples(count, seed=0):
    return PRU.space.sample(np.random.default_rng(seed), count)


@given(st.integers(1, 20), st.data(), st.floats(0, 1, exclude_max=True))
def test_rotation_is_an_action(n, data, t):
    a = CHAIN.element(n, data.draw(st.integers(0, 2**n - 1)))
    b = CHAIN.element(n, data.draw(st.integers(0, 2**n - 1)))
    x = CirclePoint(t)
    lhs, rhs = ROT.apply(a * b, x), ROT.apply(a, ROT.apply(b, x))
    assert ROT.space.distance(lhs, rhs) <= 1e-15
    assert ROT.apply(CHAIN.identity(n), x) == x


@pytest.mark.parametrize("n", range(1, 6))
def test_prufer_translation_is_an_exact_action(n):
    xs = _prufer_samples(3, seed=n)
    G = list(PRU.chain.elements(n))
    for a, b in itertools.product(G[::3], repeat=2):
        for x in xs:
            assert PRU.apply(a * b, x) == PRU.apply(a, PRU.apply(b, x))


def test_action_respects_embedding():
    x = _prufer_samples(1)[0]
    for g in PRU.chain.elements(4):
        assert PRU.apply(PRU.chain.embed(g), x) == PRU.apply(g, x)
    y = CirclePoint(0.3)
    for g in CHAIN.elements(5):
        assert ROT.apply(CHAIN.embed(g), y) == ROT.apply(g, y)


@pytest.mark.parametrize("n", range(1, 7))
def test_orbit_stabilizer(n):
    for x in [zero_config(8), prufer_point(2, 8), prufer_point(5, 8), *_prufer_samples(2, n)]:
        orbit = PRU.orbit(n, x)
        stab = sum(1 for y in orbit if y == x)
        assert len(set(orbit)) * stab == 2**n


def test_rotation_orbit_is_free():
    orbit = ROT.orbit(8, CirclePoint(0.1))
    assert len({round(p.t * 2**20) for p in orbit}) == 256


def test_orbit_matches_apply_in_code_order():
    x = _prufer_samples(1, 5)[0]
    assert PRU.orbit(4, x) == [PRU.apply(g, x) for g in PRU.chain.elements(4)]
    y = CirclePoint(0.37)
    assert ROT.orbit(6, y) == [ROT.apply(g, y) for g in CHAIN.elements(6)]


def test_batch_orbit_matches_orbit():
    pts = [CirclePoint(t) for t in (0.0, 0.2, 0.75)]
    arr = ROT.batch_orbit(5, pts)
    for row, p in zip(arr, pts):
        np.testing.assert_allclose(row, [q.t for q in ROT.orbit(5, p)], atol=1e-15)
    new = ROT.batch_orbit(5, pts, new_only=True)
    np.testing.assert_array_equal(new, arr[:, 1::2])


def test_level_past_truncation_is_rejected():
    with pytest.raises(LevelError):
        PRU.orbit(9, zero_config(8))


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_rotation_audit_passes_up_to_level_20(level, seed):
    # 2^20 group elements times a pair or two keeps this affordable
    pairs = 2 if level < 16 else 1
    report = audit_isometry(ROT, max_level=level, sample_pairs=pairs, tolerance=1e-12, seed=seed)
    assert report.verdict == "PASS"
    assert report.witness is None
    assert report.samples_checked == 2**level * pairs


@pytest.mark.parametrize("seed", [0, 1, 7, 12345])
def test_prufer_audit_fails_with_seed_independent_witness(seed):
    report = audit_isometry(PRU, max_level=4, sample_pairs=8, seed=seed)
    assert report.verdict == "FAIL"
    w = report.witness
    assert (w.g.level, w.g.value) == (2, 1)
    assert w.y == PRU.adversarial_pairs()[0][0]
    assert w.z == zero_config(8)
    assert abs(w.distance_after - w.distance_before) > 1e-12


def test_prufer_level_one_translation_is_isometric():
    report = audit_isometry(PRU, max_level=1, sample_pairs=64)
    assert report.passed


def test_audit_deterministic_across_workers():
    a = audit_isometry(PRU, max_level=6, sample_pairs=16, seed=3, workers=1)
    b = audit_isometry(PRU, max_level=6, sample_pairs=16, seed=3, workers=4)
    assert a == b
    c = audit_isometry(ROT, max_level=8, sample_pairs=4, seed=3, workers=4)
    assert c.passed


def test_constant_configs_are_fixed_points():
    for g in PRU.chain.elements(6):
        assert PRU.apply(g, zero_config(8)) == zero_config(8)
        assert PRU.apply(g, one_config(8)) == one_config(8)


@pytest.mark.parametrize("M", range(3, 11))
def test_prufer_audit_witness_for_every_truncation(M):
    act = prufer_translation_action(dyadic_chain(M), M)
    w = audit_isometry(act, max_level=min(M, 4), sample_pairs=4).witness
    assert (w.g.level, w.g.value) == (2, 1)
    assert w.distance_before == (1 - 4.0**-M) / 3
    assert w.distance_after == (1 - 4.0 ** -(M - 1)) / 12
