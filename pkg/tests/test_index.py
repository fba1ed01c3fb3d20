import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrmetric import DimensionMismatch, DomainError, Sample, ZeroVariance, center_and_normalize
from corrmetric.core import abs_corr_distance_unit, projective_angle
from corrmetric.index import (
    IndexConfig,
    QmIndex,
    brute_force_knn,
    build,
    knn,
    lower_bound_angle,
    lower_bound_relaxed,
    range_query,
)
from oracles import corr_distance, false_dismissal_setup

STRATS = ["relaxed-k", "projective-angle", "brute"]


def random_units(rng, count, n):
    return [center_and_normalize(r) for r in rng.standard_normal((count, n))]


def same_neighbors(a, b, tol=1e-12):
    """Equal up to ties: same distance profile, and id sets agree away from the boundary."""
    da, db = np.array(a.distances), np.array(b.distances)
    if len(da) != len(db) or np.abs(da - db).max(initial=0) > tol:
        return False
    cut = da[-1] - tol
    strict_a = {i for i, d in a.neighbors if d < cut}
    strict_b = {i for i, d in b.neighbors if d < cut}
    return strict_a == strict_b


class TestBounds:
    def test_relaxed_examples(self):
        assert lower_bound_relaxed(0.8, 0.1, 2) == pytest.approx(0.3, abs=1e-15)
        assert lower_bound_relaxed(0.0, 0.6, 2) == pytest.approx(0.3, abs=1e-15)
        for x in (0.0, 0.2, 1.0):
            assert lower_bound_relaxed(x, x, 2) == 0.0

    def test_angle_examples(self):
        assert lower_bound_angle(math.pi / 2, math.pi / 4) == pytest.approx(1 - math.sqrt(2) / 2, abs=1e-15)
        assert lower_bound_angle(0.3, 0.3) == 0.0
        assert lower_bound_angle(math.pi / 2, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_domain(self):
        with pytest.raises(DomainError):
            lower_bound_relaxed(1.2, 0.0)
        with pytest.raises(DomainError):
            lower_bound_angle(2.0, 0.0)

    def test_sampled_soundness_and_dominance(self, rng):
        for n in (3, 4, 10):
            us = rng.standard_normal((3000, 3, n))
            for q, p, x in us:
                q, p, x = (center_and_normalize(v) for v in (q, p, x))
                d_qx = abs_corr_distance_unit(q, x)
                rel = lower_bound_relaxed(abs_corr_distance_unit(q, p), abs_corr_distance_unit(p, x), 2)
                ang = lower_bound_angle(projective_angle(q, p), projective_angle(p, x))
                assert rel <= d_qx + 1e-12
                assert ang <= d_qx + 1e-12
                assert ang >= rel - 1e-12

    @settings(max_examples=300)
    @given(st.floats(0, math.pi / 2), st.floats(0, math.pi / 2))
    def test_dominance_pointwise(self, a, b):
        # a coplanar x realizes theta(q, x) = |a - b|, so the relaxed bound cannot exceed it
        rel = lower_bound_relaxed(1 - math.cos(a), 1 - math.cos(b), 2)
        assert lower_bound_angle(a, b) >= rel - 1e-12


class TestBuild:
    def test_single_point(self):
        idx = build([[1.0, 2.0, 4.0]])
        assert len(idx.nodes) == 1 and idx.nodes[0].points == [0]

    @pytest.mark.parametrize("strategy", STRATS)
    def test_structure(self, rng, strategy):
        idx = build(list(rng.standard_normal((100, 8))), IndexConfig(strategy=strategy, leaf_size=16))
        idx.validate()
        for node in idx.nodes:
            if node.is_leaf:
                assert len(node.points) <= 16

    def test_deterministic_serialization(self, rng):
        pts = list(rng.standard_normal((200, 6)))
        assert build(pts, IndexConfig(seed=4)).to_json() == build(pts, IndexConfig(seed=4)).to_json()
        assert build(pts, IndexConfig(seed=4)).to_json() != build(pts, IndexConfig(seed=5)).to_json()

    def test_duplicates_terminate(self):
        pts = [[1, 2, 3, 4]] * 40 + [[4, 1, 2, 2]]
        idx = build([Sample(p, id=i) for i, p in enumerate(pts)], IndexConfig(leaf_size=2))
        idx.validate()
        assert idx.range_query([2, 4, 6, 8], 0.0) == list(range(40))

    def test_errors(self):
        with pytest.raises(ZeroVariance, match="'b'"):
            build([Sample([1, 2, 3], id="a"), Sample([2, 2, 2], id="b")])
        with pytest.raises(DimensionMismatch):
            build([[1, 2, 3], [1, 2, 3, 4]])
        with pytest.raises(DomainError):
            build([])
        with pytest.raises(DomainError):
            IndexConfig(strategy="cover-tree")
        with pytest.raises(DomainError):
            build([Sample([1, 2, 3], id=1), Sample([3, 1, 2], id=1)])

    def test_small_k_warns(self):
        with pytest.warns(UserWarning, match="no-false-dismissal"):
            IndexConfig(k_constant=1.0)


class TestQueries:
    @pytest.mark.parametrize("strategy", STRATS)
    def test_affine_and_sign_images(self, rng, strategy):
        pts = list(rng.standard_normal((300, 7)))
        q = rng.standard_normal(7)
        pts[123] = -3.0 * q + 5.0
        pts[200] = -q
        idx = build(pts, IndexConfig(strategy=strategy))
        res = idx.knn(q, 2)
        assert sorted(res.ids) == [123, 200]
        assert max(res.distances) <= 1e-12
        assert idx.range_query(-q, 1e-12) == [123, 200]

    def test_query_identical_to_point_is_exactly_zero(self, rng):
        pts = list(rng.standard_normal((50, 5)))
        idx = build(pts)
        assert idx.knn(pts[17], 1).neighbors == [(17, 0.0)]
        assert 17 in idx.range_query(pts[17], 0.0)

    @pytest.mark.parametrize("strategy", STRATS)
    @pytest.mark.parametrize("n", [3, 5, 12])
    def test_knn_matches_brute_force(self, rng, strategy, n):
        pts = list(rng.standard_normal((400, n)))
        idx = build(pts, IndexConfig(strategy=strategy, leaf_size=8, seed=n))
        for q in rng.standard_normal((25, n)):
            for k in (1, 7):
                got = knn(idx, q, k)
                want = brute_force_knn(pts, q, k)
                assert same_neighbors(got, want)
                assert got.distances == sorted(got.distances)
                assert got.distance_evaluations <= len(pts)

    @pytest.mark.parametrize("strategy", STRATS)
    def test_range_matches_brute_force(self, rng, strategy):
        pts = list(rng.standard_normal((400, 4)))
        idx = build(pts, IndexConfig(strategy=strategy, leaf_size=4))
        for q in rng.standard_normal((20, 4)):
            for r in (0.0, 0.05, 0.3, 1.0):
                want = [i for i, p in enumerate(pts) if corr_distance(list(q), list(p)) <= r]
                got = range_query(idx, q, r)
                # the pure-python oracle may round differently right at the radius
                border = {i for i, p in enumerate(pts) if abs(corr_distance(list(q), list(p)) - r) < 1e-12}
                assert set(got) ^ set(want) <= border
            assert range_query(idx, q, 1.0) == list(range(len(pts)))

    def test_ties_broken_by_id(self):
        base = [1.0, 2.0, 0.0, 5.0]
        pts = [Sample([2 * v + 1 for v in base], id="c"), Sample(base, id="a"),
               Sample([-v for v in base], id="b"), Sample([3, 1, 4, 1], id="z")]
        res = build(pts, IndexConfig(leaf_size=1)).knn(base, 3)
        assert res.ids[:2] == ["a", "b"]

    def test_angle_never_evaluates_more(self, rng):
        pts = list(rng.standard_normal((800, 4)))
        rel = build(pts, IndexConfig(strategy="relaxed-k"))
        ang = build(pts, IndexConfig(strategy="projective-angle"))
        pruned = 0
        for q in rng.standard_normal((40, 4)):
            a, r = ang.knn(q, 5), rel.knn(q, 5)
            assert a.distance_evaluations <= r.distance_evaluations
            pruned += r.distance_evaluations < len(pts)
        assert pruned > 0

    def test_query_errors(self, rng):
        idx = build(list(rng.standard_normal((20, 4))))
        with pytest.raises(DimensionMismatch):
            idx.knn([1, 2, 3], 1)
        with pytest.raises(ZeroVariance):
            idx.knn([1, 1, 1, 1], 1)
        with pytest.raises(DomainError):
            idx.knn([1, 2, 3, 4], 0)
        with pytest.raises(DomainError):
            idx.range_query([1, 2, 3, 4], 1.5)


class TestBruteForce:
    def test_full_corpus(self, rng):
        pts = list(rng.standard_normal((10, 5)))
        res = brute_force_knn(pts, pts[0], 50)
        assert len(res.neighbors) == 10 and res.ids[0] == 0
        assert res.distances == sorted(res.distances)

    def test_empty(self):
        with pytest.raises(DomainError):
            brute_force_knn([], [1, 2, 3], 1)


class TestSerialization:
    @pytest.mark.parametrize("strategy", STRATS)
    def test_round_trip(self, rng, strategy):
        pts = [Sample(v, id=f"s{i}") for i, v in enumerate(rng.standard_normal((150, 6)))]
        idx = build(pts, IndexConfig(strategy=strategy, leaf_size=5))
        text = idx.to_json()
        back = QmIndex.from_json(text)
        assert back.to_json() == text
        for q in rng.standard_normal((10, 6)):
            a, b = idx.knn(q, 4), back.knn(q, 4)
            assert a.neighbors == b.neighbors
            assert a.distance_evaluations == b.distance_evaluations
            assert idx.range_query(q, 0.2) == back.range_query(q, 0.2)

    def test_schema(self, rng):
        doc = json.loads(build(list(rng.standard_normal((40, 4))), IndexConfig(leaf_size=4)).to_json())
        assert set(doc) == {"schema_version", "config", "points", "nodes"}
        assert set(doc["points"][0]) == {"id", "values"}
        internal = [n for n in doc["nodes"] if "vantage" in n]
        assert internal and {"vantage", "mu", "near", "far"} <= set(internal[0])
        doc["schema_version"] = 99
        with pytest.raises(DomainError):
            QmIndex.from_dict(doc)


def root_vantage_seed(corpus, k_constant):
    for seed in range(100):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            idx = build(corpus, IndexConfig(k_constant=k_constant, leaf_size=1, seed=seed))
        if idx.nodes[0].vantage == 0:
            return idx
    raise AssertionError("no seed picks Z as the root vantage")


class TestNegativeControl:
    def test_plain_triangle_inequality_dismisses(self):
        q, corpus = false_dismissal_setup()
        assert corr_distance(q, corpus[1]) == pytest.approx(1 - math.sqrt(2) / 2, abs=1e-12)
        unsound = root_vantage_seed(corpus, 1.0)
        truth = brute_force_knn(corpus, q, 1)
        assert truth.ids == [1]
        assert unsound.knn(q, 1).ids == [2]
        assert unsound.range_query(q, 0.3) == []

    def test_k_two_recovers(self):
        q, corpus = false_dismissal_setup()
        sound = root_vantage_seed(corpus, 2.0)
        assert sound.knn(q, 1).ids == [1]
        assert sound.range_query(q, 0.3) == [1]
