import math

import numpy as np
import pytest

from waitbench.cluster import (
    DistanceMatrix,
    calinski_harabasz,
    cut_dendrogram,
    distance_matrix,
    select_k_ch,
    similarity_heatmap,
    similarity_matrix,
    split_predictor_response,
    ward_agglomerate,
)
from waitbench.data import BinnedSeries
from waitbench.errors import BadPermutation, LengthMismatch, TooFewSeries
from waitbench.selftest import _dm_from_points, exhaustive_ward, ward_cost_two_forms


def binned(counts, cid, age=3, cat="problem", width=120):
    return BinnedSeries(cid, age, cat, width, np.asarray(counts, dtype=np.int64))


class TestDistance:
    def test_identical_series_zero(self):
        dm = distance_matrix([binned([1, 2, 3], "a"), binned([1, 2, 3], "b")])
        assert dm.d[0, 1] == 0.0

    def test_three_four_five(self):
        dm = distance_matrix([binned([0, 3], "a"), binned([4, 0], "b")])
        assert dm.d[0, 1] == pytest.approx(5.0, abs=1e-12)

    def test_matches_looped_oracle(self):
        rng = np.random.default_rng(0)
        counts = rng.integers(0, 10, size=(6, 12))
        series = [binned(counts[i], f"c{i}") for i in range(6)]
        dm = distance_matrix(series)
        for i in range(6):
            for j in range(6):
                want = math.sqrt(sum((counts[i, t] - counts[j, t]) ** 2 for t in range(12)))
                assert abs(dm.d[i, j] - want) < 1e-12

    def test_symmetry_and_diagonal(self):
        rng = np.random.default_rng(1)
        series = [binned(rng.integers(0, 9, 8), f"c{i}") for i in range(5)]
        dm = distance_matrix(series)
        assert np.array_equal(dm.d, dm.d.T)
        assert np.all(np.diag(dm.d) == 0)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            distance_matrix([binned([1, 2], "a"), binned([1, 2, 3], "b")])


class TestWard:
    def test_hand_case_0_1_5(self):
        dg = ward_agglomerate(_dm_from_points(np.array([[0.0], [1.0], [5.0]])))
        (a1, b1, c1, n1), (a2, b2, c2, n2) = dg.merges
        assert (a1, b1, n1) == (0, 1, 3)
        assert c1 == pytest.approx(0.5, abs=1e-12)
        assert c2 == pytest.approx(13.5, abs=1e-12)

    def test_identical_points_zero_cost(self):
        dg = ward_agglomerate(_dm_from_points(np.array([[2.0], [2.0], [9.0]])))
        assert dg.merges[0][2] == pytest.approx(0.0, abs=1e-12)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(3, 9))
            data = rng.normal(size=(n, int(rng.integers(1, 4))))
            got = ward_agglomerate(_dm_from_points(data)).merges
            want = exhaustive_ward(data)
            assert [(a, b, n_) for a, b, _, n_ in got] == [
                (a, b, n_) for a, b, _, n_ in want
            ]
            for g, w in zip(got, want):
                assert abs(g[2] - w[2]) < 1e-9

    def test_two_cost_forms_agree(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            a = rng.normal(size=(int(rng.integers(1, 6)), 2))
            b = rng.normal(size=(int(rng.integers(1, 6)), 2))
            three, product = ward_cost_two_forms(a, b)
            assert abs(three - product) < 1e-9

    def test_monotone_costs(self):
        rng = np.random.default_rng(4)
        data = rng.normal(size=(12, 3))
        dg = ward_agglomerate(_dm_from_points(data))
        costs = [m[2] for m in dg.merges]
        assert all(c2 >= c1 - 1e-12 for c1, c2 in zip(costs, costs[1:]))

    def test_leaf_order_permutation(self):
        rng = np.random.default_rng(5)
        data = rng.normal(size=(7, 2))
        dm = _dm_from_points(data)
        dg = ward_agglomerate(dm)
        assert sorted(dg.leaf_order) == sorted(dm.ids)

    def test_nesting(self):
        # Moving from k to k-1 clusters merges exactly one pair.
        rng = np.random.default_rng(6)
        data = rng.normal(size=(9, 2))
        dg = ward_agglomerate(_dm_from_points(data))
        for k in range(3, 9):
            fine = cut_dendrogram(dg, k)
            coarse = cut_dendrogram(dg, k - 1)
            groups_fine = {}
            for cid, lab in fine.items():
                groups_fine.setdefault(lab, set()).add(cid)
            groups_coarse = {}
            for cid, lab in coarse.items():
                groups_coarse.setdefault(lab, set()).add(cid)
            merged = [g for g in groups_coarse.values() if g not in groups_fine.values()]
            assert len(merged) == 1
            parts = [g for g in groups_fine.values() if g <= merged[0]]
            assert len(parts) == 2


class TestCH:
    def test_hand_case_20000(self):
        data = np.array([[0.0], [0.1], [10.0], [10.1]])
        labels = np.array([0, 0, 1, 1])
        assert calinski_harabasz(data, labels, 2) == pytest.approx(20000.0, rel=1e-9)

    def test_three_blobs_selected(self):
        rng = np.random.default_rng(11)
        pts = np.vstack(
            [rng.normal(np.full(4, c), 0.1, size=(10, 4)) for c in (0.0, 10.0, 20.0)]
        )
        dg = ward_agglomerate(_dm_from_points(pts))
        assign = select_k_ch(dg, pts, (2, 8))
        assert assign.k == 3

    def test_degenerate_identical_points(self):
        pts = np.ones((5, 2))
        dg = ward_agglomerate(_dm_from_points(pts))
        assign = select_k_ch(dg, pts, (2, 4))
        assert assign.degenerate and assign.k == 2 and math.isinf(assign.ch_score)

    def test_k_range_validation(self):
        pts = np.random.default_rng(0).normal(size=(5, 1))
        dg = ward_agglomerate(_dm_from_points(pts))
        with pytest.raises(TooFewSeries):
            select_k_ch(dg, pts, (2, 5))  # k = n has no within term


class TestSplit:
    def test_ceiling_counts(self):
        rng = np.random.default_rng(1)
        series = [binned(rng.integers(0, 9, 6), f"c{i}") for i in range(10)]
        pred, resp = split_predictor_response(distance_matrix(series), 0.2)
        assert len(resp) == 2 and len(pred) == 8
        assert sorted(pred + resp) == sorted(s.child_id for s in series)

    def test_outlier_goes_to_response(self):
        series = [binned([0, 0, 0], f"c{i}") for i in range(5)]
        series.append(binned([100, 100, 100], "far"))
        pred, resp = split_predictor_response(distance_matrix(series), 0.1)
        assert resp == ["far"]

    def test_tie_rule_identical_series(self):
        series = [binned([1, 1], f"c{i}") for i in range(5)]
        pred, resp = split_predictor_response(distance_matrix(series), 0.4)
        assert resp == ["c3", "c4"]
        assert pred == ["c0", "c1", "c2"]

    def test_both_sets_nonempty_at_high_q(self):
        series = [binned([i, 0], f"c{i}") for i in range(3)]
        pred, resp = split_predictor_response(distance_matrix(series), 0.9)
        assert len(pred) >= 1 and len(resp) >= 1

    def test_partition_property(self):
        rng = np.random.default_rng(9)
        for q in (0.1, 0.25, 0.5, 0.8):
            series = [binned(rng.integers(0, 9, 5), f"c{i}") for i in range(7)]
            pred, resp = split_predictor_response(distance_matrix(series), q)
            assert sorted(pred + resp) == sorted(s.child_id for s in series)
            assert not set(pred) & set(resp)

    def test_too_few(self):
        series = [binned([1], "a"), binned([2], "b")]
        with pytest.raises(TooFewSeries):
            split_predictor_response(distance_matrix(series), 0.5)


class TestHeatmap:
    def test_identical_pair_all_ones(self, tmp_path):
        dm = distance_matrix([binned([1, 2], "a"), binned([1, 2], "b")])
        s = similarity_heatmap(dm, ("a", "b"), tmp_path / "h.csv", tmp_path / "h.svg")
        assert np.array_equal(s, np.ones((2, 2)))

    def test_reorder_is_symmetric_permutation(self):
        rng = np.random.default_rng(2)
        series = [binned(rng.integers(0, 9, 6), f"c{i}") for i in range(5)]
        dm = distance_matrix(series)
        base = similarity_matrix(dm, dm.ids)
        perm = ("c3", "c0", "c4", "c1", "c2")
        out = similarity_matrix(dm, perm)
        pi = [dm.ids.index(p) for p in perm]
        for i in range(5):
            for j in range(5):
                assert out[i, j] == base[pi[i], pi[j]]

    def test_bad_permutation(self):
        dm = distance_matrix([binned([1], "a"), binned([2], "b")])
        with pytest.raises(BadPermutation):
            similarity_matrix(dm, ("a", "a"))

    def test_files_written(self, tmp_path):
        rng = np.random.default_rng(3)
        series = [binned(rng.integers(0, 9, 6), f"c{i}") for i in range(4)]
        dm = distance_matrix(series)
        dg = ward_agglomerate(dm)
        similarity_heatmap(dm, dg.leaf_order, tmp_path / "h.csv", tmp_path / "h.svg")
        text = (tmp_path / "h.csv").read_text()
        assert text.startswith("child_id,")
        assert len(text.strip().split("\n")) == 5
        import xml.etree.ElementTree as ET

        ET.fromstring((tmp_path / "h.svg").read_text())
