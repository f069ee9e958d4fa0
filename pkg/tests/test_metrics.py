import numpy as np
import pytest

from ghsnet.metrics import cutoff_pr_curve, edge_disagreement, precision_recall, pr_curve_rows


def adjacency_from_edges(p, edges):
    adj = np.zeros((p, p), dtype=bool)
    for i, j in edges:
        adj[i, j] = adj[j, i] = True
    return adj


class TestPrecisionRecall:
    def test_perfect_estimate(self):
        truth = adjacency_from_edges(5, [(0, 1), (2, 3)])
        assert precision_recall(truth, truth) == (1.0, 1.0)

    def test_empty_estimate_convention(self):
        truth = adjacency_from_edges(5, [(0, 1)])
        est = np.zeros((5, 5), dtype=bool)
        assert precision_recall(est, truth) == (1.0, 0.0)

    def test_empty_truth_convention(self):
        est = adjacency_from_edges(5, [(0, 1)])
        truth = np.zeros((5, 5), dtype=bool)
        assert precision_recall(est, truth) == (0.0, 1.0)

    def test_hand_count(self):
        rng = np.random.default_rng(0)
        p = 50
        iu = list(zip(*np.triu_indices(p, 1)))
        true_edges = [iu[k] for k in rng.choice(len(iu), 49, replace=False)]
        truth = adjacency_from_edges(p, true_edges)
        est_edges = true_edges[:8] + [e for e in iu if e not in true_edges][:2]
        est = adjacency_from_edges(p, est_edges)
        prec, rec = precision_recall(est, truth)
        assert prec == pytest.approx(0.8)
        assert rec == pytest.approx(8 / 49)

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(5)
        p = 8
        truth = adjacency_from_edges(p, [(0, 1), (1, 2), (3, 4)])
        est = adjacency_from_edges(p, [(0, 1), (5, 6)])
        perm = rng.permutation(p)
        assert precision_recall(est, truth) == precision_recall(
            est[np.ix_(perm, perm)], truth[np.ix_(perm, perm)]
        )

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            precision_recall(np.zeros((4, 4), dtype=bool), np.zeros((5, 5), dtype=bool))


class TestEdgeDisagreement:
    def test_identical_graphs(self):
        a = adjacency_from_edges(6, [(0, 1), (2, 3)])
        assert edge_disagreement(a, a) == 0.0

    def test_disjoint_graphs(self):
        a = adjacency_from_edges(6, [(0, 1), (2, 3)])
        b = adjacency_from_edges(6, [(0, 2), (4, 5)])
        assert edge_disagreement(a, b) == 1.0

    def test_recount_case(self):
        # two graphs with 49 edges each sharing 29
        rng = np.random.default_rng(1)
        p = 40
        iu = list(zip(*np.triu_indices(p, 1)))
        picks = [iu[k] for k in rng.choice(len(iu), 69, replace=False)]
        shared, only_a, only_b = picks[:29], picks[29:49], picks[49:69]
        a = adjacency_from_edges(p, shared + only_a)
        b = adjacency_from_edges(p, shared + only_b)
        assert edge_disagreement(a, b) == pytest.approx(20 / 49)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        a = rng.random((7, 7)) < 0.3
        a = np.triu(a, 1)
        a = a | a.T
        b = rng.random((7, 7)) < 0.3
        b = np.triu(b, 1)
        b = b | b.T
        assert edge_disagreement(a, b) == edge_disagreement(b, a)

    def test_both_empty_is_zero(self):
        e = np.zeros((5, 5), dtype=bool)
        assert edge_disagreement(e, e) == 0.0


class TestCutoffPrCurve:
    def test_perfect_scores_hit_ceiling(self):
        p = 20
        truth = adjacency_from_edges(p, [(i, i + 1) for i in range(10)])
        scores = np.where(truth, 1.0, 0.001)
        scores += np.random.default_rng(3).uniform(0, 1e-4, (p, p))
        scores = (scores + scores.T) / 2
        _, auprc = cutoff_pr_curve(scores, truth, recall_cap=0.3)
        assert auprc == pytest.approx(0.3, abs=1e-9)

    def test_random_scores_near_density_baseline(self):
        rng = np.random.default_rng(4)
        p = 50
        iu = list(zip(*np.triu_indices(p, 1)))
        true_edges = [iu[k] for k in rng.choice(len(iu), 49, replace=False)]
        truth = adjacency_from_edges(p, true_edges)
        density = 49 / len(iu)
        vals = []
        for rep in range(200):
            s = rng.random((p, p))
            s = (s + s.T) / 2
            _, auprc = cutoff_pr_curve(s, truth, recall_cap=0.3)
            vals.append(auprc)
        assert np.mean(vals) == pytest.approx(0.3 * density, abs=0.005)

    def test_first_point_precision_one_when_top_pair_true(self):
        p = 10
        truth = adjacency_from_edges(p, [(0, 1), (2, 3)])
        scores = np.random.default_rng(6).uniform(0, 0.5, (p, p))
        scores = (scores + scores.T) / 2
        scores[0, 1] = scores[1, 0] = 10.0
        curve, _ = cutoff_pr_curve(scores, truth, recall_cap=1.0)
        # first swept point (after the synthetic recall-0 anchor)
        assert curve[1, 1] == 1.0

    def test_area_bounded_by_cap(self):
        rng = np.random.default_rng(7)
        p = 15
        truth = adjacency_from_edges(p, [(0, 1), (2, 3), (4, 5)])
        for _ in range(10):
            s = rng.random((p, p))
            s = (s + s.T) / 2
            _, auprc = cutoff_pr_curve(s, truth, recall_cap=0.3)
            assert auprc <= 0.3 + 1e-12

    def test_rejects_empty_truth(self):
        with pytest.raises(ValueError):
            cutoff_pr_curve(np.zeros((4, 4)), np.zeros((4, 4), dtype=bool))

    def test_rows_contain_thresholds(self):
        p = 8
        truth = adjacency_from_edges(p, [(0, 1)])
        s = np.random.default_rng(8).uniform(size=(p, p))
        s = (s + s.T) / 2
        rows = pr_curve_rows(s, truth)
        assert all(len(r) == 3 for r in rows)
        th = [r[0] for r in rows]
        assert th == sorted(th, reverse=True)
