import numpy as np
import pytest

from ghsnet.model import Dataset, extract_graph, partial_correlations
from ghsnet.metrics import edge_disagreement
from ghsnet.simulate import (
    TrueModel,
    build_precision,
    generate_scale_free_graph,
    make_true_model,
    perturb_graph,
    sample_gaussian,
)


class TestScaleFreeGraph:
    def test_edge_count_p50(self):
        adj = generate_scale_free_graph(50, seed=0)
        edges = np.triu(adj, 1).sum()
        assert edges == 50
        sparsity = 2 * edges / (50 * 49)
        assert sparsity == pytest.approx(0.0408, abs=1e-4)

    def test_edge_count_p100(self):
        adj = generate_scale_free_graph(100, seed=1)
        sparsity = 2 * np.triu(adj, 1).sum() / (100 * 99)
        assert sparsity == pytest.approx(0.0202, abs=1e-4)

    def test_connected(self):
        import networkx as nx

        for seed in range(5):
            adj = generate_scale_free_graph(30, seed=seed)
            assert nx.is_connected(nx.from_numpy_array(adj))

    def test_heavier_tail_than_random_graph(self):
        # preferential attachment should beat uniformly random graphs on
        # max degree for the same edge budget in almost every seed
        import networkx as nx

        p, n_seeds = 100, 100
        wins = 0
        for seed in range(n_seeds):
            adj = generate_scale_free_graph(p, seed=seed)
            max_deg = adj.sum(axis=0).max()
            er = nx.gnm_random_graph(p, int(np.triu(adj, 1).sum()), seed=seed)
            er_max = max(dict(er.degree).values())
            wins += max_deg > er_max
        assert wins >= 90

    def test_determinism(self):
        a = generate_scale_free_graph(40, seed=11)
        b = generate_scale_free_graph(40, seed=11)
        assert np.array_equal(a, b)

    def test_rejects_tiny_p(self):
        with pytest.raises(ValueError):
            generate_scale_free_graph(2, seed=0)


class TestBuildPrecision:
    def test_empty_adjacency_gives_diagonal(self):
        prec = build_precision(np.zeros((5, 5), dtype=bool), (0.1, 0.2), seed=0)
        assert np.allclose(prec, np.diag(np.diag(prec)))
        assert np.all(np.diag(prec) > 0)

    def test_single_edge_exact_value(self):
        adj = np.zeros((4, 4), dtype=bool)
        adj[0, 1] = adj[1, 0] = True
        prec = build_precision(adj, (0.2, 0.2), seed=3)
        rho = partial_correlations(prec)
        assert rho[0, 1] == pytest.approx(0.2, abs=1e-12)

    def test_round_trip_recovery(self):
        adj = generate_scale_free_graph(50, seed=4)
        prec = build_precision(adj, (0.1, 0.2), seed=4)
        assert np.linalg.eigvalsh(prec).min() >= 1e-6 * (1 - 1e-9)
        graph = extract_graph(prec, threshold=0.05)
        assert np.array_equal(graph.adjacency, adj)

    def test_magnitudes_in_range(self):
        adj = generate_scale_free_graph(30, seed=5)
        for shared in (True, False):
            prec = build_precision(adj, (0.1, 0.2), seed=5, shared_magnitude=shared)
            rho = partial_correlations(prec)
            mags = np.abs(rho[adj])
            assert mags.min() >= 0.1 - 1e-4
            assert mags.max() <= 0.2 + 1e-4

    def test_nonedges_exactly_zero(self):
        adj = generate_scale_free_graph(20, seed=6)
        prec = build_precision(adj, (0.1, 0.2), seed=6)
        off = ~np.eye(20, dtype=bool)
        assert np.all(prec[off & ~adj] == 0.0)

    def test_mixed_signs_flag(self):
        adj = generate_scale_free_graph(40, seed=7)
        prec = build_precision(adj, (0.1, 0.2), seed=7, mixed_signs=True, shared_magnitude=False)
        rho = partial_correlations(prec)
        vals = rho[np.triu(adj, 1)]
        assert (vals > 0).any() and (vals < 0).any()

    def test_rejects_infeasible_range(self):
        adj = np.zeros((3, 3), dtype=bool)
        adj[0, 1] = adj[1, 0] = True
        with pytest.raises(ValueError):
            build_precision(adj, (0.5, 1.0), seed=0)


class TestTrueModel:
    def test_construction_asserts_invariants(self):
        model = make_true_model(30, seed=8)
        assert model.edge_count == 30
        assert model.sparsity == pytest.approx(2 * 30 / (30 * 29))
        # tampered precision must be rejected
        bad = np.array(model.precision)
        bad[0, 1] = bad[1, 0] = 0.5  # a non-edge made nonzero
        if not model.adjacency[0, 1]:
            with pytest.raises(ValueError):
                TrueModel(
                    adjacency=model.adjacency,
                    precision=bad,
                    partial_range=model.partial_range,
                    seed=0,
                )

    def test_json_round_trip(self):
        model = make_true_model(15, seed=9)
        again = TrueModel.from_json(model.to_json())
        assert np.array_equal(model.adjacency, again.adjacency)
        assert np.allclose(model.precision, again.precision)
        assert model.partial_range == again.partial_range


class TestPerturbGraph:
    def test_zero_fraction_identical(self):
        model = make_true_model(25, seed=10)
        other = perturb_graph(model, 0.0, seed=99)
        assert np.array_equal(model.adjacency, other.adjacency)
        assert np.allclose(model.precision, other.precision)

    def test_full_fraction_disjoint(self):
        model = make_true_model(25, seed=11)
        other = perturb_graph(model, 1.0, seed=100)
        shared = model.adjacency & other.adjacency
        assert shared.sum() == 0
        assert other.edge_count == model.edge_count

    def test_partial_fraction_recount(self):
        # 49 edges, fraction 0.4 -> 20 moved, 29 shared
        model = make_true_model(49, seed=12)
        assert model.edge_count == 49
        other = perturb_graph(model, 0.4, seed=101)
        shared = np.triu(model.adjacency & other.adjacency, 1).sum()
        assert shared == 29
        assert other.edge_count == 49
        assert edge_disagreement(model.adjacency, other.adjacency) == pytest.approx(
            20 / 49, abs=1e-12
        )

    def test_edge_count_preserved_across_fractions(self):
        model = make_true_model(20, seed=13)
        for frac in (0.1, 0.3, 0.7):
            other = perturb_graph(model, frac, seed=5)
            assert other.edge_count == model.edge_count

    def test_disagreement_symmetry(self):
        model = make_true_model(20, seed=14)
        other = perturb_graph(model, 0.5, seed=6)
        d1 = edge_disagreement(model.adjacency, other.adjacency)
        d2 = edge_disagreement(other.adjacency, model.adjacency)
        assert d1 == d2

    def test_reallocation_roughly_uniform(self):
        # chi-square test over many seeds on a small graph
        model = make_true_model(6, seed=15)
        non_edges = [
            (i, j)
            for i, j in zip(*np.triu_indices(6, 1))
            if not model.adjacency[i, j]
        ]
        counts = {e: 0 for e in non_edges}
        n_draws = 4000
        for s in range(n_draws):
            other = perturb_graph(model, 1.0 / model.edge_count, seed=s)
            new = np.triu(other.adjacency & ~model.adjacency, 1)
            for i, j in zip(*np.nonzero(new)):
                counts[(int(i), int(j))] += 1
        observed = np.array(list(counts.values()), dtype=float)
        expected = observed.sum() / len(non_edges)
        chi2 = ((observed - expected) ** 2 / expected).sum()
        # dof = #non_edges - 1; generous 99.9% cutoff
        from scipy import stats

        assert chi2 < stats.chi2.ppf(0.999, len(non_edges) - 1)


class TestSampleGaussian:
    def test_covariance_converges(self):
        model = make_true_model(5, seed=16)
        ds = sample_gaussian(model, 100_000, seed=17)
        emp = ds.observations.T @ ds.observations / ds.n
        target = np.linalg.inv(model.precision)
        assert np.abs(emp - target).max() < 0.05

    def test_column_means_near_zero(self):
        model = make_true_model(5, seed=18)
        ds = sample_gaussian(model, 100_000, seed=19)
        assert np.abs(ds.column_means).max() < 0.02

    def test_determinism(self):
        model = make_true_model(8, seed=20)
        a = sample_gaussian(model, 50, seed=21)
        b = sample_gaussian(model, 50, seed=21)
        assert np.array_equal(a.observations, b.observations)

    def test_rejects_tiny_n(self):
        model = make_true_model(5, seed=22)
        with pytest.raises(ValueError):
            sample_gaussian(model, 1, seed=0)
