import math

import numpy as np
import pytest

from conftest import random_dag, random_gbn
from gbnfusion.errors import NumericalError, ValidationError
from gbnfusion.gbn import Dataset, GaussianBayesianNetwork, standardize
from gbnfusion.graph import Dag, markov_equivalent
from gbnfusion.learning import (
    CoefficientEstimate,
    HillClimbConfig,
    bic_total,
    fit_mle,
    hill_climb,
    node_family_bic,
)


def chain_data(n, seed, beta=0.9):
    dag = Dag.from_labels("ABC", [("A", "B"), ("B", "C")])
    g = GaussianBayesianNetwork(dag, np.zeros(3), np.ones(3), {(0, 1): beta, (1, 2): beta})
    return g, standardize(g.sample(n, seed))[0]


class TestNodeFamilyBic:
    def test_empty_family_closed_form(self, rng):
        n = 200
        data = standardize(Dataset("AB", rng.normal(size=(n, 2))))[0]
        s2 = (n - 1) / n
        expected = -(n / 2) * (1 + math.log(2 * math.pi) + math.log(s2)) - math.log(n)
        assert node_family_bic(data, 0, set()) == pytest.approx(expected, rel=1e-12)

    def test_independent_parent_lowers_score(self):
        worse = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            data = standardize(Dataset("AB", rng.normal(size=(1000, 2))))[0]
            worse += node_family_bic(data, 1, {0}) < node_family_bic(data, 1, set())
        assert worse >= 95

    def test_true_parent_raises_score(self):
        better = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            a = rng.normal(size=1000)
            b = 0.8 * a + rng.normal(size=1000)
            data = standardize(Dataset("AB", np.column_stack([a, b])))[0]
            better += node_family_bic(data, 1, {0}) > node_family_bic(data, 1, set())
        assert better >= 95

    def test_collinear_parents_minus_inf(self, rng):
        a = rng.normal(size=50)
        data = Dataset("ABC", np.column_stack([a, 2 * a, rng.normal(size=50)]))
        assert node_family_bic(data, 2, {0, 1}) == -math.inf

    def test_self_parent(self, rng):
        data = Dataset("AB", rng.normal(size=(10, 2)))
        with pytest.raises(ValidationError):
            node_family_bic(data, 0, {0})


class TestBicTotal:
    def test_empty_dag_is_sum(self, six_node_gbn):
        data = standardize(six_node_gbn.sample(300, 1))[0]
        total = bic_total(Dag.empty(data.variables), data)
        assert total == pytest.approx(sum(node_family_bic(data, i, set()) for i in range(6)))

    def test_single_arc_changes_one_term(self, six_node_gbn):
        data = standardize(six_node_gbn.sample(300, 1))[0]
        empty = Dag.empty(data.variables)
        one = empty.add_arc(0, 2)
        diff = bic_total(one, data) - bic_total(empty, data)
        expected = node_family_bic(data, 2, {0}) - node_family_bic(data, 2, set())
        assert diff == pytest.approx(expected, abs=1e-9)

    def test_equals_penalised_joint_likelihood(self, rng):
        for _ in range(10):
            g = random_gbn(6, rng)
            data = standardize(g.sample(200, int(rng.integers(1 << 30))))[0]
            dag = random_dag(6, rng, labels=list(data.variables))
            fitted, _ = fit_mle(dag, data, unbiased=False)
            penalty = sum(len(dag.parents(i)) + 2 for i in range(6)) / 2 * math.log(data.n)
            assert bic_total(dag, data) == pytest.approx(fitted.log_likelihood(data) - penalty, abs=1e-6)


class TestHillClimb:
    def test_independent_data_gives_empty(self):
        empty = 0
        g = GaussianBayesianNetwork(Dag.empty("ABCD"), np.zeros(4), np.ones(4), {})
        for seed in range(20):
            data = standardize(g.sample(2000, seed))[0]
            empty += not hill_climb(data).arcs
        assert empty >= 18

    def test_chain_recovered(self):
        truth = Dag.from_labels("ABC", [("A", "B"), ("B", "C")])
        hits = sum(markov_equivalent(hill_climb(chain_data(2000, s)[1]), truth) for s in range(20))
        assert hits >= 18

    def test_cache_transparent(self, six_node_gbn):
        data = standardize(six_node_gbn.sample(80, 3))[0]
        cfg = HillClimbConfig(restarts=2, seed=5)
        assert hill_climb(data, cfg) == hill_climb(data, cfg, use_cache=False)

    def test_deterministic(self, six_node_gbn):
        data = standardize(six_node_gbn.sample(80, 3))[0]
        cfg = HillClimbConfig(restarts=3, seed=9)
        assert hill_climb(data, cfg) == hill_climb(data, cfg)

    def test_never_worse_than_empty(self, rng):
        for _ in range(10):
            g = random_gbn(6, rng)
            data = standardize(g.sample(60, int(rng.integers(1 << 30))))[0]
            learned = hill_climb(data)
            assert bic_total(learned, data) >= bic_total(Dag.empty(data.variables), data)

    def test_local_optimum(self, six_node_gbn):
        # no single add/delete/reverse improves the returned graph
        data = standardize(six_node_gbn.sample(150, 8))[0]
        learned = hill_climb(data)
        base = bic_total(learned, data)
        p = learned.p
        for a in range(p):
            for b in range(p):
                if a == b:
                    continue
                for neighbour in _neighbours(learned, a, b):
                    assert bic_total(neighbour, data) <= base + 1e-9

    @pytest.mark.parametrize("cap", [0, 1, 2])
    def test_max_parents(self, six_node_gbn, cap):
        data = standardize(six_node_gbn.sample(500, 2))[0]
        learned = hill_climb(data, HillClimbConfig(max_parents=cap, restarts=2, seed=1))
        assert all(len(learned.parents(i)) <= cap for i in range(learned.p))

    def test_max_iterations(self, six_node_gbn):
        data = standardize(six_node_gbn.sample(500, 2))[0]
        assert len(hill_climb(data, HillClimbConfig(max_iterations=1)).arcs) == 1

    def test_small_n_warns(self, rng):
        data = Dataset("ABCD", rng.normal(size=(4, 4)))
        with pytest.warns(UserWarning):
            hill_climb(data)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            HillClimbConfig(max_iterations=0)
        with pytest.raises(ValidationError):
            HillClimbConfig(restarts=-1)


def _neighbours(dag, a, b):
    if dag.has_arc(a, b):
        yield dag.remove_arc(a, b)
        try:
            yield dag.reverse_arc(a, b)
        except ValidationError:
            pass
    elif not dag.adjacent(a, b) and not dag.causes_cycle(a, b):
        yield dag.add_arc(a, b)


class TestFitMle:
    def test_root_node(self, rng):
        data = Dataset("AB", rng.normal(size=(30, 2)))
        gbn, est = fit_mle(Dag.empty("AB"), data)
        assert est == []
        np.testing.assert_allclose(gbn.cond_variances, data.rows.var(axis=0, ddof=1))
        np.testing.assert_allclose(gbn.means, data.rows.mean(axis=0))

    def test_exact_linear(self, rng):
        a = rng.normal(size=40)
        data = Dataset("AB", np.column_stack([a, 2 * a]))
        gbn, est = fit_mle(Dag.from_labels("AB", [("A", "B")]), data)
        assert gbn.coefficients[(0, 1)] == pytest.approx(2.0, abs=1e-10)
        assert est[0].variance == 1e-12
        assert gbn.cond_variances[1] == 1e-12

    def test_coverage(self):
        covered = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            a = rng.normal(size=10_000)
            b = 1.5 * a + rng.normal(size=10_000)
            _, (est,) = fit_mle(Dag.from_labels("AB", [("A", "B")]), Dataset("AB", np.column_stack([a, b])))
            covered += abs(est.value - 1.5) <= 3 * math.sqrt(est.variance)
        assert covered >= 95

    def test_true_structure_recovery(self, six_node_gbn):
        inside = total = 0
        for seed in range(20):
            data = six_node_gbn.sample(10_000, seed)
            _, estimates = fit_mle(six_node_gbn.dag, data)
            for e in estimates:
                total += 1
                inside += abs(e.value - six_node_gbn.coefficients[e.arc]) <= 3 * math.sqrt(e.variance)
        assert inside / total >= 0.95

    def test_residuals_orthogonal(self, six_node_gbn):
        data = standardize(six_node_gbn.sample(500, 6))[0]
        gbn, _ = fit_mle(six_node_gbn.dag, data)
        x = data.rows
        for i in range(6):
            pa = sorted(gbn.dag.parents(i))
            pred = gbn.means[i] + sum(gbn.coefficients[(j, i)] * (x[:, j] - gbn.means[j]) for j in pa)
            r = x[:, i] - pred
            X = np.column_stack([np.ones(data.n)] + [x[:, j] for j in pa])
            assert np.all(np.abs(X.T @ r) < 1e-8 * data.n)

    def test_matches_textbook_ols_variance(self, rng):
        n = 60
        X = rng.normal(size=(n, 2))
        y = 0.5 * X[:, 0] - 0.7 * X[:, 1] + rng.normal(size=n)
        data = Dataset("ABC", np.column_stack([X, y]))
        _, est = fit_mle(Dag.from_labels("ABC", [("A", "C"), ("B", "C")]), data)
        design = np.column_stack([np.ones(n), X])
        beta, rss, *_ = np.linalg.lstsq(design, y, rcond=None)
        cov = rss[0] / (n - 3) * np.linalg.inv(design.T @ design)
        by_parent = {e.parent: e for e in est}
        for k, j in enumerate((0, 1), start=1):
            assert by_parent[j].value == pytest.approx(beta[k], rel=1e-10)
            assert by_parent[j].variance == pytest.approx(cov[k, k], rel=1e-10)

    def test_collinear_raises(self, rng):
        a = rng.normal(size=20)
        data = Dataset("ABC", np.column_stack([a, a, rng.normal(size=20)]))
        with pytest.raises(NumericalError):
            fit_mle(Dag.from_labels("ABC", [("A", "C"), ("B", "C")]), data)

    def test_too_few_rows(self):
        data = Dataset("AB", [[0.0, 1.0], [1.0, 3.0]])
        with pytest.raises(NumericalError):
            fit_mle(Dag.from_labels("AB", [("A", "B")]), data)


def test_coefficient_variance_floor():
    assert CoefficientEstimate(1, 0, 0.5, 0.0).variance == 1e-12
