import numpy as np
import pytest

from edgereg.evaluate import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_KAPPA_GRID,
    RocPoint,
    auc_univariate,
    bauc,
    best_univariate_aucs,
    confusion,
    point_at_fpr,
    roc_sweep,
)

from oracles import bauc_binned_oracle
from test_inference import make_draws


def pts(pairs, graph="g", kappa=0.0, alpha=0.5):
    return [RocPoint(graph=graph, kappa=kappa, alpha=alpha, fpr=f, tpr=t)
            for f, t in pairs]


class TestConfusion:
    def test_perfect(self):
        assert confusion({1, 2}, {1, 2}, set(range(10))) == (1.0, 0.0)

    def test_select_all(self):
        assert confusion(set(range(10)), {1, 2}, set(range(10))) == (1.0, 1.0)

    def test_counting(self):
        # universe 10, truth 4, selected 5 with 3 correct -> (0.75, 2/6)
        tpr, fpr = confusion({0, 1, 2, 8, 9}, {0, 1, 2, 3}, set(range(10)))
        assert tpr == pytest.approx(0.75)
        assert fpr == pytest.approx(2.0 / 6.0)

    def test_empty_truth_rejected(self):
        with pytest.raises(ValueError):
            confusion({1}, set(), set(range(5)))

    def test_adding_true_edge_never_lowers_tpr(self):
        r = np.random.default_rng(0)
        for _ in range(200):
            universe = set(range(20))
            truth = set(map(int, r.choice(20, size=6, replace=False)))
            selected = set(map(int, r.choice(20, size=8, replace=False)))
            extra = truth - selected
            t0, _ = confusion(selected, truth, universe)
            if extra:
                t1, _ = confusion(selected | {next(iter(extra))}, truth, universe)
                assert t1 >= t0


class TestBauc:
    def test_perfect(self):
        assert bauc(pts([(0.0, 1.0)])) == pytest.approx(1.0)

    def test_chance_line(self):
        diag = [(f, f) for f in np.linspace(0, 1, 400)]
        assert bauc(pts(diag)) == pytest.approx(0.5, abs=0.01)

    def test_matches_binning_oracle(self):
        r = np.random.default_rng(1)
        for trial in range(200):
            n = int(r.integers(1, 40))
            fprs = r.random(n)
            tprs = r.random(n)
            got = bauc(pts(list(zip(fprs, tprs))))
            want = bauc_binned_oracle(fprs, tprs)
            assert got == pytest.approx(want, abs=1e-12), f"trial {trial}"

    def test_duplicate_points_invariant(self):
        base = [(0.1, 0.6), (0.5, 0.9), (0.8, 0.95)]
        assert bauc(pts(base)) == bauc(pts(base + base))

    def test_bounds(self):
        r = np.random.default_rng(2)
        for _ in range(100):
            n = int(r.integers(1, 30))
            val = bauc(pts(list(zip(r.random(n), r.random(n)))))
            assert 0.0 <= val <= 1.0

    def test_single_point_per_bin_equals_trapezoid(self):
        # points already at interior bin centers, corners unreached
        fprs = np.array([0.015, 0.205, 0.455, 0.755])
        tprs = np.array([0.3, 0.6, 0.8, 0.9])
        got = bauc(pts(list(zip(fprs, tprs))))
        xs = np.concatenate([[0.0], fprs, [1.0]])
        ys = np.concatenate([[0.0], tprs, [1.0]])
        assert got == pytest.approx(np.trapezoid(ys, xs), abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            bauc([])


class TestAucUnivariate:
    def test_perfect(self):
        assert auc_univariate([0.0, 0.0], [0.5, 1.0]) == pytest.approx(1.0)

    def test_chance(self):
        f = np.linspace(0, 1, 200)
        assert auc_univariate(f, f) == pytest.approx(0.5, abs=0.01)

    def test_monotonization(self):
        # a dip in tpr is lifted by the upper staircase
        val = auc_univariate([0.1, 0.2, 0.3], [0.8, 0.5, 0.9])
        staircase = auc_univariate([0.1, 0.2, 0.3], [0.8, 0.8, 0.9])
        assert val == pytest.approx(staircase)


class TestRocSweep:
    def _draws(self):
        r = np.random.default_rng(3)
        rho = np.zeros((40, 2, 10))
        # strong signal on edges 0..3 of graph level 0; 2..5 of level 1
        rho[:, 0, :4] = 0.6 + 0.05 * r.standard_normal((40, 4))
        rho[:, 1, 2:6] = -0.5 + 0.05 * r.standard_normal((40, 4))
        rho += 0.02 * r.standard_normal(rho.shape)
        return make_draws(rho)

    def test_corners(self):
        draws = self._draws()
        truth = {"normal": frozenset({0, 1, 2, 3}), "tumor": frozenset({2, 3, 4, 5})}
        levels = {"normal": 0, "tumor": 1}
        points = roc_sweep(draws, truth, levels, kappa_grid=(0.0, 0.3),
                           alpha_grid=(0.01, 0.99))
        for graph in truth:
            gp = {(p.kappa, p.alpha): p for p in points if p.graph == graph}
            loose = gp[(0.0, 0.99)]
            strict = gp[(0.3, 0.01)]
            assert loose.tpr >= strict.tpr
            assert loose.fpr >= strict.fpr
            assert loose.tpr == max(p.tpr for p in points if p.graph == graph)

    def test_perfect_oracle_draws_give_unit_bauc(self):
        # draws that carry the truth exactly: bAUC = 1
        rho = np.zeros((30, 1, 10))
        truth_edges = frozenset({1, 4, 7})
        for e in truth_edges:
            rho[:, 0, e] = 0.8
        draws = make_draws(rho)
        points = roc_sweep(draws, {"g": truth_edges}, {"g": 0})
        assert bauc([p for p in points if p.graph == "g"]) == pytest.approx(1.0)

    def test_grid_validation(self):
        draws = self._draws()
        with pytest.raises(ValueError):
            roc_sweep(draws, {"g": frozenset({1})}, {"g": 0}, kappa_grid=())

    def test_default_grids(self):
        assert DEFAULT_KAPPA_GRID[0] == 0.0
        assert DEFAULT_KAPPA_GRID[-1] == pytest.approx(0.30)
        assert len(DEFAULT_KAPPA_GRID) == 16
        assert DEFAULT_ALPHA_GRID[0] == pytest.approx(0.01)
        assert DEFAULT_ALPHA_GRID[-1] == pytest.approx(0.99)
        assert len(DEFAULT_ALPHA_GRID) == 99


class TestBestUnivariate:
    def test_reports_both_sweeps(self):
        points = []
        for kappa in (0.0, 0.1):
            for alpha, (f, t) in zip((0.1, 0.5, 0.9),
                                     [(0.05, 0.4), (0.2, 0.7), (0.6, 0.95)]):
                points.append(RocPoint("g", kappa, alpha, f + kappa, t))
        auc1, auc2 = best_univariate_aucs(points, "g")
        assert 0.0 <= auc2 <= 1.0 and 0.0 <= auc1 <= 1.0

    def test_missing_graph(self):
        with pytest.raises(ValueError):
            best_univariate_aucs([], "g")


class TestPointAtFpr:
    def test_closest_selection(self):
        points = pts([(0.05, 0.5), (0.11, 0.7), (0.3, 0.9)])
        assert point_at_fpr(points, "g", 0.1).tpr == 0.7

    def test_tie_prefers_higher_tpr(self):
        points = pts([(0.09, 0.5), (0.11, 0.8)])
        assert point_at_fpr(points, "g", 0.1).tpr == 0.8
