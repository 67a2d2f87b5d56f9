"""Interpretability analyses against independent oracles.

Oracles: naive per-sample loops for dependence and activation stats,
central finite differences for saliency, numpy correlation for node
alignment, scikit-learn for regression metrics, and a hand-rolled
average-rank Spearman for monotonicity scores.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from sklearn.metrics import mean_absolute_error, mean_squared_error, r2_score

from kantrust.interchange import Normalizer
from kantrust.interpret import (
    DIRECTION_FLAT,
    DIRECTION_NEGATIVE,
    DIRECTION_POSITIVE,
    STRENGTH_MODERATE,
    STRENGTH_STRONG,
    STRENGTH_WEAK,
    PdpCurve,
    classify_monotonicity,
    edge_importance,
    feature_edge_totals,
    feature_stats,
    fidelity_bins,
    influence_scores,
    influence_table,
    monotonicity,
    node_stats,
    partial_dependence,
    quantile_bin_edges,
    regression_metrics,
    saliency,
    spline_activation_stats,
)
from kantrust.kan import init_model, predict_batch, predict
from kantrust.spline import SplineEdge, eval_edge


def make_model(seed=0, d=4, hidden=3, grid=3, degree=3, pad=0.0):
    """Random small model whose normalizer spans the unit cube (plus pad)."""
    rng = np.random.default_rng(seed)
    n = Normalizer(mins=np.full(d, -pad), maxs=np.full(d, 1.0 + pad))
    names = tuple(f"f{k}" for k in range(d))
    return init_model(n, rng, hidden=hidden, grid=grid, degree=degree,
                      feature_names=names, seed=seed), rng


def naive_pdp(m, data, k, grid_size):
    col = data[:, k]
    grid = np.linspace(col.min(), col.max(), grid_size)
    values = []
    for g in grid:
        acc = 0.0
        for row in data:
            swept = row.copy()
            swept[k] = g
            acc += predict(m, swept)
        values.append(acc / len(data))
    return grid, np.array(values)


class TestPartialDependence:
    def test_matches_naive_loop(self):
        m, rng = make_model(seed=1)
        data = rng.random((40, 4))
        for k in range(4):
            curve = partial_dependence(m, data, k, grid_size=9)
            grid, values = naive_pdp(m, data, k, 9)
            assert_allclose(curve.grid, grid, atol=1e-15)
            assert_allclose(curve.values, values, atol=1e-12)
            assert curve.delta == pytest.approx(values[-1] - values[0],
                                                abs=1e-12)

    def test_grid_strictly_increasing(self):
        m, rng = make_model(seed=2)
        data = rng.random((30, 4))
        curve = partial_dependence(m, data, 0, grid_size=17)
        assert np.all(np.diff(curve.grid) > 0)
        assert len(curve.grid) == 17

    def test_degenerate_feature_single_point(self):
        m, rng = make_model(seed=3)
        data = rng.random((30, 4))
        data[:, 2] = 0.4
        curve = partial_dependence(m, data, 2, grid_size=16)
        assert len(curve.grid) == 1
        assert curve.delta == 0.0
        assert curve.values[0] == pytest.approx(
            predict_batch(m, data).mean())

    def test_rejects_empty_data_and_tiny_grid(self):
        m, _ = make_model()
        with pytest.raises(ValueError):
            partial_dependence(m, np.empty((0, 4)), 0)
        with pytest.raises(ValueError):
            partial_dependence(m, np.random.rand(5, 4), 0, grid_size=1)


class TestSplineActivation:
    def test_matches_naive_loop(self):
        m, rng = make_model(seed=4)
        data = rng.random((25, 4))
        stats = spline_activation_stats(m, data)
        xn = m.normalizer.transform(data)
        expected = np.zeros(4)
        for k in range(4):
            acc = 0.0
            for j in range(m.hidden):
                edge = SplineEdge(m.knots, m.coeffs[j, k])
                for i in range(25):
                    acc += abs(eval_edge(edge, xn[i, k]))
            expected[k] = acc / (25 * m.hidden)
        assert_allclose(stats, expected, atol=1e-12)

    def test_zero_model_zero_activation(self):
        m, rng = make_model(seed=5)
        m.coeffs[:] = 0.0
        data = rng.random((10, 4))
        assert_allclose(spline_activation_stats(m, data), 0.0)


class TestSaliency:
    def test_matches_finite_differences(self):
        # data kept h inside the normalizer box so clamping never kinks
        # the finite-difference stencil
        m, rng = make_model(seed=6, pad=0.05)
        data = rng.random((30, 4))
        h = 1e-6
        sal = saliency(m, data)
        for k in range(4):
            up = data.copy()
            up[:, k] += h
            down = data.copy()
            down[:, k] -= h
            grad = (predict_batch(m, up) - predict_batch(m, down)) / (2 * h)
            assert_allclose(sal[k], np.abs(grad).mean(), atol=1e-7)

    def test_degenerate_feature_zero_saliency(self):
        m, rng = make_model(seed=7)
        m.normalizer.maxs[1] = m.normalizer.mins[1]
        data = rng.random((12, 4))
        data[:, 1] = m.normalizer.mins[1]
        assert saliency(m, data)[1] == 0.0

    def test_raw_units_scale_inversely_with_span(self):
        # stretching a feature's raw span by 10x divides its mean
        # gradient in raw units by 10
        m, rng = make_model(seed=8)
        data = rng.random((20, 4))
        sal = saliency(m, data)
        wide = Normalizer(mins=m.normalizer.mins.copy(),
                          maxs=m.normalizer.maxs.copy())
        wide.maxs[0] = wide.mins[0] + 10.0 * (wide.maxs[0] - wide.mins[0])
        m2 = init_model(wide, np.random.default_rng(8), hidden=m.hidden,
                        grid=3, degree=3, feature_names=m.feature_names,
                        seed=8)
        m2.coeffs = m.coeffs.copy()
        m2.out_weights = m.out_weights.copy()
        m2.out_bias = m.out_bias
        data2 = data.copy()
        data2[:, 0] = wide.mins[0] + (data[:, 0] - m.normalizer.mins[0]) * 10.0
        assert saliency(m2, data2)[0] == pytest.approx(sal[0] / 10.0)


class TestEdgeImportance:
    def test_l2_norm_per_edge(self):
        m, _ = make_model(seed=9)
        em = edge_importance(m)
        assert em.shape == (m.hidden, m.input_dim)
        assert em[1, 2] == pytest.approx(np.linalg.norm(m.coeffs[1, 2]))

    def test_zero_iff_all_coefficients_zero(self):
        m, _ = make_model(seed=10)
        m.coeffs[0, 0, :] = 0.0
        em = edge_importance(m)
        assert em[0, 0] == 0.0
        assert np.all(em.ravel()[1:] >= 0)
        assert em[0, 1] > 0.0

    def test_totals_are_column_sums(self):
        m, _ = make_model(seed=11)
        em = edge_importance(m)
        assert_allclose(feature_edge_totals(em), em.sum(axis=0))


class TestNodeStats:
    def test_matches_numpy_correlation(self):
        m, rng = make_model(seed=12)
        data = rng.random((60, 4))
        ns = node_stats(m, data)
        from kantrust.kan import forward_batch
        _, hidden = forward_batch(m, data)
        assert_allclose(ns.activation, np.abs(hidden).mean(axis=0))
        assert_allclose(ns.importance,
                        np.abs(m.out_weights) * hidden.std(axis=0))
        for j in range(m.hidden):
            corr = [np.corrcoef(hidden[:, j], data[:, k])[0, 1]
                    for k in range(4)]
            k_best = int(np.argmax(np.abs(corr)))
            assert ns.top_feature[j] == m.feature_names[k_best]
            assert ns.correlation[j] == pytest.approx(corr[k_best])
            assert ns.correlation_defined[j]

    def test_constant_unit_flagged_undefined(self):
        m, rng = make_model(seed=13)
        m.coeffs[0, :, :] = 0.0  # unit 0 output is constant zero
        data = rng.random((30, 4))
        ns = node_stats(m, data)
        assert not ns.correlation_defined[0]
        assert ns.correlation[0] == 0.0
        assert ns.importance[0] == 0.0


class TestInfluence:
    def test_mean_of_minmaxed_columns(self):
        sa = [1.0, 2.0, 3.0]
        sal = [0.0, 1.0, 0.5]
        pd = [-1.0, 1.0, 0.0]
        em = [10.0, 30.0, 20.0]
        scores = influence_scores(sa, sal, pd, em)
        expected = np.mean([[0, 0.5, 1], [0, 1, 0.5],
                            [0, 1, 0.5], [0, 1, 0.5]], axis=0)
        assert_allclose(scores, expected)

    def test_invariant_to_positive_affine_rescaling(self):
        rng = np.random.default_rng(14)
        cols = [rng.normal(size=7) for _ in range(4)]
        base = influence_scores(*cols)
        rescaled = influence_scores(
            cols[0] * 3.0 + 5.0, cols[1] * 0.01 - 2.0,
            cols[2] * 700.0, cols[3] + 1e6)
        assert_allclose(rescaled, base, atol=1e-12)

    def test_degenerate_column_contributes_half(self):
        scores = influence_scores([1.0, 1.0], [0.0, 1.0],
                                  [0.0, 1.0], [0.0, 1.0])
        assert_allclose(scores, [(0.5 + 0.0) / 4, (0.5 + 3.0) / 4])

    def test_bounds(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            scores = influence_scores(*(rng.normal(size=7) for _ in range(4)))
            assert np.all(scores >= 0.0) and np.all(scores <= 1.0)

    def test_table_assembly(self):
        m, rng = make_model(seed=16)
        data = rng.random((50, 4))
        fs, curves = feature_stats(m, data, pdp_grid=8)
        assert len(curves) == 4
        em = edge_importance(m)
        it = influence_table(fs, em)
        assert_allclose(it.edge_importance, em.sum(axis=0))
        assert_allclose(it.influence, influence_scores(
            fs.spline_activation, fs.saliency, fs.pdp_delta, em.sum(axis=0)))


class TestRegressionMetrics:
    def test_matches_sklearn(self):
        rng = np.random.default_rng(17)
        y = rng.random(200)
        p = y + rng.normal(0, 0.05, 200)
        r2, mae, rmse = regression_metrics(y, p)
        assert r2 == pytest.approx(r2_score(y, p), abs=1e-12)
        assert mae == pytest.approx(mean_absolute_error(y, p), abs=1e-12)
        assert rmse == pytest.approx(
            np.sqrt(mean_squared_error(y, p)), abs=1e-12)

    def test_constant_target_undefined_r2(self):
        r2, mae, rmse = regression_metrics(np.full(10, 0.5),
                                           np.random.default_rng(0).random(10))
        assert r2 is None
        assert rmse >= mae

    def test_perfect_fit(self):
        y = np.random.default_rng(1).random(50)
        r2, mae, rmse = regression_metrics(y, y)
        assert r2 == 1.0 and mae == 0.0 and rmse == 0.0


class TestFidelityBins:
    def _fixture(self, seed=18, n=600):
        m, rng = make_model(seed=seed)
        data = rng.random((n, 4))
        targets = predict_batch(m, data) + rng.normal(0, 0.05, n)
        return m, data, targets

    def test_bin_counts_sum_to_n(self):
        m, data, targets = self._fixture()
        fr = fidelity_bins(m, data, targets, n_bins=5)
        for name in m.feature_names:
            total = sum(b.n for b in fr.bins if b.feature == name)
            assert total == fr.n == len(targets)

    def test_rmse_at_least_mae_everywhere(self):
        m, data, targets = self._fixture()
        fr = fidelity_bins(m, data, targets, n_bins=5)
        assert fr.rmse >= fr.mae
        for b in fr.bins:
            assert b.rmse >= b.mae

    def test_per_bin_metrics_match_sklearn(self):
        m, data, targets = self._fixture(seed=19)
        preds = predict_batch(m, data)
        fr = fidelity_bins(m, data, targets, n_bins=4)
        checked = 0
        for b in fr.bins:
            if b.feature != m.feature_names[2] or b.n < 2:
                continue
            col = data[:, 2]
            edges, slots = quantile_bin_edges(col, 4)
            j = slots.index(b.bin_index)
            member = np.searchsorted(edges[1:-1], col, side="left")
            mask = member == j
            assert b.n == mask.sum()
            assert b.r2 == pytest.approx(r2_score(targets[mask], preds[mask]))
            assert b.mae == pytest.approx(
                mean_absolute_error(targets[mask], preds[mask]))
            checked += 1
        assert checked == 4

    def test_linear_interpolation_quantile_counts(self):
        # distinct values split 9098 samples into alternating bin sizes
        m, _ = make_model(seed=20)
        rng = np.random.default_rng(0)
        data = rng.random((9098, 4))
        targets = predict_batch(m, data)
        fr = fidelity_bins(m, data, targets, n_bins=5)
        counts = [b.n for b in fr.bins if b.feature == m.feature_names[0]]
        assert counts == [1820, 1819, 1820, 1819, 1820]

    def test_duplicate_edges_merge_keeping_last_slot(self):
        # a heavy spike at zero collapses the first two quantile edges,
        # so surviving bins are indexed from 1 and counts still sum to N
        m, rng = make_model(seed=21)
        n = 1000
        data = rng.random((n, 4))
        data[:350, 0] = 0.0
        data[:, 0] = np.round(data[:, 0] * 79)
        targets = predict_batch(m, data)
        fr = fidelity_bins(m, data, targets, n_bins=5)
        bins0 = [b for b in fr.bins if b.feature == m.feature_names[0]]
        assert [b.bin_index for b in bins0] == [1, 2, 3, 4]
        assert bins0[0].bin_lo == 0.0
        assert sum(b.n for b in bins0) == n

    def test_boundary_value_joins_lower_bin(self):
        m, _ = make_model(seed=22)
        edges, slots = quantile_bin_edges(np.arange(100, dtype=float), 5)
        member = np.searchsorted(edges[1:-1],
                                 np.array([edges[1]]), side="left")
        assert member[0] == 0

    def test_singleton_bins_have_undefined_r2(self):
        m, rng = make_model(seed=23)
        data = rng.random((5, 4))
        targets = rng.random(5)
        fr = fidelity_bins(m, data, targets, n_bins=5)
        for b in fr.bins:
            if b.n < 2:
                assert b.r2 is None

    def test_constant_feature_single_bin(self):
        m, rng = make_model(seed=24)
        data = rng.random((50, 4))
        data[:, 3] = 0.25
        targets = rng.random(50)
        fr = fidelity_bins(m, data, targets, n_bins=5)
        bins3 = [b for b in fr.bins if b.feature == m.feature_names[3]]
        assert len(bins3) == 1
        assert bins3[0].n == 50

    def test_length_mismatch_rejected(self):
        m, rng = make_model(seed=25)
        with pytest.raises(ValueError):
            fidelity_bins(m, rng.random((10, 4)), rng.random(9))


def manual_spearman(a, b):
    """Average-rank Spearman via Pearson on ranks."""
    def ranks(v):
        order = np.argsort(v, kind="stable")
        r = np.empty(len(v))
        i = 0
        sv = v[order]
        while i < len(v):
            j = i
            while j + 1 < len(v) and sv[j + 1] == sv[i]:
                j += 1
            r[order[i : j + 1]] = (i + j) / 2.0 + 1.0
            i = j + 1
        return r

    ra, rb = ranks(np.asarray(a)), ranks(np.asarray(b))
    ra -= ra.mean()
    rb -= rb.mean()
    return float((ra @ rb) / np.sqrt((ra @ ra) * (rb @ rb)))


class TestMonotonicity:
    @pytest.mark.parametrize("score,direction,strength", [
        (0.0, DIRECTION_FLAT, STRENGTH_WEAK),
        (0.049, DIRECTION_FLAT, STRENGTH_WEAK),
        (-0.049, DIRECTION_FLAT, STRENGTH_WEAK),
        (0.05, DIRECTION_POSITIVE, STRENGTH_WEAK),
        (-0.05, DIRECTION_NEGATIVE, STRENGTH_WEAK),
        (0.299, DIRECTION_POSITIVE, STRENGTH_WEAK),
        (0.30, DIRECTION_POSITIVE, STRENGTH_MODERATE),
        (-0.45, DIRECTION_NEGATIVE, STRENGTH_MODERATE),
        (0.699, DIRECTION_POSITIVE, STRENGTH_MODERATE),
        (0.70, DIRECTION_POSITIVE, STRENGTH_STRONG),
        (-0.99, DIRECTION_NEGATIVE, STRENGTH_STRONG),
        (1.0, DIRECTION_POSITIVE, STRENGTH_STRONG),
    ])
    def test_threshold_boundaries(self, score, direction, strength):
        result = classify_monotonicity(score)
        assert result.direction == direction
        assert result.strength == strength
        assert result.score == score

    def test_score_matches_manual_spearman(self):
        rng = np.random.default_rng(26)
        for _ in range(10):
            grid = np.sort(rng.random(32))
            values = rng.normal(size=32)
            curve = PdpCurve(0, grid, values, 0.0)
            assert monotonicity(curve).score == pytest.approx(
                manual_spearman(grid, values), abs=1e-12)

    def test_monotone_curves_score_one(self):
        grid = np.linspace(0, 1, 20)
        up = PdpCurve(0, grid, np.exp(grid), 0.0)
        down = PdpCurve(0, grid, -np.sqrt(grid), 0.0)
        assert monotonicity(up).score == 1.0
        assert monotonicity(down).score == -1.0

    def test_constant_curve_flat(self):
        grid = np.linspace(0, 1, 20)
        result = monotonicity(PdpCurve(0, grid, np.full(20, 0.3), 0.0))
        assert result.score == 0.0
        assert result.direction == DIRECTION_FLAT

    def test_single_point_curve_flat(self):
        result = monotonicity(PdpCurve(0, np.array([0.5]),
                                       np.array([1.0]), 0.0))
        assert result.direction == DIRECTION_FLAT
