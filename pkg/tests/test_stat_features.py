import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msie.errors import AllConstant, EmptySelection, FoldTooSmall, NonFinite
from msie.stat_features import (
    LassoModel,
    StatFeatureMatrix,
    alpha_grid,
    alpha_max,
    assemble_stat_matrix,
    fit_standardizer,
    kkt_violation,
    lasso_cv,
    lasso_fit,
    pvalue_rank,
    select_features,
    soft_threshold,
)


def sfm(values, names=None):
    values = np.asarray(values, dtype=float)
    names = names or [f"c{j}" for j in range(values.shape[1])]
    return StatFeatureMatrix([f"L{i}" for i in range(values.shape[0])], values, names)


def centered_orthonormal(n, d, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, d))
    A -= A.mean(axis=0)
    Q, _ = np.linalg.qr(A)
    return Q


# ---------------------------------------------------------------- standardizer

def test_standardizer_hand_values():
    X = sfm([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]], ["a", "const"])
    sc = fit_standardizer(X)
    assert sc.constant == ["const"]
    assert sc.column_names == ["a"]
    # population stdev of [1,2,3] is sqrt(2/3); 1/sqrt(2/3) = 1.224744871...
    np.testing.assert_allclose(sc.transform(X).values[:, 0], [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-12)


def test_standardizer_moments_and_idempotence():
    rng = np.random.default_rng(0)
    X = sfm(rng.normal(3.0, 2.0, size=(50, 4)))
    Z = fit_standardizer(X).transform(X)
    assert np.abs(Z.values.mean(axis=0)).max() < 1e-10
    np.testing.assert_allclose(Z.values.std(axis=0), 1.0, atol=1e-12)
    Z2 = fit_standardizer(Z).transform(Z)
    np.testing.assert_allclose(Z2.values, Z.values, atol=1e-10)


def test_standardizer_all_constant():
    with pytest.raises(AllConstant):
        fit_standardizer(sfm([[1.0, 2.0], [1.0, 2.0]]))


def test_assemble_drops_sparse_columns_and_imputes_train_median():
    from msie.corpus_io import ListingRecord, ListingTable
    import datetime as dt

    nan = float("nan")
    rows = [(1.0, nan, 10.0), (2.0, nan, nan), (3.0, 1.0, 30.0), (4.0, nan, 40.0)]
    recs = [ListingRecord(f"L{i}", "H", dt.date(2018, 1, 1), 0, 0, 1.0, r) for i, r in enumerate(rows)]
    table = ListingTable(tuple(recs), ("a", "mostly_missing", "c"))
    train, (same,) = assemble_stat_matrix(table, [table])
    assert train.column_names == ["a", "c"]
    assert train.values[1, 1] == 30.0  # median of 10, 30, 40
    np.testing.assert_array_equal(train.values, same.values)


# ---------------------------------------------------------------- lasso

def test_alpha_zero_is_ols():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    y = np.array([1.0, 2.0, 2.5])
    ols = np.linalg.lstsq(X, y, rcond=None)[0]
    m = lasso_fit(X, y, 0.0, tol=1e-12, fit_intercept=False)
    np.testing.assert_allclose(m.weights, ols, atol=1e-8)


def test_critical_alpha_gives_zero_model():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 5))
    y = X @ np.array([1.0, -2.0, 0.0, 0.5, 0.0]) + rng.normal(size=40)
    amax = alpha_max(X, y)
    Xc, yc = X - X.mean(0), y - y.mean()
    assert amax == pytest.approx(np.abs(Xc.T @ yc).max())
    m = lasso_fit(X, y, amax)
    assert np.all(m.weights == 0.0)
    assert m.intercept == pytest.approx(y.mean())
    assert np.all(lasso_fit(X, y, amax * 1.01).weights == 0.0)
    assert np.any(lasso_fit(X, y, amax * 0.99).weights != 0.0)


def test_orthonormal_soft_threshold_example():
    Q = centered_orthonormal(64, 3, seed=2)
    y = Q @ np.array([2.0, -0.3, 0.7])
    m = lasso_fit(Q, y, 0.5)
    # OLS weights are exactly (2, -0.3, 0.7); soft-thresholding by 0.5 -> (1.5, 0, 0.2)
    np.testing.assert_allclose(m.weights, [1.5, 0.0, 0.2], atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), alpha=st.floats(0.0, 3.0))
def test_soft_threshold_equivalence(seed, alpha):
    rng = np.random.default_rng(seed)
    Q = centered_orthonormal(40, 6, seed)
    y = rng.normal(size=40) * 2
    ols = Q.T @ (y - y.mean())
    m = lasso_fit(Q, y, alpha)
    np.testing.assert_allclose(m.weights, soft_threshold(ols, alpha), atol=1e-6)


def test_kkt_and_objective_descent():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(80, 10))
    X[:, 1] = X[:, 0] + 0.1 * rng.normal(size=80)  # correlated pair
    y = X[:, 0] * 2 - X[:, 3] + rng.normal(size=80)
    for alpha in (0.1, 1.0, 10.0, 40.0):
        m = lasso_fit(X, y, alpha, tol=1e-10)
        assert kkt_violation(X, y, m) < 1e-5
        tr = np.array(m.objective_trace)
        assert np.all(np.diff(tr) <= 1e-9 * np.abs(tr[:-1]))


def test_monotone_sparsity():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(100, 12))
    y = X[:, :4] @ np.array([3.0, -2.0, 1.0, 0.5]) + rng.normal(size=100)
    grid = np.sort(alpha_grid(X, y, 30))
    counts = [int(lasso_fit(X, y, a).selected_mask.sum()) for a in grid]
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_determinism_and_nonfinite():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(30, 4))
    y = rng.normal(size=30)
    a, b = lasso_fit(X, y, 0.3), lasso_fit(X, y, 0.3)
    assert a.weights.tobytes() == b.weights.tobytes() and a.intercept == b.intercept
    X[0, 0] = np.nan
    with pytest.raises(NonFinite):
        lasso_fit(X, y, 0.3)


def test_no_convergence_warns_and_returns_iterate():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(30, 4))
    X[:, 1] = X[:, 0] + 1e-3 * rng.normal(size=30)
    y = rng.normal(size=30)
    with pytest.warns(RuntimeWarning):
        m = lasso_fit(X, y, 0.01, tol=1e-14, max_iter=3)
    assert not m.converged and m.n_iter == 3


# ---------------------------------------------------------------- cv / selection

def test_cv_single_alpha():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(20, 3))
    best, model, _ = lasso_cv(X, rng.normal(size=20), [0.7], k=5)
    assert best == 0.7 and model.alpha == 0.7


def test_cv_pure_noise_prefers_strong_penalty():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(100, 10))
    y = rng.normal(size=100)
    best, _, cv = lasso_cv(X, y, [0.01, 10.0], k=5)
    assert best == 10.0
    assert cv[10.0] < cv[0.01]


def test_cv_exact_linear_target():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(100, 3))
    y = 3.0 * X[:, 0]
    best, model, _ = lasso_cv(X, y, [1e-4, 1e4], k=5)
    assert best == 1e-4
    assert model.weights[0] == pytest.approx(3.0, abs=1e-4)


def test_cv_ties_pick_larger_alpha():
    X = np.random.default_rng(10).normal(size=(20, 2))
    y = np.zeros(20)
    best, _, _ = lasso_cv(X, y, [0.1, 1.0, 5.0], k=4)
    assert best == 5.0


def test_cv_fold_too_small():
    with pytest.raises(FoldTooSmall):
        lasso_cv(np.ones((9, 2)), np.ones(9), [1.0], k=5)


def test_select_features():
    X = sfm(np.arange(12.0).reshape(4, 3), ["a", "b", "c"])
    m = LassoModel(0.1, np.array([0.5, 0.0, -1.0]), 0.0)
    out = select_features(m, X)
    assert out.column_names == ["a", "c"]
    np.testing.assert_array_equal(out.values, X.values[:, [0, 2]])
    full = select_features(LassoModel(0.1, np.ones(3), 0.0), X)
    np.testing.assert_array_equal(full.values, X.values)
    with pytest.raises(EmptySelection):
        select_features(LassoModel(1.0, np.zeros(3), 0.0), X)


def test_pvalue_rank():
    rng = np.random.default_rng(11)
    n = 200
    signal = rng.normal(size=n)
    noise = rng.normal(size=n)
    weak = signal + 3 * rng.normal(size=n)
    X = sfm(np.column_stack([noise, weak, signal]), ["noise", "weak", "signal"])
    ranked = pvalue_rank(X, signal, 3)
    assert ranked[0][0] == "signal" and ranked[0][1] == pytest.approx(0.0, abs=1e-300)
    assert [name for name, _ in ranked] == ["signal", "weak", "noise"]
    assert dict(ranked)["noise"] > 0.01
    assert all(0.0 <= p <= 1.0 for _, p in ranked)
    assert len(pvalue_rank(X, signal, 1)) == 1


def test_pvalue_small_sample_uses_t_distribution():
    from scipy import stats

    rng = np.random.default_rng(12)
    x = rng.normal(size=12)
    y = x + rng.normal(size=12)
    p = pvalue_rank(sfm(x[:, None]), y, 1)[0][1]
    assert p == pytest.approx(stats.linregress(x, y).pvalue, rel=1e-9)
