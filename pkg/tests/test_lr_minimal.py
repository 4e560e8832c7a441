import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minimpute import (
    CapExceeded,
    IncompleteMatrix,
    LabelVector,
    approx_minimal_features,
    certain_model_check_lr,
    exact_minimal_features_lr,
    train_ols,
)
from minimpute.lr_minimal import masked_cosine, relevance, subset_passes

from instances import random_certain_lr_instance, random_repair, two_sets_fixture

nan = np.nan


def reg(y):
    return LabelVector(np.asarray(y, dtype=float), "regression")


def test_check_exists():
    X = IncompleteMatrix.from_arrays([[1, 0], [0, nan]], -1, 1)
    v = certain_model_check_lr(X, reg([1, 0]))
    assert v.exists
    np.testing.assert_allclose(v.coef(), [1, 0])
    assert v.to_dict()["coef"] == [1.0, 0.0]


def test_check_fails_on_missing_row_residual():
    X = IncompleteMatrix.from_arrays([[1, 0], [0, nan]], -1, 1)
    v = certain_model_check_lr(X, reg([1, 1]))
    assert not v.exists
    assert v.violations[0]["kind"] == "nonzero residual at missing row"
    assert v.coef() is None


def test_check_complete_matrix_is_plain_ols():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(6, 2))
    y = rng.normal(size=6)
    v = certain_model_check_lr(IncompleteMatrix.from_arrays(A), reg(y))
    assert v.exists
    np.testing.assert_allclose(v.coef(), train_ols(A, y).w)


def test_check_flags_nonorthogonal_observed_part():
    X = IncompleteMatrix.from_arrays([[1, 0], [0, 1], [0, nan]], -1, 1)
    v = certain_model_check_lr(X, reg([1, 1, 0]))
    assert [e["kind"] for e in v.violations] == ["observed-part nonorthogonal"]


def test_two_sets_exact_has_two_minimal_sets():
    X, y = two_sets_fixture()
    rep = exact_minimal_features_lr(X, y)
    assert len(rep.members) == 1
    assert rep.alternatives == [[1], [2]]


def test_two_sets_approx_picks_one_of_them():
    X, y = two_sets_fixture()
    rep = approx_minimal_features(X, y, epsilon=0.1)
    assert rep.members in ([1], [2])
    assert rep.verdict["exists"]


def test_spanned_target_needs_nothing():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(8, 2))
    Z = np.where(rng.random((8, 2)) < 0.3, nan, rng.normal(size=(8, 2)))
    X = IncompleteMatrix.from_arrays(np.column_stack([A, Z]), -5, 5)
    y = reg(A @ [1.5, -2.0])
    for eps in (1e-6, 0.1, 0.9):
        assert approx_minimal_features(X, y, epsilon=eps).members == []
    assert exact_minimal_features_lr(X, y).members == []


def test_complete_matrix_exact_is_empty():
    rep = exact_minimal_features_lr(IncompleteMatrix.from_arrays(np.eye(3)), reg([1, 2, 3]))
    assert rep.members == [] and rep.alternatives == [[]]


def test_every_feature_needed():
    rng = np.random.default_rng(2)
    full = rng.normal(size=(10, 3))
    values = full.copy()
    values[0, 0] = values[1, 1] = values[2, 2] = nan
    X = IncompleteMatrix.from_arrays(values, full - 1, full + 1)
    y = reg(full @ [1.0, 1.0, 1.0])
    rep = exact_minimal_features_lr(X, y)
    assert rep.members == [0, 1, 2]
    # independent re-check: with any proper subset imputed at midpoints, the
    # residual does not vanish on the remaining missing rows
    for S in ([], [0], [1], [2], [0, 1], [0, 2], [1, 2]):
        cells = {c: 0.5 * (X.lo[c] + X.hi[c]) for c in X.missing_cells if c.col in S}
        assert not certain_model_check_lr(X.fill(cells), y).exists


def test_exact_cap():
    X = IncompleteMatrix.from_arrays(np.array([[nan, nan, nan], [1, 2, 3]]), -1, 1)
    with pytest.raises(CapExceeded):
        exact_minimal_features_lr(X, reg([1, 2]), cap=2)


def test_epsilon_validation():
    X, y = two_sets_fixture()
    for eps in (0.0, 1.5):
        with pytest.raises(ValueError):
            approx_minimal_features(X, y, epsilon=eps)


def test_cosines():
    z = np.array([1.0, nan, 0.0])
    r = np.array([1.0, 1.0, 0.0])
    assert masked_cosine(z, r) == pytest.approx(1.0)
    assert relevance(z, r) == pytest.approx(1.0)
    assert relevance(np.array([0.0, nan]), np.array([1.0, 0.0])) == 0.0
    assert relevance(np.array([1.0, 2.0]), np.zeros(2)) == 0.0
    c = np.array([1.0, 2.0, 3.0])
    assert relevance(c, np.array([3.0, 0.0, -1.0])) == pytest.approx(0.0)


def test_report_evidence():
    X, y = two_sets_fixture()
    rep = approx_minimal_features(X, y)
    d = rep.to_dict()
    assert d["kind"] == "features"
    ev = d["members"][0]["evidence"]
    assert ev["selection_order"] == 0 and 0 < ev["cosine_at_selection"] <= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_property_checker_soundness(seed):
    rng = np.random.default_rng(seed)
    X, y = random_certain_lr_instance(rng)
    v = certain_model_check_lr(X, y)
    assert v.exists
    for _ in range(10):
        w = train_ols(random_repair(X, rng), y).w
        assert np.abs(w - v.coef()).max() <= 10 * 1e-8 * max(1.0, np.abs(v.coef()).max())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_property_small_epsilon_yields_certain_model(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(5, 31)), int(rng.integers(2, 7))
    full = rng.normal(size=(n, d))
    values = full.copy()
    for j in rng.choice(d, size=min(3, d - 1), replace=False):
        values[rng.random(n) < 0.3, j] = nan
    X = IncompleteMatrix.from_arrays(values, full - 1, full + 1)
    y = reg(rng.normal(size=n))
    rep = approx_minimal_features(X, y, epsilon=1e-9, placeholder="midpoint")
    assert rep.verdict["exists"]
    norms = rep.stats["residual_norms"]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_property_unique_minimal_set_with_independent_columns(seed):
    rng = np.random.default_rng(seed)
    n = 12
    full = rng.normal(size=(n, 4))
    values = full.copy()
    values[rng.choice(n, 2, replace=False), 2] = nan
    values[rng.choice(n, 2, replace=False), 3] = nan
    X = IncompleteMatrix.from_arrays(values, full - 1, full + 1)
    y = reg(full[:, :3] @ rng.normal(size=3))
    rep = exact_minimal_features_lr(X, y, seed=seed)
    assert len(rep.alternatives) == 1


def test_subset_passes_is_deterministic():
    X, y = two_sets_fixture()
    assert subset_passes(X, y, [1], seed=3) == subset_passes(X, y, [1], seed=3)
