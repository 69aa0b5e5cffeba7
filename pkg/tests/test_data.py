import math

import numpy as np
import pytest

from sparseselect.data import (
    Dataset,
    GramMatrix,
    TrueModel,
    WeightedGram,
    gram,
    load_csv,
    standardize,
    to_raw_scale,
    weighted_gram,
)
from sparseselect.errors import ConstantColumn, DimensionMismatch
from sparseselect.experiments import DesignSpec, gen_design

from conftest import standardize_raw


def test_standardize_fixed_point():
    raw = np.array([[1.0], [-1.0], [1.0], [-1.0]])
    ds = standardize(raw, np.zeros(4), "real")
    np.testing.assert_allclose(ds.x, raw, atol=1e-15)


def test_standardize_hand_column():
    # (0,0,0,4): centered to (-1,-1,-1,3), 1/n mean square 3, scale 1/sqrt(3)
    raw = np.array([[0.0], [0.0], [0.0], [4.0]])
    ds = standardize(raw, np.zeros(4), "real")
    expected = np.array([-1.0, -1.0, -1.0, 3.0]) / math.sqrt(3.0)
    np.testing.assert_allclose(ds.x[:, 0], expected, atol=1e-14)
    assert abs((ds.x[:, 0] ** 2).mean() - 1.0) < 1e-14


def test_standardize_constant_column():
    raw = np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0], [5.0, 4.0]])
    with pytest.raises(ConstantColumn):
        standardize(raw, np.zeros(4), "real")


def test_standardize_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        standardize(np.eye(4), np.zeros(3), "real")


def test_standardize_idempotent(rng):
    for _ in range(10):
        ds = standardize_raw(rng, 30, 5)
        again = standardize(ds.x, ds.y, "real")
        assert np.abs(again.x - ds.x).max() < 1e-10


def test_standardize_records_back_transform(rng):
    raw = rng.normal(size=(40, 3)) * [2.0, 0.5, 7.0] + [1.0, -4.0, 0.3]
    ds = standardize(raw, np.zeros(40), "real")
    beta = rng.normal(size=3)
    coefs, intercept = to_raw_scale(ds, beta)
    np.testing.assert_allclose(raw @ coefs + intercept, ds.x @ beta, atol=1e-12)


def test_gram_hand_examples():
    ds = Dataset(x=np.array([[1.0, 1.0], [-1.0, -1.0]]), y=np.zeros(2), kind="real")
    np.testing.assert_allclose(gram(ds).sigma_mat, [[1.0, 1.0], [1.0, 1.0]], atol=1e-15)

    ds = Dataset(x=np.array([[1.0, -1.0], [-1.0, 1.0]]), y=np.zeros(2), kind="real")
    np.testing.assert_allclose(gram(ds).sigma_mat, [[1.0, -1.0], [-1.0, 1.0]], atol=1e-15)


def test_gram_orthogonal_design_is_identity(rng):
    x = gen_design(32, 4, DesignSpec(kind="orthogonalized"), 3.0, rng)
    ds = Dataset(x=x, y=np.zeros(32), kind="real")
    np.testing.assert_allclose(gram(ds).sigma_mat, np.eye(4), atol=1e-12)


def test_gram_unit_diagonal_and_psd(rng):
    for _ in range(5):
        ds = standardize_raw(rng, 25, 6)
        g = gram(ds)
        np.testing.assert_allclose(np.diag(g.sigma_mat), 1.0, atol=1e-12)
        assert g.min_eigenvalue >= -1e-8


def test_quadratic_form_nonnegative(rng):
    ds = standardize_raw(rng, 30, 7)
    g = gram(ds).sigma_mat
    for _ in range(20):
        v = rng.normal(size=7)
        quad = v @ g @ v
        direct = np.sum((ds.x @ v) ** 2) / ds.n
        assert quad >= -1e-12
        np.testing.assert_allclose(quad, direct, rtol=1e-10, atol=1e-12)


def test_weighted_gram_at_zero_is_quarter_gram(rng):
    ds = standardize_raw(rng, 20, 4)
    wg = weighted_gram(ds, np.zeros(4))
    assert np.abs(wg.sigma1_mat - 0.25 * gram(ds).sigma_mat).max() < 1e-12
    assert np.all(wg.weights == 0.25)


def test_weighted_gram_brute_force(rng):
    ds = standardize_raw(rng, 4, 3)
    beta = np.array([1.0, 0.0, 0.0])
    wg = weighted_gram(ds, beta)
    # independent triple loop
    expected = np.zeros((3, 3))
    for k in range(3):
        for j in range(3):
            acc = 0.0
            for i in range(4):
                z = float(ds.x[i] @ beta)
                gp = math.exp(z) / (1.0 + math.exp(z)) ** 2
                acc += gp * ds.x[i, k] * ds.x[i, j]
            expected[k, j] = acc / 4.0
    np.testing.assert_allclose(wg.sigma1_mat, expected, atol=1e-12)


def test_weighted_gram_dimension_mismatch(rng):
    ds = standardize_raw(rng, 10, 3)
    with pytest.raises(DimensionMismatch):
        weighted_gram(ds, np.zeros(4))


def test_single_observation_rejected():
    with pytest.raises(DimensionMismatch):
        Dataset(x=np.array([[1.0, -1.0]]), y=np.zeros(1), kind="real")


def test_dataset_invariants_enforced(rng):
    x = gen_design(20, 3, DesignSpec(kind="equicorrelated"), 3.0, rng)
    with pytest.raises(ValueError):
        Dataset(x=x + 0.5, y=np.zeros(20), kind="real")  # not centered
    with pytest.raises(ValueError):
        Dataset(x=x * 2.0, y=np.zeros(20), kind="real")  # wrong scale
    with pytest.raises(ValueError):
        Dataset(x=x, y=np.full(20, 0.5), kind="binary")  # y not in {0,1}
    with pytest.raises(ValueError):
        Dataset(x=x, y=np.zeros(20), kind="real", l_bound=0.1)  # bound violated
    ds = Dataset(x=x, y=np.zeros(20), kind="real")
    assert ds.l_bound == np.abs(x).max()

    bad = x.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError, match="finite"):
        Dataset(x=bad, y=np.zeros(20), kind="real")
    y_inf = np.zeros(20)
    y_inf[3] = np.inf
    with pytest.raises(ValueError, match="finite"):
        Dataset(x=x, y=y_inf, kind="real")


def test_gram_matrix_validation():
    with pytest.raises(ValueError):
        GramMatrix(np.array([[1.0, 0.5], [0.4, 1.0]]))  # asymmetric
    with pytest.raises(ValueError):
        GramMatrix(np.array([[1.0, 1.5], [1.5, 1.0]]))  # not PSD
    with pytest.raises(ValueError):
        GramMatrix(np.array([[2.0, 0.0], [0.0, 1.0]]))  # diagonal not 1


def test_weighted_gram_validation():
    with pytest.raises(ValueError):
        WeightedGram(np.eye(2) * 0.25, np.array([0.3, 0.25]))  # weight > 1/4


def test_true_model():
    tm = TrueModel.from_beta([0.0, 1.5, 0.0, -0.5])
    assert tm.support == (1, 3)
    assert tm.k_star == 2
    assert tm.b_big == 1.5
    assert tm.d_big == 2.0
    with pytest.raises(ValueError):
        TrueModel(np.array([1.0, 0.0]), support=(0, 1), k_star=2, b_big=1.0, d_big=1.0)
    with pytest.raises(ValueError):
        TrueModel(np.array([2.0, 0.0]), support=(0,), k_star=1, b_big=1.0, d_big=2.0)


def test_load_csv_roundtrip(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b,y\n1.0,2.0,0\n-1.5,0.5,1\n2.5,-3.0,1\n")
    x, y, names = load_csv(path, "y")
    assert names == ("a", "b")
    np.testing.assert_allclose(x, [[1.0, 2.0], [-1.5, 0.5], [2.5, -3.0]])
    np.testing.assert_allclose(y, [0.0, 1.0, 1.0])


def test_load_csv_errors(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="not found"):
        load_csv(path, "y")
    path.write_text("a,b\n1,oops\n")
    with pytest.raises(ValueError):
        load_csv(path, "a")
    path.write_text("a,b\n1\n")
    with pytest.raises(ValueError, match="expected 2 fields"):
        load_csv(path, "a")
