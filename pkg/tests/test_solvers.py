import numpy as np
import pytest

from sparseselect.data import Dataset
from sparseselect.errors import DimensionMismatch, LossMismatch
from sparseselect.experiments import DesignSpec, gen_design
from sparseselect.solvers import (
    FitOptions,
    PenaltySpec,
    fit,
    kkt_check,
    loss_gradient,
    objective_value,
    soft_threshold,
    support_of,
)

from conftest import make_binary_dataset, make_dataset


def grid_minimum(objective_batch, levels=((3.0, 0.05), (0.1, 0.01), (0.02, 0.002), (0.004, 0.0004), (0.0008, 0.0001))):
    """Coarse-to-fine 2-d grid search over [-3,3]^2; independent of the solver."""
    center = np.zeros(2)
    best_val, best_pt = np.inf, center
    for half, step in levels:
        ax0 = np.arange(center[0] - half, center[0] + half + step / 2, step)
        ax1 = np.arange(center[1] - half, center[1] + half + step / 2, step)
        ax0 = ax0[(ax0 >= -3.0) & (ax0 <= 3.0)]
        ax1 = ax1[(ax1 >= -3.0) & (ax1 <= 3.0)]
        grid = np.stack(np.meshgrid(ax0, ax1, indexing="ij"), axis=-1).reshape(-1, 2)
        vals = objective_batch(grid)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_pt = float(vals[k]), grid[k]
        center = best_pt
    return best_val, best_pt


def batch_objective(ds, spec):
    x, y, n = ds.x, ds.y, ds.n

    def f(grid):
        z = grid @ x.T
        if spec.loss == "squared":
            loss = ((y[None, :] - z) ** 2).mean(axis=1)
        else:
            loss = (np.logaddexp(0.0, z) - y[None, :] * z).mean(axis=1)
        pen = 2.0 * spec.r * np.abs(grid).sum(axis=1) + spec.c * (grid**2).sum(axis=1)
        return loss + pen

    return f


def test_soft_threshold():
    np.testing.assert_array_equal(soft_threshold(np.array([0.5, -0.5, 0.1]), 0.2),
                                  [0.3, -0.3, 0.0])
    assert soft_threshold(np.array([0.1]), 0.2)[0] == 0.0


def test_support_of():
    assert support_of([0.0, 0.5, 0.0], 1e-10) == (1,)
    assert support_of([0.0, 0.0]) == ()
    assert support_of([1e-12, 1e-3], 1e-10) == (1,)


def test_full_shrinkage_squared(rng):
    ds = make_dataset(rng, 50, 6, rho=0.4, beta=np.r_[1.0, np.zeros(5)])
    z = ds.x.T @ ds.y / ds.n
    r = float(np.abs(z).max()) * 1.001
    res = fit(ds, PenaltySpec(loss="squared", r=r))
    assert res.converged
    assert res.support == ()
    assert np.all(res.beta_hat == 0.0)


def test_orthogonal_closed_form(rng):
    x = gen_design(64, 8, DesignSpec(kind="orthogonalized"), 3.0, rng)
    y = x @ np.r_[2.0, -1.0, np.zeros(6)] + rng.normal(size=64)
    ds = Dataset(x=x, y=y, kind="real")
    z = x.T @ y / 64
    r, c = 0.3, 0.25
    lasso = fit(ds, PenaltySpec(loss="squared", r=r))
    np.testing.assert_allclose(lasso.beta_hat, soft_threshold(z, r), atol=1e-10)
    enet = fit(ds, PenaltySpec(loss="squared", r=r, c=c))
    np.testing.assert_allclose(enet.beta_hat, soft_threshold(z, r) / (1 + c), atol=1e-10)


def test_squared_grid_oracle(rng):
    # correlated M=2, n=6 problem vs exhaustive grid search
    raw = rng.normal(size=(6, 2))
    raw[:, 1] = 0.7 * raw[:, 0] + 0.3 * raw[:, 1]
    from sparseselect.data import standardize

    ds = standardize(raw, raw @ [1.0, -0.5] + 0.3 * rng.normal(size=6), "real")
    spec = PenaltySpec(loss="squared", r=0.3)
    res = fit(ds, spec)
    assert res.converged
    grid_min, _ = grid_minimum(batch_objective(ds, spec))
    assert res.objective <= grid_min + 1e-6


def test_logistic_zero_condition(rng):
    ds = make_binary_dataset(rng, 80, 5, beta=np.r_[0.8, np.zeros(4)])
    grad0 = np.abs(ds.x.T @ ds.y / ds.n)
    r = 0.5 * float(grad0.max()) + 1e-9
    res = fit(ds, PenaltySpec(loss="logistic", r=r))
    assert res.converged
    assert res.iterations == 0
    assert np.all(res.beta_hat == 0.0)


def test_logistic_fit_and_kkt(rng):
    ds = make_binary_dataset(rng, 200, 4, beta=np.array([1.5, -1.0, 0.0, 0.0]))
    spec = PenaltySpec(loss="logistic", r=0.02, c=0.1)
    res = fit(ds, spec)
    assert res.converged
    assert kkt_check(ds, res.beta_hat, spec).max_violation <= 1e-8


def test_kkt_at_zero_squared(rng):
    ds = make_dataset(rng, 40, 5, beta=np.r_[2.0, np.zeros(4)])
    spec = PenaltySpec(loss="squared", r=0.1)
    rep = kkt_check(ds, np.zeros(5), spec)
    expected = np.maximum(np.abs(2.0 * (ds.x.T @ ds.y) / ds.n) - 2 * spec.r, 0.0)
    np.testing.assert_allclose(rep.violation, expected, atol=1e-12)
    assert rep.max_violation == expected.max()


def test_kkt_perturbation_breaks_stationarity(rng):
    ds = make_dataset(rng, 60, 5, rho=0.3, beta=np.r_[2.0, -1.0, np.zeros(3)])
    spec = PenaltySpec(loss="squared", r=0.1)
    res = fit(ds, spec)
    assert res.converged
    assert kkt_check(ds, res.beta_hat, spec).max_violation <= 1e-8
    j = int(np.argmax(np.abs(res.beta_hat)))
    perturbed = res.beta_hat.copy()
    perturbed[j] += 0.1
    assert kkt_check(ds, perturbed, spec).max_violation > 1e-3


def test_exact_zeros(rng):
    ds = make_dataset(rng, 50, 8, rho=0.5, beta=np.r_[2.0, -1.5, np.zeros(6)])
    res = fit(ds, PenaltySpec(loss="squared", r=0.25))
    inactive = [j for j in range(8) if j not in res.support]
    assert inactive  # the penalty is strong enough to zero something
    assert all(res.beta_hat[j] == 0.0 for j in inactive)


@pytest.mark.parametrize("loss", ["squared", "logistic"])
def test_objective_monotone_and_below_zero_point(rng, loss):
    if loss == "squared":
        ds = make_dataset(rng, 40, 6, rho=0.6, beta=np.r_[1.0, -1.0, np.zeros(4)])
    else:
        ds = make_binary_dataset(rng, 120, 6, beta=np.r_[1.0, -1.0, np.zeros(4)])
    spec = PenaltySpec(loss=loss, r=0.05, c=0.02)
    res = fit(ds, spec, FitOptions(track_objective=True))
    trace = np.asarray(res.objective_trace)
    assert np.all(np.diff(trace) <= 1e-10)
    assert res.objective <= objective_value(ds, np.zeros(6), spec) + 1e-12


@pytest.mark.parametrize("loss", ["squared", "logistic"])
def test_gradient_matches_finite_differences(rng, loss):
    if loss == "squared":
        ds = make_dataset(rng, 30, 5, rho=0.4, beta=np.r_[1.0, np.zeros(4)])
    else:
        ds = make_binary_dataset(rng, 30, 5, beta=np.r_[1.0, np.zeros(4)])
    spec = PenaltySpec(loss=loss, r=0.1)

    def bare_loss(beta):
        if loss == "squared":
            return float(np.sum((ds.y - ds.x @ beta) ** 2)) / ds.n
        z = ds.x @ beta
        return float(np.sum(np.logaddexp(0.0, z) - ds.y * z)) / ds.n

    h = 1e-6
    for _ in range(10):
        beta = rng.normal(size=5) * 0.5
        grad = loss_gradient(ds, beta, spec)
        num = np.zeros(5)
        for j in range(5):
            e = np.zeros(5)
            e[j] = h
            num[j] = (bare_loss(beta + e) - bare_loss(beta - e)) / (2 * h)
        assert np.abs(num - grad).max() / max(np.abs(grad).max(), 1e-6) <= 1e-5


def test_enet_unique_across_starts(rng):
    ds = make_dataset(rng, 30, 8, rho=0.85, beta=np.r_[1.5, -1.0, 0.5, np.zeros(5)])
    spec = PenaltySpec(loss="squared", r=0.1, c=0.1)
    betas = []
    for _ in range(8):
        init = rng.normal(size=8)
        order = rng.permutation(8)
        res = fit(ds, spec, FitOptions(init=init, coordinate_order=order, kkt_tol=1e-10))
        assert res.converged
        betas.append(res.beta_hat)
    spread = max(np.abs(a - b).max() for a in betas for b in betas)
    assert spread <= 1e-6


def test_lasso_shared_fit_and_support_across_starts(rng):
    ds = make_dataset(rng, 30, 8, rho=0.85, beta=np.r_[1.5, -1.0, 0.5, np.zeros(5)])
    spec = PenaltySpec(loss="squared", r=0.1)
    fits, supports = [], []
    for _ in range(8):
        init = rng.normal(size=8)
        order = rng.permutation(8)
        res = fit(ds, spec, FitOptions(init=init, coordinate_order=order, kkt_tol=1e-10))
        assert res.converged
        fits.append(ds.x @ res.beta_hat)
        supports.append(res.support)
    spread = max(np.abs(a - b).max() for a in fits for b in fits)
    assert spread <= 1e-6
    assert len(set(supports)) == 1


def test_non_convergence_is_flagged_not_raised(rng):
    ds = make_dataset(rng, 40, 10, rho=0.9, beta=np.r_[2.0, -2.0, np.zeros(8)])
    res = fit(ds, PenaltySpec(loss="squared", r=0.01), FitOptions(max_iter=1))
    assert not res.converged
    assert res.iterations == 1
    assert res.kkt_residual > 1e-8


def test_loss_mismatch(rng):
    ds = make_dataset(rng, 30, 3)  # real-valued response
    with pytest.raises(LossMismatch):
        fit(ds, PenaltySpec(loss="logistic", r=0.1))


def test_option_validation(rng):
    ds = make_dataset(rng, 20, 3)
    with pytest.raises(ValueError):
        PenaltySpec(loss="squared", r=0.0)
    with pytest.raises(ValueError):
        PenaltySpec(loss="squared", r=0.1, c=-1.0)
    with pytest.raises(ValueError):
        PenaltySpec(loss="huber", r=0.1)
    with pytest.raises(DimensionMismatch):
        fit(ds, PenaltySpec(loss="squared", r=0.1), FitOptions(init=np.zeros(5)))
    with pytest.raises(ValueError):
        fit(ds, PenaltySpec(loss="squared", r=0.1),
            FitOptions(coordinate_order=np.array([0, 0, 2])))


def _split_form_minimum(ds, spec):
    """Independent solver: beta = u - v with u, v >= 0 makes the l1 term
    linear, so the problem is smooth with bound constraints (L-BFGS-B)."""
    from scipy.optimize import minimize

    x, y, n, m = ds.x, ds.y, ds.n, ds.n_features

    def fg(w):
        u, v = w[:m], w[m:]
        beta = u - v
        z = x @ beta
        if spec.loss == "squared":
            res = y - z
            loss = float(res @ res) / n
            gbeta = -2.0 * (x.T @ res) / n
        else:
            p = 1 / (1 + np.exp(-z))
            loss = float(np.sum(np.logaddexp(0.0, z) - y * z)) / n
            gbeta = x.T @ (p - y) / n
        loss += 2 * spec.r * float(np.sum(u + v)) + spec.c * float(beta @ beta)
        gpen = 2 * spec.c * beta
        return loss, np.concatenate([gbeta + gpen + 2 * spec.r,
                                     -gbeta - gpen + 2 * spec.r])

    best = np.inf
    for trial in range(3):
        w0 = np.abs(np.random.default_rng(trial).normal(size=2 * m)) * 0.1
        out = minimize(fg, w0, jac=True, method="L-BFGS-B",
                       bounds=[(0, None)] * (2 * m),
                       options={"maxiter": 20000, "ftol": 1e-16, "gtol": 1e-12})
        best = min(best, float(out.fun))
    return best


@pytest.mark.parametrize("loss", ["squared", "logistic"])
def test_objective_matches_split_form_solver(rng, loss):
    nontrivial = 0
    for _ in range(5):
        x = gen_design(30, 5, DesignSpec(kind="equicorrelated", rho=0.5), 3.0, rng)
        beta0 = np.zeros(5)
        beta0[:2] = rng.uniform(-1.5, 1.5, 2)
        if loss == "squared":
            y = x @ beta0 + rng.normal(size=30) * 0.5
            ds = Dataset(x=x, y=y, kind="real")
            r = float(rng.uniform(0.05, 0.2))
        else:
            y = (rng.random(30) < 1 / (1 + np.exp(-x @ beta0))).astype(float)
            ds = Dataset(x=x, y=y, kind="binary")
            r = float(rng.uniform(0.02, 0.06))
        spec = PenaltySpec(loss=loss, r=r, c=float(rng.choice([0.0, 0.1])))
        res = fit(ds, spec)
        assert res.converged
        nontrivial += bool(res.support)
        assert res.objective <= _split_form_minimum(ds, spec) + 1e-9
    assert nontrivial >= 2  # the comparison is not vacuous


def test_backends_agree(rng):
    from sparseselect._kernels import BACKEND_NAME, numpy_backend

    if BACKEND_NAME != "compiled":
        pytest.skip("compiled kernel not built")
    from sparseselect._kernels import _cd_fast

    ds = make_dataset(rng, 60, 7, rho=0.6, beta=np.r_[1.0, -2.0, np.zeros(5)])
    x = np.asfortranarray(ds.x)
    order = np.arange(7, dtype=np.intp)
    results = []
    for kernel in (_cd_fast.enet_cd_sweeps, numpy_backend.enet_cd_sweeps):
        beta = np.zeros(7)
        residual = ds.y.copy()
        sweeps, kkt = kernel(x, residual, beta, 0.1, 0.05, order, 1000, 1e-10)
        results.append((beta.copy(), sweeps, kkt))
    assert results[0][1] == results[1][1]  # same sweep count
    assert np.abs(results[0][0] - results[1][0]).max() < 1e-12
