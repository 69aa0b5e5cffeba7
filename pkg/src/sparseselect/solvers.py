"""Penalized estimators and their optimality certificates.

Four estimators are supported: squared or logistic loss, each with either a
pure l1 penalty 2r|b|_1 or the combined penalty 2r|b|_1 + c||b||_2^2.
Squared-loss problems are solved by cyclic coordinate descent with exact
soft-threshold updates (inactive coordinates become exact 0.0); logistic
problems by proximal gradient with backtracking line search.  Convergence is
declared on the subgradient (KKT) residual, which is also exposed as an
independent check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import BACKEND_NAME, enet_cd_sweeps
from .data import KIND_BINARY, Dataset
from .errors import DimensionMismatch, LossMismatch
from .links import log1p_exp, sigmoid

LOSS_SQUARED = "squared"
LOSS_LOGISTIC = "logistic"

DEFAULT_MAX_ITER = 100_000
DEFAULT_KKT_TOL = 1e-8
DEFAULT_SUPPORT_TOL = 1e-10


@dataclass(frozen=True)
class PenaltySpec:
    """Loss and penalty levels: criterion = loss + 2r|b|_1 + c||b||_2^2."""

    loss: str
    r: float
    c: float = 0.0

    def __post_init__(self):
        if self.loss not in (LOSS_SQUARED, LOSS_LOGISTIC):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.r <= 0:
            raise ValueError("r must be positive")
        if self.c < 0:
            raise ValueError("c must be nonnegative")


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = DEFAULT_MAX_ITER
    kkt_tol: float = DEFAULT_KKT_TOL
    support_tol: float = DEFAULT_SUPPORT_TOL
    init: np.ndarray | None = None
    coordinate_order: np.ndarray | None = None
    track_objective: bool = False


@dataclass(frozen=True)
class FitResult:
    beta_hat: np.ndarray
    support: tuple[int, ...]
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool
    objective_trace: tuple[float, ...] | None = None


@dataclass(frozen=True)
class KKTReport:
    """Per-coordinate subgradient conditions at a candidate solution.

    For coordinate j with unpenalized loss gradient g_j, the violation is
    |g_j + 2c b_j + 2r sign(b_j)| when b_j != 0 and max(|g_j| - 2r, 0) when
    b_j = 0; an exact minimizer has max_violation = 0.
    """

    gradient: np.ndarray
    active: np.ndarray
    violation: np.ndarray
    max_violation: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "max_violation", float(self.violation.max(initial=0.0))
        )


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0), returning exact 0.0 inside the threshold."""
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def support_of(beta, support_tol=DEFAULT_SUPPORT_TOL) -> tuple[int, ...]:
    """Indices with |beta_j| > support_tol (0-based)."""
    beta = np.asarray(beta, dtype=float)
    return tuple(int(j) for j in np.flatnonzero(np.abs(beta) > support_tol))


def objective_value(ds: Dataset, beta, spec: PenaltySpec) -> float:
    """Penalized empirical criterion at beta."""
    beta = np.asarray(beta, dtype=float)
    z = ds.x @ beta
    if spec.loss == LOSS_SQUARED:
        resid = ds.y - z
        loss = float(resid @ resid) / ds.n
    else:
        loss = float(np.sum(log1p_exp(z) - ds.y * z)) / ds.n
    penalty = 2.0 * spec.r * float(np.abs(beta).sum()) + spec.c * float(beta @ beta)
    return loss + penalty


def loss_gradient(ds: Dataset, beta, spec: PenaltySpec) -> np.ndarray:
    """Gradient of the unpenalized empirical loss at beta."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (ds.n_features,):
        raise DimensionMismatch(f"beta length {beta.shape} != M = {ds.n_features}")
    if spec.loss == LOSS_SQUARED:
        return -2.0 * (ds.x.T @ (ds.y - ds.x @ beta)) / ds.n
    return ds.x.T @ (sigmoid(ds.x @ beta) - ds.y) / ds.n


def kkt_check(ds: Dataset, beta, spec: PenaltySpec) -> KKTReport:
    """Evaluate the subgradient conditions at beta."""
    grad = loss_gradient(ds, beta, spec)
    beta = np.asarray(beta, dtype=float)
    active = beta != 0.0
    viol = np.maximum(np.abs(grad) - 2.0 * spec.r, 0.0)
    viol[active] = np.abs(
        grad[active] + 2.0 * spec.c * beta[active] + 2.0 * spec.r * np.sign(beta[active])
    )
    return KKTReport(gradient=grad, active=active, violation=viol)


def fit(ds: Dataset, spec: PenaltySpec, opts: FitOptions = FitOptions()) -> FitResult:
    """Minimize the penalized empirical criterion.

    Returns a FitResult; a run that exhausts max_iter comes back with
    converged=False rather than raising, so sweeps can record it.
    """
    if spec.loss == LOSS_LOGISTIC and ds.kind != KIND_BINARY:
        raise LossMismatch("logistic loss requires a binary {0,1} response")

    m = ds.n_features
    if opts.init is None:
        beta = np.zeros(m)
    else:
        beta = np.array(opts.init, dtype=float)
        if beta.shape != (m,):
            raise DimensionMismatch("init length != M")

    if spec.loss == LOSS_SQUARED:
        beta, iters, kkt, trace = _fit_squared_cd(ds, spec, beta, opts)
    else:
        beta, iters, kkt, trace = _fit_logistic_pg(ds, spec, beta, opts)

    return FitResult(
        beta_hat=beta,
        support=support_of(beta, opts.support_tol),
        objective=objective_value(ds, beta, spec),
        kkt_residual=kkt,
        iterations=iters,
        converged=kkt <= opts.kkt_tol,
        objective_trace=tuple(trace) if trace is not None else None,
    )


def _fit_squared_cd(ds, spec, beta, opts):
    x = np.asfortranarray(ds.x)
    residual = ds.y - x @ beta
    if opts.coordinate_order is None:
        order = np.arange(ds.n_features, dtype=np.intp)
    else:
        order = np.asarray(opts.coordinate_order, dtype=np.intp)
        if sorted(order.tolist()) != list(range(ds.n_features)):
            raise ValueError("coordinate_order must be a permutation of 0..M-1")

    if not opts.track_objective:
        iters, kkt = enet_cd_sweeps(
            x, residual, beta, spec.r, spec.c, order, opts.max_iter, opts.kkt_tol
        )
        return beta, int(iters), float(kkt), None

    trace = [objective_value(ds, beta, spec)]
    iters, kkt = 0, np.inf
    while iters < opts.max_iter:
        done, kkt = enet_cd_sweeps(x, residual, beta, spec.r, spec.c, order, 1, -1.0)
        iters += done
        trace.append(objective_value(ds, beta, spec))
        if kkt <= opts.kkt_tol:
            break
    return beta, iters, float(kkt), trace


def _fit_logistic_pg(ds, spec, beta, opts):
    x, y, n = ds.x, ds.y, ds.n
    # logistic Hessian is bounded by (1/4)(1/n)X'X, so 4/lambda_max is a
    # valid initial step; backtracking guards the bound anyway
    lam_max = float(np.linalg.eigvalsh(x.T @ x / n).max())
    step0 = 4.0 / lam_max

    def smooth(z):
        return float(np.sum(log1p_exp(z) - y * z)) / n

    z = x @ beta
    f_sm = smooth(z)
    trace = [f_sm + _penalty(beta, spec)] if opts.track_objective else None
    kkt = np.inf
    iters = 0
    for iters in range(opts.max_iter + 1):
        grad = x.T @ (sigmoid(z) - y) / n
        kkt = _kkt_from_gradient(grad, beta, spec)
        if kkt <= opts.kkt_tol or iters == opts.max_iter:
            break
        step = step0
        while True:
            cand = soft_threshold(beta - step * grad, 2.0 * spec.r * step)
            cand /= 1.0 + 2.0 * spec.c * step
            d = cand - beta
            z_cand = x @ cand
            f_cand = smooth(z_cand)
            bound = f_sm + float(grad @ d) + float(d @ d) / (2.0 * step)
            if f_cand <= bound + 1e-15 * max(1.0, abs(bound)):
                break
            step /= 2.0
        beta, z, f_sm = cand, z_cand, f_cand
        if trace is not None:
            trace.append(f_sm + _penalty(beta, spec))
    return beta, iters, float(kkt), trace


def _penalty(beta, spec):
    return 2.0 * spec.r * float(np.abs(beta).sum()) + spec.c * float(beta @ beta)


def _kkt_from_gradient(grad, beta, spec):
    active = beta != 0.0
    viol = np.maximum(np.abs(grad) - 2.0 * spec.r, 0.0)
    viol[active] = np.abs(
        grad[active] + 2.0 * spec.c * beta[active] + 2.0 * spec.r * np.sign(beta[active])
    )
    return float(viol.max(initial=0.0))


def backend_name() -> str:
    """Which coordinate-descent kernel is in use ("compiled" or "python")."""
    return BACKEND_NAME
