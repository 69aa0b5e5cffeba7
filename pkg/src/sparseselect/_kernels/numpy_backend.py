"""Pure-NumPy coordinate-descent kernel, semantically identical to the
compiled version in ``_cd_fast.pyx``.

The objective is (1/n)||y - X b||^2 + 2 r |b|_1 + c ||b||_2^2 on a design
whose columns satisfy (1/n) sum_i X_ij^2 = 1, so each coordinate update is
an exact soft-threshold followed by a ridge shrink.  Inactive coordinates
are set to exact 0.0.
"""

import numpy as np

BACKEND_NAME = "python"


def enet_cd_sweeps(x, residual, beta, r, c, order, max_sweeps, kkt_tol):
    """Run up to ``max_sweeps`` cyclic coordinate-descent sweeps in place.

    ``residual`` must equal ``y - x @ beta`` on entry; both ``residual`` and
    ``beta`` are updated in place.  After each full sweep the subgradient
    residual of the penalized criterion is evaluated; iteration stops once it
    drops to ``kkt_tol``.  Returns ``(sweeps_done, kkt_residual)``.
    """
    n, m = x.shape
    kkt = np.inf
    sweeps = 0
    for _ in range(max_sweeps):
        for j in order:
            bj = beta[j]
            z = x[:, j] @ residual / n + bj
            if z > r:
                bnew = (z - r) / (1.0 + c)
            elif z < -r:
                bnew = (z + r) / (1.0 + c)
            else:
                bnew = 0.0
            if bnew != bj:
                residual -= (bnew - bj) * x[:, j]
                beta[j] = bnew
        sweeps += 1
        kkt = _kkt_residual(x, residual, beta, r, c)
        if kkt <= kkt_tol:
            break
    return sweeps, kkt


def _kkt_residual(x, residual, beta, r, c):
    n = x.shape[0]
    grad = -2.0 * (residual @ x) / n
    active = beta != 0.0
    viol = np.maximum(np.abs(grad) - 2.0 * r, 0.0)
    viol[active] = np.abs(
        grad[active] + 2.0 * c * beta[active] + 2.0 * r * np.sign(beta[active])
    )
    return float(viol.max(initial=0.0))
