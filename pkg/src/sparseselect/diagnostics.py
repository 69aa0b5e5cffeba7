"""Design-matrix conditions behind the selection guarantees.

Two families of checks:

* coherence: the largest off-diagonal correlation touching the true support
  must not exceed d / k* (``check_identif``), with the bridge
  b = 1 - d (1 + 2 alpha + eps) turning a coherence level into a stability
  constant (``b_from_d``);

* restricted quadratic form: v' S v >= b sum_{j in support} v_j^2 - eps for
  every v in the cone-like set
  V = { v : sum_{j not in sup} |v_j| <= alpha sum_{j in sup} |v_j| + eps }.
  The condition quantifies over an infinite set, so it cannot be certified
  by sampling alone.  ``check_stabil`` therefore reports one of three tiers:
  certified_pass (a sufficient eigenvalue condition holds), certified_fail
  (an explicit violating v was found), or not_falsified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, GramMatrix, TrueModel, WeightedGram
from .errors import DOutOfRange, EmptySupport
from .links import SIGMOID_CURVATURE_MAX, sigmoid_slope

STATUS_CERTIFIED_PASS = "certified_pass"
STATUS_CERTIFIED_FAIL = "certified_fail"
STATUS_NOT_FALSIFIED = "not_falsified"

# relative slack when testing the sampled inequality, guards against
# false positives from float noise at the equality boundary
_SAMPLE_TOL = 1e-9


@dataclass(frozen=True)
class CoherenceReport:
    max_coherence: float
    d_requested: float
    passes: bool
    margin: float


@dataclass(frozen=True)
class StabilReport:
    b: float
    alpha: float
    epsilon: float
    b_implied: float
    sufficient_eig_ok: bool
    min_eig_shifted: float
    sample_violations: int
    sample_count: int
    status: str
    witness: np.ndarray | None


@dataclass(frozen=True)
class LidentifReport:
    center_max: float
    adjusted_max: float
    threshold: float
    passes_center: bool
    passes_adjusted: bool


def pair_max_coherence(mat, support) -> float:
    """max |mat[j, k]| over j in support, k != j (k ranging over all columns)."""
    mat = np.asarray(mat, dtype=float)
    support = sorted(int(j) for j in support)
    if not support:
        raise EmptySupport("support must be nonempty")
    rows = np.abs(mat[support, :]).copy()
    for i, j in enumerate(support):
        rows[i, j] = 0.0
    return float(rows.max())


def check_identif(gm: GramMatrix, support, d) -> CoherenceReport:
    """Coherence condition: max correlation touching the support <= d / k*."""
    if not 0.0 < d <= 1.0:
        raise ValueError("d must be in (0, 1]")
    support = sorted(int(j) for j in support)
    if not support:
        raise EmptySupport("support must be nonempty")
    max_coh = pair_max_coherence(gm.sigma_mat, support)
    margin = d / len(support) - max_coh
    return CoherenceReport(
        max_coherence=max_coh, d_requested=float(d), passes=margin >= 0.0, margin=margin
    )


def b_from_d(d, alpha, epsilon=0.0) -> float:
    """Stability constant implied by coherence level d: 1 - d(1 + 2a + eps)."""
    if d <= 0:
        raise DOutOfRange("d must be positive")
    b = 1.0 - d * (1.0 + 2.0 * alpha + epsilon)
    if b <= 0.0:
        raise DOutOfRange(
            f"d = {d} is too large: 1 - d(1 + 2*{alpha} + {epsilon}) = {b} <= 0"
        )
    return b


def implied_b_raw(mat, support, alpha, epsilon=0.0) -> float:
    """Bridge value 1 - d_real (1 + 2 alpha + eps) at the realized coherence
    level d_real = k* x (pair max coherence); may be <= 0."""
    support = sorted(int(j) for j in support)
    if not support:
        return 1.0
    d_real = len(support) * pair_max_coherence(mat, support)
    return 1.0 - d_real * (1.0 + 2.0 * alpha + epsilon)


def sample_cone_vectors(rng, m, support, alpha, epsilon, count) -> np.ndarray:
    """Draw ``count`` vectors from V: support part standard normal, off-support
    part with l1 norm at a random or full fraction of the alpha-budget."""
    support = sorted(int(j) for j in support)
    off = [j for j in range(m) if j not in support]
    v = np.zeros((count, m))
    vs = rng.standard_normal((count, len(support)))
    v[:, support] = vs
    if off:
        budget = alpha * np.abs(vs).sum(axis=1) + epsilon
        u = rng.standard_normal((count, len(off)))
        norms = np.abs(u).sum(axis=1)
        norms[norms == 0.0] = 1.0
        # half the draws sit exactly on the cone boundary, half strictly inside
        frac = rng.uniform(0.0, 1.0, size=count)
        frac[: count // 2] = 1.0
        v[:, off] = u * (budget * frac / norms)[:, None]
    return v


def _stabil_report(mat, support, alpha, epsilon, b, sample_count, seed):
    mat = np.asarray(mat, dtype=float)
    m = mat.shape[0]
    support = sorted(int(j) for j in support)
    if not 0.0 < b <= 1.0:
        raise ValueError("b must be in (0, 1]")

    shifted = mat.copy()
    for j in support:
        shifted[j, j] -= b
    min_eig = float(np.linalg.eigvalsh(shifted).min())
    eig_ok = min_eig >= -1e-8

    rng = np.random.default_rng(seed)
    v = sample_cone_vectors(rng, m, support, alpha, epsilon, sample_count)
    quad = np.einsum("ij,ij->i", v @ mat, v)
    restricted = (v[:, support] ** 2).sum(axis=1) if support else np.zeros(len(v))
    gap = quad - (b * restricted - epsilon)
    bad = gap < -_SAMPLE_TOL * np.maximum(1.0, restricted)
    violations = int(bad.sum())
    witness = v[np.argmin(gap)].copy() if violations else None

    if violations:
        status = STATUS_CERTIFIED_FAIL
    elif eig_ok:
        status = STATUS_CERTIFIED_PASS
    else:
        status = STATUS_NOT_FALSIFIED

    return StabilReport(
        b=float(b),
        alpha=float(alpha),
        epsilon=float(epsilon),
        b_implied=implied_b_raw(mat, support, alpha, epsilon),
        sufficient_eig_ok=eig_ok,
        min_eig_shifted=min_eig,
        sample_violations=violations,
        sample_count=int(sample_count),
        status=status,
        witness=witness,
    )


def check_stabil(gm: GramMatrix, support, alpha, epsilon, b, sample_count=20_000, seed=0):
    """Three-tier check of the restricted quadratic-form condition on the
    plain gram matrix; see the module docstring for tier semantics."""
    return _stabil_report(gm.sigma_mat, support, alpha, epsilon, b, sample_count, seed)


def check_lstabil(wg: WeightedGram, support, alpha, epsilon, b, sample_count=20_000, seed=0):
    """Same check on the logistic-weighted gram matrix."""
    return _stabil_report(wg.sigma1_mat, support, alpha, epsilon, b, sample_count, seed)


def lidentif_radius(l_bound, r, k_star, s, b, epsilon=0.0) -> float:
    """Half-width of the linear-predictor box the weighted-coherence check
    must cover: 4 L r k* / (s b) + L (1 + 1/r) eps."""
    if r <= 0 or s <= 0 or b <= 0:
        raise ValueError("r, s, b must be positive")
    return 4.0 * l_bound * r * k_star / (s * b) + l_bound * (1.0 + 1.0 / r) * epsilon


def check_lidentif(ds: Dataset, tm: TrueModel, d, radius) -> LidentifReport:
    """Coherence of the logistic-weighted gram, worst-cased over predictors
    within ``radius`` of the true linear predictor.

    The center evaluation uses weights g'(beta*' X_i); the adjusted value
    adds the first-order worst case radius * sup|g''| * pairwise mean of
    |X_ij X_ik|, a sound (conservative) bound since g' is Lipschitz.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if not 0.0 < d <= 1.0:
        raise ValueError("d must be in (0, 1]")
    support = list(tm.support)
    if not support:
        raise EmptySupport("support must be nonempty")

    w = sigmoid_slope(ds.x @ tm.beta_star)
    weighted = ds.x.T @ (w[:, None] * ds.x) / ds.n
    center = pair_max_coherence(weighted, support)

    xabs = np.abs(ds.x)
    pair_abs = pair_max_coherence(xabs.T @ xabs / ds.n, support)
    adjusted = center + radius * SIGMOID_CURVATURE_MAX * pair_abs

    threshold = d / tm.k_star
    return LidentifReport(
        center_max=center,
        adjusted_max=adjusted,
        threshold=threshold,
        passes_center=center <= threshold,
        passes_adjusted=adjusted <= threshold,
    )
