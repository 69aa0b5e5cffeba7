"""Synthetic designs with controlled coherence, response generation, and
Monte Carlo verification of the selection and l1-ball guarantees.

Every replication owns a deterministic RNG stream keyed by (seed, index),
so reports are reproducible and aggregation is order-independent.  All noise
is bounded two-point ("Rademacher") noise: for the real-response model it is
scaled to the requested standard deviation, and for the binary-branch model
it is the unit two-point variable, which has |W| <= 1 and makes the
Hoeffding-based binary tuning level exactly valid.  A replication whose fit
does not converge counts as a selection failure, never as a success.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.stats import beta as beta_dist

from . import diagnostics, tuning
from .data import Dataset, TrueModel
from .errors import DOutOfRange, InfeasibleDesign, UnknownGuarantee
from .links import sigmoid
from .solvers import FitOptions, PenaltySpec, fit

DESIGN_ORTHOGONALIZED = "orthogonalized"
DESIGN_EQUICORRELATED = "equicorrelated"
DESIGN_BLOCK = "block"

LOSS_SQUARED_REAL = "squared_real"
LOSS_SQUARED_BINARY = "squared_binary"
LOSS_LOGISTIC = "logistic"

SIGNAL_AT_THRESHOLD = "at_threshold"
SIGNAL_FIXED = "fixed"

VERDICT_MEETS = "meets"
VERDICT_FAILS = "fails"
VERDICT_INCONCLUSIVE = "inconclusive"

# guarantee id -> (report metric, floor as a function of delta and M)
GUARANTEES = {
    "ball": ("ball_coverage", lambda d, M: 1.0 - d),
    "null": ("p_exact", lambda d, M: 1.0 - d),
    "inclusion_large": ("p_contains", lambda d, M: 1.0 - d),
    "inclusion_weak_ls": ("p_contains", lambda d, M: 1.0 - d - d / M),
    "inclusion_weak_logistic": ("p_contains", lambda d, M: 1.0 - 3.0 * d),
    "exact_ls": ("p_exact", lambda d, M: 1.0 - 3.0 * d - d / M),
    "exact_logistic": ("p_exact", lambda d, M: 1.0 - 5.0 * d),
}

_RESAMPLE_ATTEMPTS = 8


@dataclass(frozen=True)
class DesignSpec:
    kind: str = DESIGN_ORTHOGONALIZED
    rho: float = 0.0
    rho_out: float = 0.0
    block_size: int = 0

    def __post_init__(self):
        if self.kind not in (DESIGN_ORTHOGONALIZED, DESIGN_EQUICORRELATED, DESIGN_BLOCK):
            raise ValueError(f"unknown design kind {self.kind!r}")
        if not 0.0 <= self.rho < 1.0 or not 0.0 <= self.rho_out < 1.0:
            raise ValueError("correlation parameters must lie in [0, 1)")
        if self.kind == DESIGN_BLOCK:
            if self.block_size < 1:
                raise ValueError("block designs need block_size >= 1")
            if self.rho_out > self.rho:
                raise ValueError("block designs need rho_out <= rho")


@dataclass(frozen=True)
class SignalSpec:
    kind: str = SIGNAL_AT_THRESHOLD
    multiplier: float = 1.0
    value: float = 0.0
    regime: str = tuning.REGIME_WEAK

    def __post_init__(self):
        if self.kind not in (SIGNAL_AT_THRESHOLD, SIGNAL_FIXED):
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.regime not in (tuning.REGIME_WEAK, tuning.REGIME_LARGE):
            raise ValueError(f"unknown signal regime {self.regime!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    M: int
    k_star: int
    design: DesignSpec
    loss: str
    signal: SignalSpec
    delta: float
    replications: int
    seed: int
    method: str
    noise_sd: float = 1.0
    k_upper: int | None = None
    l_target: float = 3.0
    guarantee: str | None = None
    ci_method: str = "normal"
    r_override: float | None = None
    c_override: float | None = None
    max_iter: int = 100_000
    kkt_tol: float = 1e-8
    support_tol: float = 1e-10

    def __post_init__(self):
        if self.k_star > self.M or self.k_star < 0:
            raise ValueError("need 0 <= k_star <= M")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must be in (0, 1)")
        if self.loss not in (LOSS_SQUARED_REAL, LOSS_SQUARED_BINARY, LOSS_LOGISTIC):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.method not in tuning.METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        method_loss = tuning.loss_of(self.method)
        if (self.loss == LOSS_LOGISTIC) != (method_loss == "logistic"):
            raise ValueError(f"loss {self.loss!r} does not match method {self.method!r}")
        if self.ci_method not in ("normal", "exact"):
            raise ValueError("ci_method must be 'normal' or 'exact'")
        if self.guarantee is not None and self.guarantee not in GUARANTEES:
            raise UnknownGuarantee(self.guarantee)

    def guarantee_id(self) -> str:
        """Which guarantee the report is checked against (auto-resolved)."""
        if self.guarantee is not None:
            return self.guarantee
        if self.k_star == 0:
            return "null"
        if self.k_upper is not None:
            return "exact_logistic" if self.loss == LOSS_LOGISTIC else "exact_ls"
        return "ball"

    def effective_k_upper(self) -> int | None:
        """Sparsity bound K for the tuning formulas.  When a selection
        guarantee is requested explicitly without K, the simulated truth is
        known, so K defaults to k*."""
        if self.k_upper is not None:
            return self.k_upper
        selection = ("exact_ls", "exact_logistic",
                     "inclusion_weak_ls", "inclusion_weak_logistic")
        if self.guarantee in selection and self.k_star > 0:
            return self.k_star
        return None

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["design"] = DesignSpec(**d["design"])
        d["signal"] = SignalSpec(**d["signal"])
        return cls(**d)


@dataclass(frozen=True)
class ReplicationRecord:
    rep: int
    contains: bool
    contained: bool
    exact: bool
    l1_error: float
    converged: bool
    ball_covered: bool | None
    r: float
    c: float


@dataclass(frozen=True)
class ExperimentReport:
    p_contains: float
    p_contained: float
    p_exact: float
    ball_coverage: float
    mean_l1_error: float
    ci_half_width: float
    guarantee: float
    guarantee_id: str
    guarantee_metric: str
    verdict: str
    replications: int
    n_converged: int
    config: ExperimentConfig
    records: tuple[ReplicationRecord, ...] = field(repr=False, default=())

    def to_json_dict(self) -> dict:
        d = {
            k: getattr(self, k)
            for k in (
                "p_contains", "p_contained", "p_exact", "ball_coverage",
                "mean_l1_error", "ci_half_width", "guarantee", "guarantee_id",
                "guarantee_metric", "verdict", "replications", "n_converged",
            )
        }
        d["config"] = self.config.to_json_dict()
        return d


def rademacher(rng, size):
    """Uniform +-1 draws."""
    return rng.integers(0, 2, size=size) * 2.0 - 1.0


def gen_design(n, M, design: DesignSpec, l_target, rng) -> np.ndarray:
    """Standardized n x M design of the requested family.

    orthogonalized : Gram-Schmidt (QR against the constant column) on a
                     Rademacher base, rescaled to unit 1/n-norm; coherence
                     is exactly zero up to float error.  Needs n > M.
    equicorrelated : shared + idiosyncratic Rademacher factors; off-diagonal
                     correlations concentrate near rho (realized values are
                     reported downstream, never assumed).
    block          : global, per-block, and idiosyncratic factors giving
                     within-block correlation rho and cross-block rho_out.

    Entries stay bounded; a draw whose max |X_ij| exceeds ``l_target`` is
    resampled (deterministically, from the same stream).
    """
    for _ in range(_RESAMPLE_ATTEMPTS):
        x = _gen_design_once(n, M, design, rng)
        if x is not None and np.abs(x).max() <= l_target:
            return x
    raise InfeasibleDesign(
        f"could not realize a {design.kind} design with max |X_ij| <= {l_target}"
    )


def _gen_design_once(n, M, design, rng):
    if design.kind == DESIGN_ORTHOGONALIZED:
        if n < M + 1:
            raise InfeasibleDesign("orthogonalized designs need n >= M + 1")
        base = np.column_stack([np.ones(n), rademacher(rng, (n, M))])
        q, rmat = np.linalg.qr(base)
        if np.abs(np.diag(rmat)).min() < 1e-8:
            return None  # rank-deficient draw; resample
        return q[:, 1:] * math.sqrt(n)

    if design.kind == DESIGN_EQUICORRELATED:
        shared = rademacher(rng, n)
        idio = rademacher(rng, (n, M))
        raw = math.sqrt(design.rho) * shared[:, None] + math.sqrt(1.0 - design.rho) * idio
    else:
        n_blocks = (M + design.block_size - 1) // design.block_size
        shared = rademacher(rng, n)
        block_f = rademacher(rng, (n, n_blocks))
        idio = rademacher(rng, (n, M))
        blk = np.arange(M) // design.block_size
        raw = (
            math.sqrt(design.rho_out) * shared[:, None]
            + math.sqrt(design.rho - design.rho_out) * block_f[:, blk]
            + math.sqrt(1.0 - design.rho) * idio
        )
    center = raw.mean(axis=0)
    centered = raw - center
    scale = np.sqrt((centered * centered).mean(axis=0))
    if np.any(scale < 1e-12):
        return None  # degenerate column; resample
    return centered / scale


def gen_response(x, beta_star, loss, rng, noise_sd=1.0) -> np.ndarray:
    """Draw a response vector for the given linear model.

    squared_real   : y = X beta* + W with W = +-noise_sd (two-point, centered,
                     sd exactly noise_sd)
    squared_binary : y = X beta* + W with W = +-1 (the bounded-noise model
                     matching the binary-branch tuning level)
    logistic       : y_i ~ Bernoulli(g(beta*' x_i)) with the logistic link
    """
    x = np.asarray(x, dtype=float)
    beta_star = np.asarray(beta_star, dtype=float)
    if beta_star.shape != (x.shape[1],):
        raise ValueError("beta_star length != M")
    lin = x @ beta_star
    n = x.shape[0]
    if loss == LOSS_SQUARED_REAL:
        return lin + noise_sd * rademacher(rng, n)
    if loss == LOSS_SQUARED_BINARY:
        return lin + rademacher(rng, n)
    if loss == LOSS_LOGISTIC:
        return (rng.random(n) < sigmoid(lin)).astype(float)
    raise ValueError(f"unknown loss {loss!r}")


def normal_ci_half_width(p, count) -> float:
    """95% normal-approximation half-width for a proportion."""
    p = min(max(p, 0.0), 1.0)
    return 1.96 * math.sqrt(p * (1.0 - p) / count)


def exact_ci_half_width(successes, count) -> float:
    """Half-width of the 95% Clopper-Pearson interval."""
    lo = 0.0 if successes == 0 else float(beta_dist.ppf(0.025, successes, count - successes + 1))
    hi = 1.0 if successes == count else float(beta_dist.ppf(0.975, successes + 1, count - successes))
    return (hi - lo) / 2.0


def _tuning_kind(loss):
    return {"squared_real": "real", "squared_binary": "binary"}.get(loss)


def _signal_magnitude(cfg, r, epsilon, b, s):
    sig = cfg.signal
    if sig.kind == SIGNAL_FIXED:
        return sig.value
    thr = tuning.signal_threshold(
        cfg.method, sig.regime, r, c=0.0, k_star=max(cfg.k_star, 1), b=b, s=s,
        epsilon=epsilon,
    )
    return sig.multiplier * thr


def _elastic_c(cfg, r, b_big):
    if cfg.c_override is not None:
        return cfg.c_override
    if not tuning.is_elastic(cfg.method):
        return 0.0
    if cfg.method == tuning.METHOD_ENET_LOGISTIC and cfg.effective_k_upper() is not None:
        return tuning.c_for_selection_logistic(r, b_big)
    return tuning.c_for(r, b_big)


def _replication(cfg: ExperimentConfig, rep: int) -> ReplicationRecord:
    rng = np.random.default_rng((cfg.seed, rep))
    x = gen_design(cfg.n, cfg.M, cfg.design, cfg.l_target, rng)
    l_real = float(np.abs(x).max())
    kind = _tuning_kind(cfg.loss)
    logistic = cfg.loss == LOSS_LOGISTIC
    alpha = tuning.alpha_for(cfg.method)

    support = np.sort(rng.choice(cfg.M, size=cfg.k_star, replace=False))
    signs = rademacher(rng, cfg.k_star)

    # stability constant at the realized coherence level (b = 1 when the
    # support is empty or the coherence bridge does not apply)
    if cfg.k_star > 0:
        gram_mat = x.T @ x / cfg.n
        d_real = cfg.k_star * diagnostics.pair_max_coherence(gram_mat, support)
    else:
        d_real = 0.0

    def bridge_b(epsilon):
        if d_real <= 0.0:
            return 1.0
        try:
            return diagnostics.b_from_d(d_real, alpha, epsilon)
        except DOutOfRange:
            return None

    k_upper = cfg.effective_k_upper()

    def r_at(sigma):
        if cfg.r_override is not None:
            return cfg.r_override
        return tuning.r_for(
            cfg.method, cfg.n, cfg.M, cfg.delta,
            kind=kind, l_bound=l_real, sigma=sigma, k_upper=k_upper,
        )

    # constants and signal magnitudes; for the real-response model
    # sigma = sqrt(Var Y) depends on the signal itself, and for logistic the
    # curvature floor s depends on |beta*|_1, so refine a few rounds
    sigma = cfg.noise_sd if cfg.loss == LOSS_SQUARED_REAL else None
    r = r_at(sigma)
    epsilon = tuning.epsilon_tech(cfg.n, cfg.M, r) if logistic else 0.0
    s = 1.0
    b_signal = bridge_b(epsilon) or 1.0
    magnitude = _signal_magnitude(cfg, r, epsilon, b=b_signal, s=s)
    beta_star = np.zeros(cfg.M)
    beta_star[support] = signs * magnitude
    if cfg.k_star > 0:
        for _ in range(4):
            if cfg.loss == LOSS_SQUARED_REAL:
                lin = x @ beta_star
                sigma = math.sqrt(float(lin @ lin) / cfg.n + cfg.noise_sd**2)
                r = r_at(sigma)
            if logistic:
                s = tuning.s_const(l_real, float(np.abs(beta_star).sum()))
            magnitude = _signal_magnitude(cfg, r, epsilon, b=b_signal, s=s)
            beta_star[support] = signs * magnitude

    tm = TrueModel.from_beta(beta_star)
    y = gen_response(x, beta_star, cfg.loss, rng, noise_sd=cfg.noise_sd)
    ds = Dataset(
        x=x, y=y, kind="binary" if logistic else "real",
        l_bound=l_real, sigma=sigma,
    )

    b_big = tm.b_big if cfg.k_star > 0 else 1.0
    c = _elastic_c(cfg, r, b_big)

    result = fit(
        ds,
        PenaltySpec(loss="logistic" if logistic else "squared", r=r, c=c),
        FitOptions(max_iter=cfg.max_iter, kkt_tol=cfg.kkt_tol, support_tol=cfg.support_tol),
    )

    est = set(result.support)
    true = set(tm.support)
    contains = true <= est
    contained = est <= true
    l1_error = float(np.abs(result.beta_hat - beta_star).sum())

    # l1-ball event at the radius implied by the realized coherence
    b_ball = bridge_b(epsilon)
    if b_ball is None:
        ball_covered: bool | None = None
    else:
        s_ball = tuning.s_const(l_real, tm.d_big) if logistic else 1.0
        radius = tuning.ball_radius(cfg.method, r, c, cfg.k_star, b_ball, s=s_ball, epsilon=epsilon)
        ball_covered = l1_error <= radius

    if not result.converged:
        contains = contained = False
        ball_covered = False

    return ReplicationRecord(
        rep=rep,
        contains=bool(contains),
        contained=bool(contained),
        exact=bool(contains and contained),
        l1_error=l1_error,
        converged=bool(result.converged),
        ball_covered=ball_covered,
        r=float(r),
        c=float(c),
    )


def run_mc(cfg: ExperimentConfig) -> ExperimentReport:
    """Run the configured replications and aggregate (counts and sums only,
    so the result does not depend on evaluation order)."""
    records = tuple(_replication(cfg, t) for t in range(cfg.replications))
    return summarize(cfg, records)


def summarize(cfg: ExperimentConfig, records) -> ExperimentReport:
    R = len(records)
    n_contains = sum(rec.contains for rec in records)
    n_contained = sum(rec.contained for rec in records)
    n_exact = sum(rec.exact for rec in records)
    ball_known = [rec for rec in records if rec.ball_covered is not None]
    n_ball = sum(rec.ball_covered for rec in ball_known)

    p_contains = n_contains / R
    p_contained = n_contained / R
    p_exact = n_exact / R
    ball_coverage = n_ball / len(ball_known) if ball_known else float("nan")
    mean_l1 = float(np.mean([rec.l1_error for rec in records]))

    gid = cfg.guarantee_id()
    metric_name, floor_fn = GUARANTEES[gid]
    floor = floor_fn(cfg.delta, cfg.M)

    def halfwidth(successes, count):
        if count == 0:
            return 0.0
        if cfg.ci_method == "exact":
            return exact_ci_half_width(successes, count)
        return normal_ci_half_width(successes / count, count)

    ci = halfwidth(n_exact, R)
    if metric_name == "ball_coverage":
        metric, metric_ci = ball_coverage, halfwidth(n_ball, len(ball_known))
    elif metric_name == "p_contains":
        metric, metric_ci = p_contains, halfwidth(n_contains, R)
    else:
        metric, metric_ci = p_exact, ci

    return ExperimentReport(
        p_contains=p_contains,
        p_contained=p_contained,
        p_exact=p_exact,
        ball_coverage=ball_coverage,
        mean_l1_error=mean_l1,
        ci_half_width=ci,
        guarantee=floor,
        guarantee_id=gid,
        guarantee_metric=metric_name,
        verdict=_verdict(metric, metric_ci, floor),
        replications=R,
        n_converged=sum(rec.converged for rec in records),
        config=cfg,
        records=tuple(records),
    )


def _verdict(value, ci_half_width, floor):
    if math.isnan(value):
        return VERDICT_INCONCLUSIVE
    if value >= floor:
        return VERDICT_MEETS
    if value + ci_half_width < floor:
        return VERDICT_FAILS
    return VERDICT_INCONCLUSIVE


def verify_guarantee(report: ExperimentReport, guarantee_id) -> str:
    """Re-evaluate a report against a named guarantee floor."""
    if guarantee_id not in GUARANTEES:
        raise UnknownGuarantee(guarantee_id)
    metric_name, floor_fn = GUARANTEES[guarantee_id]
    value = getattr(report, metric_name)
    floor = floor_fn(report.config.delta, report.config.M)
    if math.isnan(value):
        return VERDICT_INCONCLUSIVE
    if report.records:
        if metric_name == "ball_coverage":
            known = [r for r in report.records if r.ball_covered is not None]
            successes, count = sum(r.ball_covered for r in known), len(known)
        elif metric_name == "p_contains":
            successes, count = sum(r.contains for r in report.records), len(report.records)
        else:
            successes, count = sum(r.exact for r in report.records), len(report.records)
    else:
        count = report.replications
        successes = round(value * count)
    if report.config.ci_method == "exact":
        ci = exact_ci_half_width(successes, count)
    else:
        ci = normal_ci_half_width(value, count)
    return _verdict(value, ci, floor)


def sweep_signal_multiplier(cfg: ExperimentConfig, multipliers):
    """Re-run the experiment across signal multipliers; returns
    [(multiplier, report), ...] for plot data."""
    out = []
    for mult in multipliers:
        sig = replace(cfg.signal, kind=SIGNAL_AT_THRESHOLD, multiplier=float(mult))
        out.append((float(mult), run_mc(replace(cfg, signal=sig))))
    return out


def write_replication_csv(path, report: ExperimentReport):
    """Per-replication CSV: rep, contains, contained, exact, l1_error, converged."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["rep", "contains", "contained", "exact", "l1_error", "converged"])
        for rec in report.records:
            w.writerow([
                rec.rep, int(rec.contains), int(rec.contained), int(rec.exact),
                repr(rec.l1_error), int(rec.converged),
            ])


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as f:
        return ExperimentConfig.from_json_dict(json.load(f))


def save_report(path, report: ExperimentReport):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_json_dict(), f, indent=2)
        f.write("\n")
