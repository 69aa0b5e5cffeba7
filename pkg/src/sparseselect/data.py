"""Data model: standardized designs, ground-truth models, and empirical
(weighted) gram matrices.

Standardization uses the 1/n scaling convention throughout: every column of
a valid design has (1/n) sum_i X_ij = 0 and (1/n) sum_i X_ij^2 = 1.  All
constants computed elsewhere in the package assume exactly this convention.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstantColumn, DimensionMismatch
from .links import SIGMOID_SLOPE_MAX, sigmoid_slope

MEAN_TOL = 1e-10
SCALE_TOL = 1e-10
SYM_TOL = 1e-12
DIAG_TOL = 1e-10
PSD_TOL = 1e-8

KIND_BINARY = "binary"
KIND_REAL = "real"


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Standardized design with response.

    x        : (n, M) matrix, columns centered and scaled to unit 1/n-norm
    y        : length-n response; values in {0, 1} when kind == "binary"
    kind     : "binary" or "real"
    l_bound  : almost-sure bound L on |X_ij|; defaults to the observed max
    sigma    : sqrt(Var Y), required only for real-response tuning
    column_names, center, scale : bookkeeping for mapping coefficients back
                                  to the raw input scale
    """

    x: np.ndarray
    y: np.ndarray
    kind: str
    l_bound: float | None = None
    sigma: float | None = None
    column_names: tuple[str, ...] | None = None
    center: np.ndarray | None = None
    scale: np.ndarray | None = None

    def __post_init__(self):
        x = _readonly(self.x)
        y = _readonly(self.y)
        if x.ndim != 2:
            raise DimensionMismatch("design must be a 2-d matrix")
        n, m = x.shape
        if y.shape != (n,):
            raise DimensionMismatch(f"response length {y.shape} != n = {n}")
        if n < 2:
            raise DimensionMismatch("need at least 2 observations")
        if self.kind not in (KIND_BINARY, KIND_REAL):
            raise ValueError(f"unknown response kind {self.kind!r}")
        # NaN compares false against every tolerance, so reject it explicitly
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise ValueError("design and response must be finite")

        means = x.mean(axis=0)
        msq = (x * x).mean(axis=0)
        if np.abs(means).max(initial=0.0) > MEAN_TOL:
            raise ValueError("design columns are not centered to tolerance")
        if np.abs(msq - 1.0).max(initial=0.0) > SCALE_TOL:
            raise ValueError("design columns do not have unit 1/n-norm")

        observed_max = float(np.abs(x).max(initial=0.0))
        l_bound = self.l_bound
        if l_bound is None:
            l_bound = observed_max
        elif observed_max > l_bound * (1.0 + 1e-12):
            raise ValueError(
                f"max |X_ij| = {observed_max} exceeds l_bound = {l_bound}"
            )
        if l_bound <= 0:
            raise ValueError("l_bound must be positive")

        if self.kind == KIND_BINARY and not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("binary response must take values in {0, 1}")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")

        names = self.column_names
        if names is not None:
            names = tuple(names)
            if len(names) != m:
                raise DimensionMismatch("column_names length != M")

        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "l_bound", float(l_bound))
        object.__setattr__(self, "column_names", names)
        if self.center is not None:
            object.__setattr__(self, "center", _readonly(self.center))
        if self.scale is not None:
            object.__setattr__(self, "scale", _readonly(self.scale))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class TrueModel:
    """Ground-truth coefficient vector for simulation and verification.

    beta_star : length-M vector, nonzero exactly on ``support``
    support   : 0-based indices of the truly active variables
    k_star    : |support|
    b_big     : bound B on max_{j in support} |beta*_j|
    d_big     : bound D on |beta*|_1
    """

    beta_star: np.ndarray
    support: tuple[int, ...]
    k_star: int
    b_big: float
    d_big: float

    def __post_init__(self):
        beta = _readonly(self.beta_star)
        support = tuple(sorted(int(j) for j in self.support))
        nz = tuple(int(j) for j in np.flatnonzero(beta))
        if nz != support:
            raise ValueError("support must be exactly the nonzero positions")
        if self.k_star != len(support):
            raise ValueError("k_star must equal |support|")
        if self.b_big <= 0 or self.d_big < 0:
            raise ValueError("b_big must be positive and d_big nonnegative")
        if support:
            if np.abs(beta[list(support)]).max() > self.b_big * (1 + 1e-12):
                raise ValueError("max |beta*_j| exceeds b_big")
        if np.abs(beta).sum() > self.d_big * (1 + 1e-12) + 1e-300:
            raise ValueError("|beta*|_1 exceeds d_big")
        object.__setattr__(self, "beta_star", beta)
        object.__setattr__(self, "support", support)

    @classmethod
    def from_beta(cls, beta, b_big=None, d_big=None) -> "TrueModel":
        """Build a TrueModel from a coefficient vector, inferring bounds."""
        beta = np.asarray(beta, dtype=float)
        support = tuple(int(j) for j in np.flatnonzero(beta))
        if b_big is None:
            b_big = float(np.abs(beta).max()) if support else 1.0
        if d_big is None:
            d_big = float(np.abs(beta).sum())
        return cls(beta, support, len(support), float(b_big), float(d_big))


@dataclass(frozen=True)
class GramMatrix:
    """Empirical correlation matrix with entries (1/n) sum_i X_ik X_ij."""

    sigma_mat: np.ndarray
    min_eigenvalue: float = field(init=False)

    def __post_init__(self):
        s = np.asarray(self.sigma_mat, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise DimensionMismatch("gram matrix must be square")
        if np.abs(s - s.T).max(initial=0.0) > SYM_TOL:
            raise ValueError("gram matrix is not symmetric to tolerance")
        if np.abs(np.diag(s) - 1.0).max(initial=0.0) > DIAG_TOL:
            raise ValueError("gram matrix diagonal must be 1 (standardized design)")
        mineig = float(np.linalg.eigvalsh(s).min())
        if mineig < -PSD_TOL:
            raise ValueError(f"gram matrix has eigenvalue {mineig} < -{PSD_TOL}")
        object.__setattr__(self, "sigma_mat", _readonly(s))
        object.__setattr__(self, "min_eigenvalue", mineig)

    @property
    def n_features(self) -> int:
        return self.sigma_mat.shape[0]


@dataclass(frozen=True)
class WeightedGram:
    """Gram matrix reweighted by logistic slopes g'(beta' X_i) in (0, 1/4]."""

    sigma1_mat: np.ndarray
    weights: np.ndarray
    min_eigenvalue: float = field(init=False)

    def __post_init__(self):
        s = np.asarray(self.sigma1_mat, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise DimensionMismatch("weighted gram matrix must be square")
        if np.abs(s - s.T).max(initial=0.0) > SYM_TOL:
            raise ValueError("weighted gram matrix is not symmetric to tolerance")
        if np.any(w <= 0.0) or np.any(w > SIGMOID_SLOPE_MAX + 1e-15):
            raise ValueError("weights must lie in (0, 1/4]")
        mineig = float(np.linalg.eigvalsh(s).min())
        if mineig < -PSD_TOL:
            raise ValueError(f"weighted gram has eigenvalue {mineig} < -{PSD_TOL}")
        object.__setattr__(self, "sigma1_mat", _readonly(s))
        object.__setattr__(self, "weights", _readonly(w))
        object.__setattr__(self, "min_eigenvalue", mineig)

    @property
    def n_features(self) -> int:
        return self.sigma1_mat.shape[0]


def standardize(raw, y, kind, l_bound=None, sigma=None, column_names=None) -> Dataset:
    """Center and scale every column of ``raw`` to mean 0 and unit 1/n-norm.

    The per-column mean and scale are recorded on the returned Dataset so
    fitted coefficients can be mapped back to the raw scale.  ``l_bound``
    defaults to the observed max |X_ij| of the standardized matrix.

    Raises ConstantColumn if a column has zero empirical variance and
    DimensionMismatch if the response length disagrees.
    """
    raw = np.asarray(raw, dtype=float)
    y = np.asarray(y, dtype=float)
    if raw.ndim != 2:
        raise DimensionMismatch("design must be a 2-d matrix")
    n, m = raw.shape
    if y.shape != (n,):
        raise DimensionMismatch(f"response length {len(y)} != n = {n}")
    if n < 2:
        raise DimensionMismatch("need at least 2 observations")

    center = raw.mean(axis=0)
    centered = raw - center
    scale = np.sqrt((centered * centered).mean(axis=0))
    col_floor = np.maximum(np.abs(raw).max(axis=0), 1.0) * 1e-13
    for j in range(m):
        if scale[j] <= col_floor[j]:
            raise ConstantColumn(column_names[j] if column_names else j)
    x = centered / scale
    return Dataset(
        x=x,
        y=y,
        kind=kind,
        l_bound=l_bound,
        sigma=sigma,
        column_names=column_names,
        center=center,
        scale=scale,
    )


def to_raw_scale(ds: Dataset, beta) -> tuple[np.ndarray, float]:
    """Map standardized-scale coefficients to raw-scale (coefs, intercept)."""
    beta = np.asarray(beta, dtype=float)
    if ds.center is None or ds.scale is None:
        raise ValueError("dataset carries no standardization metadata")
    coefs = beta / ds.scale
    intercept = -float(coefs @ ds.center)
    return coefs, intercept


def gram(ds: Dataset) -> GramMatrix:
    """Empirical gram matrix (1/n) X'X, symmetrized exactly."""
    s = ds.x.T @ ds.x / ds.n
    return GramMatrix((s + s.T) / 2.0)


def weighted_gram(ds: Dataset, beta) -> WeightedGram:
    """Gram matrix weighted by logistic slopes at linear predictor X beta."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (ds.n_features,):
        raise DimensionMismatch(
            f"beta length {beta.shape} != M = {ds.n_features}"
        )
    w = sigmoid_slope(ds.x @ beta)
    s = ds.x.T @ (w[:, None] * ds.x) / ds.n
    return WeightedGram((s + s.T) / 2.0, w)


def load_csv(path, response_column=None):
    """Read a numeric CSV with a header row.

    Returns (matrix, response, predictor_names); ``response`` is None when no
    response column is requested.  All values are parsed as IEEE doubles.
    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        header = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)

    if response_column is None:
        return data, None, tuple(header)
    if response_column not in header:
        raise ValueError(
            f"{path}: response column {response_column!r} not found "
            f"(columns: {', '.join(header)})"
        )
    y_idx = header.index(response_column)
    pred_idx = [j for j in range(len(header)) if j != y_idx]
    names = tuple(header[j] for j in pred_idx)
    return data[:, pred_idx], data[:, y_idx], names
