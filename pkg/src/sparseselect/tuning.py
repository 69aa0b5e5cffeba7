"""Closed-form tuning constants for the four penalized estimators.

Every bound of the form "r >= ..." is evaluated at equality: the guarantees
hold for any admissible r and the smallest one gives the weakest signal
requirement.  Logarithms are natural throughout.

Methods are named by loss and penalty:
  lasso_ls        l1 penalized least squares
  enet_ls         l1 + l2 penalized least squares
  lasso_logistic  l1 penalized logistic regression
  enet_logistic   l1 + l2 penalized logistic regression
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidDelta, MissingSigma

METHOD_LASSO_LS = "lasso_ls"
METHOD_ENET_LS = "enet_ls"
METHOD_LASSO_LOGISTIC = "lasso_logistic"
METHOD_ENET_LOGISTIC = "enet_logistic"
METHODS = (
    METHOD_LASSO_LS,
    METHOD_ENET_LS,
    METHOD_LASSO_LOGISTIC,
    METHOD_ENET_LOGISTIC,
)

REGIME_LARGE = "large"
REGIME_WEAK = "weak"

_LOGISTIC_LEAD = 6.0 + 4.0 * math.sqrt(2.0)


def _check_method(method):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def loss_of(method) -> str:
    _check_method(method)
    return "squared" if method.endswith("_ls") else "logistic"


def is_elastic(method) -> bool:
    _check_method(method)
    return method.startswith("enet")


def alpha_for(method) -> float:
    """Cone-opening constant of the estimation-error set: 3 for the pure l1
    estimators, 4 for the l1 + l2 estimators."""
    return 4.0 if is_elastic(method) else 3.0


def r_for(method, n, M, delta, kind=None, l_bound=None, sigma=None, k_upper=None):
    """Smallest admissible l1 tuning level r for the given configuration.

    kind    : "binary" or "real"; required for the least-squares methods
              (logistic responses are binary by construction)
    k_upper : upper bound K on the true sparsity; when present the formulas
              switch to selection mode (KM replaces M for least squares,
              2M/delta replaces 1/delta for logistic)
    """
    _check_method(method)
    if not 0.0 < delta < 1.0:
        raise InvalidDelta(f"delta must be in (0, 1), got {delta}")
    if n < 1 or M < 1:
        raise ValueError("n and M must be positive")
    if k_upper is not None and k_upper < 1:
        raise ValueError("k_upper must be a positive integer")

    if loss_of(method) == "logistic":
        if l_bound is None or l_bound <= 0:
            raise ValueError("logistic tuning requires a positive l_bound")
        mn = max(M, n)
        tail = 2.0 * M / delta if k_upper is not None else 1.0 / delta
        return (
            _LOGISTIC_LEAD * l_bound * math.sqrt(2.0 * math.log(2.0 * mn) / n)
            + 2.0 * l_bound * math.sqrt(2.0 * math.log(tail) / n)
            + 1.0 / (4.0 * mn)
        )

    if kind not in ("binary", "real"):
        raise ValueError("least-squares tuning requires kind 'binary' or 'real'")
    m_eff = M * (k_upper if k_upper is not None else 1)
    if kind == "binary":
        return 2.0 * math.sqrt(2.0 * math.log(2.0 * m_eff / delta) / n)
    if sigma is None or sigma <= 0:
        raise MissingSigma("real-response tuning requires sigma = sqrt(Var Y)")
    if l_bound is None or l_bound <= 0:
        raise ValueError("real-response tuning requires a positive l_bound")
    t = math.log(4.0 * m_eff / delta)
    return max(4.0 * l_bound * sigma * math.sqrt(t / n), 8.0 * l_bound * t / n)


def epsilon_tech(n, M, r):
    """Technical slack (ln 2) / 2^(max(M, n) + 1) / r.

    Underflows to exactly 0.0 once 2^(max(M,n)+1) exceeds the double range;
    at any realistic size the term is far below machine epsilon anyway.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    mn = max(int(M), int(n))
    if mn < 1:
        raise ValueError("max(M, n) must be at least 1")
    return math.ldexp(math.log(2.0), -(mn + 1)) / r


def c_for(r, b_big):
    """l2 tuning level c = r / (2B) used by the ball and exact-selection
    least-squares results."""
    if r <= 0 or b_big <= 0:
        raise ValueError("r and b_big must be positive")
    return r / (2.0 * b_big)


def c_for_selection_logistic(r, b_big):
    """Alternative preset c = 2r / B used by the weak-signal logistic
    selection result; exposed separately rather than chosen silently."""
    if r <= 0 or b_big <= 0:
        raise ValueError("r and b_big must be positive")
    return 2.0 * r / b_big


def s_const(l_bound, d_big):
    """Logistic curvature floor s = (1 + e^(6 L D))^(-4) in (0, 1]."""
    if l_bound <= 0 or d_big < 0:
        raise ValueError("l_bound must be positive and d_big nonnegative")
    a = 6.0 * l_bound * d_big
    # exp(-4 log(1 + e^a)); underflows to 0.0 for very large L*D
    return math.exp(-4.0 * _log1p_exp(a))


def _log1p_exp(a):
    if a > 36.0:
        return a + math.log1p(math.exp(-a))
    return math.log1p(math.exp(a))


def ball_radius(method, r, c, k_star, b, s=1.0, epsilon=0.0):
    """Radius of the l1 ball around beta* covering the estimate with
    probability at least 1 - delta (at the matching r and c)."""
    _check_method(method)
    if r <= 0 or k_star < 0 or not 0.0 < b <= 1.0:
        raise ValueError("need r > 0, k_star >= 0, b in (0, 1]")
    if method == METHOD_LASSO_LS:
        return 4.0 * r * k_star / b
    if method == METHOD_ENET_LS:
        return 4.25 * r * k_star / (b + c)
    if s < 0:
        raise ValueError("s must be nonnegative")
    slack = (1.0 + 1.0 / r) * epsilon
    # s can underflow to exactly 0.0 for very large L*D; the radius is then
    # +inf, an honest statement that the bound has become vacuous
    if method == METHOD_LASSO_LOGISTIC:
        if s * b == 0.0:
            return math.inf
        return 4.0 * r * k_star / (s * b) + slack
    if s * b + c == 0.0:
        return math.inf
    return 4.25 * r * k_star / (s * b + c) + slack


def signal_threshold(method, regime, r, c=0.0, k_star=None, b=None, s=1.0, epsilon=0.0):
    """Minimum |beta*_j| needed for detection.

    regime "large": the l1-ball radius itself (needs k_star and b).
    regime "weak" : 2r for the least-squares methods regardless of k_star;
                    3.5r + 3(1 + 1/r) eps (l1) or 3.5r + (1 + 1/r) eps
                    (l1 + l2) for logistic.
    """
    _check_method(method)
    if regime == REGIME_LARGE:
        if k_star is None or b is None:
            raise ValueError("large regime needs k_star and b")
        return ball_radius(method, r, c, k_star, b, s=s, epsilon=epsilon)
    if regime != REGIME_WEAK:
        raise ValueError(f"unknown regime {regime!r}")
    if r <= 0:
        raise ValueError("r must be positive")
    if loss_of(method) == "squared":
        return 2.0 * r
    slack = (1.0 + 1.0 / r) * epsilon
    if method == METHOD_LASSO_LOGISTIC:
        return 3.5 * r + 3.0 * slack
    return 3.5 * r + slack


def d_limit(method, s=1.0, c=0.0, epsilon=0.0):
    """Largest admissible coherence constant d for the weak-signal selection
    results of each method."""
    _check_method(method)
    if method == METHOD_LASSO_LS:
        return 1.0 / 15.0
    if method == METHOD_ENET_LS:
        return (1.0 + c) / 17.5
    if not 0.0 < s <= 1.0:
        raise ValueError("s must be in (0, 1]")
    if method == METHOD_LASSO_LOGISTIC:
        return s / (16.0 + 2.0 * s * (7.0 + epsilon))
    return (s + c) / (17.0 + 2.0 * s * (8.0 + epsilon))


@dataclass(frozen=True)
class TuningBundle:
    """All constants for one method/configuration, evaluated at equality."""

    method: str
    r: float
    c: float
    epsilon: float
    s: float
    b: float
    delta: float
    k_upper: int | None
    ball_radius: float
    signal_threshold_large: float
    signal_threshold_weak: float

    def __post_init__(self):
        _check_method(self.method)
        if loss_of(self.method) == "squared":
            if self.epsilon != 0.0 or self.s != 1.0:
                raise ValueError("squared-loss bundles have epsilon = 0, s = 1")
        if self.r <= 0 or not 0.0 < self.b <= 1.0 or not 0.0 < self.delta < 1.0:
            raise ValueError("invalid bundle constants")


def make_bundle(
    method,
    n,
    M,
    delta,
    k_star,
    b,
    kind=None,
    l_bound=None,
    sigma=None,
    b_big=None,
    d_big=None,
    k_upper=None,
    selection_c_rule=False,
) -> TuningBundle:
    """Assemble the full constant set for one configuration.

    b is the stability constant of the restricted quadratic-form condition
    (e.g. from the coherence bridge in diagnostics).  b_big / d_big are the
    coefficient bounds B and D; B is needed for the elastic-net c, D for the
    logistic curvature constant s.  selection_c_rule switches the logistic
    elastic net to the c = 2r/B preset.
    """
    r = r_for(method, n, M, delta, kind=kind, l_bound=l_bound, sigma=sigma, k_upper=k_upper)
    logistic = loss_of(method) == "logistic"
    epsilon = epsilon_tech(n, M, r) if logistic else 0.0
    if logistic:
        if d_big is None:
            raise ValueError("logistic bundles need d_big (the l1 bound D)")
        s = s_const(l_bound, d_big)
    else:
        s = 1.0
    if is_elastic(method):
        if b_big is None:
            raise ValueError("elastic-net bundles need b_big (the sup bound B)")
        if logistic and selection_c_rule:
            c = c_for_selection_logistic(r, b_big)
        else:
            c = c_for(r, b_big)
    else:
        c = 0.0
    return TuningBundle(
        method=method,
        r=r,
        c=c,
        epsilon=epsilon,
        s=s,
        b=b,
        delta=delta,
        k_upper=k_upper,
        ball_radius=ball_radius(method, r, c, k_star, b, s=s, epsilon=epsilon),
        signal_threshold_large=signal_threshold(
            method, REGIME_LARGE, r, c=c, k_star=k_star, b=b, s=s, epsilon=epsilon
        ),
        signal_threshold_weak=signal_threshold(
            method, REGIME_WEAK, r, c=c, k_star=k_star, b=b, s=s, epsilon=epsilon
        ),
    )
