"""Logistic link function and its derivative bounds."""

import numpy as np

# sup |g'| and sup |g''| for g(z) = e^z / (1 + e^z)
SIGMOID_SLOPE_MAX = 0.25
SIGMOID_CURVATURE_MAX = 1.0 / (6.0 * np.sqrt(3.0))


def sigmoid(z):
    """g(z) = e^z / (1 + e^z), computed without overflow for large |z|."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid_slope(z):
    """g'(z) = e^z / (1 + e^z)^2 = g(z) (1 - g(z)), in (0, 1/4]."""
    p = sigmoid(z)
    return p * (1.0 - p)


def log1p_exp(z):
    """log(1 + e^z), stable for large positive z."""
    return np.logaddexp(0.0, np.asarray(z, dtype=float))
