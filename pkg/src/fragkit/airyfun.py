"""Airy function Ai of the first kind, evaluated from scratch.

Maclaurin series for |s| <= 6 and Poincare asymptotic expansions beyond;
the boundary keeps the series cancellation mild while the asymptotic sums
are already deep in their convergent-looking regime.  Zeros are located by
bisection on the evaluator itself.
"""
from __future__ import annotations

import math

import numpy as np

SERIES_RADIUS = 6.0

# Ai(0) = 3**(-2/3)/Gamma(2/3), Ai'(0) = -3**(-1/3)/Gamma(1/3)
_AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
_AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)

_MAX_SERIES_TERMS = 80
_MAX_ASYMPT_TERMS = 40


def _ai_series(s: np.ndarray) -> np.ndarray:
    """Ai via the two standard power series around the origin."""
    s3 = s * s * s
    f_term = np.ones_like(s)
    g_term = s.copy()
    f_sum = f_term.copy()
    g_sum = g_term.copy()
    for k in range(_MAX_SERIES_TERMS):
        f_term = f_term * s3 / ((3 * k + 2) * (3 * k + 3))
        g_term = g_term * s3 / ((3 * k + 3) * (3 * k + 4))
        f_sum += f_term
        g_sum += g_term
        if np.all(np.abs(f_term) + np.abs(g_term) < 1e-18 * (np.abs(f_sum) + np.abs(g_sum) + 1.0)):
            break
    return _AI0 * f_sum + _AIP0 * g_sum


def _asymptotic_coeffs(n: int) -> np.ndarray:
    u = np.empty(n)
    u[0] = 1.0
    for k in range(n - 1):
        u[k + 1] = u[k] * (6 * k + 1) * (6 * k + 5) / (72.0 * (k + 1))
    return u


_U = _asymptotic_coeffs(_MAX_ASYMPT_TERMS)


def _ai_asympt_pos(s: np.ndarray) -> np.ndarray:
    """Decaying branch for s > SERIES_RADIUS."""
    zeta = (2.0 / 3.0) * s ** 1.5
    total = np.ones_like(s)
    term = np.ones_like(s)
    prev = np.full_like(s, np.inf)
    for k in range(1, _MAX_ASYMPT_TERMS):
        term = term * (-_U[k] / _U[k - 1]) / zeta
        mag = np.abs(term)
        grow = mag >= prev
        term = np.where(grow, 0.0, term)  # stop at the smallest term
        total += term
        if np.all(grow) or np.all(mag < 1e-18):
            break
        prev = np.where(grow, -np.inf, mag)
    return np.exp(-zeta) / (2.0 * math.sqrt(math.pi) * s ** 0.25) * total


def _ai_asympt_neg(s: np.ndarray) -> np.ndarray:
    """Oscillatory branch for s < -SERIES_RADIUS."""
    x = -s
    zeta = (2.0 / 3.0) * x ** 1.5
    inv2 = 1.0 / (zeta * zeta)
    cos_sum = np.ones_like(x)
    sin_sum = np.full_like(x, _U[1] / zeta)
    cos_term = np.ones_like(x)
    sin_term = sin_sum.copy()
    for k in range(1, _MAX_ASYMPT_TERMS // 2):
        cos_term = cos_term * (-inv2) * (_U[2 * k] / _U[2 * k - 2])
        sin_term = sin_term * (-inv2) * (_U[2 * k + 1] / _U[2 * k - 1])
        cos_sum += cos_term
        sin_sum += sin_term
        if np.all(np.abs(cos_term) + np.abs(sin_term) < 1e-18):
            break
    phase = zeta - 0.25 * math.pi
    amp = 1.0 / (math.sqrt(math.pi) * x ** 0.25)
    return amp * (np.cos(phase) * cos_sum + np.sin(phase) * sin_sum)


def airy_ai(s):
    """Evaluate Ai(s) for real scalar or array input."""
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty_like(arr)
    mid = np.abs(arr) <= SERIES_RADIUS
    pos = arr > SERIES_RADIUS
    neg = arr < -SERIES_RADIUS
    if mid.any():
        out[mid] = _ai_series(arr[mid])
    if pos.any():
        out[pos] = _ai_asympt_pos(arr[pos])
    if neg.any():
        out[neg] = _ai_asympt_neg(arr[neg])
    return out if np.ndim(s) else float(out[0])


def airy_ai_zeros(count: int, tol: float = 1e-12) -> np.ndarray:
    """First ``count`` negative zeros of Ai, by scan and bisection."""
    if count < 1:
        raise ValueError("count must be positive")
    zeros = []
    step = 0.02
    s_hi = -0.5
    f_hi = airy_ai(s_hi)
    s = s_hi
    while len(zeros) < count:
        s_lo = s - step
        f_lo = airy_ai(s_lo)
        if f_lo == 0.0:
            zeros.append(s_lo)
        elif f_lo * f_hi < 0.0:
            a, b = s_lo, s
            fa = f_lo
            while b - a > tol:
                m = 0.5 * (a + b)
                fm = airy_ai(m)
                if fm == 0.0:
                    a = b = m
                    break
                if fa * fm < 0.0:
                    b = m
                else:
                    a, fa = m, fm
            zeros.append(0.5 * (a + b))
        s, f_hi = s_lo, f_lo
        if s < -1000.0:
            raise RuntimeError("zero scan ran away")
    return np.asarray(zeros[:count])
