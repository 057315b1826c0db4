"""Lag polynomials and the stationarity-preserving reparameterisation.

AR coefficients follow ``y_t = a_1 y_{t-1} + ... + a_p y_{t-p} + ...``
(polynomial ``1 - a_1 L - ... - a_p L^p``); MA coefficients follow
``e_t + m_1 e_{t-1} + ...`` (polynomial ``1 + m_1 L + ... + m_q L^q``).
"""
from __future__ import annotations

import numpy as np


def constrain_stationary(x) -> np.ndarray:
    """Map unconstrained reals to coefficients of a stationary AR polynomial.

    Each input is squashed to a partial autocorrelation in (-1, 1) with
    ``x / sqrt(1 + x^2)``; the Durbin-Levinson recursion then builds the AR
    coefficients (Monahan, 1984).
    """
    x = np.asarray(x, dtype=float)
    r = x / np.sqrt(1.0 + x * x)
    phi = np.zeros(0)
    for k in range(len(r)):
        phi = np.concatenate([phi - r[k] * phi[::-1], [r[k]]])
    return phi


def unconstrain_stationary(phi, clip: float = 0.999) -> np.ndarray:
    """Inverse of :func:`constrain_stationary` for a stationary ``phi``.

    Partial autocorrelations are clipped to ``[-clip, clip]`` so that
    near-boundary start values stay finite.
    """
    phi = np.array(phi, dtype=float)
    p = len(phi)
    r = np.zeros(p)
    for k in range(p, 0, -1):
        rk = phi[k - 1]
        if abs(rk) >= 1:
            raise ValueError("coefficients are not stationary")
        r[k - 1] = rk
        if k > 1:
            head = phi[:k - 1]
            phi = (head + rk * head[::-1]) / (1.0 - rk * rk)
    r = np.clip(r, -clip, clip)
    return r / np.sqrt(1.0 - r * r)


def constrain_invertible(x) -> np.ndarray:
    # 1 + m_1 L + ... is invertible iff (-m) is a stationary AR polynomial
    return -constrain_stationary(x)


def unconstrain_invertible(ma, clip: float = 0.999) -> np.ndarray:
    return unconstrain_stationary(-np.asarray(ma, dtype=float), clip)


def ar_polynomial(ar, sar=(), S: int = 1) -> np.ndarray:
    """Coefficients (increasing powers of L) of ``phi(L) Phi(L^S)``."""
    ns = np.concatenate([[1.0], -np.asarray(ar, dtype=float)])
    seas = np.zeros(len(sar) * S + 1)
    seas[0] = 1.0
    for i, a in enumerate(sar, start=1):
        seas[i * S] = -a
    return np.convolve(ns, seas)


def ma_polynomial(ma, sma=(), S: int = 1) -> np.ndarray:
    """Coefficients (increasing powers of L) of ``theta(L) Theta(L^S)``."""
    ns = np.concatenate([[1.0], np.asarray(ma, dtype=float)])
    seas = np.zeros(len(sma) * S + 1)
    seas[0] = 1.0
    for i, m in enumerate(sma, start=1):
        seas[i * S] = m
    return np.convolve(ns, seas)


def is_stationary(poly, tol: float = 1e-10) -> bool:
    """True if all roots of the lag polynomial lie strictly outside the unit circle."""
    poly = np.trim_zeros(np.asarray(poly, dtype=float), "b")
    if len(poly) <= 1:
        return True
    roots = np.roots(poly[::-1])
    return bool(np.all(np.abs(roots) > 1.0 + tol))


def psi_weights(ar_poly, ma_poly, n: int) -> np.ndarray:
    """First ``n`` MA(infinity) weights of ``ma_poly(L) / ar_poly(L)``."""
    psi = np.zeros(n)
    for j in range(n):
        acc = ma_poly[j] if j < len(ma_poly) else 0.0
        for i in range(1, min(j, len(ar_poly) - 1) + 1):
            acc -= ar_poly[i] * psi[j - i]
        psi[j] = acc
    return psi
