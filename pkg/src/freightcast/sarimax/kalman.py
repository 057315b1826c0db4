"""Kalman filter for a zero-mean ARMA process in Harvey's state-space form.

With ``m = max(p, q + 1)`` the state evolves as ``alpha_{t+1} = T alpha_t + R e_t``
where ``T`` holds the AR coefficients in its first column and ones on the
superdiagonal, ``R = (1, m_1, ..., m_{m-1})'`` and the observation is the
first state element (no measurement noise). The companion structure of ``T``
lets every prediction step run in O(m^2).
"""
from __future__ import annotations

import numpy as np
from numba import njit
from scipy.linalg import solve_discrete_lyapunov

from ..errors import NumericalError

LOG_2PI = np.log(2.0 * np.pi)


def state_dim(ar_poly: np.ndarray, ma_poly: np.ndarray) -> int:
    return max(len(ar_poly) - 1, len(ma_poly), 1)


def system_vectors(ar_poly: np.ndarray, ma_poly: np.ndarray):
    """First column of ``T`` and the vector ``R`` for the expanded polynomials."""
    m = state_dim(ar_poly, ma_poly)
    phi = np.zeros(m)
    phi[:len(ar_poly) - 1] = -ar_poly[1:]
    r = np.zeros(m)
    r[:len(ma_poly)] = ma_poly
    return phi, r


def transition_matrix(phi: np.ndarray) -> np.ndarray:
    m = len(phi)
    T = np.zeros((m, m))
    T[:, 0] = phi
    T[np.arange(m - 1), np.arange(1, m)] = 1.0
    return T


def stationary_covariance(phi: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Unconditional state covariance for unit innovation variance.

    Solves the discrete Lyapunov equation ``P = T P T' + R R'``.
    """
    T = transition_matrix(phi)
    P = solve_discrete_lyapunov(T, np.outer(r, r))
    P = 0.5 * (P + P.T)
    if not np.all(np.isfinite(P)):
        raise NumericalError("stationary covariance is not finite")
    return P


@njit(cache=True, nogil=True)
def _predict_cov(P, phi, r, sigma2):  # pragma: no cover - compiled
    # T P T' + sigma2 R R' using the companion structure of T
    m = len(phi)
    M = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            v = phi[i] * P[0, j]
            if i + 1 < m:
                v += P[i + 1, j]
            M[i, j] = v
    out = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            v = phi[j] * M[i, 0]
            if j + 1 < m:
                v += M[i, j + 1]
            v += sigma2 * r[i] * r[j]
            out[i, j] = v
            out[j, i] = v
    return out


@njit(cache=True, nogil=True)
def _predict_state(a, phi):  # pragma: no cover - compiled
    m = len(phi)
    out = np.empty(m)
    for i in range(m):
        v = phi[i] * a[0]
        if i + 1 < m:
            v += a[i + 1]
        out[i] = v
    return out


@njit(cache=True, nogil=True)
def _filter(y, phi, r, sigma2, P0):  # pragma: no cover - compiled
    n = len(y)
    m = len(phi)
    a = np.zeros(m)
    P = P0.copy()
    v = np.empty(n)
    F = np.empty(n)
    states = np.zeros((n + 1, m))
    loglik = 0.0
    status = 0
    for t in range(n):
        states[t] = a
        f = P[0, 0]
        if not (f > 0.0) or not np.isfinite(f):
            status = t + 1
            break
        e = y[t] - a[0]
        v[t] = e
        F[t] = f
        loglik += -0.5 * (np.log(2.0 * np.pi) + np.log(f) + e * e / f)
        # measurement update (Z = e_1, no observation noise)
        k = P[:, 0] / f
        au = a + k * e
        Pu = np.empty((m, m))
        for i in range(m):
            for j in range(m):
                Pu[i, j] = P[i, j] - k[i] * P[0, j]
        a = _predict_state(au, phi)
        P = _predict_cov(Pu, phi, r, sigma2)
    states[n] = a
    return loglik, v, F, a, P, states, status


@njit(cache=True, nogil=True)
def _forecast_cov(P, phi, r, sigma2, h):  # pragma: no cover - compiled
    """Joint covariance of the first state element over ``h`` future steps."""
    m = len(phi)
    out = np.empty((h, h))
    Pi = P.copy()
    for i in range(h):
        g = Pi[:, 0].copy()
        out[i, i] = g[0]
        for j in range(i + 1, h):
            g = _predict_state(g, phi)
            out[i, j] = g[0]
            out[j, i] = g[0]
        Pi = _predict_cov(Pi, phi, r, sigma2)
    return out


class FilterOutput:
    """Filter results; ``states[t]`` is the predicted state before observation ``t``."""

    __slots__ = ("loglik", "innovations", "variances", "next_state", "next_cov", "states")

    def __init__(self, loglik, innovations, variances, next_state, next_cov, states):
        self.loglik = loglik
        self.innovations = innovations
        self.variances = variances
        self.next_state = next_state
        self.next_cov = next_cov
        self.states = states


def run_filter(y: np.ndarray, ar_poly: np.ndarray, ma_poly: np.ndarray,
               sigma2: float) -> FilterOutput:
    """Exact Gaussian filter of a zero-mean stationary ARMA series ``y``."""
    phi, r = system_vectors(ar_poly, ma_poly)
    P0 = sigma2 * stationary_covariance(phi, r)
    y = np.ascontiguousarray(y, dtype=float)
    loglik, v, F, a, P, states, status = _filter(y, phi, r, float(sigma2), P0)
    if status:
        raise NumericalError(f"innovation variance not positive at step {status - 1}")
    if not np.isfinite(loglik):
        raise NumericalError("log-likelihood is not finite")
    return FilterOutput(float(loglik), v, F, a, P, states)


def project_state(state: np.ndarray, ar_poly, ma_poly, h: int) -> np.ndarray:
    """Conditional means of the next ``h`` observations from a predicted state."""
    phi, _ = system_vectors(ar_poly, ma_poly)
    means = np.empty(h)
    a = state
    for i in range(h):
        means[i] = a[0]
        a = _predict_state(a, phi)
    return means


def forecast_moments(out: FilterOutput, ar_poly, ma_poly, sigma2: float, h: int):
    """Means and joint covariance of the next ``h`` observations."""
    phi, r = system_vectors(ar_poly, ma_poly)
    means = np.empty(h)
    a = out.next_state
    for i in range(h):
        means[i] = a[0]
        a = _predict_state(a, phi)
    cov = _forecast_cov(out.next_cov, phi, r, float(sigma2), h)
    return means, cov
