"""Independent reference implementations used as test oracles.

Nothing here imports the package's numerical code: each function works
from the textbook definition, trading speed for transparency.
"""
import math

import numpy as np
from scipy import stats


def lag_poly(coefs, step=1, sign=-1.0):
    """``1 + sign*(c_1 L^step + c_2 L^{2 step} + ...)`` as increasing-power coefficients."""
    out = np.zeros(len(coefs) * step + 1)
    out[0] = 1.0
    for i, c in enumerate(coefs, start=1):
        out[i * step] = sign * c
    return out


def sarma_polys(ar=(), ma=(), sar=(), sma=(), S=1):
    phi = np.convolve(lag_poly(ar), lag_poly(sar, S))
    theta = np.convolve(lag_poly(ma, sign=1.0), lag_poly(sma, S, sign=1.0))
    return phi, theta


def arma_autocovariance(phi, theta, sigma2, nlags, terms=4000):
    """``gamma(0..nlags)`` from a long truncated MA(infinity) expansion."""
    psi = np.zeros(terms)
    for j in range(terms):
        v = theta[j] if j < len(theta) else 0.0
        for i in range(1, min(j, len(phi) - 1) + 1):
            v -= phi[i] * psi[j - i]
        psi[j] = v
    return np.array([sigma2 * np.dot(psi[:terms - k], psi[k:]) for k in range(nlags + 1)])


def dense_loglik(y, phi, theta, sigma2, mean=0.0):
    """Exact Gaussian log-likelihood from the full covariance matrix."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    g = arma_autocovariance(phi, theta, sigma2, n - 1)
    cov = np.array([[g[abs(i - j)] for j in range(n)] for i in range(n)])
    return float(stats.multivariate_normal(np.full(n, mean), cov).logpdf(y))


def brute_acf(x, k):
    """Biased sample autocorrelation at lag ``k`` written as a double loop."""
    x = [float(v) for v in x]
    n = len(x)
    m = sum(x) / n
    num = sum((x[t] - m) * (x[t - k] - m) for t in range(k, n))
    den = sum((v - m) ** 2 for v in x)
    return num / den


def regression_pacf(x, k):
    """Last coefficient of an OLS regression of ``x_t`` on ``x_{t-1..t-k}``.

    Uses the Yule-Walker form (sample autocovariances in a Toeplitz
    system) so it matches the biased estimator exactly.
    """
    r = np.array([brute_acf(x, j) for j in range(k + 1)])
    R = np.array([[r[abs(i - j)] for j in range(k)] for i in range(k)])
    return float(np.linalg.solve(R, r[1:k + 1])[-1])


def ols_pacf(x, k):
    """Plain least-squares version of the regression oracle (sample noise differs)."""
    x = np.asarray(x, dtype=float)
    y = x[k:]
    X = np.column_stack([np.ones(len(y))] + [x[k - j:len(x) - j] for j in range(1, k + 1)])
    return float(np.linalg.lstsq(X, y, rcond=None)[0][-1])


def literal_ljung_box(x, h):
    n = len(x)
    q = 0.0
    for k in range(1, h + 1):
        q += brute_acf(x, k) ** 2 / (n - k)
    return n * (n + 2) * q


def ols_line(xs, ys):
    """Closed-form simple regression: slope, intercept, R^2."""
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(xs, ys))
    sxx = math.fsum((a - mx) ** 2 for a in xs)
    syy = math.fsum((b - my) ** 2 for b in ys)
    slope = sxy / sxx
    return slope, my - slope * mx, sxy * sxy / (sxx * syy)


def monthly_means(dates, values):
    """Group weekly values by the calendar month of their date."""
    groups = {}
    for d, v in zip(dates, values):
        groups.setdefault((d.year, d.month), []).append(v)
    return [sum(v) / len(v) for _, v in sorted(groups.items())]
