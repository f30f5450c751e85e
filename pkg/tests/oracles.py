"""Independent reference implementations used as test oracles.

None of these import the package's numerical code; they are written from the
textbook definitions so agreement is meaningful.
"""

import math

import numpy as np


def newton_logistic(X, y, iters=100):
    """Logistic MLE by Newton's method with an explicit Hessian loop."""
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    beta = np.zeros(X.shape[1])
    for _ in range(iters):
        grad = np.zeros_like(beta)
        hess = np.zeros((len(beta), len(beta)))
        for xi, yi in zip(X, y):
            p = 1.0 / (1.0 + math.exp(-float(xi @ beta)))
            grad += (yi - p) * xi
            hess -= p * (1 - p) * np.outer(xi, xi)
        step = np.linalg.solve(hess, -grad)
        beta = beta + step
        if np.max(np.abs(step)) < 1e-13:
            break
    return beta


def logistic_loglik(X, y, beta):
    total = 0.0
    for xi, yi in zip(np.asarray(X, float), np.asarray(y, float)):
        p = 1.0 / (1.0 + math.exp(-float(xi @ beta)))
        total += yi * math.log(p) + (1 - yi) * math.log(1 - p)
    return total


def irls_step(X, y, beta):
    """One textbook IRLS step: weighted least squares on the working response."""
    eta = X @ beta
    p = 1.0 / (1.0 + np.exp(-eta))
    w = p * (1 - p)
    z = eta + (y - p) / w
    W = np.diag(w)
    return np.linalg.solve(X.T @ W @ X, X.T @ W @ z)


def central_differences(f, x, h=1e-6):
    """Jacobian of vector function ``f`` at ``x`` by central differences."""
    x = np.asarray(x, float)
    f0 = np.asarray(f(x))
    J = np.zeros(f0.shape + (len(x),))
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        J[..., i] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h)
    return J


def brute_force_hl(y, pi):
    """Pearson statistic per response with explicit fixed-width bin membership lists."""
    y = np.asarray(y, float)
    pi = np.asarray(pi, float)
    out = []
    for k in range(y.shape[1]):
        members = {ell: [] for ell in range(1, 11)}
        for n in range(len(y)):
            p = float(pi[n, k])
            for ell in range(1, 11):
                lo, hi = (ell - 1) / 10, ell / 10
                if (ell == 1 and 0 <= p <= hi) or (lo < p <= hi):
                    members[ell].append(n)
                    break
        stat = 0.0
        nonempty = 0
        for ell, idx in members.items():
            if not idx:
                continue
            nonempty += 1
            O = sum(y[n, k] for n in idx)
            E = sum(pi[n, k] for n in idx)
            stat += (O - E) ** 2 / E
        out.append(stat if nonempty >= 2 else 0.0)
    return out


def dense_ols(x, y):
    """Intercept and slope from closed-form normal equations."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xm, ym = x.mean(), y.mean()
    slope = ((x - xm) * (y - ym)).sum() / ((x - xm) ** 2).sum()
    return ym - slope * xm, slope


def expit_hp(x):
    """High-precision logistic function via ``decimal``."""
    from decimal import Decimal, getcontext

    getcontext().prec = 50
    return float(1 / (1 + (-Decimal(x)).exp()))
