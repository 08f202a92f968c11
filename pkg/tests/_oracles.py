"""Independent reference implementations the estimator tests compare against.

Everything here is deliberately naive: normal equations solved by hand-rolled
Gaussian elimination, dummy-variable regression for fixed effects, the
four-means formula for 2x2 difference-in-differences, and sandwich variances
assembled term by term. No scipy, no lstsq.
"""

from __future__ import annotations

import numpy as np


def solve_gaussian(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b by Gaussian elimination with partial pivoting."""
    a = a.astype(float).copy()
    b = b.astype(float).copy()
    n = a.shape[0]
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot, col]) < 1e-14:
            raise ZeroDivisionError("singular system")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        for row in range(col + 1, n):
            m = a[row, col] / a[col, col]
            a[row, col:] -= m * a[col, col:]
            b[row] -= m * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x


def ols_normal_equations(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Coefficients from (X'X) b = X'y, solved by elimination."""
    return solve_gaussian(x.T @ x, x.T @ y)


def classical_se(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    n, k = x.shape
    beta = ols_normal_equations(y, x)
    resid = y - x @ beta
    sigma2 = float(resid @ resid) / (n - k)
    xtx_inv = np.linalg.inv(x.T @ x)
    return np.sqrt(sigma2 * np.diag(xtx_inv))


def hc1_se(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    n, k = x.shape
    beta = ols_normal_equations(y, x)
    resid = y - x @ beta
    xtx_inv = np.linalg.inv(x.T @ x)
    meat = np.zeros((k, k))
    for i in range(n):
        xi = x[i][:, None]
        meat += resid[i] ** 2 * (xi @ xi.T)
    cov = xtx_inv @ meat @ xtx_inv * (n / (n - k))
    return np.sqrt(np.diag(cov))


def cr1_se(y: np.ndarray, x: np.ndarray, clusters: list) -> np.ndarray:
    n, k = x.shape
    beta = ols_normal_equations(y, x)
    resid = y - x @ beta
    xtx_inv = np.linalg.inv(x.T @ x)
    groups = {}
    for i, g in enumerate(clusters):
        groups.setdefault(g, []).append(i)
    n_g = len(groups)
    meat = np.zeros((k, k))
    for idx in groups.values():
        score = (x[idx] * resid[idx][:, None]).sum(axis=0)[:, None]
        meat += score @ score.T
    scale = (n_g / (n_g - 1)) * ((n - 1) / (n - k))
    cov = xtx_inv @ meat @ xtx_inv * scale
    return np.sqrt(np.diag(cov))


def lsdv(y: np.ndarray, x_slopes: np.ndarray, entities: list,
         times: list) -> tuple[np.ndarray, int]:
    """Explicit-dummy two-way fixed effects: returns the slope coefficients
    and the full model column count (const + slopes + dummies)."""
    ent_levels = sorted(set(entities))
    time_levels = sorted(set(times))
    cols = [np.ones(len(y))]
    for j in range(x_slopes.shape[1]):
        cols.append(x_slopes[:, j])
    for e in ent_levels[1:]:
        cols.append(np.array([1.0 if v == e else 0.0 for v in entities]))
    for t in time_levels[1:]:
        cols.append(np.array([1.0 if v == t else 0.0 for v in times]))
    design = np.column_stack(cols)
    beta = ols_normal_equations(y, design)
    n_slopes = x_slopes.shape[1]
    return beta[1:1 + n_slopes], design.shape[1]


def lsdv_cluster_se(y: np.ndarray, x_slopes: np.ndarray, entities: list,
                    times: list) -> np.ndarray:
    """CR1 standard errors of the slopes in the explicit-dummy regression,
    clustered on the entity."""
    ent_levels = sorted(set(entities))
    time_levels = sorted(set(times))
    cols = [np.ones(len(y))]
    for j in range(x_slopes.shape[1]):
        cols.append(x_slopes[:, j])
    for e in ent_levels[1:]:
        cols.append(np.array([1.0 if v == e else 0.0 for v in entities]))
    for t in time_levels[1:]:
        cols.append(np.array([1.0 if v == t else 0.0 for v in times]))
    design = np.column_stack(cols)
    ses = cr1_se(y, design, entities)
    return ses[1:1 + x_slopes.shape[1]]


def did_four_means(y: np.ndarray, treat: np.ndarray,
                   post: np.ndarray) -> float:
    m = {}
    for t in (0, 1):
        for p in (0, 1):
            mask = (treat == t) & (post == p)
            m[(t, p)] = float(y[mask].mean())
    return (m[(1, 1)] - m[(1, 0)]) - (m[(0, 1)] - m[(0, 0)])
