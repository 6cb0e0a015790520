"""Independent brute-force references used across the test suite.

These deliberately take the naive route (explicit inverses, Python loops,
Kronecker products) so they share no code path with the package.
"""

import numpy as np


def dense_tikhonov(K, r, alpha):
    d = K.shape[1]
    return np.linalg.inv(alpha * np.eye(d) + K.T @ K) @ (K.T @ r)


def dense_penalized(K, r, F, alpha, rho):
    d = K.shape[1]
    return np.linalg.inv(alpha * np.eye(d) + rho * F.T @ F + K.T @ K) @ (K.T @ r)


def dense_restricted(K, r, P, alpha):
    d = K.shape[1]
    return np.linalg.inv(alpha * np.eye(d) + P @ K.T @ K @ P) @ (P @ K.T @ r)


def formula_projector(F):
    """``I - F'(FF')^{-1}F`` for full row rank ``F``."""
    return np.eye(F.shape[1]) - F.T @ np.linalg.inv(F @ F.T) @ F


def random_system(rng, full_rank_F=False):
    m = int(rng.integers(1, 13))
    d = int(rng.integers(1, 13))
    q = int(rng.integers(1, d + 1)) if full_rank_F else int(rng.integers(1, 13))
    K = rng.standard_normal((m, d))
    r = rng.standard_normal(m)
    F = rng.standard_normal((q, d))
    if not full_rank_F and rng.random() < 0.3:
        # rank-deficient F: repeat rows
        F = np.vstack([F, F[:1]])
    alpha = float(10 ** rng.uniform(-3, 1))
    rho = float(10 ** rng.uniform(-3, 3))
    return K, r, F, alpha, rho


def random_systems(count=200, seed=20240611):
    rng = np.random.default_rng(seed)
    return [random_system(rng) for _ in range(count)]


def loop_group_gap(phi0, phi1, s):
    """``mean_{S=1}(phi0 + phi1) - mean_{S=0}(phi0)`` with explicit loops."""
    tot1 = cnt1 = tot0 = cnt0 = 0.0
    for a, b, si in zip(phi0, phi1, s):
        if si == 1:
            tot1 += a + b
            cnt1 += 1
        else:
            tot0 += a
            cnt0 += 1
    return tot1 / cnt1 - tot0 / cnt0


def loop_nw_matrix(points, h):
    """Row-normalized product Epanechnikov weights by double loop."""
    x = np.atleast_2d(np.asarray(points, dtype=float).T).T
    n = x.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            w = 1.0
            for k in range(x.shape[1]):
                u = (x[i, k] - x[j, k]) / h
                w *= 0.75 * (1 - u * u) if abs(u) <= 1 else 0.0
            out[i, j] = w
        if out[i].sum() == 0:
            out[i, i] = 1.0
        out[i] /= out[i].sum()
    return out


def kron_system(Khat, KhatStar, y, s):
    """Operators via explicit Kronecker products and the selection matrix.

    ``S_n = [I_n, diag(s)]`` maps a stacked ``(phi0, phi1)`` to the index
    ``phi0 + s phi1``; ``vec`` of an ``n x 2`` matrix stacks columns.
    """
    n = len(y)
    S = np.hstack([np.eye(n), np.diag(s)])
    I2 = np.eye(2)
    Ks = np.kron(I2, Khat) @ S.T @ S
    KsStar = np.kron(I2, KhatStar) @ S.T @ S
    rhat = (np.kron(I2, Khat) @ S.T @ y).reshape(-1, order="F")
    return Ks, KsStar, rhat


def kron_unstack(v):
    """``(vec(I_2)' kron I_n)(I_2 kron v)``: the ``n x 2`` matrix ``[phi0, phi1]``."""
    n = v.shape[0] // 2
    I2 = np.eye(2)
    vecI2 = I2.reshape(-1, order="F")[None, :]
    return np.kron(vecI2, np.eye(n)) @ np.kron(I2, v[:, None])
