"""Dense regularized solvers and null-space projection.

All operators are plain ``numpy`` arrays. Adjoints are transposes under the
unweighted Euclidean inner product; callers that work with empirical norms
apply their own weighting.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as la

PROJECTOR_TOL = 1e-10
RANK_RTOL = 1e-12


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _as_vector(v, size: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if v.shape[0] != size:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {size}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return alpha


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not rho >= 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    return rho


def _spd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = 0.5 * (a + a.T)
    return la.cho_solve(la.cho_factor(a, lower=True, check_finite=False), b, check_finite=False)


def check_projector(p, tol: float = PROJECTOR_TOL) -> np.ndarray:
    """Return ``p`` as an array after checking it is an orthogonal projector."""
    p = _as_matrix(p, "P")
    if p.shape[0] != p.shape[1]:
        raise ValueError(f"P must be square, got shape {p.shape}")
    scale = max(1.0, np.linalg.norm(p, 2))
    if np.linalg.norm(p - p.T, 2) > tol * scale:
        raise ValueError("P is not symmetric")
    if np.linalg.norm(p @ p - p, 2) > tol * scale:
        raise ValueError("P is not idempotent")
    return p


def tikhonov_solve(K, r, alpha: float) -> np.ndarray:
    """Tikhonov-regularized solution ``(alpha I + K^T K)^{-1} K^T r``."""
    K = _as_matrix(K, "K")
    r = _as_vector(r, K.shape[0], "r")
    alpha = _check_alpha(alpha)
    a = K.T @ K
    a[np.diag_indices_from(a)] += alpha
    return _spd_solve(a, K.T @ r)


def penalized_solve(K, r, F, alpha: float, rho: float) -> np.ndarray:
    """Solve ``(alpha I + rho F^T F + K^T K) x = K^T r``.

    With ``rho = 0`` this is exactly :func:`tikhonov_solve`; as ``rho`` grows the
    solution is pushed into the null space of ``F``.
    """
    K = _as_matrix(K, "K")
    F = _as_matrix(F, "F")
    if F.shape[1] != K.shape[1]:
        raise ValueError(f"F has {F.shape[1]} columns, K has {K.shape[1]}")
    r = _as_vector(r, K.shape[0], "r")
    alpha = _check_alpha(alpha)
    rho = _check_rho(rho)
    a = K.T @ K
    if rho > 0:
        a += rho * (F.T @ F)
    a[np.diag_indices_from(a)] += alpha
    return _spd_solve(a, K.T @ r)


def restricted_solve(K, r, P, alpha: float) -> np.ndarray:
    """Tikhonov solution restricted to ``range(P)``.

    Computes ``(alpha I + P K^T K P)^{-1} P K^T r``. The system matrix commutes
    with ``P`` so the exact solution already lies in ``range(P)``; the final
    re-projection only strips round-off.
    """
    K = _as_matrix(K, "K")
    r = _as_vector(r, K.shape[0], "r")
    P = check_projector(P)
    if P.shape[0] != K.shape[1]:
        raise ValueError(f"P has size {P.shape[0]}, K has {K.shape[1]} columns")
    alpha = _check_alpha(alpha)
    KP = K @ P
    a = KP.T @ KP
    a[np.diag_indices_from(a)] += alpha
    x = _spd_solve(a, KP.T @ r)
    return P @ x


def regularized_solve(gram, rhs, alpha: float, penalty=None, rho: float = 0.0,
                      projector=None) -> np.ndarray:
    """General regularized solve for a possibly non-symmetric normal operator.

    Solves ``(alpha I + rho penalty + G) x = b`` where ``G = gram``. When
    ``projector`` is given the operator is restricted first, i.e.
    ``(alpha I + P G P) x = P b``, and the result is re-projected onto
    ``range(P)``. ``gram`` need not be symmetric (for instance a product of two
    different smoothing operators), so an LU factorization is used.
    """
    G = _as_matrix(gram, "gram")
    if G.shape[0] != G.shape[1]:
        raise ValueError(f"gram must be square, got shape {G.shape}")
    b = np.asarray(rhs, dtype=float)
    if b.ndim == 1:
        b = _as_vector(b, G.shape[0], "rhs")
    elif b.ndim != 2 or b.shape[0] != G.shape[0]:
        raise ValueError(f"rhs with shape {b.shape} does not match gram {G.shape}")
    alpha = _check_alpha(alpha)
    rho = _check_rho(rho)
    if projector is not None:
        P = np.asarray(projector, dtype=float)
        a = P @ G @ P
        b = P @ b
    else:
        a = G.copy()
    if penalty is not None and rho > 0:
        a += rho * np.asarray(penalty, dtype=float)
    a[np.diag_indices_from(a)] += alpha
    x = la.solve(a, b, check_finite=False)
    if projector is not None:
        x = P @ x
    return x


def _compress_rows(F: np.ndarray) -> np.ndarray:
    """Matrix with the same ``F^T F`` but without zero or repeated rows.

    Each distinct row is kept once and scaled by the square root of its
    multiplicity, so singular values and right singular vectors are unchanged.
    """
    rows, counts = np.unique(F, axis=0, return_counts=True)
    nonzero = np.any(rows != 0.0, axis=1)
    return rows[nonzero] * np.sqrt(counts[nonzero])[:, None]


def null_space_projector(F) -> np.ndarray:
    """Orthogonal projector onto ``null(F)``.

    Singular values above ``1e-12 * sigma_max`` count towards the rank, so
    rank-deficient operators need no special case.
    """
    F = _as_matrix(F, "F")
    d = F.shape[1]
    F = _compress_rows(F)
    if F.shape[0] == 0:
        return np.eye(d)
    _, sv, vt = np.linalg.svd(F, full_matrices=False)
    if sv[0] == 0.0:
        return np.eye(d)
    rank = int(np.count_nonzero(sv > RANK_RTOL * sv[0]))
    if rank == d:
        return np.zeros((d, d))
    if rank <= d - rank:
        vr = vt[:rank]
        p = np.eye(d) - vr.T @ vr
    else:
        # complement basis needs the full SVD
        _, _, vfull = np.linalg.svd(F, full_matrices=True)
        vn = vfull[rank:]
        p = vn.T @ vn
    return 0.5 * (p + p.T)


def singular_values(K) -> np.ndarray:
    """Singular values of ``K``, nonincreasing."""
    K = _as_matrix(K, "K")
    return np.linalg.svd(K, compute_uv=False)
