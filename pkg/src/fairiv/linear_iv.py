"""Closed-form Gaussian linear IV model used as an analytic oracle.

The structural equation is ``Y = Z'beta + S'gamma + U`` with instruments
``W`` (``k >= p + q``). Everything is expressed through population second
moments, so the fair solutions can be written in closed form and compared
with the generic solvers in :mod:`fairiv.linop`.

Shape convention: ``Sigma_ZS`` is the ``q x p`` lower-left block of the
covariance of ``X = (Z, S)``, so ``Pi = Sigma_S^{-1} Sigma_ZS`` is ``q x p`` and
the parity operator ``[Pi  I_q]`` is ``q x (p+q)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .fairness import (FairnessDefinition, FairnessSpec, build_linear_irrelevance_F,
                       build_linear_parity_F)
from .linop import null_space_projector

_RANK_RTOL = 1e-12


@dataclass(frozen=True)
class LinearIVModel:
    Sigma_ZW: np.ndarray   # k x p
    Sigma_SW: np.ndarray   # k x q
    EWY: np.ndarray        # k
    Sigma_Z: np.ndarray | None = None   # p x p
    Sigma_S: np.ndarray | None = None   # q x q
    Sigma_ZS: np.ndarray | None = None  # q x p

    def __post_init__(self):
        zw = np.atleast_2d(np.asarray(self.Sigma_ZW, dtype=float))
        sw = np.atleast_2d(np.asarray(self.Sigma_SW, dtype=float))
        if zw.shape[0] == 1 and sw.shape[0] != 1:
            zw = zw.T
        object.__setattr__(self, "Sigma_ZW", zw)
        object.__setattr__(self, "Sigma_SW", sw)
        object.__setattr__(self, "EWY", np.asarray(self.EWY, dtype=float).ravel())
        k, p = zw.shape
        if sw.shape[0] != k:
            raise ValueError(f"Sigma_ZW has {k} rows but Sigma_SW has {sw.shape[0]}")
        q = sw.shape[1]
        if k < p + q:
            raise ValueError(f"need at least p+q={p + q} instruments, got k={k}")
        if self.EWY.shape[0] != k:
            raise ValueError(f"EWY has length {self.EWY.shape[0]}, expected {k}")
        for name, shape in (("Sigma_Z", (p, p)), ("Sigma_S", (q, q)), ("Sigma_ZS", (q, p))):
            val = getattr(self, name)
            if val is not None:
                val = np.atleast_2d(np.asarray(val, dtype=float))
                if val.shape != shape:
                    raise ValueError(f"{name} has shape {val.shape}, expected {shape}")
                object.__setattr__(self, name, val)
        sv = np.linalg.svd(self.Sigma_XW, compute_uv=False)
        if sv[-1] <= _RANK_RTOL * sv[0]:
            raise np.linalg.LinAlgError("Sigma_XW is rank deficient; phi is not identified")

    @property
    def p(self) -> int:
        return self.Sigma_ZW.shape[1]

    @property
    def q(self) -> int:
        return self.Sigma_SW.shape[1]

    @property
    def Sigma_XW(self) -> np.ndarray:
        return np.hstack([self.Sigma_ZW, self.Sigma_SW])

    @property
    def gram(self) -> np.ndarray:
        """``Sigma_XW' Sigma_XW``."""
        X = self.Sigma_XW
        return X.T @ X

    @property
    def moment(self) -> np.ndarray:
        """``Sigma_XW' E[WY]``."""
        return self.Sigma_XW.T @ self.EWY


def pi_from_covariances(Sigma_S, Sigma_ZS) -> np.ndarray:
    """``Sigma_S^{-1} Sigma_ZS``: slope of ``E[Z | S]`` in the ``[Pi I_q]`` layout."""
    Sigma_S = np.atleast_2d(np.asarray(Sigma_S, dtype=float))
    Sigma_ZS = np.atleast_2d(np.asarray(Sigma_ZS, dtype=float))
    try:
        factor = la.cho_factor(Sigma_S)
    except la.LinAlgError:
        raise np.linalg.LinAlgError("Sigma_S is not positive definite") from None
    return la.cho_solve(factor, Sigma_ZS)


def fairness_spec(model: LinearIVModel, definition, Pi=None) -> FairnessSpec:
    """Fairness spec for the linear model.

    Statistical parity needs ``Pi``; when omitted it is computed from the
    model's ``Sigma_S`` and ``Sigma_ZS``.
    """
    definition = FairnessDefinition.parse(definition)
    if definition is FairnessDefinition.IRRELEVANCE:
        F = build_linear_irrelevance_F(model.p, model.q)
    else:
        if Pi is None:
            if model.Sigma_S is None or model.Sigma_ZS is None:
                raise ValueError("parity needs Pi or both Sigma_S and Sigma_ZS")
            Pi = pi_from_covariances(model.Sigma_S, model.Sigma_ZS)
        F = build_linear_parity_F(Pi)
        if F.shape[1] != model.p + model.q:
            raise ValueError(f"Pi has shape {np.shape(Pi)}, expected ({model.q}, {model.p})")
    return FairnessSpec(definition, F, null_space_projector(F))


def phi_unconstrained(model: LinearIVModel) -> np.ndarray:
    """``(Sigma_XW' Sigma_XW)^{-1} Sigma_XW' E[WY]``, ordered ``(beta, gamma)``."""
    return la.solve(model.gram, model.moment, assume_a="pos")


def phi_fair_projected(model: LinearIVModel, spec: FairnessSpec) -> np.ndarray:
    return spec.P @ phi_unconstrained(model)


def zs_alias(model: LinearIVModel) -> np.ndarray:
    """``A_ZS = (Sigma_ZW' Sigma_ZW)^{-1} Sigma_ZW' Sigma_SW``."""
    zw = model.Sigma_ZW
    return la.solve(zw.T @ zw, zw.T @ model.Sigma_SW, assume_a="pos")


def irrelevance_block_form(model: LinearIVModel) -> np.ndarray:
    """``(beta + A_ZS gamma, 0)``.

    Algebraically this is the IV fit that drops ``S`` from the second stage,
    i.e. the restricted solution under irrelevance. It equals the orthogonal
    projection ``(beta, 0)`` only when ``A_ZS gamma = 0``.
    """
    phi = phi_unconstrained(model)
    beta, gamma = phi[:model.p], phi[model.p:]
    return np.concatenate([beta + zs_alias(model) @ gamma, np.zeros(model.q)])


def phi_fair_restricted(model: LinearIVModel, spec: FairnessSpec) -> np.ndarray:
    """``(P G P)^+ P Sigma_XW' E[WY]`` with ``G = Sigma_XW' Sigma_XW``.

    The pseudo-inverse is taken on ``range(P)``; a rank drop there means the
    restricted problem is not identified.
    """
    P = spec.P
    A = P @ model.gram @ P
    A = 0.5 * (A + A.T)
    evals, evecs = np.linalg.eigh(A)
    target_rank = int(round(np.trace(P)))
    top = np.abs(evals).max()
    keep = np.abs(evals) > _RANK_RTOL * max(top, 1.0)
    if keep.sum() < target_rank:
        raise np.linalg.LinAlgError("restricted system is singular on range(P)")
    V = evecs[:, keep]
    return P @ (V @ ((V.T @ (P @ model.moment)) / evals[keep]))


def phi_penalized(model: LinearIVModel, spec: FairnessSpec, rho: float) -> np.ndarray:
    """``(rho F'F + Sigma_XW' Sigma_XW)^{-1} Sigma_XW' E[WY]`` by direct solve."""
    rho = float(rho)
    if not rho >= 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    A = model.gram + rho * spec.penalty
    return la.solve(A, model.moment, assume_a="pos")


def woodbury_inverse(model: LinearIVModel, F, rho: float) -> np.ndarray:
    """Expanded form of ``(rho F'F + G)^{-1}``.

    ``G^{-1} - G^{-1} F' (I/rho + F G^{-1} F')^{-1} F G^{-1}``
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    Ginv = np.linalg.inv(model.gram)
    inner = np.eye(F.shape[0]) / rho + F @ Ginv @ F.T
    return Ginv - Ginv @ F.T @ np.linalg.solve(inner, F @ Ginv)


def penalized_limit(model: LinearIVModel, F) -> np.ndarray:
    """Large-penalty limit ``phi - G^{-1} F' (F G^{-1} F')^{-1} F phi``.

    Only the row space of ``F`` matters, so rank-deficient ``F`` is reduced to
    an orthonormal basis of its row space first.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    _, sv, vt = np.linalg.svd(F, full_matrices=False)
    rank = int(np.count_nonzero(sv > _RANK_RTOL * sv[0])) if sv.size and sv[0] > 0 else 0
    phi = phi_unconstrained(model)
    if rank == 0:
        return phi
    B = vt[:rank]
    Ginv = np.linalg.inv(model.gram)
    inner = B @ Ginv @ B.T
    try:
        correction = Ginv @ B.T @ la.solve(inner, B @ phi, assume_a="pos")
    except la.LinAlgError:
        raise np.linalg.LinAlgError("F G^{-1} F' is singular") from None
    return phi - correction
