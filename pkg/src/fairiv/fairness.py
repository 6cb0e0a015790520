"""Fairness operators, their null-space projectors, and fairness metrics.

Two notions are supported. Statistical parity asks that the average score be
the same in both groups of a binary sensitive attribute. Irrelevance asks that
the score not depend on the sensitive attribute at all. Each is encoded as a
linear operator ``F`` whose null space is the set of fair functions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .linop import null_space_projector


class DegenerateGroupError(ValueError):
    """Raised when one group of the sensitive attribute is empty."""


class FairnessDefinition(enum.Enum):
    STATISTICAL_PARITY = "parity"
    IRRELEVANCE = "irrelevance"

    @classmethod
    def parse(cls, value) -> "FairnessDefinition":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown fairness definition {value!r}; "
                             f"expected one of {[d.value for d in cls]}") from None


@dataclass(frozen=True)
class FairnessSpec:
    """A fairness operator together with the projector onto its null space."""

    definition: FairnessDefinition
    F: np.ndarray
    P: np.ndarray

    @classmethod
    def from_operator(cls, definition, F) -> "FairnessSpec":
        F = np.asarray(F, dtype=float)
        return cls(FairnessDefinition.parse(definition), F, null_space_projector(F))

    @property
    def penalty(self) -> np.ndarray:
        """``F^T F``, the Gram matrix of the fairness penalty."""
        return self.F.T @ self.F


def _binary(s) -> np.ndarray:
    s = np.asarray(s, dtype=float).ravel()
    if not np.all((s == 0) | (s == 1)):
        raise ValueError("sensitive attribute must be coded 0/1")
    return s


def build_parity_matrix(s) -> np.ndarray:
    """Discretized statistical-parity operator for a binary attribute.

    The result acts on stacked vectors ``[phi0; phi1]`` of length ``2n``. The
    upper block is zero; every row of the lower block evaluates the same
    scalar, ``mean_{S=1}(phi0 + phi1) - mean_{S=0}(phi0)``.
    """
    s = _binary(s)
    n = s.shape[0]
    n1 = s.sum()
    n0 = n - n1
    if n1 == 0 or n0 == 0:
        raise DegenerateGroupError("statistical parity needs both groups present "
                                   f"(got {int(n0)} zeros and {int(n1)} ones)")
    mean1 = s / n1
    mean0 = (1.0 - s) / n0
    F = np.zeros((2 * n, 2 * n))
    F[n:, :n] = mean1 - mean0
    F[n:, n:] = mean1
    return F


def build_irrelevance_matrix(n: int) -> np.ndarray:
    """Operator that keeps the ``phi1`` block and zeroes ``phi0``."""
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    F = np.zeros((2 * n, 2 * n))
    F[n:, n:] = np.eye(n)
    return F


def build_linear_parity_F(Pi) -> np.ndarray:
    """``[Pi  I_q]`` for the linear model, with ``Pi`` of shape ``(q, p)``."""
    Pi = np.atleast_2d(np.asarray(Pi, dtype=float))
    if not np.all(np.isfinite(Pi)):
        raise ValueError("Pi contains non-finite entries")
    q = Pi.shape[0]
    return np.hstack([Pi, np.eye(q)])


def build_linear_irrelevance_F(p: int, q: int) -> np.ndarray:
    """Square ``(p+q)`` operator selecting the coefficients on ``S``."""
    F = np.zeros((p + q, p + q))
    F[p:, p:] = np.eye(q)
    return F


def parity_spec(s) -> FairnessSpec:
    F = build_parity_matrix(s)
    return FairnessSpec(FairnessDefinition.STATISTICAL_PARITY, F, null_space_projector(F))


def irrelevance_spec(n: int) -> FairnessSpec:
    # null(F) is the phi0 block; no SVD needed
    n = int(n)
    F = build_irrelevance_matrix(n)
    P = np.zeros_like(F)
    P[:n, :n] = np.eye(n)
    return FairnessSpec(FairnessDefinition.IRRELEVANCE, F, P)


def sample_spec(definition, s) -> FairnessSpec:
    """Fairness spec discretized at the sample points of ``s``."""
    definition = FairnessDefinition.parse(definition)
    if definition is FairnessDefinition.STATISTICAL_PARITY:
        return parity_spec(s)
    return irrelevance_spec(np.asarray(s).size)


def _empirical_sq_norm(v: np.ndarray, n_weight: int) -> float:
    n_weight = int(n_weight)
    if n_weight < 1:
        raise ValueError(f"n_weight must be positive, got {n_weight}")
    return float(v @ v) / n_weight


def empirical_norm(v, n_weight: int) -> float:
    """``sqrt(sum(v**2) / n_weight)``."""
    v = np.asarray(v, dtype=float).ravel()
    return float(np.sqrt(_empirical_sq_norm(v, n_weight)))


def fairness_violation(F, phi, n_weight: int) -> float:
    """Empirical norm of ``F phi``."""
    F = np.asarray(F, dtype=float)
    phi = np.asarray(phi, dtype=float).ravel()
    if F.ndim != 2 or F.shape[1] != phi.shape[0]:
        raise ValueError(f"F with shape {F.shape} cannot act on a vector of length {phi.shape[0]}")
    return empirical_norm(F @ phi, n_weight)


def parity_gap(phi0, phi1, s) -> float:
    """Difference of mean fitted scores, ``mean_{S=1} - mean_{S=0}``."""
    s = _binary(s).astype(bool)
    if s.all() or not s.any():
        raise DegenerateGroupError("parity gap needs both groups present")
    phi0 = np.asarray(phi0, dtype=float)
    phi1 = np.asarray(phi1, dtype=float)
    return float(np.mean(phi0[s] + phi1[s]) - np.mean(phi0[~s]))


def rho_criterion(phi_rho, phi_unconstrained, F, varsigma: float, n_weight: int) -> float:
    """Loss-plus-unfairness criterion used to pick the fairness penalty.

    ``||phi_rho - phi_unconstrained||_n^2 + varsigma * ||F phi_rho||_n^2``
    """
    varsigma = float(varsigma)
    if not varsigma > 0:
        raise ValueError(f"varsigma must be positive, got {varsigma}")
    phi_rho = np.asarray(phi_rho, dtype=float).ravel()
    phi_unconstrained = np.asarray(phi_unconstrained, dtype=float).ravel()
    if phi_rho.shape != phi_unconstrained.shape:
        raise ValueError("phi_rho and phi_unconstrained differ in length")
    F = np.asarray(F, dtype=float)
    if F.shape[1] != phi_rho.shape[0]:
        raise ValueError(f"F with shape {F.shape} cannot act on a vector of length {phi_rho.shape[0]}")
    loss = _empirical_sq_norm(phi_rho - phi_unconstrained, n_weight)
    unfairness = _empirical_sq_norm(F @ phi_rho, n_weight)
    return loss + varsigma * unfairness
