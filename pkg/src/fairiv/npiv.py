"""Kernel estimation of the varying-coefficient NPIV model with fairness.

The model is ``Y = phi0(Z) + phi1(Z) S + U`` with a binary exogenous ``S``
and instruments ``W``. Functions are represented by their values at the
sample points and stacked as ``[phi0; phi1]`` (length ``2n``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fairness import FairnessSpec, empirical_norm, rho_criterion
from .kernels import kernel_weight_matrix, loo_cv_score, smoother_at
from .linop import regularized_solve

BANDWIDTH_GRID_SIZE = 20
BANDWIDTH_RANGE = (0.05, 1.0)
ALPHA_GRID = (1e-6, 10.0)
ALPHA_GRID_SIZE = 30
RHO_GRID = (1e-4, 1e4)
RHO_GRID_SIZE = 60
EVAL_GRID_SIZE = 101


def _as_columns(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D")
    return x


@dataclass(frozen=True)
class Sample:
    """Observed ``(y, z, s, w)``; ``z`` and ``w`` are stored as ``n x d`` arrays."""

    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        z = _as_columns(self.z, "z")
        s = np.asarray(self.s, dtype=float).ravel()
        w = _as_columns(self.w, "w")
        n = y.shape[0]
        if n < 10:
            raise ValueError(f"need at least 10 observations, got {n}")
        for name, arr in (("z", z), ("s", s), ("w", w)):
            if arr.shape[0] != n:
                raise ValueError(f"{name} has {arr.shape[0]} rows, y has {n}")
        if not np.all((s == 0) | (s == 1)):
            raise ValueError("s must be coded 0/1")
        for name, arr in (("y", y), ("z", z), ("w", w)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class StackedFunction:
    phi0: np.ndarray
    phi1: np.ndarray

    def __post_init__(self):
        if np.shape(self.phi0) != np.shape(self.phi1):
            raise ValueError("phi0 and phi1 differ in length")

    @classmethod
    def unstack(cls, v) -> "StackedFunction":
        v = np.asarray(v, dtype=float).ravel()
        if v.shape[0] % 2:
            raise ValueError("stacked vector must have even length")
        n = v.shape[0] // 2
        return cls(v[:n].copy(), v[n:].copy())

    def stack(self) -> np.ndarray:
        return np.concatenate([self.phi0, self.phi1])

    @property
    def n(self) -> int:
        return len(self.phi0)

    def scores(self, s) -> np.ndarray:
        """Fitted index ``phi0 + phi1 * s`` at the sample points."""
        return self.phi0 + self.phi1 * np.asarray(s, dtype=float)


@dataclass(frozen=True)
class Tuning:
    h_z: float
    h_w: float
    alpha: float
    rho: float = 0.0
    varsigma: float = 1.0
    cv: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("h_z", "h_w", "alpha", "varsigma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.rho >= 0:
            raise ValueError("rho must be nonnegative")

    def as_dict(self) -> dict:
        return {"h_z": self.h_z, "h_w": self.h_w, "alpha": self.alpha,
                "rho": self.rho, "varsigma": self.varsigma}


@dataclass(frozen=True)
class EstimationSystem:
    """Discretized operators and right-hand side of the estimation problem.

    ``Ks = (I_2 kron Khat) S'S`` and ``KsStar = (I_2 kron KhatStar) S'S`` with
    ``S'S = [[I, D], [D, D]]``, ``D = diag(s)``. ``gram`` and ``rhs`` cache
    ``KsStar @ Ks`` and ``KsStar @ rhat``.
    """

    Khat: np.ndarray
    KhatStar: np.ndarray
    Ks: np.ndarray
    KsStar: np.ndarray
    rhat: np.ndarray
    gram: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.Khat.shape[0]


def _stacked_operator(K: np.ndarray, s: np.ndarray) -> np.ndarray:
    n = K.shape[0]
    KD = K * s[None, :]
    out = np.empty((2 * n, 2 * n))
    out[:n, :n] = K
    out[:n, n:] = KD
    out[n:, :n] = KD
    out[n:, n:] = KD
    return out


def build_system(sample: Sample, h_z: float, h_w: float) -> EstimationSystem:
    s = sample.s
    Khat = kernel_weight_matrix(sample.w, h_w)
    KhatStar = kernel_weight_matrix(sample.z, h_z)
    rhat = np.concatenate([Khat @ sample.y, Khat @ (s * sample.y)])

    # blockwise KsStar @ Ks: with A = KhatStar, B = Khat,
    # M = A B, N = (A D)(B D), Q = (A D) B
    AD = KhatStar * s[None, :]
    M = KhatStar @ Khat
    N = AD @ (Khat * s[None, :])
    Q = AD @ Khat
    n = sample.n
    gram = np.empty((2 * n, 2 * n))
    gram[:n, :n] = M + N
    gram[:n, n:] = M * s[None, :] + N
    gram[n:, :n] = Q + N
    gram[n:, n:] = 2.0 * N
    rhs = np.concatenate([KhatStar @ rhat[:n] + AD @ rhat[n:],
                          AD @ (rhat[:n] + rhat[n:])])
    return EstimationSystem(Khat=Khat, KhatStar=KhatStar,
                            Ks=_stacked_operator(Khat, s),
                            KsStar=_stacked_operator(KhatStar, s),
                            rhat=rhat, gram=gram, rhs=rhs, s=s.copy())


def _check_spec(system: EstimationSystem, spec: FairnessSpec):
    if spec.F.shape != (2 * system.n, 2 * system.n):
        raise ValueError(f"fairness operator has shape {spec.F.shape}, "
                         f"expected {(2 * system.n, 2 * system.n)}")


def estimate_unconstrained(system: EstimationSystem, alpha: float) -> StackedFunction:
    return StackedFunction.unstack(regularized_solve(system.gram, system.rhs, alpha))


def estimate_projected(system: EstimationSystem, spec: FairnessSpec,
                       alpha: float) -> StackedFunction:
    """Project the unconstrained estimate onto the fair functions."""
    _check_spec(system, spec)
    phi = estimate_unconstrained(system, alpha).stack()
    return StackedFunction.unstack(spec.P @ phi)


def estimate_restricted(system: EstimationSystem, spec: FairnessSpec,
                        alpha: float) -> StackedFunction:
    """Solve the regularized problem with the operator restricted to fair functions."""
    _check_spec(system, spec)
    x = regularized_solve(system.gram, system.rhs, alpha, projector=spec.P)
    return StackedFunction.unstack(x)


def estimate_penalized(system: EstimationSystem, spec: FairnessSpec, alpha: float,
                       rho: float) -> StackedFunction:
    """Add ``rho ||F phi||^2`` to the Tikhonov objective."""
    _check_spec(system, spec)
    x = regularized_solve(system.gram, system.rhs, alpha, penalty=spec.penalty, rho=rho)
    return StackedFunction.unstack(x)


def _spread(x: np.ndarray) -> float:
    r = float(np.max(np.ptp(x, axis=0)))
    if not r > 0:
        raise ValueError("cannot select bandwidths for a constant variable")
    return r


def bandwidth_grid(x, size: int = BANDWIDTH_GRID_SIZE) -> np.ndarray:
    lo, hi = BANDWIDTH_RANGE
    r = _spread(_as_columns(x, "x"))
    return np.geomspace(lo * r, hi * r, size)


def alpha_grid(size: int = ALPHA_GRID_SIZE) -> np.ndarray:
    return np.geomspace(*ALPHA_GRID, size)


def rho_grid(size: int = RHO_GRID_SIZE) -> np.ndarray:
    """``{0}`` followed by ``size`` log-spaced values."""
    return np.concatenate([[0.0], np.geomspace(*RHO_GRID, size)])


def _standardize(t: np.ndarray) -> np.ndarray:
    sd = t.std(axis=0)
    sd[sd == 0] = 1.0
    return (t - t.mean(axis=0)) / sd


def _select_bandwidth(x: np.ndarray, targets: np.ndarray, grid: np.ndarray):
    scores = np.array([loo_cv_score(x, targets, h) for h in grid])
    return float(grid[int(np.argmin(scores))]), scores


def alpha_cv_scores(sample: Sample, system: EstimationSystem, alphas) -> np.ndarray:
    """Leave-one-out prediction error of the fitted index for each ``alpha``.

    The estimate is linear in ``y``: ``phi = H y`` with
    ``H = (alpha I + KsStar Ks)^{-1} KsStar R`` and ``rhat = R y``. Writing
    ``M`` for the map from ``y`` to the fitted index ``phi0(z_i) + s_i phi1(z_i)``,
    the leave-one-out residual is ``(y_i - (M y)_i) / (1 - M_ii)`` and the
    score is its mean square. Noise amplified by a too-small ``alpha`` inflates
    both the residuals and the leverages ``M_ii``.
    """
    s, y, n = system.s, sample.y, system.n
    R = np.vstack([system.Khat, system.Khat * s[None, :]])
    KR = system.KsStar @ R
    scores = []
    for a in alphas:
        H = regularized_solve(system.gram, KR, a)
        M = H[:n] + s[:, None] * H[n:]
        denom = 1.0 - np.diag(M)
        if np.any(np.abs(denom) < 1e-12):
            scores.append(np.inf)
            continue
        resid = (y - M @ y) / denom
        scores.append(float(resid @ resid) / n)
    return np.array(scores)


def select_bandwidths(sample: Sample, grid_size: int = BANDWIDTH_GRID_SIZE) -> tuple:
    """Leave-one-out bandwidths ``(h_z, h_w)`` and their CV curves.

    ``h_w`` minimizes the leave-one-out error of the kernel regressions of
    ``Y`` and ``S Y`` on ``W`` (the components of ``r``); ``h_z`` that of ``W``
    and ``S`` on ``Z`` (what the adjoint smoother averages). Targets are
    standardized so each counts equally.
    """
    s, y = sample.s, sample.y
    hw_grid = bandwidth_grid(sample.w, grid_size)
    hz_grid = bandwidth_grid(sample.z, grid_size)
    h_w, hw_scores = _select_bandwidth(sample.w, _standardize(np.column_stack([y, s * y])),
                                       hw_grid)
    h_z, hz_scores = _select_bandwidth(sample.z, _standardize(np.column_stack([sample.w, s])),
                                       hz_grid)
    return h_z, h_w, {"h_w": (hw_grid, hw_scores), "h_z": (hz_grid, hz_scores)}


def select_alpha(sample: Sample, system: EstimationSystem,
                 grid_size: int = ALPHA_GRID_SIZE) -> tuple:
    alphas = alpha_grid(grid_size)
    scores = alpha_cv_scores(sample, system, alphas)
    return argmin_smallest(scores, alphas), (alphas, scores)


def select_tuning(sample: Sample, bandwidth_grid_size: int = BANDWIDTH_GRID_SIZE,
                  alpha_grid_size: int = ALPHA_GRID_SIZE) -> Tuning:
    """Sequential leave-one-out choice of the bandwidths, then ``alpha``.

    See :func:`select_bandwidths` and :func:`alpha_cv_scores`. The result is a
    deterministic function of the sample.
    """
    if sample.n < 30:
        raise ValueError(f"tuning selection needs n >= 30, got {sample.n}")
    h_z, h_w, cv = select_bandwidths(sample, bandwidth_grid_size)
    system = build_system(sample, h_z, h_w)
    alpha, cv["alpha"] = select_alpha(sample, system, alpha_grid_size)
    return Tuning(h_z=h_z, h_w=h_w, alpha=alpha, cv=cv)


@dataclass(frozen=True)
class RhoPath:
    """Penalized estimates along a grid of ``rho`` at fixed ``alpha``.

    ``loss`` is ``||phi_rho - phi_alpha||_n^2`` and ``violation`` is
    ``||F phi_rho||_n^2``.
    """

    rhos: np.ndarray
    loss: np.ndarray
    violation: np.ndarray
    estimates: list = field(repr=False)

    def criterion(self, varsigma: float) -> np.ndarray:
        return self.loss + float(varsigma) * self.violation


def rho_path(system: EstimationSystem, spec: FairnessSpec, alpha: float,
             rhos=None) -> RhoPath:
    rhos = rho_grid() if rhos is None else np.asarray(rhos, dtype=float)
    n = system.n
    base = estimate_unconstrained(system, alpha).stack()
    loss, violation, estimates = [], [], []
    for rho in rhos:
        phi = base if rho == 0 else estimate_penalized(system, spec, alpha, rho).stack()
        estimates.append(StackedFunction.unstack(phi))
        loss.append(empirical_norm(phi - base, n) ** 2)
        violation.append(empirical_norm(spec.F @ phi, n) ** 2)
    return RhoPath(rhos, np.array(loss), np.array(violation), estimates)


@dataclass(frozen=True)
class RhoSelection:
    rho: float
    rhos: np.ndarray
    criterion: np.ndarray
    varsigma: float


def argmin_smallest(values, grid) -> float:
    """Grid point minimizing ``values``; ties go to the earliest entry."""
    values = np.asarray(values)
    return float(np.asarray(grid)[int(np.flatnonzero(values == values.min())[0])])


def select_rho(sample: Sample, system: EstimationSystem, spec: FairnessSpec, alpha: float,
               varsigma: float = 1.0, rhos=None, path: RhoPath | None = None) -> RhoSelection:
    """Minimize the loss-plus-unfairness criterion over the ``rho`` grid.

    A precomputed ``path`` for the same ``(system, spec, alpha)`` can be passed
    to avoid re-solving.
    """
    if not float(varsigma) > 0:
        raise ValueError(f"varsigma must be positive, got {varsigma}")
    if system.n != sample.n:
        raise ValueError("system and sample sizes differ")
    if path is None:
        path = rho_path(system, spec, alpha, rhos)
    base = path.estimates[int(np.flatnonzero(path.rhos == 0)[0])] if np.any(path.rhos == 0) \
        else estimate_unconstrained(system, alpha)
    crit = np.array([rho_criterion(est.stack(), base.stack(), spec.F, varsigma, sample.n)
                     for est in path.estimates])
    return RhoSelection(argmin_smallest(crit, path.rhos), path.rhos, crit, float(varsigma))


def evaluation_grid(size: int = EVAL_GRID_SIZE) -> np.ndarray:
    return np.linspace(-1.0, 1.0, size)


def curve_on_grid(phi: StackedFunction, z, h_z: float, grid=None) -> tuple[np.ndarray, np.ndarray]:
    """Kernel-smooth sample-point values of ``phi0, phi1`` onto ``grid``."""
    grid = evaluation_grid() if grid is None else np.asarray(grid, dtype=float)
    W = smoother_at(grid, z, h_z)
    return W @ phi.phi0, W @ phi.phi1
