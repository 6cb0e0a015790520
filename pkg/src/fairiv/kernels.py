"""Epanechnikov smoothing weights.

The pairwise weight loops run in a compiled extension when it has been built
and fall back to numpy otherwise. ``BACKEND`` names the active one and
:func:`use_backend` switches explicitly (used by the benchmark and tests).
"""

from __future__ import annotations

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _kernels_ext
except ImportError:  # extension not built
    _kernels_ext = None

_BACKENDS = {"python": _kernels_py}
if _kernels_ext is not None:
    _BACKENDS["compiled"] = _kernels_ext

BACKEND = "compiled" if _kernels_ext is not None else "python"
_impl = _BACKENDS[BACKEND]


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def use_backend(name: str) -> str:
    """Select the kernel backend; returns the previously active one."""
    global BACKEND, _impl
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    previous = BACKEND
    BACKEND, _impl = name, _BACKENDS[name]
    return previous


def epanechnikov(u):
    """``0.75 (1 - u^2)`` on ``|u| <= 1``, zero outside."""
    u = np.asarray(u, dtype=float)
    out = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    return out if out.ndim else float(out)


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"points must be 1-D or 2-D, got {x.ndim}-D")
    return x


def _check_h(h: float) -> float:
    h = float(h)
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    return h


def product_kernel(a, b, h: float) -> np.ndarray:
    """Raw product-kernel weights ``C((a_i - b_j) / h)``."""
    a, b = _as_points(a), _as_points(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError("point sets differ in dimension")
    return _impl.product_kernel(a, b, _check_h(h))


def kernel_weight_matrix(points, h: float) -> np.ndarray:
    """Row-normalized (Nadaraya-Watson) weight matrix of a point set.

    A row with no kernel mass puts weight 1 on its diagonal entry.
    """
    w = product_kernel(points, points, h)
    mass = w.sum(axis=1)
    empty = mass <= 0.0
    if empty.any():
        idx = empty.nonzero()[0]
        w[idx, idx] = 1.0
        mass[idx] = 1.0
    return w / mass[:, None]


def loo_weight_matrix(points, h: float) -> np.ndarray:
    """Leave-one-out smoother: diagonal removed before row normalization.

    Isolated points (no mass off the diagonal) get uniform weights on all other
    points.
    """
    w = product_kernel(points, points, h)
    np.fill_diagonal(w, 0.0)
    mass = w.sum(axis=1)
    empty = mass <= 0.0
    if empty.any():
        idx = empty.nonzero()[0]
        w[idx] = 1.0
        w[idx, idx] = 0.0
        mass[idx] = w.shape[1] - 1
    return w / mass[:, None]


def smoother_at(eval_points, points, h: float) -> np.ndarray:
    """Weights for smoothing values at ``points`` onto ``eval_points``.

    Evaluation points with no kernel mass use the nearest sample point.
    """
    a, b = _as_points(eval_points), _as_points(points)
    w = product_kernel(a, b, h)
    mass = w.sum(axis=1)
    empty = mass <= 0.0
    if empty.any():
        idx = empty.nonzero()[0]
        d2 = ((a[idx, None, :] - b[None, :, :]) ** 2).sum(axis=2)
        w[idx, d2.argmin(axis=1)] = 1.0
        mass[idx] = 1.0
    return w / mass[:, None]


def loo_cv_score(points, targets, h: float) -> float:
    """Mean squared leave-one-out prediction error of a kernel regression."""
    x = _as_points(points)
    t = np.asarray(targets, dtype=float)
    if t.ndim == 1:
        t = t[:, None]
    if t.shape[0] != x.shape[0]:
        raise ValueError("targets and points differ in length")
    if x.shape[0] < 2:
        raise ValueError("leave-one-out needs at least two points")
    return float(_impl.loo_cv_score(x, t, _check_h(h)))
