"""Pure numpy implementation of the smoothing kernels.

Mirrors the compiled ``_kernels`` extension; used when it is unavailable.
"""

import numpy as np


def product_kernel(a, b, h):
    """Raw product-Epanechnikov weights between rows of ``a`` and rows of ``b``."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    w = np.ones((a.shape[0], b.shape[0]))
    for k in range(a.shape[1]):
        u = (a[:, k, None] - b[None, :, k]) / h
        w *= np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)
    return w


def loo_cv_score(x, t, h):
    """Mean squared leave-one-out Nadaraya-Watson error of targets ``t`` on ``x``."""
    x = np.ascontiguousarray(x, dtype=float)
    t = np.ascontiguousarray(t, dtype=float)
    n = x.shape[0]
    w = product_kernel(x, x, h)
    np.fill_diagonal(w, 0.0)
    mass = w.sum(axis=1)
    empty = mass <= 0.0
    if empty.any():
        w[empty] = 1.0
        w[empty, empty.nonzero()[0]] = 0.0
        mass = w.sum(axis=1)
    pred = (w @ t) / mass[:, None]
    return float(np.sum((t - pred) ** 2) / n)
