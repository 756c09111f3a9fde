"""Wishart sampling for real degrees of freedom and the half-scale Wishart density.

Throughout, the library exposes ``Y = M/2`` where ``M ~ W_p(2α, Σ)``, so the
diagonal of ``Y`` is multivariate gamma distributed with shape α.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .exceptions import MVGammaError, ShapeParameterError
from .linalg import as_cov
from .montecarlo import as_rng, map_chunks
from .scalar_gamma import as_alpha, mv_gamma_fn


def check_wishart_dof(nu: float, p: int, label: str = "p") -> None:
    if not nu > p - 1:
        raise ShapeParameterError(f"requires 2α > {label}−1 = {p - 1}, got 2α = {nu:g}")


def bartlett_factors(gen: np.random.Generator, nu: float, p: int, size: int) -> NDArray:
    """Lower-triangular Bartlett factors ``V`` with ``VVᵀ ~ W_p(ν, I)``.

    ``V[i, i]² ~ χ²(ν − i)`` (0-based ``i``) and entries below the diagonal
    are standard normal. Shape ``(size, p, p)``.
    """
    v = np.zeros((size, p, p))
    i, j = np.tril_indices(p, k=-1)
    v[:, i, j] = gen.standard_normal((size, i.size))
    d = np.arange(p)
    v[:, d, d] = np.sqrt(gen.chisquare(nu - d, size=(size, p)))
    return v


def sample_wishart(nu: float, scale, rng, size: int = 1, *, workers: int = 1) -> NDArray:
    """Draw ``size`` matrices from ``W_p(ν, Σ)`` with real ``ν > p−1``.

    Uses ``M = L V Vᵀ Lᵀ`` with L the Cholesky factor of Σ. Returns an array
    of shape ``(size, p, p)``.
    """
    scale = as_cov(scale)
    p = scale.dim
    check_wishart_dof(nu, p)
    chol = scale.chol

    def draw(gen, n):
        lv = chol @ bartlett_factors(gen, nu, p, n)
        return lv @ lv.transpose(0, 2, 1)

    return map_chunks(draw, size, as_rng(rng), workers=workers)


def sample_half_wishart(alpha, scale, rng, size: int = 1, *, workers: int = 1) -> NDArray:
    """Draw ``Y = M/2`` with ``M ~ W_p(2α, Σ)``."""
    return 0.5 * sample_wishart(2.0 * as_alpha(alpha), scale, rng, size, workers=workers)


def half_wishart_log_pdf(y, alpha, scale) -> NDArray | float:
    """Log density of ``Y`` where ``2Y ~ W_p(2α, Σ)``.

    .. math::
        \\log\\left[\\Gamma_p(α)^{-1} |Σ|^{-α} |Y|^{α-(p+1)/2}
        \\operatorname{etr}(-Σ^{-1} Y)\\right]

    ``y`` may be a single ``(p, p)`` matrix or a stack ``(n, p, p)``.
    """
    alpha = as_alpha(alpha)
    scale = as_cov(scale)
    p = scale.dim
    check_wishart_dof(2.0 * alpha, p)
    y = np.asarray(y, dtype=float)
    single = y.ndim == 2
    if single:
        y = y[None]
    if y.shape[1:] != (p, p):
        raise MVGammaError(f"Y has shape {y.shape[1:]}, expected {(p, p)}")
    sign, logdet_y = np.linalg.slogdet(y)
    if np.any(sign <= 0):
        raise MVGammaError("Y must be positive definite")
    prec = scale.inv()
    tr = np.einsum("ij,nji->n", prec, y)
    out = (
        -mv_gamma_fn(p, alpha) - alpha * scale.logdet()
        + (alpha - 0.5 * (p + 1)) * logdet_y - tr
    )
    return float(out[0]) if single else out
