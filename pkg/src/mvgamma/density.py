"""Multivariate gamma Laplace transforms, the factorial density, and sampling.

``Γ_p(α, Σ)`` is the law with Laplace transform ``|I_p + ΣT|^(−α)``. For
a factorial ``Σ = W⁻² + AAᵀ`` (``B = WA``, rows ``bʲ``) its density is the
expectation over ``S ~ W_m(2α, I_m)`` of::

    ∏_j w_j² g_α(w_j² x_j, ½ bʲ S bʲᵀ)

with ``g_α(·, y)`` the non-central gamma density.
"""

from __future__ import annotations

import csv

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import MVGammaError, ShapeParameterError
from .linalg import FactorialForm, as_cov, as_diag_scale
from .montecarlo import MCEstimate, as_rng, map_chunks
from .scalar_gamma import as_alpha, central_gamma_logpdf, noncentral_gamma_logpdf
from .wishart import bartlett_factors, check_wishart_dof

INNER_TOL = 1e-12


def _logdet(m: NDArray) -> float:
    sign, val = np.linalg.slogdet(m)
    if sign <= 0:
        raise MVGammaError("determinant is not positive")
    return float(val)


def mvgamma_log_lt(t: ArrayLike, alpha, sigma) -> float:
    sigma = as_cov(sigma)
    t = as_diag_scale(t, sigma.dim)
    return -as_alpha(alpha) * _logdet(np.eye(sigma.dim) + sigma.entries * t[None, :])


def mvgamma_lt(t: ArrayLike, alpha, sigma) -> float:
    """Laplace transform ``|I_p + ΣT|^(−α)`` of the Γ_p(α, Σ) density."""
    return float(np.exp(mvgamma_log_lt(t, alpha, sigma)))


def chi2_lt(t: ArrayLike, nu: float, sigma) -> float:
    """Laplace transform ``|I_p + 2ΣT|^(−ν/2)`` of the Wishart-diagonal χ² law."""
    if not nu > 0:
        raise MVGammaError(f"degrees of freedom must be positive, got {nu}")
    sigma = as_cov(sigma)
    t = as_diag_scale(t, sigma.dim)
    return float(np.exp(-0.5 * nu * _logdet(np.eye(sigma.dim) + 2.0 * sigma.entries * t[None, :])))


def check_noncentrality(delta: ArrayLike, p: int) -> NDArray:
    d = np.atleast_2d(np.asarray(delta, dtype=float))
    if d.shape != (p, p):
        raise MVGammaError(f"non-centrality matrix has shape {d.shape}, expected {(p, p)}")
    if np.max(np.abs(d - d.T)) > 1e-10 * np.max(np.abs(d), initial=0.0):
        raise MVGammaError("non-centrality matrix is not symmetric")
    d = 0.5 * (d + d.T)
    ev = np.linalg.eigvalsh(d)
    if ev[0] < -1e-10 * max(abs(ev[-1]), np.finfo(float).tiny):
        raise MVGammaError("non-centrality matrix is not positive semi-definite")
    return d


def noncentral_mvgamma_lt(t1: ArrayLike, alpha, sigma0, delta: ArrayLike) -> float:
    """``|I + Σ₀T₁|^(−α) · etr(−T₁(I + Σ₀T₁)⁻¹Δ)`` for symmetric PSD Δ."""
    sigma0 = as_cov(sigma0)
    p = sigma0.dim
    t1 = as_diag_scale(t1, p)
    delta = check_noncentrality(delta, p)
    m = np.eye(p) + sigma0.entries * t1[None, :]
    tr = np.trace(t1[:, None] * np.linalg.solve(m, delta))
    return float(np.exp(-as_alpha(alpha) * _logdet(m) - tr))


def as_eval_points(x: ArrayLike, p: int) -> tuple[NDArray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != p:
        raise MVGammaError(f"evaluation points have {x.shape[1]} coordinates, expected {p}")
    if np.any(~(x > 0)):
        raise MVGammaError("evaluation points must have strictly positive coordinates")
    return x, single


def factorial_log_terms(x: NDArray, alpha: float, form: FactorialForm, noncentrality: NDArray
                        ) -> NDArray:
    """Log of ``∏_j w_j² g_α(w_j² x_j, y_j)`` for every (point, sample) pair.

    ``x`` is ``(k, p)``, ``noncentrality`` is ``(n, p)``; returns ``(k, n)``.
    """
    w2 = form.w**2
    scaled = x * w2
    logs = noncentral_gamma_logpdf(scaled[:, None, :], noncentrality[None, :, :], alpha, INNER_TOL)
    return np.sum(logs, axis=2) + np.sum(np.log(w2))


def factorial_pdf_mc(x: ArrayLike, alpha, form: FactorialForm, n: int, rng, *, workers: int = 1):
    """Monte Carlo evaluation of the factorial density representation.

    Draws ``S ~ W_m(2α, I_m)`` and averages the product of scaled non-central
    gamma densities. All points in a 2-D ``x`` share the same draws.

    Parameters
    ----------
    x : array_like, shape (p,) or (k, p)
        Evaluation point(s) with positive coordinates.
    alpha : float
        Shape; requires ``2α > m−1``.
    form : FactorialForm
    n : int
        Number of Wishart draws.
    rng : RngSeed or int

    Returns
    -------
    MCEstimate or list of MCEstimate
        For ``m = 0`` the value is exact with zero standard error.
    """
    alpha = as_alpha(alpha)
    x, single = as_eval_points(x, form.p)
    rng = as_rng(rng)
    m = form.m
    if m == 0:
        vals = np.exp(
            np.sum(central_gamma_logpdf(x * form.w**2, alpha), axis=1) + np.sum(np.log(form.w**2))
        )
        out = [MCEstimate.exact(v, rng) for v in vals]
        return out[0] if single else out
    check_wishart_dof(2.0 * alpha, m, label="m")
    b = form.b

    def draw(gen, size):
        v = bartlett_factors(gen, 2.0 * alpha, m, size)
        bv = np.einsum("jk,nkl->njl", b, v)
        y = 0.5 * np.sum(bv**2, axis=2)
        return np.exp(factorial_log_terms(x, alpha, form, y)).T

    vals = map_chunks(draw, n, rng, workers=workers)
    out = [MCEstimate.from_values(vals[:, i], rng) for i in range(x.shape[0])]
    return out[0] if single else out


def sample_mvgamma(alpha, sigma, n: int, rng, *, method: str = "auto", workers: int = 1) -> NDArray:
    """Draw ``n`` rows from Γ_p(α, Σ).

    Parameters
    ----------
    method : {"auto", "wishart", "gaussian"}
        ``"wishart"`` takes the diagonal of ``M/2`` with ``M ~ W_p(2α, Σ)``
        and needs ``2α > p−1``. ``"gaussian"`` uses ``½ Σ_{i≤2α} z_i∘z_i``,
        ``z_i ~ N(0, Σ)``, and needs integer ``2α``. ``"auto"`` prefers the
        Wishart path.

    Returns
    -------
    ndarray, shape (n, p)
    """
    alpha = as_alpha(alpha)
    sigma = as_cov(sigma)
    p = sigma.dim
    nu = 2.0 * alpha
    wishart_ok = nu > p - 1
    integer_nu = float(nu).is_integer()
    if method == "auto":
        if not (wishart_ok or integer_nu):
            raise ShapeParameterError(
                f"no sampler for 2α = {nu:g}: requires 2α > p−1 = {p - 1} or integer 2α"
            )
        method = "wishart" if wishart_ok else "gaussian"
    chol = sigma.chol
    if method == "wishart":
        check_wishart_dof(nu, p)

        def draw(gen, size):
            lv = chol @ bartlett_factors(gen, nu, p, size)
            return 0.5 * np.sum(lv**2, axis=2)

    elif method == "gaussian":
        if not integer_nu:
            raise ShapeParameterError(f"Gaussian-sum path requires integer 2α, got 2α = {nu:g}")
        k = int(nu)

        def draw(gen, size):
            z = gen.standard_normal((size, k, p)) @ chol.T
            return 0.5 * np.sum(z**2, axis=1)

    else:
        raise MVGammaError(f"unknown sampling method {method!r}")
    return map_chunks(draw, n, as_rng(rng), workers=workers)


def empirical_lt(samples: ArrayLike, t: ArrayLike) -> MCEstimate:
    """Monte Carlo estimate of ``E[exp(−Σ_j t_j X_j)]`` from a sample table."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise MVGammaError("sample table must be a non-empty (n, p) array")
    t = as_diag_scale(t, samples.shape[1])
    return MCEstimate.from_values(np.exp(-samples @ t))


def write_samples_csv(path, samples: ArrayLike) -> None:
    samples = np.asarray(samples, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(samples.shape[1])])
        for row in samples:
            writer.writerow([repr(float(v)) for v in row])


def read_samples_csv(path) -> NDArray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MVGammaError(f"{path}: empty sample table")
    header = rows[0]
    if header != [f"x{j + 1}" for j in range(len(header))]:
        raise MVGammaError(f"{path}: header must be x1..xp, got {header}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise MVGammaError(f"{path}: {exc}") from exc
    return data.reshape(-1, len(header))
