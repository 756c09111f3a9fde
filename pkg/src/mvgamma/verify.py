"""Numerical checks of the partition identity, admissibility bounds and inequality.

The partition identity says that for ``p = p₁ + p₂`` and
``2α > max(p₁−1, p₂−1)`` the Γ_p(α, Σ) density is a mixture of non-central
Γ_{p₁}(α, Σ₀, Δ) densities over a half-Wishart ``Y = X^{1/2} C X^{1/2}`` on
the second block, with ``Δ = Σ₁₂Σ₂₂⁻¹ Y Σ₂₂⁻¹Σ₂₁``. It is checked here three
ways: as a closed Laplace transform, as a Monte Carlo Laplace transform, and
(for ``p₁ = 1, p₂ ≤ 2``) pointwise in the density domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate
from scipy.special import roots_jacobi, roots_legendre

from .density import as_eval_points, factorial_pdf_mc, sample_mvgamma
from .exceptions import MVGammaError, QuadratureError, ShapeParameterError
from .linalg import (
    FactorialForm,
    Partition,
    as_cov,
    as_diag_scale,
    find_signature_m_matrix,
    lambda_factorial_decomposition,
    partition_blocks,
)
from .montecarlo import MCEstimate, as_rng, map_chunks
from .scalar_gamma import as_alpha, mv_gamma_fn, noncentral_gamma_logpdf
from .wishart import bartlett_factors

SIGMA_RULE = 3.0


def check_partition_shape(alpha: float, part: Partition) -> None:
    need = max(part.p1 - 1, part.p2 - 1)
    if not 2.0 * alpha > need:
        raise ShapeParameterError(
            f"requires 2α > max(p₁−1, p₂−1) = {need}, got 2α = {2 * alpha:g}"
        )


# --------------------------------------------------------------------------
# Laplace-transform domain
# --------------------------------------------------------------------------


def rhs_log_lt_closed(t: ArrayLike, alpha, part: Partition) -> float:
    alpha = as_alpha(alpha)
    t = as_diag_scale(t, part.p)
    p1 = part.p1
    t1, t2 = t[:p1], t[p1:]
    m1 = np.eye(p1) + part.schur.entries * t1[None, :]
    u = part.s22_inv_s21()
    # Σ₂₁T₁(I₁+Σ₀T₁)⁻¹Σ₁₂Σ₂₂⁻¹ + I₂ + Σ₂₂T₂
    inner = part.s21 @ (t1[:, None] * np.linalg.solve(m1, u.T))
    m2 = inner + np.eye(part.p2) + part.s22.entries * t2[None, :]
    return -alpha * (np.linalg.slogdet(m1)[1] + np.linalg.slogdet(m2)[1])


def rhs_lt_closed(t: ArrayLike, alpha, part: Partition) -> float:
    """Closed-form Laplace transform of the partition mixture.

    Equals ``|I₁+Σ₀T₁|^(−α) |Σ₂₁T₁(I₁+Σ₀T₁)⁻¹Σ₁₂Σ₂₂⁻¹ + I₂ + Σ₂₂T₂|^(−α)``,
    which must coincide with ``|I_p + ΣT|^(−α)``.
    """
    return float(np.exp(rhs_log_lt_closed(t, alpha, part)))


def rhs_lt_mc(t: ArrayLike, alpha, part: Partition, n: int, rng, *, workers: int = 1
              ) -> MCEstimate:
    """Monte Carlo Laplace transform of the partition mixture.

    Averages ``|I₁+Σ₀T₁|^(−α) etr(−T₁(I₁+Σ₀T₁)⁻¹Σ₁₂Σ₂₂⁻¹YΣ₂₂⁻¹Σ₂₁) etr(−T₂Y)``
    over ``Y = M/2``, ``M ~ W_{p₂}(2α, Σ₂₂)``.
    """
    alpha = as_alpha(alpha)
    check_partition_shape(alpha, part)
    t = as_diag_scale(t, part.p)
    rng = as_rng(rng)
    p1, p2 = part.p1, part.p2
    t1, t2 = t[:p1], t[p1:]
    m1 = np.eye(p1) + part.schur.entries * t1[None, :]
    log_front = -alpha * np.linalg.slogdet(m1)[1]
    u = part.s22_inv_s21()
    k = u @ (t1[:, None] * np.linalg.solve(m1, u.T)) + np.diag(t2)
    k = 0.5 * (k + k.T)
    chol = part.s22.chol
    nu = 2.0 * alpha

    def draw(gen, size):
        lv = chol @ bartlett_factors(gen, nu, p2, size)
        y = 0.5 * (lv @ lv.transpose(0, 2, 1))
        return np.exp(log_front - np.einsum("ij,nji->n", k, y))

    return MCEstimate.from_values(map_chunks(draw, n, rng, workers=workers), rng)


# --------------------------------------------------------------------------
# Density domain, p₁ = 1 and p₂ ∈ {1, 2}
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class _MixtureTerms:
    alpha: float
    p2: int
    sigma0: float
    u: NDArray  # Σ₂₂⁻¹Σ₂₁ as a p₂ vector
    prec: NDArray  # Σ₂₂⁻¹
    log_norm: float  # −log Γ_{p₂}(α) − α log|Σ₂₂|

    @classmethod
    def build(cls, alpha: float, part: Partition) -> _MixtureTerms:
        if part.p1 != 1 or part.p2 not in (1, 2):
            raise MVGammaError(
                f"density-domain evaluation supports p₁ = 1, p₂ ∈ {{1, 2}}; got ({part.p1}, {part.p2})"
            )
        check_partition_shape(alpha, part)
        return cls(
            alpha,
            part.p2,
            float(part.schur.entries[0, 0]),
            part.s22_inv_s21()[:, 0].copy(),
            part.s22.inv(),
            -mv_gamma_fn(part.p2, alpha) - alpha * part.s22.logdet(),
        )

    def log_integrand(self, x: NDArray, c=0.0) -> NDArray:
        """Log integrand without the ``|C|^(α−(p₂+1)/2)`` weight.

        ``x`` has shape ``(..., 1 + p₂)``; ``c`` broadcasts against ``x[..., 0]``.
        """
        a = self.alpha
        x1 = x[..., 0]
        if self.p2 == 1:
            x2 = x[..., 1]
            delta = self.u[0] ** 2 * x2
            rest = (a - 1.0) * np.log(x2) - self.prec[0, 0] * x2
        else:
            x2, x3 = x[..., 1], x[..., 2]
            r = np.sqrt(x2 * x3)
            delta = self.u[0] ** 2 * x2 + self.u[1] ** 2 * x3 + 2.0 * c * self.u[0] * self.u[1] * r
            delta = np.maximum(delta, 0.0)
            quad = self.prec[0, 0] * x2 + self.prec[1, 1] * x3 + 2.0 * c * self.prec[0, 1] * r
            rest = (a - 1.0) * (np.log(x2) + np.log(x3)) - quad
        s0 = self.sigma0
        x1, delta = np.broadcast_arrays(x1, delta)
        noncentral = noncentral_gamma_logpdf(x1 / s0, delta / s0, a) - np.log(s0)
        return self.log_norm + noncentral + rest


def theorem1_rhs_pdf(x: ArrayLike, alpha, part: Partition, quad_tol: float = 1e-10) -> float:
    """Right-hand side of the partition identity as a density at one point.

    For ``p₂ = 1`` the correlation set is ``{1}`` and no integral is needed.
    For ``p₂ = 2`` the off-diagonal ``c ∈ (−1, 1)`` is integrated adaptively
    with the algebraic endpoint weight ``(1−c)^(α−3/2)(1+c)^(α−3/2)``
    handled by QUADPACK's QAWS rule.

    Raises
    ------
    QuadratureError
        If the adaptive rule reports failure.
    """
    alpha = as_alpha(alpha)
    terms = _MixtureTerms.build(alpha, part)
    x, _ = as_eval_points(np.asarray(x, dtype=float).reshape(-1), part.p)
    x = x[0]
    if terms.p2 == 1:
        return float(np.exp(terms.log_integrand(x)))
    w = alpha - 1.5
    f = lambda c: float(np.exp(terms.log_integrand(x, c)))
    out = integrate.quad(
        f, -1.0, 1.0, weight="alg", wvar=(w, w), epsabs=0.0, epsrel=quad_tol, limit=200,
        full_output=1,
    )
    val, err = out[0], out[1]
    # a fourth element means QUADPACK flagged a problem
    if len(out) > 3 and not err <= 100 * quad_tol * abs(val):
        raise QuadratureError(f"correlation integral failed: {out[3]} (estimate {val}, error {err})")
    return float(val)


def theorem1_rhs_pdf_grid(points: ArrayLike, alpha, part: Partition, c_nodes: int = 32) -> NDArray:
    """Vectorized density evaluation with a fixed Gauss–Jacobi rule in ``c``."""
    alpha = as_alpha(alpha)
    terms = _MixtureTerms.build(alpha, part)
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != part.p or np.any(~(pts > 0)):
        raise MVGammaError("grid points must have p positive coordinates")
    if terms.p2 == 1:
        return np.exp(terms.log_integrand(pts))
    nodes, weights = roots_jacobi(c_nodes, alpha - 1.5, alpha - 1.5)
    out = np.zeros(pts.shape[:-1])
    for c, wc in zip(nodes, weights):
        out += wc * np.exp(terms.log_integrand(pts, c))
    return out


def _power_rule(n: int, upper: float, power: int) -> tuple[NDArray, NDArray]:
    """Gauss–Legendre rule on (0, upper) via ``x = upper·v^k``."""
    v, w = roots_legendre(n)
    v = 0.5 * (v + 1.0)
    w = 0.5 * w
    return upper * v**power, w * upper * power * v ** (power - 1)


@dataclass(frozen=True)
class QuadratureLt:
    mass: float
    t_points: NDArray
    lt: NDArray


def theorem1_quadrature_lt(alpha, part: Partition, t_points: ArrayLike, *, nodes: int = 48,
                           c_nodes: int = 24) -> QuadratureLt:
    """Integrate the density-domain right-hand side over the positive orthant.

    Uses a tensor Gauss–Legendre rule on each mapped half-line and returns
    the total mass together with ``∫ e^{−⟨t, x⟩} f(x) dx`` for every row of
    ``t_points``.
    """
    alpha = as_alpha(alpha)
    sigma = part.sigma
    t_points = np.atleast_2d(np.asarray(t_points, dtype=float))
    # x^(α−1)dx becomes v^(kα−1)dv; an even k keeps sqrt(x) polynomial in v.
    # Marginals are gamma(α, σⱼⱼ), so mass beyond σⱼⱼ(2α+80) is below e⁻⁶⁰.
    power = 2 * int(np.ceil(1.5 / alpha))
    rules = [_power_rule(nodes, sjj * (2.0 * alpha + 80.0), power) for sjj in sigma.diag]
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrid = np.ones_like(grids[0])
    for k, (_, w) in enumerate(rules):
        shape = [1] * part.p
        shape[k] = w.size
        wgrid = wgrid * w.reshape(shape)
    pts = np.stack(grids, axis=-1).reshape(-1, part.p)
    wflat = wgrid.reshape(-1)
    dens = np.empty(pts.shape[0])
    step = 1 << 15
    for s in range(0, pts.shape[0], step):
        dens[s:s + step] = theorem1_rhs_pdf_grid(pts[s:s + step], alpha, part, c_nodes)
    weighted = wflat * dens
    mass = float(np.sum(weighted))
    lt = np.array([np.sum(weighted * np.exp(-pts @ t)) for t in t_points])
    return QuadratureLt(mass, t_points, lt)


# --------------------------------------------------------------------------
# Admissibility
# --------------------------------------------------------------------------

STRUCTURES = ("general", "m_factorial", "m_matrix_signature", "remark_partition")


@dataclass(frozen=True)
class AdmissibilityInfo:
    """Dimension plus what is known about the structure of Σ.

    ``m`` is used by ``m_factorial``; ``m0``, ``m12`` and ``p2`` by
    ``remark_partition`` (Σ₀ is ``m0``-factorial and ``rank(Σ₁₂) = m12``).
    """

    p: int
    structure: str = "general"
    m: int | None = None
    m0: int | None = None
    m12: int | None = None
    p2: int | None = None

    def __post_init__(self):
        if self.p < 1:
            raise MVGammaError(f"dimension must be positive, got {self.p}")
        if self.structure not in STRUCTURES:
            raise MVGammaError(f"unknown structure {self.structure!r}")
        if self.structure == "m_factorial" and (self.m is None or not 0 <= self.m <= self.p - 1):
            raise MVGammaError(f"m-factorial structure needs 0 ≤ m ≤ p−1, got m={self.m}")
        if self.structure == "remark_partition":
            if None in (self.m0, self.m12, self.p2):
                raise MVGammaError("remark_partition needs m0, m12 and p2")
            p1 = self.p - self.p2
            if not 1 <= self.p2 <= self.p - 1:
                raise MVGammaError(f"p2={self.p2} must satisfy 1 ≤ p2 ≤ p−1")
            if not 0 <= self.m0 <= p1:
                raise MVGammaError(f"m0={self.m0} must satisfy 0 ≤ m0 ≤ p1={p1}")
            if not 0 <= self.m12 <= min(p1, self.p2):
                raise MVGammaError(f"m12={self.m12} exceeds min(p1, p2)={min(p1, self.p2)}")


def theorem2_partition(p: int) -> tuple[int, int]:
    """Block sizes ``(⌊(p+1)/2⌋, p − ⌊(p+1)/2⌋)`` minimizing ``max(p₁−1, p₂−1)``."""
    p1 = (p + 1) // 2
    return p1, p - p1


def admissibility_bound(info: AdmissibilityInfo) -> float:
    """Threshold ``b`` such that every ``2α > b`` is known to be admissible.

    ``0`` means every α > 0. Integer ``2α`` is always admissible in addition;
    see :func:`is_known_admissible`.
    """
    if info.structure == "general":
        if info.p == 1:
            return 0.0
        p1, p2 = theorem2_partition(info.p)
        return float(max(p1 - 1, p2 - 1))
    if info.structure == "m_factorial":
        return float(max(info.m - 1, 0))
    if info.structure == "m_matrix_signature":
        return 0.0
    return float(max(info.m0 + info.m12 - 1, info.p2 - 1, 0))


def is_known_admissible(two_alpha: float, info: AdmissibilityInfo) -> bool:
    if not two_alpha > 0:
        return False
    if float(two_alpha).is_integer():
        return True
    bound = admissibility_bound(info)
    return bound == 0.0 or two_alpha > bound


def classify_admissibility(sigma) -> AdmissibilityInfo:
    """Pick the structure giving the lowest known threshold for this Σ."""
    sigma = as_cov(sigma)
    p = sigma.dim
    if p <= 20 and find_signature_m_matrix(sigma) is not None:
        return AdmissibilityInfo(p, "m_matrix_signature")
    m = lambda_factorial_decomposition(sigma).m
    general = AdmissibilityInfo(p)
    candidate = AdmissibilityInfo(p, "m_factorial", m=m)
    if admissibility_bound(candidate) < admissibility_bound(general):
        return candidate
    return general


# --------------------------------------------------------------------------
# Inequality for the multivariate gamma CDF
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class InequalityReport:
    point: NDArray
    p1: int
    lhs: MCEstimate
    rhs: MCEstimate
    difference: MCEstimate
    paired_difference: MCEstimate
    cross_rank: int
    verdict: str


def _verdict(diff: MCEstimate, cross_rank: int, k: float = SIGMA_RULE) -> str:
    lo = diff.value - k * diff.std_error
    hi = diff.value + k * diff.std_error
    if cross_rank == 0:
        return "consistent" if lo <= 0.0 <= hi else "violated"
    if hi < 0.0:
        return "violated"
    return "consistent" if lo > 0.0 else "inconclusive"


def _cdf_indicator(alpha, sigma, x, n, rng, workers):
    samples = sample_mvgamma(alpha, sigma, n, rng, workers=workers)
    return np.all(samples <= x, axis=1)


def inequality_check(x: ArrayLike, alpha, sigma, p1: int, n: int, rng, *, workers: int = 1
                     ) -> InequalityReport:
    """Compare ``G_p(x)`` with ``G_{p₁}(x₁..x_{p₁}) G_{p−p₁}(x_{p₁+1}..x_p)``.

    The joint CDF comes from one batch of Γ_p(α, Σ) draws; each block CDF
    from its own independent batch drawn with the block covariance. The
    verdict applies the three-standard-error rule to ``lhs − rhs``: with
    ``rank(Σ₁₂) > 0`` the difference should be positive, with ``Σ₁₂ = 0``
    it should vanish.
    """
    alpha = as_alpha(alpha)
    sigma = as_cov(sigma)
    part = partition_blocks(sigma, p1)
    x, _ = as_eval_points(np.asarray(x, dtype=float).reshape(-1), sigma.dim)
    x = x[0]
    rng = as_rng(rng)
    samples = sample_mvgamma(alpha, sigma, n, rng.substream(0), workers=workers)
    in_first = np.all(samples[:, :p1] <= x[:p1], axis=1)
    in_second = np.all(samples[:, p1:] <= x[p1:], axis=1)
    joint = in_first & in_second
    first = _cdf_indicator(alpha, part.s11, x[:p1], n, rng.substream(1), workers)
    second = _cdf_indicator(alpha, part.s22, x[p1:], n, rng.substream(2), workers)

    lhs = MCEstimate.from_values(joint, rng)
    g1 = MCEstimate.from_values(first)
    g2 = MCEstimate.from_values(second)
    prod = g1.value * g2.value
    prod_se = np.sqrt(
        (g2.value * g1.std_error) ** 2 + (g1.value * g2.std_error) ** 2
        + (g1.std_error * g2.std_error) ** 2
    )
    rhs = MCEstimate(prod, float(prod_se), n, rng)
    diff = MCEstimate(lhs.value - prod, float(np.hypot(lhs.std_error, prod_se)), n, rng)
    paired = _paired_difference(in_first, in_second, rng)
    rank = int(np.linalg.matrix_rank(part.s12))
    return InequalityReport(x, p1, lhs, rhs, diff, paired, rank, _verdict(diff, rank))


def _paired_difference(in_first: NDArray, in_second: NDArray, rng) -> MCEstimate:
    """``mean(AB) − mean(A)·mean(B)`` on one sample, delta-method standard error."""
    a = in_first.astype(float)
    b = in_second.astype(float)
    ab = a * b
    n = a.size
    ma, mb = a.mean(), b.mean()
    grad = np.array([1.0, -mb, -ma])
    cov = np.cov(np.vstack([ab, a, b]))
    se = float(np.sqrt(max(grad @ cov @ grad, 0.0) / n))
    return MCEstimate(float(ab.mean() - ma * mb), se, n, rng)


# --------------------------------------------------------------------------
# Positivity probe
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PositivityReport:
    grid: NDArray
    estimates: list[MCEstimate]
    min_estimate: MCEstimate
    flagged: NDArray


def positivity_probe(alpha, form: FactorialForm, grid: ArrayLike, n: int, rng, *,
                     workers: int = 1) -> PositivityReport:
    """Evaluate the factorial density on a grid and flag certainly-negative points.

    A point is flagged when ``estimate + 3·std_error < 0``. With a real
    factor matrix every Monte Carlo term is nonnegative, so nothing is ever
    flagged; the probe serves as a regression harness over structured Σ.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    est = factorial_pdf_mc(grid, alpha, form, n, rng, workers=workers)
    values = np.array([e.value for e in est])
    ses = np.array([e.std_error for e in est])
    flagged = grid[values + SIGMA_RULE * ses < 0.0]
    return PositivityReport(grid, est, est[int(np.argmin(values))], flagged)
