"""Covariance-matrix structure.

Partitions and Schur complements, the block determinant chain behind the
Laplace-transform identity, Sylvester's determinant identity, the
signature/M-matrix search and the minimum-eigenvalue factorial decomposition
``Σ = W⁻² + AAᵀ``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg as sla

from .exceptions import MVGammaError, NotPositiveDefiniteError

ASYMMETRY_TOL = 1e-8
RANK_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-9
MAX_SIGNATURE_DIM = 20


@dataclass(frozen=True, eq=False)
class CovMatrix:
    """Symmetric positive definite "associated" covariance matrix.

    Construction symmetrizes by averaging with the transpose, rejects
    asymmetry above ``1e-8`` (relative to the largest entry) and requires a
    Cholesky factorization to succeed.
    """

    entries: NDArray
    chol: NDArray = field(repr=False)

    def __init__(self, entries: ArrayLike):
        a = np.array(entries, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise MVGammaError(f"covariance matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise MVGammaError("covariance matrix has non-finite entries")
        scale = np.max(np.abs(a))
        if scale > 0 and np.max(np.abs(a - a.T)) > ASYMMETRY_TOL * scale:
            raise MVGammaError("covariance matrix is not symmetric")
        a = 0.5 * (a + a.T)
        try:
            chol = sla.cholesky(a, lower=True)
        except sla.LinAlgError as exc:
            raise NotPositiveDefiniteError("covariance matrix is not positive definite") from exc
        a.setflags(write=False)
        chol.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "chol", chol)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def diag(self) -> NDArray:
        return np.diag(self.entries)

    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def inv(self) -> NDArray:
        return sla.cho_solve((self.chol, True), np.eye(self.dim))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"CovMatrix(dim={self.dim})"


def as_cov(sigma) -> CovMatrix:
    return sigma if isinstance(sigma, CovMatrix) else CovMatrix(sigma)


def as_diag_scale(t: ArrayLike, p: int) -> NDArray:
    """Validate the diagonal of ``T``: ``p`` finite nonnegative reals."""
    t = np.asarray(t, dtype=float).reshape(-1)
    if t.shape[0] != p:
        raise MVGammaError(f"expected {p} transform arguments, got {t.shape[0]}")
    if not np.all(np.isfinite(t)) or np.any(t < 0):
        raise MVGammaError("transform arguments must be finite and nonnegative")
    return t


@dataclass(frozen=True, eq=False)
class Partition:
    """Two-block split of Σ with the Schur complement ``Σ₀ = Σ₁₁ − Σ₁₂Σ₂₂⁻¹Σ₂₁``."""

    sigma: CovMatrix
    p1: int
    s11: NDArray
    s12: NDArray
    s21: NDArray
    s22: CovMatrix
    schur: CovMatrix

    @property
    def p2(self) -> int:
        return self.sigma.dim - self.p1

    @property
    def p(self) -> int:
        return self.sigma.dim

    def s22_inv_s21(self) -> NDArray:
        """``Σ₂₂⁻¹Σ₂₁`` (p₂×p₁)."""
        return sla.cho_solve((self.s22.chol, True), self.s21)


def partition_blocks(sigma, p1: int) -> Partition:
    """Split Σ after the first ``p1`` coordinates.

    Raises
    ------
    MVGammaError
        If ``p1`` is outside ``1..p-1``.
    NotPositiveDefiniteError
        If the Schur complement cannot be factorized (numerically singular Σ).
    """
    sigma = as_cov(sigma)
    p = sigma.dim
    if not 1 <= p1 <= p - 1:
        raise MVGammaError(f"partition size p1={p1} must satisfy 1 ≤ p1 ≤ {p - 1}")
    a = sigma.entries
    s11 = a[:p1, :p1]
    s12 = a[:p1, p1:]
    s21 = s12.T
    s22 = CovMatrix(a[p1:, p1:])
    s0 = s11 - s12 @ sla.cho_solve((s22.chol, True), s21)
    try:
        schur = CovMatrix(0.5 * (s0 + s0.T))
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError("Schur complement is not positive definite") from exc
    return Partition(sigma, p1, s11, s12, s21, s22, schur)


@dataclass(frozen=True)
class FactorizationReport:
    """Direct ``|I_p + ΣT|`` and every factored expression of the block chain."""

    direct: float
    chain: dict[str, float]

    @property
    def max_rel_error(self) -> float:
        return max(abs(v - self.direct) / abs(self.direct) for v in self.chain.values())


def det_block_factorization(sigma, t: ArrayLike, p1: int) -> FactorizationReport:
    """Evaluate the Schur-complement chain for ``|I_p + ΣT|``.

    Each stage of the chain is computed from the partition blocks on its
    own, so agreement with the direct determinant is a genuine check.
    """
    part = partition_blocks(sigma, p1)
    t = as_diag_scale(t, part.p)
    t1, t2 = np.diag(t[:p1]), np.diag(t[p1:])
    i1, i2 = np.eye(p1), np.eye(part.p2)
    s0 = part.schur.entries
    s12, s21, s22 = part.s12, part.s21, part.s22.entries
    s22inv_s21 = part.s22_inv_s21()
    det = np.linalg.det

    direct = det(np.eye(part.p) + part.sigma.entries @ np.diag(t))

    top_left = i1 + s0 @ t1 + s12 @ s22inv_s21 @ t1
    block = np.block([[top_left, s12 @ t2], [s21 @ t1, i2 + s22 @ t2]])
    m2 = i2 + s22 @ t2
    m2_inv = np.linalg.inv(m2)
    m1 = i1 + s0 @ t1
    m1_inv = np.linalg.inv(m1)
    s12_s22inv = s22inv_s21.T

    chain = {
        "block": det(block),
        "schur_of_lower_block": det(m2) * det(top_left - s12 @ t2 @ m2_inv @ s21 @ t1),
        "pulled_out_projection": det(m2)
        * det(m1 + s12_s22inv @ (i2 - s22 @ t2 @ m2_inv) @ s21 @ t1),
        "simplified_inverse": det(m2) * det(m1 + s12_s22inv @ m2_inv @ s21 @ t1),
        "three_factor": det(m1) * det(m2) * det(i1 + s12_s22inv @ m2_inv @ s21 @ t1 @ m1_inv),
        "three_factor_swapped": det(m1)
        * det(m2)
        * det(i2 + s21 @ t1 @ m1_inv @ s12_s22inv @ m2_inv),
    }
    return FactorizationReport(float(direct), {k: float(v) for k, v in chain.items()})


def sylvester_identity(a12: ArrayLike, b21: ArrayLike) -> tuple[float, float]:
    """Return ``(|I₂ + B₂₁A₁₂|, |I₁ + A₁₂B₂₁|)``; the two agree in exact arithmetic."""
    a12 = np.atleast_2d(np.asarray(a12, dtype=float))
    b21 = np.atleast_2d(np.asarray(b21, dtype=float))
    if a12.shape[1] != b21.shape[0] or a12.shape[0] != b21.shape[1]:
        raise MVGammaError(f"shapes {a12.shape} and {b21.shape} are not conformable")
    d1 = np.linalg.det(np.eye(b21.shape[0]) + b21 @ a12)
    d2 = np.linalg.det(np.eye(a12.shape[0]) + a12 @ b21)
    return float(d1), float(d2)


def find_signature_m_matrix(sigma, tol: float = 1e-12) -> NDArray | None:
    """Search for signs ``s`` making ``SΣ⁻¹S`` an M-matrix.

    Since Σ⁻¹ is symmetric positive definite, it suffices that every
    off-diagonal entry of ``SΣ⁻¹S`` is ``≤ tol``. ``S`` and ``−S`` act
    identically, so only signatures with ``s₁ = +1`` are enumerated.

    Returns
    -------
    ndarray of ±1 or None
        The first signature found in enumeration order, or ``None``.
    """
    sigma = as_cov(sigma)
    p = sigma.dim
    if p > MAX_SIGNATURE_DIM:
        raise MVGammaError(
            f"exhaustive signature search supports p ≤ {MAX_SIGNATURE_DIM}, got p={p}"
        )
    prec = sigma.inv()
    iu, ju = np.triu_indices(p, k=1)
    off = prec[iu, ju]
    if p == 1:
        return np.ones(1, dtype=int)
    # bit k of the counter flips coordinate k+1; coordinate 0 stays +1
    batch = 1 << 12
    total = 1 << (p - 1)
    shifts = np.arange(p - 1)
    for start in range(0, total, batch):
        codes = np.arange(start, min(start + batch, total))
        bits = (codes[:, None] >> shifts) & 1
        signs = np.ones((codes.size, p), dtype=int)
        signs[:, 1:] = 1 - 2 * bits
        ok = np.all(signs[:, iu] * signs[:, ju] * off <= tol, axis=1)
        hit = np.flatnonzero(ok)
        if hit.size:
            return signs[hit[0]]
    return None


@dataclass(frozen=True, eq=False)
class FactorialForm:
    """Decomposition ``Σ = W⁻² + AAᵀ`` with ``B = WA``.

    ``w`` holds the diagonal of W, ``a`` is p×m (m may be zero) and
    ``lam`` is set when W⁻² = λI came from the smallest eigenvalue.
    """

    w: NDArray
    a: NDArray
    lam: float | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).reshape(-1)
        a = np.asarray(self.a, dtype=float)
        if a.ndim == 1:
            a = a.reshape(-1, 1)
        if a.size == 0:
            a = np.zeros((w.size, 0))
        if a.shape[0] != w.size:
            raise MVGammaError(f"A has {a.shape[0]} rows but W has {w.size} entries")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise MVGammaError("W must have positive finite diagonal entries")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "a", a)

    @property
    def p(self) -> int:
        return self.w.size

    @property
    def m(self) -> int:
        return self.a.shape[1]

    @property
    def b(self) -> NDArray:
        return self.w[:, None] * self.a

    def reconstruct(self) -> NDArray:
        return np.diag(self.w**-2) + self.a @ self.a.T

    @classmethod
    def validated(cls, w, a, sigma, tol: float = RECONSTRUCTION_TOL) -> FactorialForm:
        """Build a user-supplied form and check it reproduces ``sigma``."""
        form = cls(w, a)
        s = as_cov(sigma).entries
        err = np.linalg.norm(form.reconstruct() - s) / np.linalg.norm(s)
        if err > tol:
            raise MVGammaError(f"W⁻² + AAᵀ misses Σ by relative error {err:.3g} > {tol:g}")
        return form


def lambda_factorial_decomposition(sigma) -> FactorialForm:
    """Factorial form with ``W⁻² = λI``, λ the smallest eigenvalue of Σ.

    ``A`` spans the spectral factor of ``Σ − λI``; eigenvalue gaps below
    ``1e-10`` times the largest eigenvalue count as zero, so ``m ≤ p−1``.
    """
    sigma = as_cov(sigma)
    evals, evecs = np.linalg.eigh(sigma.entries)
    lam = float(evals[0])
    gaps = evals - lam
    keep = gaps > RANK_TOL * evals[-1]
    a = evecs[:, keep] * np.sqrt(gaps[keep])
    return FactorialForm(np.full(sigma.dim, lam**-0.5), a, lam)


def random_spd(p: int, rng: np.random.Generator, *, cond: float = 50.0) -> NDArray:
    """Random SPD matrix with condition number at most ``cond`` and varied diagonal."""
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    q = q * np.sign(np.diag(r))
    evals = np.exp(rng.uniform(0.0, np.log(cond), size=p))
    evals /= evals.max() / 2.0
    d = np.exp(rng.uniform(-0.5, 0.5, size=p))
    s = (q * evals) @ q.T
    s = d[:, None] * s * d[None, :]
    return 0.5 * (s + s.T)


def read_matrix(path) -> NDArray:
    """Read the plain text matrix format: ``p`` on the first line, then p rows."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MVGammaError(f"{path}: empty matrix file")
    try:
        p = int(lines[0].strip())
    except ValueError as exc:
        raise MVGammaError(f"{path}: first line must be the dimension, got {lines[0]!r}") from exc
    if p <= 0:
        raise MVGammaError(f"{path}: dimension must be positive, got {p}")
    rows = lines[1:]
    if len(rows) != p:
        raise MVGammaError(f"{path}: expected {p} rows, found {len(rows)}")
    out = np.empty((p, p))
    for i, row in enumerate(rows):
        fields = row.split()
        if len(fields) != p:
            raise MVGammaError(f"{path}: row {i + 1} has {len(fields)} entries, expected {p}")
        try:
            out[i] = [float(f) for f in fields]
        except ValueError as exc:
            raise MVGammaError(f"{path}: row {i + 1}: {exc}") from exc
    return out


def write_matrix(path, matrix) -> None:
    m = np.asarray(matrix, dtype=float)
    lines = [str(m.shape[0])]
    lines += [" ".join(f"{v:.17g}" for v in row) for row in m]
    Path(path).write_text("\n".join(lines) + "\n")
