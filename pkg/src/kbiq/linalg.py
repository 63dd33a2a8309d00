"""Small dense linear algebra: partial-pivoted LU, solves, condition estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SingularMatrixError

__all__ = [
    "LuFactorization",
    "lu_factor",
    "lu_solve",
    "condition_estimate",
    "solve",
    "quad_form",
]

# A pivot below this fraction of the largest row norm counts as zero.
SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class LuFactorization:
    """Packed ``P A = L U`` with unit-diagonal ``L`` stored below the diagonal.

    ``perm[i]`` is the row of ``A`` that ended up in row ``i``.
    """

    lu: np.ndarray
    perm: np.ndarray
    sign: int
    norm1: float
    singular_at: int | None = None

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    @property
    def singular(self) -> bool:
        return self.singular_at is not None

    @property
    def lower(self) -> np.ndarray:
        return np.tril(self.lu, -1) + np.eye(self.n)

    @property
    def upper(self) -> np.ndarray:
        return np.triu(self.lu)

    def permutation_matrix(self) -> np.ndarray:
        return np.eye(self.n)[self.perm]

    @property
    def logabsdet(self) -> float:
        if self.singular:
            return -math.inf
        return float(np.sum(np.log(np.abs(np.diag(self.lu)))))

    def det(self) -> float:
        if self.singular:
            return 0.0
        return self.sign * float(np.prod(np.diag(self.lu)))

    def solve(self, b, transpose: bool = False) -> np.ndarray:
        return lu_solve(self, b, transpose=transpose)


def _as_square(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError("matrix has non-finite entries")
    return a


def lu_factor(a, *, strict: bool = True) -> LuFactorization:
    """Factor ``a`` with partial (row) pivoting.

    With ``strict=True`` a zero pivot raises :class:`SingularMatrixError`;
    otherwise the factorization is returned flagged as singular so callers
    can still read ``condition_estimate`` (which then gives ``inf``).
    """
    lu = _as_square(a)
    n = lu.shape[0]
    perm = np.arange(n)
    sign = 1
    norm1 = float(np.abs(lu).sum(axis=0).max()) if n else 0.0
    row_scale = float(np.sqrt((lu * lu).sum(axis=1)).max()) if n else 0.0
    tiny = SINGULAR_RTOL * row_scale
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= tiny:
            if strict:
                raise SingularMatrixError(k)
            return LuFactorization(lu, perm, sign, norm1, singular_at=k)
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        if k + 1 < n:
            lu[k + 1:, k] /= lu[k, k]
            lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return LuFactorization(lu, perm, sign, norm1)


def _forward_unit_lower(lu, b):
    y = b.copy()
    for i in range(1, lu.shape[0]):
        y[i] -= lu[i, :i] @ y[:i]
    return y


def _backward_upper(lu, y):
    n = lu.shape[0]
    x = y.copy()
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def lu_solve(f: LuFactorization, b, transpose: bool = False) -> np.ndarray:
    """Solve ``A y = b`` (or ``A^T y = b``). ``b`` may be a vector or a matrix of columns."""
    if f.singular:
        raise SingularMatrixError(f.singular_at)
    b = np.array(b, dtype=float)
    if b.shape[0] != f.n:
        raise ParameterError(f"right-hand side has {b.shape[0]} rows, expected {f.n}")
    lu = f.lu
    if not transpose:
        y = _forward_unit_lower(lu, b[f.perm])
        return _backward_upper(lu, y)
    # A^T = U^T L^T P, so solve U^T z = b, L^T w = z, then undo P.
    n = f.n
    z = b.copy()
    for i in range(n):
        z[i] = (z[i] - lu[:i, i] @ z[:i]) / lu[i, i]
    for i in range(n - 2, -1, -1):
        z[i] -= lu[i + 1:, i] @ z[i + 1:]
    out = np.empty_like(z)
    out[f.perm] = z
    return out


def condition_estimate(f: LuFactorization) -> float:
    """Estimate of the 1-norm condition number ``||A||_1 ||A^-1||_1``.

    Hager's method with Higham's extra test vector; ``inf`` for a singular
    factorization.
    """
    if f.singular:
        return math.inf
    n = f.n
    if n == 0:
        return 1.0
    x = np.full(n, 1.0 / n)
    est = 0.0
    for _ in range(5):
        y = lu_solve(f, x)
        new_est = float(np.abs(y).sum())
        xi = np.where(y >= 0.0, 1.0, -1.0)
        z = lu_solve(f, xi, transpose=True)
        j = int(np.argmax(np.abs(z)))
        if new_est <= est or np.abs(z[j]) <= z @ x:
            est = max(est, new_est)
            break
        est = new_est
        x = np.zeros(n)
        x[j] = 1.0
    # Higham's alternating vector guards against the worst cases of Hager.
    alt = np.array([(-1.0) ** i * (1.0 + i / max(n - 1, 1)) for i in range(n)])
    est = max(est, 2.0 * float(np.abs(lu_solve(f, alt)).sum()) / (3.0 * n))
    return max(1.0, f.norm1 * est)


def solve(a, b, jitter: float = 0.0) -> np.ndarray:
    """Factor and solve in one go; ``jitter`` is added to the diagonal first."""
    a = _as_square(a)
    if jitter:
        a = a + jitter * np.eye(a.shape[0])
    return lu_solve(lu_factor(a), b)


def quad_form(a, v) -> float:
    v = np.asarray(v, dtype=float)
    return float(v @ np.asarray(a, dtype=float) @ v)
