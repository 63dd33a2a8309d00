"""Mercer data of the periodic Sobolev kernel on [0, 1].

The kernel of order ``s`` is

    k_s(x, y) = 1 + sum_{m >= 1} m^{-2s} cos(2 pi m (x - y)),

with the uniform reference measure. Its eigenpairs are enumerated as

    index 1        -> constant function 1, eigenvalue 1
    index 2j       -> sqrt(2) cos(2 pi j x), eigenvalue j^{-2s} / 2
    index 2j + 1   -> sqrt(2) sin(2 pi j x), eigenvalue j^{-2s} / 2

so within one frequency the cosine comes first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import special

from .errors import DomainError, IndexOutOfRangeError, ParameterError

__all__ = [
    "SpectralModel",
    "bernoulli_polynomial",
    "cosine_series",
]

SQRT2 = math.sqrt(2.0)

# Closed-form zeta(2s) for the orders with a hardcoded Bernoulli polynomial.
_ZETA_EVEN = {1: math.pi**2 / 6, 2: math.pi**4 / 90, 3: math.pi**6 / 945}

# Largest number of series terms used in series mode.
MAX_SERIES_TERMS = 5_000_000

GammaSelector = Union[str, Sequence[float], np.ndarray]


def bernoulli_polynomial(order: int, t):
    """Bernoulli polynomial B_order(t) for order in {2, 4, 6}."""
    t = np.asarray(t, dtype=float)
    if order == 2:
        return t * t - t + 1.0 / 6.0
    if order == 4:
        t2 = t * t
        return t2 * t2 - 2.0 * t2 * t + t2 - 1.0 / 30.0
    if order == 6:
        t2 = t * t
        return t2 * t2 * t2 - 3.0 * t2 * t2 * t + 2.5 * t2 * t2 - 0.5 * t2 + 1.0 / 42.0
    raise ParameterError(f"no closed form for B_{order}")


def cosine_series(t, s: int):
    """sum_{m >= 1} cos(2 pi m t) / m^(2s) for integer s in {1, 2, 3}.

    Uses the Bernoulli identity on the fractional part of ``t``.
    """
    t = np.asarray(t, dtype=float)
    frac = t - np.floor(t)
    scale = (-1.0) ** (s - 1) * (2.0 * math.pi) ** (2 * s) / (2.0 * math.factorial(2 * s))
    return scale * bernoulli_polynomial(2 * s, frac)


def _check_domain(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("points must lie in [0, 1]")
    return x


@dataclass(frozen=True)
class SpectralModel:
    """Periodic Sobolev space of order ``s`` with the uniform measure on [0, 1].

    Integer ``s`` in {1, 2, 3} uses exact closed forms. Any other real
    ``s > 1/2`` falls back to a truncated cosine series whose neglected tail
    is bounded by ``series_tol``.
    """

    s: float = 2
    series_tol: float = 1e-10
    _integer: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.s > 0.5):
            raise ParameterError("smoothness order s must exceed 1/2")
        integer = float(self.s).is_integer() and int(self.s) in _ZETA_EVEN
        object.__setattr__(self, "_integer", integer)
        if integer:
            object.__setattr__(self, "s", int(self.s))

    @property
    def closed_form(self) -> bool:
        return self._integer

    @property
    def trace(self) -> float:
        """Sum of all eigenvalues, 1 + zeta(2s)."""
        if self._integer:
            return 1.0 + _ZETA_EVEN[self.s]
        return 1.0 + float(special.zeta(2.0 * self.s))

    # -- enumeration ---------------------------------------------------

    @staticmethod
    def frequency_parity(m: int) -> tuple[int, str]:
        """Map an index to ``(frequency, 'const' | 'cos' | 'sin')``."""
        if m < 1:
            raise IndexOutOfRangeError(f"eigen-index must be >= 1, got {m}")
        if m == 1:
            return 0, "const"
        return m // 2, ("cos" if m % 2 == 0 else "sin")

    def eigenvalue(self, m: int) -> float:
        freq, _ = self.frequency_parity(m)
        if freq == 0:
            return 1.0
        return 0.5 * float(freq) ** (-2.0 * self.s)

    def eigenvalues(self, count: int) -> np.ndarray:
        """The first ``count`` eigenvalues as an array."""
        if count < 0:
            raise IndexOutOfRangeError("count must be non-negative")
        m = np.arange(1, count + 1)
        freq = (m // 2).astype(float)
        out = np.ones(count)
        nz = freq > 0
        out[nz] = 0.5 * freq[nz] ** (-2.0 * self.s)
        return out

    def eigenfunction_eval(self, m: int, x):
        freq, kind = self.frequency_parity(m)
        x = _check_domain(x)
        if kind == "const":
            out = np.ones_like(x)
        elif kind == "cos":
            out = SQRT2 * np.cos(2.0 * math.pi * freq * x)
        else:
            out = SQRT2 * np.sin(2.0 * math.pi * freq * x)
        return float(out) if out.ndim == 0 else out

    def features(self, x, count: int) -> np.ndarray:
        """Feature matrix with entry ``[m-1, i] = phi_m(x_i)``, shape (count, len(x))."""
        x = np.atleast_1d(_check_domain(x))
        return _features_unchecked(x, count)

    # -- kernels --------------------------------------------------------

    def kernel_eval(self, x, y):
        """Exact k_s(x, y); broadcasts over array arguments."""
        x = _check_domain(x)
        y = _check_domain(y)
        t = x - y
        if self._integer:
            out = 1.0 + cosine_series(t, self.s)
        else:
            out = 1.0 + self._series(t)
        return float(out) if np.ndim(out) == 0 else out

    def kernel_matrix(self, x, y=None) -> np.ndarray:
        """Gram matrix ``[k(x_i, y_j)]``."""
        x = np.atleast_1d(_check_domain(x))
        y = x if y is None else np.atleast_1d(_check_domain(y))
        return np.asarray(self.kernel_eval(x[:, None], y[None, :]), dtype=float)

    def series_terms(self) -> int:
        """Number of cosine terms needed so the neglected tail is below ``series_tol``."""
        p = 2.0 * self.s
        # sum_{m > M} m^-p <= M^(1-p) / (p - 1)
        terms = math.ceil((self.series_tol * (p - 1.0)) ** (-1.0 / (p - 1.0)))
        if terms > MAX_SERIES_TERMS:
            raise ParameterError(
                f"series mode needs {terms} terms for s={self.s}, tol={self.series_tol}"
            )
        return max(terms, 1)

    def _series(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1)
        total = np.zeros_like(flat)
        terms = self.series_terms()
        chunk = max(1, 2_000_000 // max(flat.size, 1))
        for start in range(1, terms + 1, chunk):
            m = np.arange(start, min(start + chunk, terms + 1), dtype=float)
            total += np.cos(2.0 * math.pi * np.outer(flat, m)) @ m ** (-2.0 * self.s)
        return total.reshape(t.shape)

    def resolve_gamma(self, gamma: GammaSelector, count: int) -> np.ndarray:
        """Turn a selector ('unit', 'mercer' or explicit sequence) into ``count`` weights."""
        if isinstance(gamma, str):
            if gamma == "unit":
                return np.ones(count)
            if gamma == "mercer":
                return self.eigenvalues(count)
            raise ParameterError(f"unknown gamma selector {gamma!r}")
        g = np.asarray(gamma, dtype=float).reshape(-1)
        if g.size < count:
            raise ParameterError(f"explicit gamma has {g.size} entries, need {count}")
        g = g[:count]
        if not np.all(np.isfinite(g)) or np.any(g <= 0.0):
            raise ParameterError("gamma entries must be finite and positive")
        return g

    def truncated_kernel_eval(self, x, y, M: int, gamma: GammaSelector = "mercer"):
        """sum_{m <= M} gamma_m phi_m(x) phi_m(y)."""
        if M < 1:
            raise IndexOutOfRangeError("truncation M must be >= 1")
        g = self.resolve_gamma(gamma, M)
        fx = self.features(x, M)
        fy = self.features(y, M)
        out = np.einsum("m,mi,mi->i", g, fx, fy)
        return float(out[0]) if np.ndim(x) == 0 and np.ndim(y) == 0 else out

    def truncated_kernel_matrix(self, x, M: int, gamma: GammaSelector = "mercer") -> np.ndarray:
        g = self.resolve_gamma(gamma, M)
        feats = self.features(x, M)
        return feats.T @ (g[:, None] * feats)

    def tail_sum(self, N: int) -> float:
        """r_N = sum_{m >= N+1} sigma_m.

        Summed directly through the Hurwitz zeta function, so large N does not
        lose digits to ``trace - head`` cancellation.
        """
        if N < 0:
            raise IndexOutOfRangeError("N must be non-negative")
        if N == 0:
            return self.trace
        p = 2.0 * self.s
        J = N // 2
        # frequencies above J contribute both halves of j^-p
        tail = float(special.zeta(p, J + 1))
        if N % 2 == 0:
            tail += 0.5 * float(J) ** (-p)
        return tail


def _features_unchecked(x: np.ndarray, count: int) -> np.ndarray:
    out = np.empty((count, x.size))
    if count == 0:
        return out
    out[0] = 1.0
    nfreq = count // 2
    if nfreq:
        arg = 2.0 * math.pi * np.outer(np.arange(1, nfreq + 1), x)
        out[1::2][:nfreq] = SQRT2 * np.cos(arg)
        nsin = (count - 1) // 2
        out[2::2][:nsin] = SQRT2 * np.sin(arg[:nsin])
    return out
