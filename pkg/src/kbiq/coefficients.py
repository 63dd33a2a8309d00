"""Functions represented by finitely many Mercer coefficients."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .spectral import _check_domain, _features_unchecked

__all__ = ["CoefficientVector", "parse_g"]

_TERM = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
        (?:(?P<coef>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*\*\s*)?
        e(?P<idx>\d+)\s*""",
    re.VERBOSE,
)


@dataclass(frozen=True)
class CoefficientVector:
    """``g = sum_m coeffs[m-1] * phi_m``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if not np.all(np.isfinite(c)):
            raise ParameterError("coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def basis(cls, k: int, scale: float = 1.0) -> "CoefficientVector":
        if k < 1:
            raise ParameterError("basis index must be >= 1")
        c = np.zeros(k)
        c[k - 1] = scale
        return cls(c)

    @classmethod
    def zero(cls) -> "CoefficientVector":
        return cls(np.zeros(0))

    @classmethod
    def parse(cls, expr: str) -> "CoefficientVector":
        return parse_g(expr)

    @property
    def support(self) -> int:
        """Largest index with a non-zero coefficient (0 for the zero function)."""
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) + 1 if nz.size else 0

    def padded(self, length: int) -> np.ndarray:
        """First ``length`` coefficients, zero-filled."""
        out = np.zeros(length)
        k = min(length, self.coeffs.size)
        out[:k] = self.coeffs[:k]
        return out

    def norm_squared(self) -> float:
        return float(self.coeffs @ self.coeffs)

    def mass_above(self, n: int) -> float:
        tail = self.coeffs[n:]
        return float(tail @ tail)

    def projected(self, n: int) -> "CoefficientVector":
        return CoefficientVector(self.coeffs[:n])

    def evaluate(self, x) -> np.ndarray:
        x = np.atleast_1d(_check_domain(x))
        if self.coeffs.size == 0:
            return np.zeros(x.size)
        return self.coeffs @ _features_unchecked(x, self.coeffs.size)

    def __add__(self, other: "CoefficientVector") -> "CoefficientVector":
        m = max(self.coeffs.size, other.coeffs.size)
        return CoefficientVector(self.padded(m) + other.padded(m))

    def __mul__(self, scale: float) -> "CoefficientVector":
        return CoefficientVector(self.coeffs * float(scale))

    __rmul__ = __mul__

    def to_expr(self) -> str:
        terms = [f"{float(c)!r}*e{k + 1}" for k, c in enumerate(self.coeffs) if c != 0.0]
        return "+".join(terms).replace("+-", "-") if terms else "0"


def parse_g(expr: str) -> CoefficientVector:
    """Parse ``'e1'``, ``'0.5*e3+2*e10'``, ``'e1-e2'`` or ``'0'``."""
    text = expr.strip()
    if text in {"0", "0.0", ""}:
        return CoefficientVector.zero()
    pos = 0
    terms: dict[int, float] = {}
    while pos < len(text):
        m = _TERM.match(text, pos)
        if m is None or m.end() == pos:
            raise ParameterError(f"cannot parse g expression {expr!r} at position {pos}")
        if pos > 0 and m.group("sign") is None:
            raise ParameterError(f"missing '+' or '-' before term in {expr!r}")
        k = int(m.group("idx"))
        if k < 1:
            raise ParameterError("basis index must be >= 1")
        c = float(m.group("coef")) if m.group("coef") else 1.0
        if m.group("sign") == "-":
            c = -c
        terms[k] = terms.get(k, 0.0) + c
        pos = m.end()
    coeffs = np.zeros(max(terms))
    for k, c in terms.items():
        coeffs[k - 1] = c
    return CoefficientVector(coeffs)
