"""Worst-case integration error in the periodic Sobolev RKHS, plus exact identities.

For weights ``w`` on nodes ``x`` the squared worst-case error of integrating
against ``g`` is

    ||mu_g - sum_i w_i k(x_i, .)||_F^2
        = ||mu_g||_F^2 - 2 mu_g(x)^T w + w^T K(x) w,

with ``mu_g = sum_m sigma_m <g, phi_m> phi_m`` the kernel embedding of ``g``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .coefficients import CoefficientVector
from .dpp import NodeSet
from .errors import ConsistencyError, ParameterError, PreconditionError
from .linalg import lu_factor, lu_solve
from .spectral import SpectralModel, _check_domain, _features_unchecked

__all__ = [
    "WceReport",
    "embedding_eval",
    "embedding_norm_squared",
    "wce_squared",
    "error_decomposition",
    "tau_matrix",
    "cross_term",
]

NEGATIVE_FLOOR = -1e-9


def embedding_eval(model: SpectralModel, g: CoefficientVector, x):
    """mu_g(x) = sum_m sigma_m c_m phi_m(x)."""
    x_arr = np.atleast_1d(_check_domain(x))
    m = g.coeffs.size
    if m == 0:
        out = np.zeros(x_arr.size)
    else:
        out = (model.eigenvalues(m) * g.coeffs) @ _features_unchecked(x_arr, m)
    return float(out[0]) if np.ndim(x) == 0 else out


def embedding_norm_squared(model: SpectralModel, g: CoefficientVector) -> float:
    c = g.coeffs
    return float(model.eigenvalues(c.size) @ (c * c))


@dataclass(frozen=True)
class WceReport:
    wce_squared: float
    embedding_norm_squared: float
    cross_term: float
    quad_form: float
    decomposition_value: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


def wce_squared(
    model: SpectralModel,
    nodes: NodeSet,
    weights,
    g: CoefficientVector,
    *,
    with_decomposition: bool = False,
) -> WceReport:
    """Squared worst-case error of the rule ``(nodes, weights)`` for target ``g``.

    ``weights`` may be a :class:`~kbiq.quadrature.WeightVector` or a plain array.
    """
    w = np.asarray(getattr(weights, "weights", weights), dtype=float)
    if w.size != nodes.n:
        raise ParameterError(f"{w.size} weights for {nodes.n} nodes")
    norm2 = embedding_norm_squared(model, g)
    mu = np.atleast_1d(embedding_eval(model, g, nodes.points))
    cross = float(mu @ w)
    K = model.kernel_matrix(nodes.points)
    quad = float(w @ K @ w)
    total = norm2 - 2.0 * cross + quad
    if total < NEGATIVE_FLOOR * max(1.0, norm2 + quad):
        raise ConsistencyError(f"negative squared error {total:.3e}")
    decomp = None
    if with_decomposition:
        decomp = error_decomposition(model, nodes, g)
    return WceReport(total, norm2, cross, quad, decomp)


def _ez_solution(nodes: NodeSet, eps: np.ndarray) -> np.ndarray:
    return lu_solve(lu_factor(nodes.feature_matrix), eps)


def error_decomposition(model: SpectralModel, nodes: NodeSet, g: CoefficientVector) -> float:
    """``v^T (K(x) - K_N(x)) v`` with ``v = Phi_N(x)^{-1} eps``.

    Equals the squared worst-case error of the EZ rule when ``g`` lies in the
    span of the first N eigenfunctions.
    """
    n = nodes.n
    if g.support > n:
        raise PreconditionError(f"g has coefficients beyond index N={n}")
    eps = g.padded(n)
    v = _ez_solution(nodes, eps)
    K = model.kernel_matrix(nodes.points)
    feats = nodes.feature_matrix
    K_trunc = feats.T @ (model.eigenvalues(n)[:, None] * feats)
    return float(v @ (K - K_trunc) @ v)


def tau_matrix(model: SpectralModel, nodes: NodeSet) -> np.ndarray:
    """``tau[n, n'] = sqrt(sigma_n sigma_n') phi_n(x)^T K_N(x)^{-1} phi_n'(x)``."""
    n = nodes.n
    feats = nodes.feature_matrix
    root = np.sqrt(model.eigenvalues(n))
    K_trunc = feats.T @ (root[:, None] ** 2 * feats)
    scaled = root[:, None] * feats  # row n holds sqrt(sigma_n) phi_n(x)
    sol = lu_solve(lu_factor(K_trunc), scaled.T)
    return scaled @ sol


def cross_term(
    model: SpectralModel,
    nodes: NodeSet,
    eps,
    eps_tilde,
    m: int,
) -> float:
    """``eps^T Phi^{-T} phi_m(x) phi_m(x)^T Phi^{-1} eps_tilde`` for one configuration, m > N."""
    n = nodes.n
    if m <= n:
        raise ParameterError(f"index m={m} must exceed N={n}")
    e1 = _as_length(eps, n)
    e2 = _as_length(eps_tilde, n)
    f = lu_factor(nodes.feature_matrix)
    phi_m = _features_unchecked(nodes.points, m)[m - 1]
    return float((phi_m @ lu_solve(f, e1)) * (phi_m @ lu_solve(f, e2)))


def _as_length(eps, n: int) -> np.ndarray:
    if isinstance(eps, CoefficientVector):
        if eps.support > n:
            raise ParameterError(f"vector has entries beyond index N={n}")
        return eps.padded(n)
    arr = np.asarray(eps, dtype=float).reshape(-1)
    if arr.size > n and np.any(arr[n:]):
        raise ParameterError(f"vector has entries beyond index N={n}")
    out = np.zeros(n)
    out[: min(n, arr.size)] = arr[:n]
    return out
