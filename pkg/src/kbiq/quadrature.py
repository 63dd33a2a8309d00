"""Kernel-based interpolation quadrature weights.

All three rules solve a linear system on the nodes:

* EZ:   Phi_N(x) w = eps, with eps the first N coefficients of g;
* OKQ:  K(x) w = mu_g(x), with the exact kernel;
* KBIQ: kappa^{gamma,M}(x) w = mu_g^{gamma,M}(x), where
  kappa^{gamma,M}(x, y) = sum_{m <= M} gamma_m phi_m(x) phi_m(y).

EZ is KBIQ with M = N (for any gamma) and OKQ is KBIQ with M = inf and
gamma = sigma.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .coefficients import CoefficientVector
from .dpp import NodeSet
from .errors import ParameterError
from .linalg import condition_estimate, lu_factor, lu_solve
from .spectral import GammaSelector, SpectralModel, _features_unchecked
from .wce import embedding_eval

__all__ = [
    "KbiqParams",
    "WeightVector",
    "IllConditionedWarning",
    "ez_weights",
    "ez_rule_weights",
    "okq_weights",
    "kbiq_weights",
    "weights_for_rule",
    "apply_quadrature",
]

ILL_CONDITIONED = 1e12


class IllConditionedWarning(UserWarning):
    pass


@dataclass(frozen=True)
class KbiqParams:
    gamma: GammaSelector = "mercer"
    m: Union[int, float] = math.inf

    def __post_init__(self):
        if isinstance(self.gamma, str):
            if self.gamma not in ("unit", "mercer"):
                raise ParameterError(f"unknown gamma selector {self.gamma!r}")
        else:
            g = np.asarray(self.gamma, dtype=float)
            if g.ndim != 1 or not np.all(np.isfinite(g)) or np.any(g <= 0.0):
                raise ParameterError("gamma entries must be finite and positive")
        if self.m != math.inf:
            if int(self.m) != self.m or self.m < 1:
                raise ParameterError(f"truncation M must be a positive integer or inf, got {self.m}")
        elif not (isinstance(self.gamma, str) and self.gamma == "mercer"):
            raise ParameterError("M = inf requires gamma = 'mercer'")

    def label(self) -> str:
        gamma = self.gamma if isinstance(self.gamma, str) else "explicit"
        m = "inf" if self.m == math.inf else str(int(self.m))
        return f"KBIQ({gamma},{m})"


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    rule: str
    nodes: NodeSet
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.weights.shape != (self.nodes.n,):
            raise ParameterError("weight count does not match node count")
        self.weights.flags.writeable = False

    def __len__(self) -> int:
        return self.weights.size


def ez_weights(nodes: NodeSet, g: CoefficientVector) -> WeightVector:
    """Ermakov-Zolotukhin weights ``Phi_N(x)^{-1} eps``.

    Coefficients of ``g`` past index N are dropped; the dropped squared mass
    is kept in ``meta['discarded_mass']``.
    """
    n = nodes.n
    eps = g.padded(n)
    w = lu_solve(lu_factor(nodes.feature_matrix), eps)
    return WeightVector(w, "EZQ", nodes, {"discarded_mass": g.mass_above(n)})


def ez_rule_weights(nodes: NodeSet, index: int) -> WeightVector:
    """Weights of the n-th EZ rule, i.e. ``Phi_N(x)^{-1} e_n``."""
    if not 1 <= index <= nodes.n:
        raise ParameterError(f"rule index must lie in 1..{nodes.n}")
    return ez_weights(nodes, CoefficientVector.basis(index))


def _solve_with_checks(a: np.ndarray, b: np.ndarray, jitter: float):
    if jitter:
        a = a + jitter * np.eye(a.shape[0])
    f = lu_factor(a)
    cond = condition_estimate(f)
    meta = {"condition": cond}
    if cond > ILL_CONDITIONED:
        meta["warning"] = f"ill-conditioned system (cond ~ {cond:.2e})"
        warnings.warn(meta["warning"], IllConditionedWarning, stacklevel=3)
    return lu_solve(f, b), meta


def okq_weights(
    model: SpectralModel, nodes: NodeSet, g: CoefficientVector, *, jitter: float = 0.0
) -> WeightVector:
    """Optimal kernel quadrature weights ``K(x)^{-1} mu_g(x)``."""
    K = model.kernel_matrix(nodes.points)
    mu = np.atleast_1d(embedding_eval(model, g, nodes.points))
    w, meta = _solve_with_checks(K, mu, jitter)
    return WeightVector(w, "OKQ", nodes, meta)


def kbiq_weights(
    model: SpectralModel,
    nodes: NodeSet,
    g: CoefficientVector,
    params: KbiqParams,
    *,
    jitter: float = 0.0,
) -> WeightVector:
    """Weights ``kappa^{gamma,M}(x)^{-1} mu_g^{gamma,M}(x)``."""
    n = nodes.n
    if params.m == math.inf:
        okq = okq_weights(model, nodes, g, jitter=jitter)
        return WeightVector(okq.weights.copy(), params.label(), nodes, okq.meta)
    M = int(params.m)
    if M < n:
        raise ParameterError(f"truncation M={M} is below the node count N={n}")
    gamma = model.resolve_gamma(params.gamma, M)
    feats = _features_unchecked(nodes.points, M)
    kappa = feats.T @ (gamma[:, None] * feats)
    mu = feats.T @ (gamma * g.padded(M))
    w, meta = _solve_with_checks(kappa, mu, jitter)
    return WeightVector(w, params.label(), nodes, meta)


def weights_for_rule(
    model: SpectralModel,
    nodes: NodeSet,
    g: CoefficientVector,
    rule: str,
    *,
    gamma: GammaSelector = "mercer",
    m_factor: float = 2.0,
    jitter: float = 0.0,
) -> WeightVector:
    """Dispatch on a rule name: ``'ezq'``, ``'okq'`` or ``'kbiq'`` (M = ceil(m_factor N))."""
    rule = rule.lower()
    if rule == "ezq":
        return ez_weights(nodes, g)
    if rule == "okq":
        return okq_weights(model, nodes, g, jitter=jitter)
    if rule == "kbiq":
        if m_factor < 1:
            raise ParameterError("m_factor must be >= 1")
        M = math.inf if math.isinf(m_factor) else int(math.ceil(m_factor * nodes.n - 1e-9))
        return kbiq_weights(model, nodes, g, KbiqParams(gamma, M), jitter=jitter)
    raise ParameterError(f"unknown rule {rule!r}")


def apply_quadrature(
    weights: WeightVector, f: Union[CoefficientVector, Callable[[float], float]]
) -> float:
    """``sum_i w_i f(x_i)`` for a coefficient vector or an opaque evaluator."""
    pts = weights.nodes.points
    if isinstance(f, CoefficientVector):
        values = f.evaluate(pts)
    else:
        values = np.array([f(float(x)) for x in pts], dtype=float)
    return float(weights.weights @ values)
