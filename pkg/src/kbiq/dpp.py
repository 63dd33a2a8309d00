"""Exact sampling of the projection DPP with kernel ``sum_{n <= N} phi_n(x) phi_n(y)``.

Points are drawn one at a time from the chain-rule conditionals; each
conditional is sampled by rejection from the uniform proposal, using the
global bound ``sup_x kappa_N(x, x)`` as envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, SamplerStallError, SingularMatrixError
from .linalg import condition_estimate, lu_factor, lu_solve
from .spectral import SpectralModel, _check_domain, _features_unchecked

__all__ = [
    "RngStream",
    "NodeSet",
    "mix64",
    "envelope",
    "sample_projection_dpp",
    "conditional_density",
    "joint_density",
    "node_set",
]

MASK64 = (1 << 64) - 1
MAX_PROPOSALS = 1_000_000
COND_LIMIT = 1e10
MAX_RESAMPLES = 10


def mix64(*values: int) -> int:
    """Fold integers into one 64-bit value with the splitmix64 finalizer."""
    h = 0x9E3779B97F4A7C15
    for v in values:
        h = (h ^ (int(v) & MASK64)) & MASK64
        h = (h + 0x9E3779B97F4A7C15) & MASK64
        h = ((h ^ (h >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        h = ((h ^ (h >> 27)) * 0x94D049BB133111EB) & MASK64
        h ^= h >> 31
    return h


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream id) pair keying a Philox counter-based generator.

    Equal pairs replay the same sequence; distinct stream ids give
    independent streams.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & MASK64)

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, k: int) -> "RngStream":
        return RngStream(self.seed, mix64(self.stream_id, k))


@dataclass(frozen=True)
class NodeSet:
    points: np.ndarray
    feature_matrix: np.ndarray
    seed_used: int = 0
    stream_id: int = 0
    rejection_count: int = 0
    resample_count: int = 0
    condition: float = field(default=math.nan)

    def __post_init__(self):
        self.points.flags.writeable = False
        self.feature_matrix.flags.writeable = False

    @property
    def n(self) -> int:
        return int(self.points.size)


def node_set(model: SpectralModel, points, **meta) -> NodeSet:
    """Wrap user-supplied points, caching the feature matrix and its condition."""
    pts = np.array(np.atleast_1d(_check_domain(points)), dtype=float)
    feats = _features_unchecked(pts, pts.size)
    cond = meta.pop("condition", None)
    if cond is None:
        cond = condition_estimate(lu_factor(feats, strict=False))
    return NodeSet(pts, feats, condition=cond, **meta)


def envelope(n: int) -> int:
    """sup_x kappa_n(x, x): n when the top index closes a cos/sin pair, else n + 1."""
    return n if n % 2 == 1 else n + 1


def _chain_rule_draw(n: int, gen: np.random.Generator, max_proposals: int):
    env = float(envelope(n))
    basis = np.zeros((n, n))
    points = np.empty(n)
    rejected = 0
    for i in range(n):
        remaining = n - i
        batch = max(8, int(math.ceil(2.0 * env / remaining)))
        tried = 0
        while True:
            xs = gen.random(batch)
            us = gen.random(batch)
            feats = _features_unchecked(xs, n)
            resid = np.einsum("ij,ij->j", feats, feats)
            if i:
                proj = basis[:i] @ feats
                resid -= np.einsum("ij,ij->j", proj, proj)
            hits = np.flatnonzero(us * env < resid)
            if hits.size:
                j = int(hits[0])
                rejected += j
                break
            tried += batch
            rejected += batch
            if tried > max_proposals:
                raise SamplerStallError(f"no acceptance after {tried} proposals at point {i + 1}")
        points[i] = xs[j]
        v = feats[:, j].copy()
        # two Gram-Schmidt passes keep the basis orthonormal to working precision
        for _ in range(2):
            if i:
                v -= basis[:i].T @ (basis[:i] @ v)
        basis[i] = v / np.linalg.norm(v)
    return points, rejected


def sample_projection_dpp(
    model: SpectralModel,
    n: int,
    rng: RngStream,
    *,
    max_proposals: int = MAX_PROPOSALS,
    cond_limit: float = COND_LIMIT,
    max_resamples: int = MAX_RESAMPLES,
) -> NodeSet:
    """Draw ``n`` nodes with joint density ``det^2 Phi_n(x) / n!`` on [0, 1]^n.

    The eigenfunctions are fixed by the periodic Sobolev enumeration; ``model``
    only matters for bookkeeping. When the sampled feature matrix has a
    condition estimate above ``cond_limit`` the whole configuration is redrawn
    from a fresh substream, at most ``max_resamples`` times.
    """
    if n < 1:
        raise ParameterError("need at least one node")
    stream = rng
    total_rejected = 0
    for attempt in range(max_resamples + 1):
        points, rejected = _chain_rule_draw(n, stream.generator(), max_proposals)
        total_rejected += rejected
        feats = _features_unchecked(points, n)
        cond = condition_estimate(lu_factor(feats, strict=False))
        if cond <= cond_limit:
            return NodeSet(
                points,
                feats,
                seed_used=rng.seed,
                stream_id=rng.stream_id,
                rejection_count=total_rejected,
                resample_count=attempt,
                condition=cond,
            )
        stream = rng.substream(attempt + 1)
    raise SingularMatrixError(-1, f"feature matrix ill-conditioned after {max_resamples} resamples")


def conditional_density(model: SpectralModel, n: int, previous, x) -> np.ndarray:
    """Density of the next point given ``previous`` (w.r.t. the uniform measure).

    ``[kappa(x, x) - k(x)^T K^{-1} k(x)] / (n - i)`` with ``K`` the Gram matrix
    of the ``i`` previous points.
    """
    prev = np.atleast_1d(_check_domain(previous)) if np.size(previous) else np.empty(0)
    x = np.atleast_1d(_check_domain(x))
    i = prev.size
    if i >= n:
        raise ParameterError("all points already placed")
    fx = _features_unchecked(x, n)
    diag = np.einsum("ij,ij->j", fx, fx)
    if i == 0:
        return diag / n
    fp = _features_unchecked(prev, n)
    gram = fp.T @ fp
    cross = fp.T @ fx
    sol = lu_solve(lu_factor(gram), cross)
    return (diag - np.einsum("ij,ij->j", cross, sol)) / (n - i)


def joint_density(model: SpectralModel, points) -> float:
    """``det^2 Phi_N(x) / N!``; exactly 0 when the feature matrix is singular."""
    pts = np.atleast_1d(_check_domain(points))
    f = lu_factor(_features_unchecked(pts, pts.size), strict=False)
    if f.singular:
        return 0.0
    return math.exp(2.0 * f.logabsdet - math.lgamma(pts.size + 1))
