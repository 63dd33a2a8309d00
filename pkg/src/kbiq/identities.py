"""Deterministic identity checks over random projection-DPP configurations.

Each configuration is a DPP sample with N in ``n_range`` and smoothness in
``s_values``; g is a random unit-norm element of span(phi_1..phi_N).
Checked per configuration:

* ``tau``: the tau matrix equals the identity;
* ``decomposition``: EZ worst-case error by the three-term expansion equals
  ``v^T K_N^perp v`` (relative to 1 + wce^2);
* ``cross``: ``mu_g(x)^T w_EZ = ||mu_g||_F^2``;
* ``gamma``: KBIQ with M = N gives the EZ weights for random positive gamma;
* ``exactness``: the n-th EZ rule integrates phi_j to delta_{jn} for j, n <= N.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientVector
from .dpp import RngStream, mix64, sample_projection_dpp
from .linalg import condition_estimate, lu_factor
from .quadrature import KbiqParams, ez_weights, kbiq_weights
from .spectral import SpectralModel
from .wce import embedding_norm_squared, error_decomposition, tau_matrix, wce_squared

TOLERANCES = {
    "tau": 1e-7,
    "decomposition": 1e-8,
    "cross": 1e-8,
    "gamma": 1e-8,
    "exactness": 1e-9,
}
COND_RESAMPLE = 1e9


@dataclass
class IdentityReport:
    configs: int
    max_deviation: dict = field(default_factory=dict)
    resampled: int = 0
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.max_deviation[k] <= tol for k, tol in TOLERANCES.items())

    def lines(self) -> list[str]:
        out = []
        for key, tol in TOLERANCES.items():
            dev = self.max_deviation[key]
            out.append(f"{'PASS' if dev <= tol else 'FAIL'} {key}: max deviation {dev:.3e} (tol {tol:.0e})")
        out.append(f"configs={self.configs} resampled={self.resampled} seconds={self.seconds:.2f}")
        return out


def check_config(model: SpectralModel, nodes, g: CoefficientVector, gammas) -> dict:
    """Deviations of every identity for one configuration."""
    n = nodes.n
    dev = {}
    dev["tau"] = float(np.abs(tau_matrix(model, nodes) - np.eye(n)).max())

    w = ez_weights(nodes, g)
    report = wce_squared(model, nodes, w, g)
    decomp = error_decomposition(model, nodes, g)
    dev["decomposition"] = abs(report.wce_squared - decomp) / (1.0 + abs(report.wce_squared))
    dev["cross"] = abs(report.cross_term - embedding_norm_squared(model, g))

    scale = max(float(np.abs(w.weights).max()), 1e-300)
    worst = 0.0
    for gamma in [np.ones(n), *gammas]:
        wg = kbiq_weights(model, nodes, g, KbiqParams(gamma, n))
        worst = max(worst, float(np.abs(wg.weights - w.weights).max()) / scale)
    dev["gamma"] = worst

    worst = 0.0
    for k in range(1, n + 1):
        wk = ez_weights(nodes, CoefficientVector.basis(k)).weights
        integrals = nodes.feature_matrix @ wk  # entry j: sum_i w_i phi_j(x_i)
        target = np.zeros(n)
        target[k - 1] = 1.0
        worst = max(worst, float(np.abs(integrals - target).max()))
    dev["exactness"] = worst
    return dev


def run_identity_suite(
    configs: int = 200,
    seed: int = 20240601,
    n_range: tuple = (2, 12),
    s_values: tuple = (2, 3),
    gammas_per_config: int = 5,
) -> IdentityReport:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    models = {s: SpectralModel(s) for s in s_values}
    report = IdentityReport(configs, {k: 0.0 for k in TOLERANCES})
    for c in range(configs):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        s = s_values[c % len(s_values)]
        model = models[s]
        attempt = 0
        while True:
            nodes = sample_projection_dpp(model, n, RngStream(seed, mix64(c, attempt)))
            feats = nodes.feature_matrix
            k_trunc = feats.T @ (model.eigenvalues(n)[:, None] * feats)
            if max(nodes.condition, condition_estimate(lu_factor(k_trunc, strict=False))) <= COND_RESAMPLE:
                break
            attempt += 1
            report.resampled += 1
        coeffs = rng.standard_normal(n)
        g = CoefficientVector(coeffs / np.linalg.norm(coeffs))
        gammas = [np.exp(rng.uniform(np.log(0.1), np.log(10.0), n)) for _ in range(gammas_per_config)]
        for key, value in check_config(model, nodes, g, gammas).items():
            report.max_deviation[key] = max(report.max_deviation[key], value)
    report.seconds = time.perf_counter() - start
    return report
