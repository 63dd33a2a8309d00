"""Monte-Carlo engine: repeated DPP trials, rate series and statistical checks.

Every trial draws its nodes from its own stream, keyed by
``(master_seed, N, trial_index)``, so results do not depend on how trials are
split across worker processes, and adding N values or trials leaves the
existing streams untouched.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .coefficients import CoefficientVector, parse_g
from .dpp import RngStream, mix64, sample_projection_dpp
from .errors import KbiqError, ParameterError
from .quadrature import ez_rule_weights, weights_for_rule
from .spectral import SpectralModel
from .wce import cross_term, wce_squared

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "RateSeries",
    "ExperimentResult",
    "StatReport",
    "trial_stream",
    "map_trials",
    "run_experiment",
    "run_rule_comparison",
    "fit_loglog_slope",
    "verify_theorem1",
    "verify_covariance",
    "verify_theorem5",
    "CSV_HEADER",
    "DUMP_HEADER",
]

RULES = ("ezq", "okq", "kbiq")
CSV_HEADER = ["rule", "s", "g", "N", "trials", "mean_wce2", "stderr", "ref_rN", "ref_sigmaN1", "failed_trials"]
DUMP_HEADER = ["N", "trial", "wce2", "cond_phi", "resamples"]
Z_THRESHOLD = 3.0
DETERMINISTIC_SE = 1e-12


@dataclass(frozen=True)
class ExperimentConfig:
    s: float = 2
    rule: str = "ezq"
    gamma: str = "mercer"
    m_factor: float = 2.0
    g_spec: str = "e1"
    n_list: tuple = (5, 10, 20, 40, 80)
    trials: int = 1000
    master_seed: int = 0
    out_path: Optional[str] = None
    jitter: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if float(self.s).is_integer():
            object.__setattr__(self, "s", int(self.s))
        object.__setattr__(self, "rule", self.rule.lower())
        if self.rule not in RULES:
            raise ParameterError(f"unknown rule {self.rule!r}")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ParameterError("n_list must be non-empty with every N >= 1")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ParameterError("n_list must be strictly ascending")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.rule == "kbiq" and self.m_factor < 1:
            raise ParameterError("m_factor must be >= 1 for kbiq")
        parse_g(self.g_spec)

    @property
    def g(self) -> CoefficientVector:
        return parse_g(self.g_spec)

    def model(self) -> SpectralModel:
        return SpectralModel(self.s)


@dataclass(frozen=True)
class TrialRecord:
    n: int
    trial_index: int
    seed_stream: int
    wce_squared: float
    condition_phi: float
    resample_count: int
    failed: bool = False


@dataclass
class RateSeries:
    rule: str
    ns: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    counts: np.ndarray
    failed: np.ndarray
    ref_rN: np.ndarray
    ref_sigmaN1: np.ndarray
    slope: float = math.nan
    intercept: float = math.nan
    residual: float = math.nan
    ref_rN_slope: float = math.nan
    ref_sigmaN1_slope: float = math.nan


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    series: RateSeries
    records: list = field(default_factory=list)

    def csv_text(self) -> str:
        return series_csv([self])

    def dump_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(DUMP_HEADER)
        for r in self.records:
            w.writerow([r.n, r.trial_index, _fmt(r.wce_squared), _fmt(r.condition_phi), r.resample_count])
        return buf.getvalue()


def _fmt(v: float) -> str:
    return repr(float(v))


def trial_stream(master_seed: int, n: int, trial_index: int) -> RngStream:
    return RngStream(master_seed, mix64(master_seed, n, trial_index))


# -- parallel trial mapping --------------------------------------------------

def _run_chunk(func, args, n, seed, indices):
    return [func(n, t, trial_stream(seed, n, t), *args) for t in indices]


def map_trials(
    func: Callable,
    args: tuple,
    n: int,
    trials: int,
    master_seed: int,
    workers: int = 1,
) -> list:
    """Evaluate ``func(n, t, stream, *args)`` for t in range(trials), in trial order.

    ``func`` must be a module-level function when ``workers > 1``.
    """
    if workers <= 1 or trials < 2:
        return _run_chunk(func, args, n, master_seed, range(trials))
    chunks = np.array_split(np.arange(trials), min(trials, 4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_chunk, func, args, n, master_seed, [int(t) for t in c])
            for c in chunks if c.size
        ]
        out = []
        for fut in futures:
            out.extend(fut.result())
    return out


# -- experiments -------------------------------------------------------------

def _experiment_trial(n, t, stream, s, rules, g_spec, gamma, m_factor, jitter):
    model = SpectralModel(s)
    g = parse_g(g_spec)
    try:
        nodes = sample_projection_dpp(model, n, stream)
    except KbiqError:
        return [TrialRecord(n, t, stream.stream_id, math.nan, math.inf, -1, True) for _ in rules]
    out = []
    for rule in rules:
        try:
            w = weights_for_rule(model, nodes, g, rule, gamma=gamma, m_factor=m_factor, jitter=jitter)
            value = wce_squared(model, nodes, w, g).wce_squared
            out.append(TrialRecord(n, t, stream.stream_id, value, nodes.condition, nodes.resample_count))
        except KbiqError:
            out.append(TrialRecord(n, t, stream.stream_id, math.nan, nodes.condition, nodes.resample_count, True))
    return out


def _aggregate(rule: str, model: SpectralModel, ns, records_by_n) -> RateSeries:
    means, ses, counts, failed = [], [], [], []
    for n in ns:
        recs = sorted(records_by_n[n], key=lambda r: r.trial_index)
        vals = np.array([r.wce_squared for r in recs if not r.failed])
        failed.append(sum(r.failed for r in recs))
        counts.append(vals.size)
        means.append(math.fsum(vals) / vals.size if vals.size else math.nan)
        ses.append(float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan)
    ns_arr = np.array(ns, dtype=int)
    ref_r = np.array([model.tail_sum(n) for n in ns])
    ref_sig = np.array([model.eigenvalue(n + 1) for n in ns])
    series = RateSeries(rule, ns_arr, np.array(means), np.array(ses), np.array(counts),
                        np.array(failed), ref_r, ref_sig)
    if len(ns) >= 2:
        if np.all(series.means > 0):
            series.slope, series.intercept, series.residual = fit_loglog_slope(ns_arr, series.means)
        series.ref_rN_slope = fit_loglog_slope(ns_arr, ref_r)[0]
        series.ref_sigmaN1_slope = fit_loglog_slope(ns_arr, ref_sig)[0]
    return series


def run_rule_comparison(
    cfg: ExperimentConfig, rules: Sequence[str], workers: int = 1
) -> dict:
    """Run several rules on the same node samples; returns ``{rule: ExperimentResult}``."""
    rules = tuple(r.lower() for r in rules)
    for r in rules:
        if r not in RULES:
            raise ParameterError(f"unknown rule {r!r}")
    model = cfg.model()
    per_rule = {r: {} for r in rules}
    for n in cfg.n_list:
        rows = map_trials(
            _experiment_trial,
            (cfg.s, rules, cfg.g_spec, cfg.gamma, cfg.m_factor, cfg.jitter),
            n, cfg.trials, cfg.master_seed, workers,
        )
        for r_idx, r in enumerate(rules):
            per_rule[r][n] = [row[r_idx] for row in rows]
    out = {}
    for r in rules:
        rcfg = ExperimentConfig(**{**cfg.__dict__, "rule": r})
        records = [rec for n in cfg.n_list for rec in sorted(per_rule[r][n], key=lambda x: x.trial_index)]
        out[r] = ExperimentResult(rcfg, _aggregate(r, model, cfg.n_list, per_rule[r]), records)
    return out


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Mean squared worst-case error per N for ``cfg.rule``, over ``cfg.trials`` DPP samples.

    Writes the CSV to ``cfg.out_path`` when set.
    """
    result = run_rule_comparison(cfg, [cfg.rule], workers)[cfg.rule]
    if cfg.out_path:
        with open(cfg.out_path, "w", newline="") as fh:
            fh.write(result.csv_text())
    return result


def series_csv(results: Sequence[ExperimentResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for res in results:
        cfg, ser = res.config, res.series
        for i, n in enumerate(ser.ns):
            w.writerow([
                ser.rule, cfg.s, cfg.g_spec, int(n), cfg.trials,
                _fmt(ser.means[i]), _fmt(ser.stderrs[i]),
                _fmt(ser.ref_rN[i]), _fmt(ser.ref_sigmaN1[i]), int(ser.failed[i]),
            ])
    return buf.getvalue()


def fit_loglog_slope(ns, means) -> tuple[float, float, float]:
    """Least-squares line through ``(ln N, ln mean)``: (slope, intercept, rms residual)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.asarray(means, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise ParameterError("need at least two (N, mean) pairs")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise ParameterError("means must be positive and finite")
    y = np.log(y)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


# -- statistical verification --------------------------------------------------

@dataclass(frozen=True)
class StatReport:
    name: str
    estimate: float
    target: float
    stderr: float
    samples: int
    threshold: float = Z_THRESHOLD

    @property
    def z(self) -> float:
        diff = self.estimate - self.target
        # a degenerate (constant) sample is judged exactly, not by roundoff-sized SEs
        if self.stderr > DETERMINISTIC_SE:
            return diff / self.stderr
        return 0.0 if abs(diff) <= 1e-9 else math.copysign(math.inf, diff)

    @property
    def passed(self) -> bool:
        return abs(self.z) <= self.threshold

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: estimate={self.estimate:.6g} target={self.target:.6g} "
                f"se={self.stderr:.3g} z={self.z:+.2f} (n={self.samples})")


def mean_report(name: str, values, target: float, threshold: float = Z_THRESHOLD) -> StatReport:
    v = np.asarray(values, dtype=float)
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return StatReport(name, float(np.mean(v)), target, se, v.size, threshold)


def variance_report(name: str, values, target: float, threshold: float = Z_THRESHOLD) -> StatReport:
    """Sample variance with the large-sample SE sqrt((m4 - s^4) / T)."""
    v = np.asarray(values, dtype=float)
    var = float(np.var(v, ddof=1))
    c = v - v.mean()
    m4 = float(np.mean(c**4))
    se = math.sqrt(max(m4 - var**2, 0.0) / v.size)
    return StatReport(name, var, target, se, v.size, threshold)


def covariance_report(name: str, a, b, threshold: float = Z_THRESHOLD) -> StatReport:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    prod = (a - a.mean()) * (b - b.mean())
    cov = float(prod.sum() / (a.size - 1))
    se = float(np.std(prod, ddof=1) / math.sqrt(a.size))
    return StatReport(name, cov, 0.0, se, a.size, threshold)


def _ez_values_trial(n, t, stream, s, f_coeffs, indices):
    nodes = sample_projection_dpp(SpectralModel(s), n, stream)
    values = CoefficientVector(f_coeffs).evaluate(nodes.points)
    return [float(ez_rule_weights(nodes, k).weights @ values) for k in indices]


def ez_estimates(s, n, f: CoefficientVector, indices, trials, seed, workers=1) -> np.ndarray:
    """Matrix of ``I^{EZ,k}(f)`` values, one row per trial, one column per index."""
    rows = map_trials(_ez_values_trial, (s, f.coeffs, tuple(indices)), n, trials, seed, workers)
    return np.array(rows, dtype=float).reshape(trials, len(indices))


def verify_theorem1(
    s: float, n: int, f: CoefficientVector, index: int, trials: int, seed: int,
    workers: int = 1, threshold: float = Z_THRESHOLD,
) -> list[StatReport]:
    """Mean and variance of the n-th EZ estimator against ``<f, phi_n>`` and ``sum_{m>N} <f, phi_m>^2``."""
    if not 1 <= index <= n:
        raise ParameterError(f"rule index must lie in 1..{n}")
    vals = ez_estimates(s, n, f, [index], trials, seed, workers)[:, 0]
    mean_target = float(f.padded(index)[index - 1])
    var_target = f.mass_above(n)
    return [
        mean_report(f"theorem1 mean I^EZ,{index}", vals, mean_target, threshold),
        variance_report(f"theorem1 variance I^EZ,{index}", vals, var_target, threshold),
    ]


def verify_covariance(
    s: float, n: int, f: CoefficientVector, index: int, index2: int, trials: int, seed: int,
    workers: int = 1, threshold: float = Z_THRESHOLD,
) -> StatReport:
    """Covariance of two distinct EZ estimators, which should vanish."""
    if index == index2:
        raise ParameterError("covariance check needs two distinct rule indices")
    for k in (index, index2):
        if not 1 <= k <= n:
            raise ParameterError(f"rule index must lie in 1..{n}")
    vals = ez_estimates(s, n, f, [index, index2], trials, seed, workers)
    return covariance_report(f"covariance I^EZ,{index} vs I^EZ,{index2}", vals[:, 0], vals[:, 1], threshold)


def _cross_trial(n, t, stream, s, eps, eps_tilde, ms):
    model = SpectralModel(s)
    nodes = sample_projection_dpp(model, n, stream)
    return [cross_term(model, nodes, eps, eps_tilde, m) for m in ms]


def verify_theorem5(
    s: float, n: int, eps, eps_tilde, ms, trials: int, seed: int,
    workers: int = 1, threshold: float = Z_THRESHOLD,
) -> list[StatReport]:
    """Mean of the cross term for each m > N against ``sum_n eps_n eps~_n``."""
    ms = [int(m) for m in np.atleast_1d(ms)]
    if any(m <= n for m in ms):
        raise ParameterError(f"every m must exceed N={n}")
    e1 = _vector(eps, n)
    e2 = _vector(eps_tilde, n)
    target = float(e1 @ e2)
    vals = np.array(map_trials(_cross_trial, (s, e1, e2, tuple(ms)), n, trials, seed, workers))
    return [mean_report(f"theorem5 m={m}", vals[:, j], target, threshold) for j, m in enumerate(ms)]


def _vector(eps, n: int) -> np.ndarray:
    if isinstance(eps, str):
        eps = parse_g(eps)
    if isinstance(eps, CoefficientVector):
        if eps.support > n:
            raise ParameterError(f"vector has entries beyond index N={n}")
        return eps.padded(n)
    arr = np.zeros(n)
    e = np.asarray(eps, dtype=float).reshape(-1)
    arr[: min(n, e.size)] = e[:n]
    return arr
