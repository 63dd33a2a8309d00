"""Command-line entry point (``kbiq``).

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 failed
statistical verification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .coefficients import parse_g
from .dpp import node_set, sample_projection_dpp
from .errors import ConsistencyError, KbiqError, SamplerStallError, SingularMatrixError
from .harness import (
    ExperimentConfig,
    map_trials,
    run_rule_comparison,
    series_csv,
    trial_stream,
    verify_covariance,
    verify_theorem1,
    verify_theorem5,
)
from .identities import run_identity_suite
from .quadrature import weights_for_rule
from .spectral import SpectralModel
from .svg import loglog_svg
from .wce import wce_squared

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_STAT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_n_list(text: str) -> tuple[int, ...]:
    """``'5,10,20'`` or ``'a:b:step'`` (b inclusive)."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            a, b, step = parts
            if step < 1:
                raise ValueError
            return tuple(range(a, b + 1, step))
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise UsageError(f"cannot parse N list {text!r}") from None


def _single_n(text: str) -> int:
    ns = parse_n_list(text)
    if len(ns) != 1:
        raise UsageError("this command takes a single N")
    return ns[0]


def read_nodes_csv(path: str, trial: int | None = None) -> np.ndarray:
    """Read nodes from ``trial,point_index,x`` rows (or a single ``x`` column)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise UsageError(f"no nodes in {path}")
    header = [h.strip() for h in rows[0]]
    body = rows[1:] if "x" in header else rows
    if "x" not in header:
        header = ["trial", "point_index", "x"] if len(rows[0]) == 3 else ["x"]
    xi = header.index("x")
    if "trial" in header:
        ti = header.index("trial")
        trials = [int(r[ti]) for r in body]
        pick = trials[0] if trial is None else trial
        body = [r for r, t in zip(body, trials) if t == pick]
        if "point_index" in header:
            pi = header.index("point_index")
            body.sort(key=lambda r: int(r[pi]))
    pts = np.array([float(r[xi]) for r in body])
    if pts.size == 0:
        raise UsageError("selected trial has no nodes")
    return pts


# -- subcommands ---------------------------------------------------------------

def _obtain_nodes(args, model):
    if args.nodes:
        return node_set(model, read_nodes_csv(args.nodes, args.trial))
    if args.n is None:
        raise UsageError("give --nodes or --n (with --seed)")
    n = _single_n(args.n)
    t = args.trial or 0
    return sample_projection_dpp(model, n, trial_stream(args.seed, n, t))


def _sample_rows(n, t, stream, s):
    nodes = sample_projection_dpp(SpectralModel(s), n, stream)
    return [(t, i, repr(float(x))) for i, x in enumerate(nodes.points)]


def cmd_sample(args, out):
    n = _single_n(args.n)
    rows = map_trials(_sample_rows, (args.s,), n, args.trials, args.seed, args.workers)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "point_index", "x"])
    for trial_rows in rows:
        w.writerows(trial_rows)
    _emit(buf.getvalue(), args.out, out)
    return EXIT_OK


def cmd_weights(args, out):
    model = SpectralModel(args.s)
    nodes = _obtain_nodes(args, model)
    g = parse_g(args.g)
    w = weights_for_rule(model, nodes, g, args.rule, gamma=args.gamma,
                         m_factor=args.m_factor, jitter=args.jitter)
    buf = io.StringIO()
    buf.write(f"# rule={w.rule} s={args.s} g={args.g} N={nodes.n}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["i", "x_i", "w_i"])
    for i, (x, wi) in enumerate(zip(nodes.points, w.weights)):
        wr.writerow([i, repr(float(x)), repr(float(wi))])
    _emit(buf.getvalue(), args.out, out)
    return EXIT_OK


def cmd_wce(args, out):
    model = SpectralModel(args.s)
    nodes = _obtain_nodes(args, model)
    g = parse_g(args.g)
    w = weights_for_rule(model, nodes, g, args.rule, gamma=args.gamma,
                         m_factor=args.m_factor, jitter=args.jitter)
    with_decomp = w.rule == "EZQ" and g.support <= nodes.n
    report = wce_squared(model, nodes, w, g, with_decomposition=with_decomp)
    data = {"rule": w.rule, "N": nodes.n, **report.as_dict()}
    lines = [f"{k}={v}" for k, v in data.items()]
    text = "\n".join(lines) + "\n"
    if args.json:
        text += json.dumps(data) + "\n"
    _emit(text, args.out, out)
    return EXIT_OK


def cmd_check_identities(args, out):
    report = run_identity_suite(configs=args.configs, seed=args.seed)
    out.write("\n".join(report.lines()) + "\n")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_experiment(args, out):
    rules = [r.strip() for r in args.rule.split(",") if r.strip()]
    cfg = ExperimentConfig(
        s=args.s, rule=rules[0], gamma=args.gamma, m_factor=args.m_factor, g_spec=args.g,
        n_list=parse_n_list(args.n), trials=args.trials, master_seed=args.seed,
        out_path=args.out, jitter=args.jitter,
    )
    results = run_rule_comparison(cfg, rules, workers=args.workers)
    _emit(series_csv(list(results.values())), args.out, out)
    if args.dump:
        for rule, res in results.items():
            path = args.dump
            if len(results) > 1:
                root, ext = os.path.splitext(args.dump)
                path = f"{root}.{rule}{ext or '.csv'}"
            with open(path, "w", newline="") as fh:
                fh.write(res.dump_text())
    if args.svg:
        first = next(iter(results.values())).series
        series = {f"{r.upper()} (slope {res.series.slope:.2f})": (res.series.ns, res.series.means)
                  for r, res in results.items()}
        refs = {"r_N": (first.ns, first.ref_rN), "sigma_N+1": (first.ns, first.ref_sigmaN1)}
        with open(args.svg, "w") as fh:
            fh.write(loglog_svg(series, refs, title=f"s={cfg.s}, g={cfg.g_spec}, {cfg.trials} trials"))
    failed = sum(int(res.series.failed.sum()) for res in results.values())
    total = sum(int(res.series.counts.sum() + res.series.failed.sum()) for res in results.values())
    if failed:
        sys.stderr.write(f"warning: {failed} of {total} trials failed\n")
    return EXIT_OK


def cmd_verify(args, out):
    n = _single_n(args.n)
    if args.which == "theorem1":
        reports = verify_theorem1(args.s, n, parse_g(args.f), args.index, args.trials, args.seed,
                                  workers=args.workers, threshold=args.z)
    elif args.which == "covariance":
        reports = [verify_covariance(args.s, n, parse_g(args.f), args.index, args.index2,
                                     args.trials, args.seed, workers=args.workers, threshold=args.z)]
    else:
        ms = parse_n_list(args.m) if args.m else (n + 1,)
        reports = verify_theorem5(args.s, n, parse_g(args.eps), parse_g(args.eps_tilde), ms,
                                  args.trials, args.seed, workers=args.workers, threshold=args.z)
    out.write("\n".join(r.line() for r in reports) + "\n")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_STAT


def _emit(text, path, out):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kbiq", description="Kernel quadrature with projection-DPP nodes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, rule=True):
        sp.add_argument("--s", type=float, default=2, help="Sobolev order (default 2)")
        sp.add_argument("--seed", type=int, default=0)
        if rule:
            sp.add_argument("--rule", default="ezq", help="ezq | okq | kbiq")
            sp.add_argument("--gamma", default="mercer", choices=["unit", "mercer"])
            sp.add_argument("--m-factor", type=float, default=2.0, help="KBIQ uses M = ceil(m_factor * N)")
            sp.add_argument("--g", default="e1", help="target g, e.g. 'e1' or '0.5*e3+2*e10'")
            sp.add_argument("--jitter", type=float, default=0.0, help="diagonal jitter (exploratory only)")

    def node_source(sp):
        sp.add_argument("--nodes", help="CSV of nodes (trial,point_index,x)")
        sp.add_argument("--trial", type=int, default=None, help="trial to read or sample")
        sp.add_argument("--n", help="node count when sampling")
        sp.add_argument("--out")

    sp = sub.add_parser("sample", help="draw DPP node sets as CSV")
    common(sp, rule=False)
    sp.add_argument("--n", required=True)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("weights", help="print quadrature weights")
    common(sp)
    node_source(sp)
    sp.set_defaults(func=cmd_weights)

    sp = sub.add_parser("wce", help="squared worst-case error report")
    common(sp)
    node_source(sp)
    sp.add_argument("--json", action="store_true", help="also print the report as JSON")
    sp.set_defaults(func=cmd_wce)

    sp = sub.add_parser("check-identities", help="run the deterministic identity suite")
    sp.add_argument("--configs", type=int, default=200)
    sp.add_argument("--seed", type=int, default=20240601)
    sp.set_defaults(func=cmd_check_identities)

    sp = sub.add_parser("experiment", help="Monte-Carlo rate experiment")
    common(sp)
    sp.add_argument("--n", default="5,10,20,40,80", help="comma list or a:b:step")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out")
    sp.add_argument("--svg")
    sp.add_argument("--dump", help="per-trial CSV")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("verify", help="statistical checks of the expectation identities")
    sp.add_argument("which", choices=["theorem1", "theorem5", "covariance"])
    sp.add_argument("--s", type=float, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n", default="5")
    sp.add_argument("--trials", type=int, default=20000)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--f", default="e6+2*e8", help="integrand for theorem1/covariance")
    sp.add_argument("--index", type=int, default=1)
    sp.add_argument("--index2", type=int, default=2)
    sp.add_argument("--eps", default="e1")
    sp.add_argument("--eps-tilde", default="e1")
    sp.add_argument("--m", default=None, help="indices m > N for theorem5")
    sp.add_argument("--z", type=float, default=3.0, help="pass threshold on |z|")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except (UsageError, KbiqError) as exc:
        if isinstance(exc, (SingularMatrixError, SamplerStallError, ConsistencyError)):
            sys.stderr.write(f"numerical failure: {exc}\n")
            return EXIT_NUMERIC
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
