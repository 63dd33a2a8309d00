"""Rate curves: mean squared worst-case error against N for EZQ, OKQ and KBIQ.

Writes one CSV and one SVG per (s, g) pair into the output directory. Every
rule is evaluated on the same DPP node sets.

    python3 scripts/figure1.py --out results/ --trials 1000
"""

import argparse
import os
import time

from kbiq.harness import ExperimentConfig, run_rule_comparison, series_csv
from kbiq.svg import loglog_svg

RULES = ("ezq", "okq", "kbiq")


def run_panel(s, g, n_list, trials, seed, workers, out_dir):
    cfg = ExperimentConfig(s=s, g_spec=g, n_list=n_list, trials=trials, master_seed=seed,
                           gamma="mercer", m_factor=2.0)
    results = run_rule_comparison(cfg, RULES, workers=workers)
    stem = os.path.join(out_dir, f"rates_s{s}_{g}")
    with open(stem + ".csv", "w", newline="") as fh:
        fh.write(series_csv(list(results.values())))
    first = results["ezq"].series
    curves = {f"{r.upper()} (slope {res.series.slope:.2f})": (res.series.ns, res.series.means)
              for r, res in results.items()}
    refs = {"r_N": (first.ns, first.ref_rN), "sigma_N+1": (first.ns, first.ref_sigmaN1)}
    with open(stem + ".svg", "w") as fh:
        fh.write(loglog_svg(curves, refs, title=f"s={s}, g={g}, {trials} trials"))
    return results


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results")
    p.add_argument("--s", default="2,3")
    p.add_argument("--g", default="e1,e10,e20")
    p.add_argument("--n", default="5,10,20,40,80")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    os.makedirs(args.out, exist_ok=True)
    n_list = tuple(int(n) for n in args.n.split(","))
    for s in (int(v) for v in args.s.split(",")):
        for g in args.g.split(","):
            start = time.perf_counter()
            results = run_panel(s, g, n_list, args.trials, args.seed, args.workers, args.out)
            slopes = "  ".join(f"{r}={res.series.slope:+.2f}" for r, res in results.items())
            ref = results["ezq"].series
            print(f"s={s} g={g:<4} {slopes}  r_N={ref.ref_rN_slope:+.2f} "
                  f"sigma_N+1={ref.ref_sigmaN1_slope:+.2f}  ({time.perf_counter() - start:.0f}s)")


if __name__ == "__main__":
    main()
