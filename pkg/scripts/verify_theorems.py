"""Run the Monte-Carlo expectation checks and print one line per z-test.

    python3 scripts/verify_theorems.py --trials 20000
"""

import argparse
import sys

from kbiq import parse_g
from kbiq.harness import ExperimentConfig, mean_report, run_experiment, verify_covariance, \
    verify_theorem1, verify_theorem5


def tail_check(g, n, trials, seed):
    res = run_experiment(ExperimentConfig(g_spec=g, n_list=(n,), trials=trials, master_seed=seed))
    model = res.config.model()
    coeffs = parse_g(g)
    target = coeffs.projected(n).norm_squared() * model.tail_sum(n)
    vals = [r.wce_squared for r in res.records if not r.failed]
    return mean_report(f"EZQ mean wce^2 g={g} N={n}", vals, target)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()
    t, seed, w = args.trials, args.seed, args.workers

    reports = [
        tail_check("e1", 5, t, seed),
        tail_check("0.6*e1+0.8*e3", 5, t, seed),
        *verify_theorem1(2, 5, parse_g("e6+2*e8"), 1, t, seed, workers=w),
        verify_covariance(2, 5, parse_g("e7"), 1, 2, t, seed, workers=w),
        verify_covariance(2, 5, parse_g("e6+e9"), 1, 3, t, seed, workers=w),
        *verify_theorem5(2, 5, "e1", "e1", [6, 10], t, seed, workers=w),
        *verify_theorem5(2, 5, "e1", "e2", [6, 10], t, seed, workers=w),
        *verify_theorem5(2, 5, "e1+e2", "e2", [9], t, seed, workers=w),
    ]
    for r in reports:
        print(r.line())
    sys.exit(0 if all(r.passed for r in reports) else 3)


if __name__ == "__main__":
    main()
