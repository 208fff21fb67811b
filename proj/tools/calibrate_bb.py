#!/usr/bin/env python3
"""Fit the bad-block count shape against field conditional medians.

The pool generator draws unmarked BB counts from an analytic pmf, so the
fit works on that pmf directly: no sampling, one evaluation per candidate.
Shape parameters are shared per technology, the escalation factor is per
model.  --check runs `ssdfi validate-pool` on the result afterwards.

    tools/calibrate_bb.py SLC --iters 150
    tools/calibrate_bb.py MLC --iters 150 --check build/ssdfi
"""

import argparse
import subprocess
import sys

import numpy as np
from scipy.optimize import differential_evolution
from scipy.stats import norm

BLOCKS = 16384  # blocks behind the 5% mark, as in validate-pool
CAP = int(0.05 * BLOCKS)
MARKED_MAX = 8000  # keep marked drives well inside the element

# name: (drives with BB, marked drives, median, threshold, mean) per 10,000
MODELS = {
    "MLC-A": (3110, 373, 2, 2, 772),
    "MLC-B": (7930, 433, 3, 2, 578),
    "MLC-C": (3070, 440, 2, 2, 555),
    "MLC-D": (3240, 280, 3, 2, 312),
    "SLC-A": (3900, 253, 2, 4, 584),
    "SLC-B": (6460, 153, 2, 4, 570),
}
# median total count among drives with at least k = 2..5 BBs
TARGETS = {"MLC": [143, 155, 159, 183], "SLC": [5, 20, 43, 77]}

E = np.arange(0, BLOCKS + 1)


def excess_pmf(T, F, spread, share, ratio, stall):
    lo = np.where(E == 0, -np.inf, np.log(np.maximum(E, 1) / (T * F)) / spread)
    ln = norm.cdf(np.log((E + 1) / (T * F)) / spread) - norm.cdf(lo)
    p = (1 - share) * (1 - ratio) * ratio**E + share * ln
    p = p[: BLOCKS - T + 1]
    p = (1 - stall) * p / p.sum()
    p[0] += stall
    return p


def count_pmf(mu, sigma, T, excess):
    c = norm.cdf((np.arange(1, T) + 0.5 - mu) / sigma)
    w = np.diff(np.concatenate([[0.0], c]))
    p = np.zeros(BLOCKS + 1)
    p[1:T] = w
    p[T:] = (1 - (c[-1] if T > 1 else 0.0)) * excess
    return p


def evaluate(name, sigma, F, spread, share, ratio, stall):
    """Conditional medians, marked-drive target mean, median margin."""
    n_bb, n_m, med, T, mean = MODELS[name]
    n_u = n_bb - n_m
    ex = excess_pmf(T, F, spread, share, ratio, stall)
    # mu puts the pool-wide CDF mid-bin at the median, as the generator does
    a, b = -30.0, 30.0
    for _ in range(60):
        mu = 0.5 * (a + b)
        cu = np.cumsum(count_pmf(mu, sigma, T, ex))
        if n_u * 0.5 * (cu[med - 1] + cu[med]) / n_bb > 0.5:
            a = mu
        else:
            b = mu
    p = count_pmf(0.5 * (a + b), sigma, T, ex)
    # drives with count >= c; marked drives sit above every median here
    G = np.cumsum((n_u * p)[::-1])[::-1] + n_m
    meds = []
    for k in (2, 3, 4, 5):
        half = G[k] / 2
        d = G[k] - G[k + 1 :]
        i = int(np.argmax(d >= half))
        prev = d[i - 1] if i > 0 else 0.0
        meds.append(k + i - 0.5 + (half - prev) / max(d[i] - prev, 1e-12))
    target = (n_bb * mean - n_u * float((p * E).sum())) / n_m
    cu = np.cumsum(p)
    margin = min(0.5 - n_u * cu[med - 1] / n_bb, n_u * cu[med] / n_bb - 0.5)
    return np.array(meds), target, margin


def unpack(x):
    s = lambda v: 1 / (1 + np.exp(-v))
    return np.exp(x[0]), np.exp(x[1]), s(x[2]), s(x[3]), s(x[4]), np.exp(x[5:])


def objective(x, tech):
    sigma, spread, share, ratio, stall, Fs = unpack(x)
    tgt = np.array(TARGETS[tech], float)
    worst, penalty = 0.0, 0.0
    for name, F in zip(names(tech), Fs):
        meds, target, margin = evaluate(name, sigma, F, spread, share, ratio, stall)
        worst = max(worst, float(np.max(np.abs(meds / tgt - 1))))
        # marked drives must stay above the 5% mark and below MARKED_MAX
        penalty += max(0, CAP + 1 - target) / CAP + max(0, target - MARKED_MAX) / MARKED_MAX
        penalty += 10 * max(0, 0.01 - margin)
    return worst + penalty


def names(tech):
    return [n for n in MODELS if n.startswith(tech)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("tech", choices=["MLC", "SLC"])
    ap.add_argument("--iters", type=int, default=150)
    ap.add_argument("--seed", type=int, default=2)
    ap.add_argument("--check", metavar="SSDFI", help="run validate-pool with this binary")
    ap.add_argument("--profiles", default="data/profiles.csv")
    args = ap.parse_args()

    nF = len(names(args.tech))
    bounds = [(np.log(0.2), np.log(15)), (np.log(0.05), np.log(5)), (-6, 6), (-6, 4), (-6, 1)]
    bounds += [(0, np.log(3000))] * nF
    res = differential_evolution(
        objective, bounds, args=(args.tech,), seed=args.seed, maxiter=args.iters,
        popsize=12, tol=1e-8, polish=False,
        callback=lambda xk, convergence=None: print(
            "worst", round(objective(xk, args.tech), 4), flush=True))
    sigma, spread, share, ratio, stall, Fs = unpack(res.x)
    print(f"\n{args.tech} shape: sigma={sigma:.5g} spread={spread:.5g} stall={stall:.5g} "
          f"share={share:.5g} tail_ratio={ratio:.5g}")
    for name, F in zip(names(args.tech), Fs):
        meds, target, _ = evaluate(name, sigma, F, spread, share, ratio, stall)
        print(f"{name}: factor={F:.5g} medians={np.round(meds, 1).tolist()} "
              f"marked mean={target:.0f}")

    if args.check:
        out = subprocess.run([args.check, "validate-pool", "--profiles", args.profiles,
                              "--model", ",".join(names(args.tech))],
                             capture_output=True, text=True)
        sys.stdout.write(out.stdout + out.stderr)
        return out.returncode
    return 0


if __name__ == "__main__":
    sys.exit(main())
