"""Random search for two-step chains started at a Dirac mass whose end law is barely biased.

A chain ``delta_0 -> nu1 -> nu2`` is built from extremal simple steps (top
atom mass exactly beta). Glued, it is always ``beta1*beta2``-biased; a chain
where ``nu2`` is not ``(beta1*beta2 + gap)``-biased shows the product cannot
be raised, and with ``beta1 == beta2`` it also shows the order is not
transitive. Hits are written in the fixture format used by the tests.

    python scripts/search_witnesses.py --trials 2000 --out witnesses.json
"""

import argparse
import json
import sys

import numpy as np

from biased_order import io as bio
from biased_order.coupling import DiscreteCoupling, glue, rows_biased
from biased_order.measure import DiscreteMeasure
from biased_order.order import max_bias

BETAS = (0.3, 0.4, 0.5, 0.6, 0.7)


def extremal_step(rng, xs, ms, beta):
    """Split every atom into a two-point law with top mass beta."""
    cols, rows = [], []
    for x, p in zip(xs, ms):
        d = float(rng.choice([0.5, 1.0, 2.0]))
        lo = x - beta * d / (1 - beta)
        rows.append(((lo, p * (1 - beta)), (x + d, p * beta)))
        cols += [lo, x + d]
    ys = np.unique(np.round(cols, 12))
    w = np.zeros((len(xs), ys.size))
    for i, row in enumerate(rows):
        for y, m in row:
            w[i, np.searchsorted(ys, round(y, 12))] += m
    return DiscreteCoupling(np.asarray(xs, dtype=float), ys, w)


def search(trials, seed, gap):
    rng = np.random.default_rng(seed)
    found = {}
    for _ in range(trials):
        b1, b2 = (float(v) for v in rng.choice(BETAS, 2))
        pi1 = extremal_step(rng, [0.0], [1.0], b1)
        mid = pi1.col_marginal()
        pi2 = extremal_step(rng, mid.xs, mid.ms, b2)
        nu2 = glue(pi1, pi2).col_marginal()
        if not rows_biased(glue(pi1, pi2), b1 * b2).holds:
            raise AssertionError("glued chain lost its product bias")
        mb = max_bias(nu2, 0.0)
        kind = "sharp" if b1 != b2 else "sharp_nontransitive"
        if mb < b1 * b2 + gap and kind not in found:
            found[kind] = {
                "name": kind, "beta1": b1, "beta2": b2, "max_bias_nu2": mb,
                "nu0": bio.measure_to_dict(DiscreteMeasure.dirac(0.0)),
                "nu1": bio.measure_to_dict(mid), "nu2": bio.measure_to_dict(nu2),
                "pi1": bio.coupling_to_dict(pi1), "pi2": bio.coupling_to_dict(pi2),
            }
        if len(found) == 2:
            break
    return list(found.values())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--gap", type=float, default=0.05, help="required shortfall below beta1*beta2 + gap")
    ap.add_argument("--out", help="JSON output (default stdout)")
    args = ap.parse_args(argv)
    chains = search(args.trials, args.seed, args.gap)
    text = bio.dumps({"chains": chains})
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"{len(chains)} witness chain(s) found", file=sys.stderr)
    return 0 if chains else 1


if __name__ == "__main__":
    sys.exit(main())
