"""Distance evaluations per k-NN query for each pruning strategy, by dimension.

Random standard-normal corpora.  Both strategies are exact; the question is
how much of the corpus they still have to touch.

    python scripts/bench_pruning.py --size 2000 --queries 50 --k 10
"""

import argparse

import numpy as np

from corrmetric.index import IndexConfig, brute_force_knn, build


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=2000)
    ap.add_argument("--queries", type=int, default=50)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--dims", type=int, nargs="+", default=[3, 4, 6, 8, 12, 20])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--check", action="store_true", help="also compare against brute force")
    args = ap.parse_args()

    print(f"{'dim':>4} {'relaxed-k':>10} {'proj-angle':>11}  (mean distance evaluations of {args.size})")
    for n in args.dims:
        rng = np.random.default_rng([args.seed, n])
        corpus = list(rng.standard_normal((args.size, n)))
        queries = rng.standard_normal((args.queries, n))
        means = []
        for strategy in ("relaxed-k", "projective-angle"):
            index = build(corpus, IndexConfig(strategy=strategy, seed=args.seed))
            evals = []
            for q in queries:
                res = index.knn(q, args.k)
                evals.append(res.distance_evaluations)
                if args.check:
                    assert set(res.ids) == set(brute_force_knn(corpus, q, args.k).ids)
            means.append(np.mean(evals))
        print(f"{n:>4} {means[0]:>10.1f} {means[1]:>11.1f}")


if __name__ == "__main__":
    main()
