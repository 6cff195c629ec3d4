"""Sampling-based mining vs exact mining: recall of frequent patterns and how far
below minsup the emitted patterns reach, across sample rates."""
import argparse
import random
from fractions import Fraction

from gridminer.mining.sequences import mine_frequent, mine_frequent_prob
from gridminer.topology import SEQUENCE, Record, partition_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sequences", type=int, default=200)
    ap.add_argument("--minsup", type=Fraction, default=Fraction(3, 10))
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--partitions", type=int, default=4)
    args = ap.parse_args()

    rng = random.Random(2024)
    seqs = [tuple(rng.choices(range(6), weights=[6, 5, 4, 3, 2, 1], k=rng.randint(3, 8)))
            for _ in range(args.sequences)]
    parts = partition_dataset([Record(i, SEQUENCE, s) for i, s in enumerate(seqs)], args.partitions)
    truth = {p.items: p.support for p in mine_frequent(parts, Fraction(1, len(seqs)))}
    frequent = [k for k, v in truth.items() if v >= args.minsup]
    print(f"{len(frequent)} patterns with support >= {args.minsup}")
    print(f"{'rate':>5} {'eps':>7} {'min recall':>10} {'<minsup-eps':>12} {'<minsup-2eps':>13} {'avg out':>8}")
    for rate in ("0.1", "0.25", "0.5", "0.75", "1"):
        hits = dict.fromkeys(frequent, 0)
        below1 = below2 = total = 0
        eps = 0.0
        for seed in range(args.runs):
            out = mine_frequent_prob(parts, args.minsup, Fraction(rate), args.delta, seed)
            eps = out[0].epsilon if out else eps
            emitted = {p.items for p in out}
            total += len(emitted)
            for k in frequent:
                hits[k] += k in emitted
            below1 += sum(truth.get(k, 0) < float(args.minsup) - eps for k in emitted)
            below2 += sum(truth.get(k, 0) < float(args.minsup) - 2 * eps for k in emitted)
        print(f"{rate:>5} {eps:>7.4f} {min(hits.values()):>10} {below1:>12} {below2:>13} {total / args.runs:>8.1f}")


if __name__ == "__main__":
    main()
