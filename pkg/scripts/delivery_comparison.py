"""Result delivery time to k clients: simultaneous multicast vs one-by-one sending."""
import argparse
import random

from gridminer.aggregator import completion_time, multicast
from gridminer.topology import ClientSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-clients", type=int, default=16)
    ap.add_argument("--max-latency", type=int, default=9)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    print(f"{'k':>3} {'multicast':>10} {'sequential':>11} {'speedup':>8}")
    for k in range(1, args.max_clients + 1):
        multi = seq = 0
        for _ in range(args.trials):
            clients = [ClientSpec(i, rng.randint(1, args.max_latency)) for i in range(k)]
            multi += completion_time(multicast(None, clients, 0))
            seq += completion_time(multicast(None, clients, 0, sequential=True))
        print(f"{k:>3} {multi / args.trials:>10.2f} {seq / args.trials:>11.2f} {seq / multi:>8.2f}")


if __name__ == "__main__":
    main()
