"""Simulated makespan for N equal scan tasks on P identical gridlets vs ceil(N/P) * duration."""
import argparse
import math

from gridminer.simulation import GridSimulation, JobSpec, Workload
from gridminer.topology import ClientSpec, DataTree, Grid, GridletSpec, Record, TREE, partition_dataset


def run(n_tasks, n_gridlets, rate, records):
    grid = Grid({i: GridletSpec(i, rate) for i in range(n_gridlets)}, {0: ClientSpec(0)})
    recs = [Record(i, TREE, DataTree("r", i)) for i in range(n_tasks * records)]
    parts = partition_dataset(recs, n_tasks, schema_id="S")
    job = JobSpec(0, 0, "path_query", {"query": "/r", "schema": "S"}, [0], partitions=parts)
    return GridSimulation(grid, Workload([job])).run()["jobs"][0]["makespan"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-tasks", type=int, default=12)
    ap.add_argument("--max-gridlets", type=int, default=4)
    ap.add_argument("--rate", type=int, default=2)
    ap.add_argument("--records", type=int, default=5)
    args = ap.parse_args()
    d = math.ceil(args.records / args.rate)
    print(f"task duration = {d} ticks")
    print("N  " + "".join(f"P={p:<8}" for p in range(1, args.max_gridlets + 1)))
    for n in range(1, args.max_tasks + 1):
        cells = []
        for p in range(1, args.max_gridlets + 1):
            got = run(n, p, args.rate, args.records)
            mark = "" if got == math.ceil(n / p) * d else "!"
            cells.append(f"{got}{mark}".ljust(10))
        print(f"{n:<3}" + "".join(cells))


if __name__ == "__main__":
    main()
