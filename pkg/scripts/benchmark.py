"""Throughput of the conversion loop, repeated over several seeds."""

import argparse
import json

from atsltd.bench import BenchmarkConfig, run_benchmark


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", default="7,8,9")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--cadence", type=int, default=200)
    args = ap.parse_args()
    rows = []
    for seed in (int(s) for s in args.seeds.split(",")):
        res = run_benchmark(BenchmarkConfig(seed=seed, repeats=args.repeats, cadence=args.cadence))
        rows.append({"seed": seed, **res.to_dict()})
        print(f"seed {seed}: {res.events} events, {res.frames} frames, "
              f"loop {res.loop_rate:.3e} ev/s, end to end {res.end_to_end_rate:.3e} ev/s", flush=True)
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
