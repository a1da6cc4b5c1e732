"""Frame count versus object speed for adaptive and fixed-window conversion.

Prints one CSV row per speed. With adaptive cutting the count should grow in
proportion to speed; a fixed window gives the same count at every speed.
"""

import argparse
import csv
import sys

from atsltd.nzge import DEFAULT_INTERVAL, CalibrationSet, calibrate_interval
from atsltd.surface import convert_atsltd, convert_fixed_time_window
from atsltd.synth import generate, square_scene


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--speeds", default="15,30,45,60,90,120", help="comma-separated px/s")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--window-ms", type=float, default=9.0, help="fixed window for the comparison column")
    ap.add_argument("--calibrate-speed", type=float, default=60.0,
                    help="speed whose 4-px fixed windows provide the calibrated interval")
    args = ap.parse_args()

    ref, _ = generate(square_scene(speed=args.calibrate_speed, seed=args.seed))
    windows = convert_fixed_time_window(ref, int(4 / args.calibrate_speed * 1e6))
    calibrated = calibrate_interval(CalibrationSet([f.nzge_at_cut for f in windows if f.nzge_at_cut]))

    out = csv.writer(sys.stdout)
    out.writerow(["speed", "events", "frames_default", "frames_calibrated", "frames_fixed"])
    for v in (float(s) for s in args.speeds.split(",")):
        ev, _ = generate(square_scene(speed=v, seed=args.seed))
        out.writerow([
            v, len(ev),
            len(convert_atsltd(ev, interval=DEFAULT_INTERVAL)),
            len(convert_atsltd(ev, interval=calibrated)),
            len(convert_fixed_time_window(ev, int(args.window_ms * 1000))),
        ])


if __name__ == "__main__":
    main()
