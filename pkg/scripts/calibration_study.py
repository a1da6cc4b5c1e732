"""Calibrated NZGE intervals from fixed-window frames of synthetic scenes.

For each speed the window is chosen so the square moves a fixed number of
pixels per frame; the frames' NZGE values are the calibration samples. Compare
the results with the built-in base-10 default interval.
"""

import argparse

from atsltd.nzge import DEFAULT_INTERVAL
from atsltd.surface import calibrate_from_stream
from atsltd.synth import generate, square_scene


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--speeds", default="30,60,120")
    ap.add_argument("--displacement", type=float, default=4.0, help="px moved per calibration frame")
    ap.add_argument("--log-base", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"default (base 10): [{DEFAULT_INTERVAL.alpha:.4f}, {DEFAULT_INTERVAL.beta:.4f}]")
    for v in (float(s) for s in args.speeds.split(",")):
        ev, _ = generate(square_scene(speed=v, seed=args.seed))
        window_us = int(args.displacement / v * 1e6)
        iv, samples = calibrate_from_stream(ev, window_us, log_base=args.log_base)
        print(f"speed {v:6.1f}  window {window_us / 1000:7.2f} ms  n={len(samples):3d}  "
              f"[{iv.alpha:.4f}, {iv.beta:.4f}]")


if __name__ == "__main__":
    main()
