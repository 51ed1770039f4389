"""Render PPM frames of a corner-driven sandpile, one per checkpoint.

    python scripts/render_frames.py --n 128 --checkpoints 1048576,4194304,16777216 --out frames/
"""
import argparse
import json

import numpy as np

from sandpile_lab import sandpile
from sandpile_lab.grid import GridShape, parse_vertex


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--site", type=parse_vertex, default=(1, 1))
    ap.add_argument("--checkpoints", default=",".join(str(2**k) for k in (20, 22, 24)))
    ap.add_argument("--out", default="frames")
    args = ap.parse_args()

    shape = GridShape(args.n, 2)
    checkpoints = [int(c) for c in args.checkpoints.split(",")]
    paths, odos = sandpile.render_frames(shape, args.site, checkpoints, args.out)
    rows = []
    for c, p, o in zip(checkpoints, paths, odos):
        rows.append({"grains": c, "frame": str(p), "toppled_sites": int(o.support().sum()), "topplings": o.total()})
    monotone = all(np.all(a.support() <= b.support()) for a, b in zip(odos, odos[1:]))
    print(json.dumps({"n": args.n, "frames": rows, "support_monotone": monotone}, indent=1))


if __name__ == "__main__":
    main()
