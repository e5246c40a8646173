"""Average target SINR against the number of jammers for all three schemes.

A smaller run than the full acceptance sweep (5 seeds instead of 10).  It
writes the per-run table, the per-cell summary and an SVG of the curves, which
is the same thing as

    uavjam compare --m-values 1,2,3,4 --k 3 --num-seeds 5 --out <dir>
    uavjam plot <dir>/sweep_summary.csv --out <dir>

Run:  python demos/sinr_vs_uav_count.py [outdir]
"""

import sys

from uavjam.cli import main as cli


def main(outdir="demo_out/sweep"):
    code = cli(["compare", "--m-values", "1,2,3,4", "--k", "3", "--num-seeds", "5", "--out", outdir])
    if code == 0:
        code = cli(["plot", f"{outdir}/sweep_summary.csv", "--out", outdir])
    with open(f"{outdir}/sweep_summary.csv") as fh:
        print(fh.read())
    return code


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
