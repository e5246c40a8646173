"""Where does a single jammer sit when its only target is just past the boundary?

The hard lobe only reaches the ground inside a cone of half-angle theta around
boresight.  A UAV flying at altitude h therefore needs a horizontal stand-off of
at least h / tan(theta) before a target can be inside the lobe at all.  With
h = 600 m and theta = 15 degrees that is about 2239 m, so a target at x = 2100
cannot be jammed from the edge x = 1600 and the optimum backs away from it.
Moving the target further out shows the edge placement once the stand-off fits.

Run:  python demos/edge_geometry.py [outdir]
"""

import math
import sys
from pathlib import Path

from uavjam.admm import solve
from uavjam.plotting import plot_deployment, save_svg
from uavjam.scenario import Scenario


def main(outdir="demo_out"):
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    probe = Scenario(num_uavs=1, target_positions=[[2100.0, 800.0, 0.0]], control_center=[3000.0, 800.0, 20.0])
    reach = probe.altitude / math.tan(probe.half_beamwidth)
    print(f"minimum horizontal stand-off for the lobe to touch the ground: {reach:.0f} m")
    print(f"{'target x':>9} {'uav x':>9} {'uav y':>7} {'psi':>7} {'SINR dB':>8}")
    for tx in (2100.0, 3000.0, 3800.0, 4500.0):
        s = probe.replace(target_positions=[[tx, 800.0, 0.0]], control_center=[tx + 900.0, 800.0, 20.0])
        rep = solve(s)
        x, y, _ = rep.deployment.positions[0]
        psi = float(rep.deployment.azimuths[0])
        print(f"{tx:9.0f} {x:9.1f} {y:7.1f} {psi:7.3f} {rep.avg_sinr_db:8.2f}")
        fig, _ = plot_deployment([(0, x, y, psi)], s.half_beamwidth, targets=[(0, tx, 800.0)],
                                 control_center=tuple(s.control_center[:2]), x_max=s.deploy_x_max)
        save_svg(fig, out / f"edge_target_{int(tx)}.svg")
    print(f"figures written to {out}/")


if __name__ == "__main__":
    main(*sys.argv[1:])
