"""Write the named fixtures as solid/trajectory JSON files for the CLI."""
import argparse
import json
import os

from sweepkernel import fixtures as fx
from sweepkernel.brep import SolidBrep

CASES = dict(fx.SIMPLE_SWEEPS, non_simple_cube=fx.non_simple_cube, lsi_sphere=fx.lsi_sphere,
             singular_edge=fx.singular_edge, vertex_crossing=fx.vertex_crossing,
             two_component_edge=fx.two_component_edge)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for name, make in CASES.items():
        solid, traj = make()
        solid.dump(os.path.join(args.out, f"{name}.solid.json"))
        with open(os.path.join(args.out, f"{name}.traj.json"), "w") as fh:
            json.dump(traj.to_dict(), fh, indent=1)
    SolidBrep.from_dict(fx.l_prism_dict()).dump(os.path.join(args.out, "l_prism.solid.json"))
    with open(os.path.join(args.out, "open_cube.solid.json"), "w") as fh:
        json.dump(fx.box_dict(drop_face="f_pz"), fh, indent=1)
    print(f"wrote {len(CASES)} sweeps to {args.out}")


if __name__ == "__main__":
    main()
