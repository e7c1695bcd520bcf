"""Manufactured-solution study: spatial, temporal and joint observed orders."""
import argparse
import json

from radplasma.solver import convergence_study, spatial_study, standard_manufactured, temporal_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--Ns", type=int, nargs="+", default=[64, 128, 256, 512])
    ap.add_argument("--t-end", type=float, default=0.5)
    args = ap.parse_args()
    sc, um = standard_manufactured(args.t_end)
    out = {
        "spatial": spatial_study(sc, um.u, args.Ns).to_dict(),
        "temporal": temporal_study(sc).to_dict(),
        "joint": convergence_study(sc, um.u, args.Ns).to_dict(),
    }
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
