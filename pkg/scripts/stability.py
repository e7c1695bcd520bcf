"""Decay of a cosine perturbation of the uniform state against exp(-(k pi)^2 tau)."""
import argparse

import numpy as np

from radplasma.model import Scenario, constant, monomial, neumann
from radplasma.solver import stability_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=float, default=2.0, help="A = u^m")
    ap.add_argument("--Y0", type=float, default=1.0)
    ap.add_argument("--mode", type=int, default=1)
    args = ap.parse_args()
    sc = Scenario(constant(1.0), monomial(args.m), constant(1.0), (0.0, 1.0), (0.0, 1.0),
                  neumann(0.0), neumann(0.0))
    r = stability_experiment(sc, Y0=args.Y0, modes=(args.mode,))
    print("tau,norm_ratio,predicted")
    for i in np.linspace(0, r.tau.size - 1, 21).astype(int):
        print(f"{r.tau[i]:.4f},{r.norms[i] / r.norms[0]:.6e},{r.predicted[i]:.6e}")
    print(r.to_dict())


if __name__ == "__main__":
    main()
