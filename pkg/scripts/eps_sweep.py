"""Rigidity-probe defects of perturbed spheres as the perturbation shrinks."""

import argparse

from minkowski_lab.immersion import perturbed_sphere
from minkowski_lab.rigidity import alexandrov_probe, epsilon_sweep, koh_probe, strictly_increasing

AMBIENTS = {"R3": 1.0, "S3": 0.7, "H3": 1.0}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", default="0.005,0.01,0.02,0.05,0.1,0.2")
    ap.add_argument("--l", type=int, default=2, help="degree of the zonal bump")
    args = ap.parse_args()
    eps = [float(e) for e in args.eps.split(",")]
    probes = {
        "koh": koh_probe,
        "alex_r r^2 k=1": lambda imm: alexandrov_probe(imm, "r^2", 1, "alex_r"),
        "alex2 k=2 l=1": lambda imm: alexandrov_probe(imm, "1", 2, "alex2", l=1),
    }
    for amb, R in AMBIENTS.items():
        for name, probe in probes.items():
            rows = epsilon_sweep(lambda e: perturbed_sphere(e, ambient=amb, R=R, l=args.l), eps, probe)
            hyp = [r["hypothesis_defect"] for r in rows]
            umb = [r["umbilicity_defect"] for r in rows]
            print(f"{amb} {name}")
            for r in rows:
                ratio = r["hypothesis_defect"] / r["eps"]
                print(f"  eps={r['eps']:<7g} hyp={r['hypothesis_defect']:.4e} umb={r['umbilicity_defect']:.4e} "
                      f"hyp/eps={ratio:.3f}")
            print(f"  increasing: hyp {strictly_increasing(hyp)}, umb {strictly_increasing(umb)}")


if __name__ == "__main__":
    main()
