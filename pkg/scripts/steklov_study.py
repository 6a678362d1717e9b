"""First Steklov eigenvalue of planar star domains against the maximal boundary curvature."""

import argparse

from minkowski_lab.spectral import steklov_p1

DOMAINS = [
    {"shape": "disk", "R": 1.0},
    {"shape": "disk", "R": 2.0},
    {"shape": "ellipse", "a": 1.2, "b": 1.0},
    {"shape": "ellipse", "a": 1.5, "b": 1.0},
    {"shape": "ellipse", "a": 3.0, "b": 1.0},
    {"shape": "expr", "rho": "1 + 0.05 * cos(3 * t)"},
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--densities", default="64,128,256,512")
    args = ap.parse_args()
    dens = [int(d) for d in args.densities.split(",")]
    for dom in DOMAINS:
        label = ", ".join(f"{k}={v}" for k, v in dom.items())
        print(label)
        for d in dens:
            rep = steklov_p1(dom, density=d)
            print(f"  density={d:<5d} p1={rep.lambda1:.9f} extrapolated={rep.extrapolated:.9f} "
                  f"max sigma_1={rep.bound:.6f} slack={rep.slack:.3e} {rep.verdict}")


if __name__ == "__main__":
    main()
