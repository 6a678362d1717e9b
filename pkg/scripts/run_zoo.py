"""Identity residuals over the surface zoo: one row per (surface, identity, k, weight)."""

import argparse
import time

from minkowski_lab.identities import closure, hm_identity, pseudo_sphere_vector_identity
from minkowski_lab.immersion import (
    ds_slice_graph, ellipsoid, geodesic_sphere_H, geodesic_sphere_S, perturbed_sphere, torus_of_revolution,
)

ZOO = [
    (ellipsoid((1.0, 1.2, 1.5)), ["1", "r^2", "exp(u)"]),
    (torus_of_revolution(2.0, 1.0), ["1", "r^2"]),
    (geodesic_sphere_S(0.8), ["1", "cos(r)"]),
    (perturbed_sphere(0.1, ambient="S3", R=0.7), ["1", "r"]),
    (geodesic_sphere_H(1.0), ["1", "cosh(r)"]),
    (perturbed_sphere(0.1, ambient="H3"), ["1", "r^2"]),
    (ds_slice_graph(0.4, bumps=[{"type": "zonal", "l": 2, "amp": 0.05}]), ["1", "r"]),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--no-refine", action="store_true", help="skip the refinement ladder")
    args = ap.parse_args()
    print(f"{'surface':<22s} {'identity':<16s} {'k':>2s} {'f':<10s} {'rel. residual':>14s}  verdict")
    t0 = time.perf_counter()
    for imm, weights in ZOO:
        rows = []
        for k in range(imm.m):
            for f in weights:
                rows.append(hm_identity(imm, weight=f, k=k, refine=not args.no_refine))
                if not imm.ambient.is_flat:
                    rows.append(pseudo_sphere_vector_identity(imm, weight=f, k=k, refine=not args.no_refine))
            if imm.ambient.is_flat:
                rows.append(closure(imm, k))
        for rep in rows:
            print(f"{imm.label:<22s} {rep.identity_id:<16s} {rep.k:>2d} {rep.f:<10s} "
                  f"{rep.relative_residual:14.3e}  {rep.verdict}")
    print(f"{time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
