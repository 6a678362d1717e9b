"""Numerical lab for Hsiung-Minkowski integral identities, inequality chains, rigidity probes and eigenvalue bounds."""

from .ambient import AmbientSpace, VectorFieldSpec, conformal_field, default_field, parse_space
from .curvature import CurvaturePacket, MultiNormalPacket, epsilon_oracle, multi_normal, newton_batch, packet
from .identities import (ChainReport, IdentityReport, chain, closure, divergence_residual, hm_identity,
                         hm_multi_normal, pseudo_sphere_vector_identity, weighted_volume)
from .immersion import (BUILTINS, Immersion, builtin, ds_slice_graph, ellipsoid, frames, geodesic_sphere_H,
                        geodesic_sphere_S, perturbed_sphere, product_circle_sphere_R5, product_torus_R4, radial_graph,
                        round_sphere, torus_of_revolution)
from .quadrature import QuadratureConfig, area, integrate, refine
from .rigidity import RigidityProbe, alexandrov_probe, koh_probe
from .spectral import EigenReport, SurfaceMesh, garay_check, lambda1, steklov_p1, triangulate

__all__ = [
    "AmbientSpace", "VectorFieldSpec", "conformal_field", "default_field", "parse_space",
    "CurvaturePacket", "MultiNormalPacket", "epsilon_oracle", "multi_normal", "newton_batch", "packet",
    "ChainReport", "IdentityReport", "chain", "closure", "divergence_residual", "hm_identity",
    "hm_multi_normal", "pseudo_sphere_vector_identity", "weighted_volume",
    "BUILTINS", "Immersion", "builtin", "frames", "ds_slice_graph", "ellipsoid", "geodesic_sphere_H",
    "geodesic_sphere_S", "perturbed_sphere", "product_circle_sphere_R5", "product_torus_R4", "radial_graph",
    "round_sphere", "torus_of_revolution",
    "QuadratureConfig", "area", "integrate", "refine",
    "RigidityProbe", "alexandrov_probe", "koh_probe",
    "EigenReport", "SurfaceMesh", "garay_check", "lambda1", "steklov_p1", "triangulate",
]
