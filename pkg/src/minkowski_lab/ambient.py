"""Constant-curvature ambient spaces realised inside R^{p,q}, and their conformal fields.

Pseudo-spheres ``M_{p,q}(mu) = {X : X.X = mu}`` cover the round sphere, the
hyperboloid model of hyperbolic space and de Sitter space with one set of
formulas.  Everything is computed from the embedding; no polar charts.

Sign table for the polar-radial conformal fields (pole ``P``)::

    space        Z0      Y = -mu Z0 + (Z0.X) X     alpha = Z0.X
    sphere       P       sin r d_r                 cos r
    hyperbolic   -P      sinh r d_r                cosh r
    de Sitter    -T      cosh r d_r                sinh r     (T the unit time axis)
    flat         --      r d_r = X - P             1
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jet as J
from .errors import ConfigError, DomainError, SizeError

MEMBERSHIP_TOL = 1e-12


@dataclass(frozen=True)
class AmbientSpace:
    kind: str  # "flat" or "pseudosphere"
    p: int
    q: int = 0
    mu: int = 0
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("flat", "pseudosphere"):
            raise ConfigError(f"unknown ambient kind {self.kind!r}")
        if self.kind == "pseudosphere" and self.mu not in (1, -1):
            raise ConfigError("pseudo-sphere needs mu = +1 or -1")

    @property
    def ambient_dim(self) -> int:
        return self.p + self.q

    @property
    def intrinsic_dim(self) -> int:
        return self.ambient_dim if self.kind == "flat" else self.ambient_dim - 1

    @property
    def K(self) -> float:
        return 0.0 if self.kind == "flat" else float(self.mu)

    @property
    def signs(self) -> np.ndarray:
        return np.array([1.0] * self.p + [-1.0] * self.q)

    @property
    def is_flat(self) -> bool:
        return self.kind == "flat"

    @property
    def family(self) -> str:
        """One of "flat", "sphere", "hyperbolic", "de_sitter", "pseudosphere"."""
        if self.is_flat:
            return "flat"
        if self.q == 0 and self.mu == 1:
            return "sphere"
        if self.q == 1 and self.mu == -1:
            return "hyperbolic"
        if self.q == 1 and self.mu == 1:
            return "de_sitter"
        return "pseudosphere"

    def default_pole(self) -> np.ndarray:
        """Origin for flat spaces, last basis vector otherwise (time axis for dS)."""
        pole = np.zeros(self.ambient_dim)
        if not self.is_flat:
            pole[-1] = 1.0
        return pole

    def contains(self, X, tol: float = MEMBERSHIP_TOL) -> bool:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.ambient_dim:
            return False
        if self.is_flat:
            return True
        return bool(np.all(np.abs(inner(self, X, X) - self.mu) <= tol * max(1.0, np.max(np.abs(X)) ** 2)))

    def __str__(self) -> str:
        return self.name or f"{self.kind}({self.p},{self.q},{self.mu})"


def euclidean(n: int) -> AmbientSpace:
    return AmbientSpace("flat", n, 0, 0, f"R{n}")


def minkowski(p: int, q: int) -> AmbientSpace:
    return AmbientSpace("flat", p, q, 0, f"R{p},{q}")


def sphere(n: int) -> AmbientSpace:
    return AmbientSpace("pseudosphere", n + 1, 0, 1, f"S{n}")


def hyperbolic(n: int) -> AmbientSpace:
    return AmbientSpace("pseudosphere", n, 1, -1, f"H{n}")


def de_sitter(n: int) -> AmbientSpace:
    return AmbientSpace("pseudosphere", n, 1, 1, f"dS{n}")


_NAME_RE = re.compile(r"^(R|S|H|dS)(\d+)(?:,(\d+))?$")


def parse_space(name: str) -> AmbientSpace:
    """Parse "R3", "S3", "H3", "dS3", "R3,1"."""
    m = _NAME_RE.match(name.strip())
    if not m:
        raise ConfigError(f"cannot parse ambient space name {name!r}")
    letter, a, b = m.group(1), int(m.group(2)), m.group(3)
    if a < 1:
        raise ConfigError(f"ambient dimension must be positive: {name!r}")
    if b is not None:
        if letter != "R":
            raise ConfigError(f"only flat spaces take a signature: {name!r}")
        return minkowski(a, int(b))
    return {"R": euclidean, "S": sphere, "H": hyperbolic, "dS": de_sitter}[letter](a)


def inner(space: AmbientSpace, u, v):
    """Signature inner product along the last axis."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = space.ambient_dim
    if u.shape[-1] != n or v.shape[-1] != n:
        raise SizeError(f"vectors must have length {n}, got {u.shape[-1]} and {v.shape[-1]}")
    return np.sum(space.signs * u * v, axis=-1)


def project_tangent(space: AmbientSpace, X, v):
    """Orthogonal projection of ``v`` onto T_X M (identity on flat spaces)."""
    v = np.asarray(v, dtype=float)
    if space.is_flat:
        return v
    X = np.asarray(X, dtype=float)
    return v - space.mu * inner(space, v, X)[..., None] * X


def polar(space: AmbientSpace, pole, X):
    """Geodesic distance from ``pole`` and the unit radial vector at ``X``.

    For de Sitter space ``pole`` is the unit time axis T (T.T = -1) and r is
    the slice parameter with sinh r = -T.X.  The radial vector is ``None``
    where it is undefined (r = 0, antipodes).
    """
    pole = np.asarray(pole, dtype=float)
    X = np.asarray(X, dtype=float)
    fam = space.family
    if fam == "flat":
        diff = X - pole
        r = float(np.sqrt(abs(inner(space, diff, diff))))
        return r, (diff / r if r > 0 else None)
    t = float(inner(space, pole, X))
    if fam == "sphere":
        r = float(np.arccos(np.clip(t, -1.0, 1.0)))
        s = np.sin(r)
        radial = (np.cos(r) * X - pole) / s if s > 1e-14 else None
    elif fam == "hyperbolic":
        if t > 0:
            raise DomainError("point on the other sheet of the hyperboloid")
        r = float(np.arccosh(max(-t, 1.0)))
        s = np.sinh(r)
        radial = (np.cosh(r) * X - pole) / s if s > 1e-14 else None
    elif fam == "de_sitter":
        r = float(np.arcsinh(-t))
        radial = (np.sinh(r) * X + pole) / np.cosh(r)
    else:
        raise DomainError(f"no polar coordinates on {space}")
    return r, radial


def distance_jet(space: AmbientSpace, pole, x):
    """Polar distance r as a jet-composable function of position components."""
    pole = np.asarray(pole, dtype=float)
    s = space.signs
    fam = space.family
    if fam == "flat":
        diff = [xi - pi for xi, pi in zip(x, pole)]
        return J.sqrt(J.dot(diff, diff, s))
    t = J.dot(list(pole), x, s)
    if fam == "sphere":
        return J.arccos(t)
    if fam == "hyperbolic":
        return J.arccosh(-t)
    if fam == "de_sitter":
        return J.arcsinh(-t)
    raise DomainError(f"no polar coordinates on {space}")


def radial_profile(space: AmbientSpace):
    """(s_K, c_K) so that the polar-radial field is s_K(r) d_r with factor c_K(r)."""
    fam = space.family
    if fam == "flat":
        return (lambda r: r), (lambda r: np.ones_like(np.asarray(r, dtype=float)))
    if fam == "sphere":
        return np.sin, np.cos
    if fam == "hyperbolic":
        return np.sinh, np.cosh
    if fam == "de_sitter":
        return np.cosh, np.sinh
    raise DomainError(f"no polar profile on {space}")


@dataclass(frozen=True, eq=False)
class VectorFieldSpec:
    """A conformal field with its conformal factor.

    ``evaluator`` and ``alpha`` take a list of position components (floats,
    arrays or jets) and return components / a scalar of the same kind.
    """

    label: str
    evaluator: Callable
    alpha: Callable
    params: dict = field(default_factory=dict)

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        return np.stack([np.broadcast_to(J.value(c), X.shape[:-1]) for c in self.evaluator(list(np.moveaxis(X, -1, 0)))], axis=-1)

    def factor(self, X):
        X = np.asarray(X, dtype=float)
        return np.broadcast_to(J.value(self.alpha(list(np.moveaxis(X, -1, 0)))), X.shape[:-1])


def conformal_field(space: AmbientSpace, label: str, **params) -> VectorFieldSpec:
    """Build one of Position, Constant, PseudoSphereConformal, PolarRadial."""
    n = space.ambient_dim
    s = space.signs
    if label in ("Constant", "PseudoSphereConformal") and "Z0" not in params:
        raise ConfigError(f"{label} field needs a Z0 vector")
    if label == "Position":
        if not space.is_flat:
            raise DomainError("the position field is conformal only on flat spaces")
        origin = np.asarray(params.get("origin", np.zeros(n)), dtype=float)
        return VectorFieldSpec(
            "Position",
            lambda x: [xi - oi for xi, oi in zip(x, origin)],
            lambda x: 1.0 + 0.0 * x[0],
            {"origin": origin.tolist()},
        )
    if label == "Constant":
        if not space.is_flat:
            raise DomainError("constant fields are Killing only on flat spaces")
        Z0 = np.asarray(params["Z0"], dtype=float)
        _check_len(Z0, n)
        return VectorFieldSpec(
            "Constant",
            lambda x: [0.0 * x[0] + zi for zi in Z0],
            lambda x: 0.0 * x[0],
            {"Z0": Z0.tolist()},
        )
    if label == "PseudoSphereConformal":
        if space.is_flat:
            raise DomainError("PseudoSphereConformal needs a pseudo-sphere")
        Z0 = np.asarray(params["Z0"], dtype=float)
        _check_len(Z0, n)
        mu = space.mu

        def evaluator(x):
            t = J.dot(list(Z0), x, s)
            return [-mu * zi + t * xi for zi, xi in zip(Z0, x)]

        return VectorFieldSpec(
            "PseudoSphereConformal",
            evaluator,
            lambda x: J.dot(list(Z0), x, s),
            {"Z0": Z0.tolist()},
        )
    if label == "PolarRadial":
        pole = np.asarray(params.get("pole", space.default_pole()), dtype=float)
        _check_len(pole, n)
        fam = space.family
        if fam == "flat":
            f = conformal_field(space, "Position", origin=pole)
            return VectorFieldSpec("PolarRadial", f.evaluator, f.alpha, {"pole": pole.tolist()})
        if fam in ("sphere", "hyperbolic"):
            if abs(inner(space, pole, pole) - space.mu) > 1e-10:
                raise DomainError("pole is not on the pseudo-sphere")
            Z0 = pole if fam == "sphere" else -pole
        elif fam == "de_sitter":
            if abs(inner(space, pole, pole) + 1.0) > 1e-10:
                raise DomainError("de Sitter pole must be a unit timelike axis")
            Z0 = -pole
        else:
            raise DomainError(f"no polar-radial field on {space}")
        f = conformal_field(space, "PseudoSphereConformal", Z0=Z0)
        return VectorFieldSpec("PolarRadial", f.evaluator, f.alpha, {"pole": pole.tolist(), "Z0": Z0.tolist()})
    raise ConfigError(f"unknown field label {label!r}")


def default_field(space: AmbientSpace) -> VectorFieldSpec:
    """Position field on flat spaces, polar-radial about the default pole otherwise."""
    if space.is_flat:
        return conformal_field(space, "Position")
    return conformal_field(space, "PolarRadial")


def field_from_config(space: AmbientSpace, cfg) -> VectorFieldSpec:
    if cfg is None:
        return default_field(space)
    if isinstance(cfg, str):
        return conformal_field(space, cfg)
    cfg = dict(cfg)
    label = cfg.pop("label")
    return conformal_field(space, label, **cfg)


def geodesic_curve(space: AmbientSpace, X, U, t):
    """A curve in M through X with velocity U (jet-composable in t)."""
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    pts = [xi + t * ui for xi, ui in zip(X, U)]
    if space.is_flat:
        return pts
    nrm = J.sqrt(space.mu * J.dot(pts, pts, space.signs))
    return [p / nrm for p in pts]


def _check_len(v, n):
    if v.shape != (n,):
        raise SizeError(f"vector must have length {n}, got shape {v.shape}")
