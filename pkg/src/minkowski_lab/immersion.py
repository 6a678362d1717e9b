"""Parametrised immersions, their derivative jets and per-point geometric frames.

Conventions
-----------
* Second fundamental form ``A(X, Y) = -(dbar_X Y)^perp``.  Its coefficient
  along a unit normal ``nu_b`` with sign ``eps_b = nu_b.nu_b`` is
  ``A^b_ij = eps_b * A(d_i, d_j).nu_b = -eps_b * (d2_ij . nu_b)``, so that
  ``A = sum_b A^b nu_b``.  For spacelike normals this is the usual
  ``<A^nu X, Y> = A(X, Y).nu``.
* Hypersurface normals are oriented outward (coefficient of the outward
  reference direction positive); with this choice round spheres have
  positive principal curvatures.  In de Sitter space the outward reference is
  the future-pointing radial direction, giving the r-slice the principal
  curvature ``-tanh r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import jet as J
from .ambient import AmbientSpace, parse_space, polar
from .errors import ConfigError, FrameError, SignatureError

COND_LIMIT = 1e12


@dataclass(frozen=True)
class Axis:
    kind: str  # "interval" or "periodic"
    a: float
    b: float

    @property
    def periodic(self) -> bool:
        return self.kind == "periodic"


@dataclass(frozen=True, eq=False)
class Immersion:
    """A map from a product parameter domain into an ambient space.

    ``map`` takes a list of ``m`` parameter components (floats, arrays or
    jets) and returns the list of ambient components.  ``normal_fn``
    optionally supplies an explicit (parallel) normal frame as a function of
    the parameters.  ``outward_ref`` returns, at a point, a vector whose
    normal component points outward; it fixes the hypersurface orientation.
    """

    label: str
    ambient: AmbientSpace
    axes: tuple
    map: Callable
    params: dict = field(default_factory=dict)
    normal_fn: Optional[Callable] = None
    outward_ref: Optional[Callable] = None
    probe: Optional[tuple] = None
    embedded: bool = True
    closed: bool = True

    @property
    def m(self) -> int:
        return len(self.axes)

    @property
    def codim(self) -> int:
        return self.ambient.intrinsic_dim - self.m

    @property
    def is_hypersurface(self) -> bool:
        return self.codim == 1

    def __call__(self, u):
        """Ambient position(s) for parameter point(s) ``u`` of shape (..., m)."""
        u = np.asarray(u, dtype=float)
        comps = self.map([u[..., i] for i in range(self.m)])
        return np.stack([np.broadcast_to(J.value(c), u.shape[:-1]) for c in comps], axis=-1)

    @cached_property
    def orientation(self) -> float:
        """+1 or -1 multiplying the cofactor normal so that it points outward."""
        if not self.is_hypersurface or self.normal_fn is not None:
            return 1.0
        u0 = np.asarray(self.probe if self.probe is not None else _interior_point(self.axes), dtype=float)
        jt = jet(self, u0[None, :])
        nu, eps = _cofactor_normal(self.ambient, jt.x, jt.d1)
        if self.outward_ref is None:
            return 1.0
        ref = np.asarray(self.outward_ref(jt.x[0]), dtype=float)
        c = eps[0] * float(np.sum(self.ambient.signs * nu[0] * ref))
        if abs(c) < 1e-12:
            raise ConfigError(f"{self.label}: outward reference is tangent at the probe point")
        return 1.0 if c > 0 else -1.0


@dataclass
class ImmersionJet:
    """Position, first and second parameter derivatives (leading batch axis)."""

    x: np.ndarray  # (N, n)
    d1: np.ndarray  # (N, m, n)
    d2: np.ndarray  # (N, m, m, n)


@dataclass
class PointFrame:
    """Geometric data at a batch of parameter points (leading axis = node).

    ``A`` holds coordinate-basis second fundamental form coefficients per
    normal, ``shape_ops`` the mixed tensors ``(A^b)_i^j``, ``shape_on`` the
    symmetric matrices in the orthonormal tangent frame ``E``.
    """

    u: np.ndarray
    jet: ImmersionJet
    g: np.ndarray
    g_inv: np.ndarray
    chol: np.ndarray
    sqrt_det_g: np.ndarray
    E: np.ndarray
    normals: np.ndarray  # (N, c, n)
    eps: np.ndarray  # (c,)
    A: np.ndarray  # (N, c, m, m)
    shape_ops: np.ndarray  # (N, c, m, m)
    shape_on: np.ndarray  # (N, c, m, m)
    orientation: float
    signs: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.jet.x

    @property
    def n_nodes(self) -> int:
        return self.u.shape[0]

    @property
    def m(self) -> int:
        return self.g.shape[-1]

    def inner(self, a, b):
        return np.sum(self.signs * a * b, axis=-1)

    def tangent_coords(self, V):
        """ON-frame components of the tangential part of ambient vectors V (N, n)."""
        return np.einsum("Nan,Nn->Na", self.E * self.signs, V)

    def tangent_part(self, V):
        return np.einsum("Na,Nan->Nn", self.tangent_coords(V), self.E)

    def normal_part(self, V):
        return V - self.tangent_part(V)

    def grad_on(self, df):
        """ON-frame gradient from a coordinate differential df (N, m)."""
        return np.linalg.solve(self.chol, df[..., None])[..., 0]

    def shape_op_for(self, N):
        """Symmetric ON-frame matrix of A^N for an arbitrary normal vector field N (N, n)."""
        h = -np.einsum("Nijn,Nn->Nij", self.jet.d2 * self.signs, N)
        return _on_basis(self.chol, h)

    def point(self, i: int) -> "PointFrame":
        """The frame at a single node, keeping a batch axis of length one."""
        sl = slice(i, i + 1)
        return PointFrame(
            self.u[sl],
            ImmersionJet(self.jet.x[sl], self.jet.d1[sl], self.jet.d2[sl]),
            self.g[sl],
            self.g_inv[sl],
            self.chol[sl],
            self.sqrt_det_g[sl],
            self.E[sl],
            self.normals[sl],
            self.eps,
            self.A[sl],
            self.shape_ops[sl],
            self.shape_on[sl],
            self.orientation,
            self.signs,
        )


def jet(imm: Immersion, u) -> ImmersionJet:
    """Exact first and second derivatives of the immersion via truncated Taylor arithmetic."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    comps = imm.map(J.Jet.variables(u.T))
    return ImmersionJet(J.stack_value(comps), J.stack_grad(comps), J.stack_hess(comps))


def frame(imm: Immersion, u) -> PointFrame:
    """Frame at one parameter point (batch axis of length one)."""
    u = np.asarray(u, dtype=float).reshape(1, imm.m)
    return frames(imm, u)


def frames(imm: Immersion, nodes) -> PointFrame:
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    space = imm.ambient
    s = space.signs
    jt = jet(imm, nodes)
    x, d1, d2 = jt.x, jt.d1, jt.d2
    g = np.einsum("Nin,Njn->Nij", d1 * s, d1)
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        w = np.linalg.eigvalsh(g)
        bad = int(np.argmin(w.min(axis=-1)))
        raise FrameError(
            f"{imm.label}: induced metric not positive definite at u={nodes[bad].tolist()} "
            f"(eigenvalues {w[bad].tolist()})"
        ) from None
    w = np.linalg.eigvalsh(g)
    cond = w[:, -1] / w[:, 0]
    if np.any(cond > COND_LIMIT):
        bad = int(np.argmax(cond))
        raise FrameError(
            f"{imm.label}: degenerate metric at u={nodes[bad].tolist()}, condition number {cond[bad]:.3e}"
        )
    g_inv = np.linalg.inv(g)
    sqrt_det_g = np.prod(np.diagonal(chol, axis1=-2, axis2=-1), axis=-1)
    E = np.linalg.solve(chol, d1)

    if imm.normal_fn is not None:
        comps = imm.normal_fn([nodes[:, i] for i in range(imm.m)])
        normals = np.stack(
            [np.stack([np.broadcast_to(J.value(c), nodes.shape[:1]) for c in nu], axis=-1) for nu in comps],
            axis=1,
        )
        eps = np.sign(np.einsum("Ncn,Ncn->Nc", normals * s, normals)[0])
    elif imm.is_hypersurface:
        nu, eps_n = _cofactor_normal(space, x, d1)
        if np.any(eps_n != eps_n[0]):
            raise SignatureError(f"{imm.label}: normal changes causal character")
        normals = (imm.orientation * nu)[:, None, :]
        eps = eps_n[:1]
    else:
        normals, eps = _gram_schmidt_normals(space, x, d1)

    A = -np.einsum("Nijn,Ncn->Ncij", d2 * s, normals) * eps[None, :, None, None]
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    shape_ops = np.einsum("Ncil,Nlj->Ncij", A, g_inv)
    shape_on = _on_basis(chol[:, None], A)
    return PointFrame(
        nodes, jt, g, g_inv, chol, sqrt_det_g, E, normals, eps, A, shape_ops, shape_on,
        imm.orientation, s,
    )


def _on_basis(chol, h):
    """L^-1 h L^-T, symmetrised."""
    tmp = np.linalg.solve(chol, h)
    out = np.linalg.solve(chol, np.swapaxes(tmp, -1, -2))
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def _cofactor_normal(space: AmbientSpace, x, d1):
    """Signature-orthogonal unit normal via the generalised cross product."""
    s = space.signs
    vecs = [d1[:, i, :] for i in range(d1.shape[1])]
    if not space.is_flat:
        vecs.append(x)
    V = np.stack(vecs, axis=1)  # (N, n-1, n)
    n = V.shape[-1]
    if V.shape[1] != n - 1:
        raise ValueError("cofactor normal needs a hypersurface")
    c = np.empty((V.shape[0], n))
    for i in range(n):
        minor = np.delete(V, i, axis=2)
        c[:, i] = (-1.0) ** (n - 1 + i) * np.linalg.det(minor)
    nu = s * c
    norm2 = np.sum(s * c * c, axis=-1)
    if np.any(np.abs(norm2) < 1e-300):
        raise SignatureError("null normal direction")
    eps = np.sign(norm2)
    nu = nu / np.sqrt(np.abs(norm2))[:, None]
    return nu, eps


def _gram_schmidt_normals(space: AmbientSpace, x, d1):
    """Modified Gram-Schmidt from the coordinate axes, per node, in fixed pivot order."""
    s = space.signs
    N, m, n = d1.shape
    codim = space.intrinsic_dim - m
    out = np.empty((N, codim, n))
    eps_all = np.empty((N, codim))
    for k in range(N):
        W = list(d1[k])
        if not space.is_flat:
            W.append(x[k])
        W = np.array(W)
        G = (W * s) @ W.T
        basis, eps = [], []
        for axis in range(n):
            v = np.zeros(n)
            v[axis] = 1.0
            v = v - W.T @ np.linalg.solve(G, (W * s) @ v)
            for b, e in zip(basis, eps):
                v = v - e * np.sum(s * v * b) * b
            nrm2 = np.sum(s * v * v)
            if abs(nrm2) < 1e-8:
                continue
            basis.append(v / np.sqrt(abs(nrm2)))
            eps.append(np.sign(nrm2))
            if len(basis) == codim:
                break
        if len(basis) < codim:
            raise SignatureError(f"normal frame construction failed at node {k}")
        out[k] = basis
        eps_all[k] = eps
    if np.any(eps_all != eps_all[0]):
        raise SignatureError("normal signs vary across nodes")
    return out, eps_all[0]


def _interior_point(axes):
    pts = []
    for ax in axes:
        if ax.periodic:
            pts.append(ax.a + 0.1234 * (ax.b - ax.a))
        else:
            pts.append(ax.a + 0.3817 * (ax.b - ax.a))
    return tuple(pts)


# ---------------------------------------------------------------------------
# surface zoo

def sphere_axes(m: int) -> tuple:
    return tuple([Axis("interval", 0.0, np.pi)] * (m - 1) + [Axis("periodic", 0.0, 2 * np.pi)])


def unit_sphere_components(u):
    """Hyperspherical embedding of S^m; u = (polar angles..., azimuth)."""
    m = len(u)
    rev = []
    p = 1.0
    for i in range(m - 1):
        rev.append(p * J.cos(u[i]))
        p = p * J.sin(u[i])
    phi = u[m - 1]
    return [p * J.cos(phi), p * J.sin(phi)] + rev[::-1]


def _legendre(l: int, z):
    if l == 0:
        return 1.0 + 0.0 * z
    p0, p1 = 1.0 + 0.0 * z, z
    for k in range(1, l):
        p0, p1 = p1, ((2 * k + 1) * z * p1 - k * p0) / (k + 1)
    return p1


def bump_function(bumps):
    """Sum of harmonic-type bumps on the unit sphere, as a function of theta components."""
    bumps = list(bumps or [])
    for b in bumps:
        if b.get("type", "zonal") not in ("zonal", "sectoral", "tilt"):
            raise ConfigError(f"unknown bump type {b.get('type')!r}")

    def f(theta):
        total = 0.0 * theta[0]
        for b in bumps:
            kind = b.get("type", "zonal")
            amp = float(b["amp"])
            if kind == "zonal":
                total = total + amp * _legendre(int(b.get("l", 2)), theta[-1])
            elif kind == "sectoral":
                total = total + amp * (theta[0] * theta[0] - theta[1] * theta[1])
            else:
                total = total + amp * theta[0]
        return total

    return f


def round_sphere(R: float = 1.0, n: int = 3, center=None) -> Immersion:
    if R <= 0:
        raise ConfigError("round_sphere needs R > 0")
    return radial_graph(ambient=f"R{n}", r0=R, center=center, label="round_sphere")


def ellipsoid(axes=(1.0, 1.0, 2.0), center=None) -> Immersion:
    axes = np.asarray(axes, dtype=float)
    if np.any(axes <= 0):
        raise ConfigError("ellipsoid semi-axes must be positive")
    n = len(axes)
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    space = parse_space(f"R{n}")

    def fmap(u):
        th = unit_sphere_components(u)
        return [ci + ai * ti for ci, ai, ti in zip(c, axes, th)]

    return Immersion(
        "ellipsoid", space, sphere_axes(n - 1), fmap,
        {"axes": axes.tolist(), "center": c.tolist()},
        outward_ref=lambda X: (X - c) / axes**2,
    )


def torus_of_revolution(R: float = 2.0, rho: float = 1.0, center=None) -> Immersion:
    if not (0 < rho < R):
        raise ConfigError("torus_of_revolution needs 0 < rho < R (embedded torus)")
    c = np.zeros(3) if center is None else np.asarray(center, dtype=float)
    space = parse_space("R3")

    def fmap(u):
        a, b = u
        w = R + rho * J.cos(b)
        return [c[0] + w * J.cos(a), c[1] + w * J.sin(a), c[2] + rho * J.sin(b)]

    def outward(X):
        d = X - c
        q = np.array([d[0], d[1], 0.0])
        q = R * q / np.linalg.norm(q)
        return d - q

    axes = (Axis("periodic", 0.0, 2 * np.pi), Axis("periodic", 0.0, 2 * np.pi))
    return Immersion(
        "torus_of_revolution", space, axes, fmap,
        {"R": R, "rho": rho, "center": c.tolist()}, outward_ref=outward, probe=(0.0, 0.0),
    )


def radial_graph(ambient: str = "R3", r0: float = 1.0, bumps=None, center=None, pole=None,
                 label: str = "radial_graph") -> Immersion:
    """Graph r = rho(theta) over the unit sphere of directions around a centre.

    Flat: X = c + rho theta.  Sphere: X = cos(rho) P + sin(rho) theta.
    Hyperbolic: X = cosh(rho) P + sinh(rho) theta.  de Sitter: X = (cosh(rho) theta, sinh(rho)).
    """
    space = parse_space(ambient)
    fam = space.family
    m = space.intrinsic_dim - 1
    if m < 1:
        raise ConfigError("radial graphs need ambient dimension >= 2")
    bump = bump_function(bumps)
    n = space.ambient_dim
    if fam == "flat":
        if space.q:
            raise ConfigError("radial graphs in flat space need a Euclidean signature")
        c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    elif fam in ("sphere", "hyperbolic", "de_sitter"):
        if pole is not None and not np.allclose(pole, space.default_pole()):
            raise ConfigError("curved radial graphs are centred at the default pole")
        c = space.default_pole()
    else:
        raise ConfigError(f"no radial graphs in {ambient}")

    def rho_of(th):
        return r0 + bump(th)

    def fmap(u):
        th = unit_sphere_components(u)
        rho = rho_of(th)
        if fam == "flat":
            return [ci + rho * ti for ci, ti in zip(c, th)]
        if fam == "sphere":
            return [J.sin(rho) * ti for ti in th] + [J.cos(rho)]
        if fam == "hyperbolic":
            return [J.sinh(rho) * ti for ti in th] + [J.cosh(rho)]
        return [J.cosh(rho) * ti for ti in th] + [J.sinh(rho)]

    # admissibility of the profile
    probe_nodes = np.stack(np.meshgrid(*[np.linspace(0.01, ax.b - 0.01, 41) for ax in sphere_axes(m)]), -1).reshape(-1, m)
    rho_vals = np.asarray(rho_of(unit_sphere_components([probe_nodes[:, i] for i in range(m)])))
    if fam == "flat" and np.min(rho_vals) <= 0:
        raise ConfigError("radial graph profile must stay positive")
    if fam in ("sphere", "hyperbolic") and np.min(rho_vals) <= 0:
        raise ConfigError("geodesic radius must stay positive")
    if fam == "sphere" and np.max(rho_vals) >= np.pi:
        raise ConfigError("geodesic radius must stay below pi")

    def outward(X):
        if fam == "flat":
            return X - c
        return polar(space, c, X)[1]

    params = {"ambient": ambient, "r0": r0, "bumps": list(bumps or [])}
    if fam == "flat":
        params["center"] = c.tolist()
    return Immersion(label, space, sphere_axes(m), fmap, params, outward_ref=outward)


def geodesic_sphere_S(r0: float = np.pi / 4, n: int = 3) -> Immersion:
    return radial_graph(ambient=f"S{n}", r0=r0, label="geodesic_sphere_S")


def geodesic_sphere_H(r0: float = 1.0, n: int = 3) -> Immersion:
    return radial_graph(ambient=f"H{n}", r0=r0, label="geodesic_sphere_H")


def ds_slice_graph(r0: float = 0.5, bumps=None, n: int = 3) -> Immersion:
    return radial_graph(ambient=f"dS{n}", r0=r0, bumps=bumps, label="ds_slice_graph")


def perturbed_sphere(eps: float = 0.05, ambient: str = "R3", R: float = 1.0, l: int = 2,
                     sectoral: float = 0.0) -> Immersion:
    """Round (geodesic) sphere plus eps times a zonal harmonic bump of degree l."""
    space = parse_space(ambient)
    scale = R if space.is_flat else 1.0
    bumps = [{"type": "zonal", "l": l, "amp": eps * scale}]
    if sectoral:
        bumps.append({"type": "sectoral", "amp": sectoral * eps * scale})
    imm = radial_graph(ambient=ambient, r0=R, bumps=bumps, label="perturbed_sphere")
    imm.params.update({"eps": eps, "R": R, "l": l, "sectoral": sectoral})
    return imm


def product_torus_R4(a: float = 1.0, b: float = 1.0) -> Immersion:
    """Flat torus S^1(a) x S^1(b) in R^4 with its parallel normal frame."""
    if a <= 0 or b <= 0:
        raise ConfigError("product torus radii must be positive")
    space = parse_space("R4")

    def fmap(u):
        s, t = u
        return [a * J.cos(s), a * J.sin(s), b * J.cos(t), b * J.sin(t)]

    def normals(u):
        s, t = u
        z = 0.0 * s
        return [[J.cos(s), J.sin(s), z, z], [z, z, J.cos(t), J.sin(t)]]

    axes = (Axis("periodic", 0.0, 2 * np.pi), Axis("periodic", 0.0, 2 * np.pi))
    return Immersion("product_torus_R4", space, axes, fmap, {"a": a, "b": b}, normal_fn=normals, probe=(0.0, 0.0))


def product_circle_sphere_R5(a: float = 1.0, b: float = 1.0) -> Immersion:
    """S^1(a) x S^2(b) in R^5 (m = 3, codimension 2) with its parallel normal frame."""
    if a <= 0 or b <= 0:
        raise ConfigError("product radii must be positive")
    space = parse_space("R5")

    def fmap(u):
        th = unit_sphere_components([u[1], u[2]])
        return [a * J.cos(u[0]), a * J.sin(u[0])] + [b * t for t in th]

    def normals(u):
        th = unit_sphere_components([u[1], u[2]])
        z = 0.0 * u[0]
        return [[J.cos(u[0]), J.sin(u[0]), z, z, z], [z, z] + th]

    axes = (Axis("periodic", 0.0, 2 * np.pi), Axis("interval", 0.0, np.pi), Axis("periodic", 0.0, 2 * np.pi))
    return Immersion("product_circle_sphere_R5", space, axes, fmap, {"a": a, "b": b}, normal_fn=normals)


def with_normals(imm: Immersion, normal_fn: Callable, label: Optional[str] = None) -> Immersion:
    """Same immersion with a different explicit normal frame."""
    return Immersion(label or imm.label, imm.ambient, imm.axes, imm.map, dict(imm.params), normal_fn,
                     imm.outward_ref, imm.probe, imm.embedded, imm.closed)


BUILTINS = {
    "round_sphere": (round_sphere, {"R": "radius (1.0)", "n": "ambient dimension (3)", "center": "list"}),
    "ellipsoid": (ellipsoid, {"axes": "semi-axes list ([1,1,2])", "center": "list"}),
    "torus_of_revolution": (torus_of_revolution, {"R": "major radius (2)", "rho": "tube radius (1)", "center": "list"}),
    "radial_graph": (radial_graph, {"ambient": "R3|S3|H3|dS3|...", "r0": "base radius", "bumps": "[{type,l,amp}]"}),
    "geodesic_sphere_S": (geodesic_sphere_S, {"r0": "geodesic radius (pi/4)", "n": "ambient dimension (3)"}),
    "geodesic_sphere_H": (geodesic_sphere_H, {"r0": "geodesic radius (1)", "n": "ambient dimension (3)"}),
    "ds_slice_graph": (ds_slice_graph, {"r0": "slice parameter (0.5)", "bumps": "[{type,l,amp}]", "n": "3"}),
    "product_torus_R4": (product_torus_R4, {"a": "first radius (1)", "b": "second radius (1)"}),
    "product_circle_sphere_R5": (product_circle_sphere_R5, {"a": "circle radius", "b": "sphere radius"}),
    "perturbed_sphere": (perturbed_sphere, {"eps": "bump amplitude", "ambient": "R3|S3|H3", "R": "base radius", "l": "degree (2)", "sectoral": "relative sectoral amplitude"}),
}


def builtin(label: str, params: Optional[dict] = None) -> Immersion:
    if label not in BUILTINS:
        raise ConfigError(f"unknown surface label {label!r}; known: {sorted(BUILTINS)}")
    factory = BUILTINS[label][0]
    try:
        return factory(**(params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {label}: {exc}") from None
