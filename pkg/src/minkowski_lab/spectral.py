"""First eigenvalues of -div(T_k grad) on triangulated surfaces and of the Steklov problem in the plane.

Piecewise-linear elements throughout.  Surface meshes are structured
triangulations of the parameter grid of an analytic immersion, carrying the
analytic curvature data at the vertices.  Eigenvalue verdicts compare against
the curvature bound both raw and inflated by five times the estimated relative
discretization error (two mesh levels, Richardson with order 2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh
from scipy.spatial import Delaunay

from . import jet as J
from .ambient import AmbientSpace, parse_space
from .curvature import newton_batch
from .errors import ConfigError, ContractError, HypothesisViolation, SizeError, SolverError
from .identities import _jsonable, r_values, weighted_volume
from .immersion import Immersion, frames
from .quadrature import QuadratureConfig, fsum_ordered, sample
from .weights import _evaluate, parse_weight

POLE_OFFSET = 1e-4
MIN_ANGLE_DEG = 1.0
ORDER = 2.0
ERR_FACTOR = 5.0


# ---------------------------------------------------------------------------
# meshes

@dataclass(eq=False)
class SurfaceMesh:
    vertices: np.ndarray  # (V, n) ambient points
    triangles: np.ndarray  # (F, 3)
    space: AmbientSpace
    sigma: Optional[np.ndarray] = None  # (V, m+1)
    T: Optional[np.ndarray] = None  # (V, m, m, m) ON-frame Newton tensors T_0..T_{m-1}
    E: Optional[np.ndarray] = None  # (V, m, n) ON tangent frames
    imm: Optional[Immersion] = None
    target: Optional[int] = None
    label: str = "mesh"

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return 2

    def triangle_gram(self):
        """Edge vectors (F, 2, n) and their Gram matrices (F, 2, 2) in the ambient signature."""
        v = self.vertices
        t = self.triangles
        e = np.stack([v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]]], axis=1)
        G = np.einsum("Fan,Fbn->Fab", e * self.space.signs, e)
        return e, G

    def triangle_areas(self) -> np.ndarray:
        _, G = self.triangle_gram()
        return 0.5 * np.sqrt(np.maximum(np.linalg.det(G), 0.0))

    def area(self) -> float:
        return fsum_ordered(self.triangle_areas())

    def vertex_areas(self) -> np.ndarray:
        a = self.triangle_areas() / 3.0
        return np.bincount(self.triangles.ravel(), weights=np.repeat(a, 3), minlength=self.n_vertices)

    def min_angle_deg(self) -> float:
        v, t, s = self.vertices, self.triangles, self.space.signs
        worst = np.inf
        for i in range(3):
            a = v[t[:, (i + 1) % 3]] - v[t[:, i]]
            b = v[t[:, (i + 2) % 3]] - v[t[:, i]]
            ab = np.sum(a * b * s, -1)
            cos = ab / np.sqrt(np.sum(a * a * s, -1) * np.sum(b * b * s, -1))
            worst = min(worst, float(np.min(np.degrees(np.arccos(np.clip(cos, -1, 1))))))
        return worst

    def mesh_size(self) -> float:
        _, G = self.triangle_gram()
        l2 = np.concatenate([G[:, 0, 0], G[:, 1, 1], G[:, 0, 0] + G[:, 1, 1] - 2 * G[:, 0, 1]])
        return float(np.sqrt(np.max(l2)))

    def check(self) -> dict:
        """Watertightness, orientation consistency and the minimum angle."""
        t = self.triangles
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        und = np.sort(directed, axis=1)
        _, counts = np.unique(und, axis=0, return_counts=True)
        watertight = bool(np.all(counts == 2))
        _, dcounts = np.unique(directed, axis=0, return_counts=True)
        oriented = watertight and bool(np.all(dcounts == 1))
        return {"watertight": watertight, "oriented": oriented, "min_angle_deg": self.min_angle_deg()}


def _collapses(imm: Immersion, axis: int, value: float) -> bool:
    probe = np.zeros((8, 2))
    other = 1 - axis
    ax = imm.axes[other]
    probe[:, other] = np.linspace(ax.a, ax.b, 8, endpoint=False)
    probe[:, axis] = value
    x = np.stack([np.asarray(J.value(c), dtype=float) * np.ones(8) for c in imm.map([probe[:, 0], probe[:, 1]])], -1)
    return bool(np.max(np.abs(x - x[0])) < 1e-12 * (1 + np.max(np.abs(x))))


def triangulate(imm: Immersion, target_vertex_count: int = 10000) -> SurfaceMesh:
    """Structured triangulation of a closed parametrised surface.

    Supported parameter domains: (interval, periodic) with the interval ends
    collapsing to poles (sphere type), and (periodic, periodic) (torus type).
    """
    if imm.m != 2:
        raise SizeError(f"triangulate needs a surface (m = 2), got m = {imm.m}")
    if not imm.is_hypersurface:
        raise SizeError("triangulate needs a hypersurface (codimension 1)")
    if target_vertex_count < 12:
        raise ConfigError("target_vertex_count must be at least 12")
    kinds = tuple(ax.kind for ax in imm.axes)
    if kinds == ("interval", "periodic"):
        a, b = imm.axes[0].a, imm.axes[0].b
        if not (_collapses(imm, 0, a) and _collapses(imm, 0, b)):
            raise ConfigError(f"{imm.label}: interval ends do not collapse; the surface is not closed")
        n_th = max(2, int(round(np.sqrt(target_vertex_count / 2.0))))
        n_ph = 2 * n_th
        th = a + (b - a) * np.arange(1, n_th + 1) / (n_th + 1)
        ph = imm.axes[1].a + (imm.axes[1].b - imm.axes[1].a) * np.arange(n_ph) / n_ph
        TH, PH = np.meshgrid(th, ph, indexing="ij")
        ring = np.stack([TH.ravel(), PH.ravel()], -1)
        params = np.vstack([[a, ph[0]], ring, [b, ph[0]]])
        data_params = params.copy()
        data_params[0, 0] = a + POLE_OFFSET
        data_params[-1, 0] = b - POLE_OFFSET
        idx = 1 + np.arange(n_th * n_ph).reshape(n_th, n_ph)
        south = n_th * n_ph + 1
        tris = []
        nxt = np.roll(np.arange(n_ph), -1)
        tris.append(np.stack([np.zeros(n_ph, int), idx[0], idx[0, nxt]], -1))
        for i in range(n_th - 1):
            p, q = idx[i], idx[i + 1]
            tris.append(np.stack([p, q, q[nxt]], -1))
            tris.append(np.stack([p, q[nxt], p[nxt]], -1))
        tris.append(np.stack([np.full(n_ph, south), idx[-1, nxt], idx[-1]], -1))
        triangles = np.vstack(tris)
    elif kinds == ("periodic", "periodic"):
        ax0, ax1 = imm.axes
        n0 = max(3, int(round(np.sqrt(target_vertex_count))))
        n1 = max(3, int(round(target_vertex_count / n0)))
        u0 = ax0.a + (ax0.b - ax0.a) * np.arange(n0) / n0
        u1 = ax1.a + (ax1.b - ax1.a) * np.arange(n1) / n1
        U0, U1 = np.meshgrid(u0, u1, indexing="ij")
        params = np.stack([U0.ravel(), U1.ravel()], -1)
        data_params = params
        idx = np.arange(n0 * n1).reshape(n0, n1)
        a_ = idx
        b_ = np.roll(idx, -1, axis=0)
        c_ = np.roll(idx, -1, axis=1)
        d_ = np.roll(np.roll(idx, -1, axis=0), -1, axis=1)
        triangles = np.vstack([
            np.stack([a_.ravel(), b_.ravel(), d_.ravel()], -1),
            np.stack([a_.ravel(), d_.ravel(), c_.ravel()], -1),
        ])
    else:
        raise ConfigError(f"{imm.label}: cannot triangulate parameter domain {kinds}")

    x = np.stack([np.asarray(J.value(c), dtype=float) * np.ones(len(params)) for c in imm.map([params[:, 0], params[:, 1]])], -1)
    fr = frames(imm, data_params)
    _, sig, _, T = newton_batch(fr.shape_on[:, 0])
    mesh = SurfaceMesh(x, triangles.astype(np.intp), imm.ambient, sig, T, fr.E, imm, target_vertex_count, imm.label)
    _orient_outward(mesh, fr.normals[:, 0])
    return mesh


def _orient_outward(mesh: SurfaceMesh, normals: np.ndarray) -> None:
    """Flip all triangles if their ambient orientation disagrees with the outward normal."""
    if mesh.vertices.shape[1] != 3 or not mesh.space.is_flat:
        return
    v, t = mesh.vertices, mesh.triangles
    cr = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    nrm = normals[t].mean(axis=1)
    if np.sum(np.einsum("Fn,Fn->F", cr, nrm)) < 0:
        mesh.triangles = mesh.triangles[:, ::-1].copy()


# ---------------------------------------------------------------------------
# OFF meshes

def write_off(mesh: SurfaceMesh, path, sidecar: Optional[str] = None) -> None:
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {len(mesh.triangles)} 0\n")
        for p in mesh.vertices:
            fh.write(" ".join(repr(float(c)) for c in p) + "\n")
        for t in mesh.triangles:
            fh.write("3 " + " ".join(str(int(i)) for i in t) + "\n")
    if sidecar is not None:
        data = {"ambient": str(mesh.space), "sigma": mesh.sigma.tolist()}
        with open(sidecar, "w") as fh:
            json.dump(data, fh, sort_keys=True)


def read_off(path, sidecar: Optional[str] = None, ambient: str = "R3") -> SurfaceMesh:
    """Triangle mesh from an OFF file; per-vertex sigma from a JSON sidecar ({"ambient", "sigma"})."""
    with open(path) as fh:
        tokens = [ln.split("#")[0].strip() for ln in fh]
    tokens = [ln for ln in tokens if ln]
    if not tokens or not tokens[0].startswith("OFF"):
        raise ConfigError(f"{path}: not an OFF file")
    head = tokens[0][3:].split() or tokens.pop(1).split()
    nv, nf = int(head[0]), int(head[1])
    body = tokens[1:]
    verts = np.array([[float(c) for c in body[i].split()] for i in range(nv)])
    tris = []
    for ln in body[nv:nv + nf]:
        parts = [int(c) for c in ln.split()]
        if parts[0] != 3:
            raise ConfigError(f"{path}: only triangular faces are supported")
        tris.append(parts[1:4])
    sigma = None
    if sidecar is not None:
        with open(sidecar) as fh:
            side = json.load(fh)
        ambient = side.get("ambient", ambient)
        sigma = np.asarray(side["sigma"], dtype=float)
        if sigma.shape[0] != nv:
            raise ConfigError(f"{sidecar}: sigma has {sigma.shape[0]} rows for {nv} vertices")
    space = parse_space(ambient)
    return SurfaceMesh(verts, np.asarray(tris, dtype=np.intp), space, sigma, label=str(path))


# ---------------------------------------------------------------------------
# assembly and eigen-solve

def assemble(mesh: SurfaceMesh, k: int = 0):
    """Stiffness B(u,v) = int <T_k grad u, grad v> and consistent mass, both sparse CSR.

    The per-triangle coefficient is the vertex average of T_k, acting on the
    triangle plane through the ambient endomorphism I + E^T (T_k - I) E.
    """
    e, G = mesh.triangle_gram()
    det = np.linalg.det(G)
    if np.any(det <= 0):
        raise ContractError("degenerate or non-spacelike triangle in mesh")
    area = 0.5 * np.sqrt(det)
    S = G.copy()
    if k > 0:
        if mesh.T is None or mesh.E is None:
            raise ConfigError("mesh carries no Newton tensors; only k = 0 is available")
        s = mesh.space.signs
        t = mesh.triangles
        acc = np.zeros_like(G)
        for corner in range(3):
            Ev = mesh.E[t[:, corner]]  # (F, m, n)
            C = np.einsum("Fan,Fcn->Fac", e * s, Ev)
            D = mesh.T[t[:, corner], k] - np.eye(2)
            acc += np.einsum("Fac,Fcd,Fbd->Fab", C, D, C)
        S = S + acc / 3.0
    Gi = np.linalg.inv(G)
    coef = np.einsum("Fab,Fbc,Fcd->Fad", Gi, S, Gi)
    w = np.linalg.eigvalsh(0.5 * (coef + np.swapaxes(coef, -1, -2)))
    if np.any(w[:, 0] < -1e-12 * np.abs(w).max()):
        raise ContractError(f"T_{k} not positive semidefinite on some triangle; stiffness would be indefinite")
    Dm = np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    Kloc = area[:, None, None] * np.einsum("ai,Fab,bj->Fij", Dm, coef, Dm)
    Mloc = area[:, None, None] * (np.ones((3, 3)) + np.eye(3)) / 12.0
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_vertices
    K = sp.coo_matrix((Kloc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Mloc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K = 0.5 * (K + K.T)
    return K.tocsc(), M.tocsc()


def first_nonzero(K, M, v0=None, nev: int = 6):
    """Smallest nonzero generalized eigenpair of (K, M) on the mean-zero subspace.

    Shift-invert about a small negative shift so the constant mode and the
    first cluster are the eigenvalues nearest the shift.
    """
    n = K.shape[0]
    scale = float(K.diagonal().sum() / M.diagonal().sum())
    shift = -1e-3 * scale / n
    nev = min(nev, n - 2)
    try:
        vals, vecs = spla.eigsh(K, k=nev, M=M, sigma=shift, which="LM", v0=v0, tol=1e-13, maxiter=10000)
    except spla.ArpackNoConvergence as exc:
        raise SolverError(f"shift-invert Lanczos did not converge: {len(exc.eigenvalues)} of {nev} pairs") from None
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    zero_tol = 1e-8 * scale
    pos = np.nonzero(vals > zero_tol)[0]
    if len(pos) == 0:
        raise SolverError(f"no nonzero eigenvalue among the {nev} nearest the shift: {vals.tolist()}")
    u = vecs[:, pos[0]]
    ones = np.ones(n)
    u = u - (ones @ (M @ u)) / (ones @ (M @ ones)) * ones
    u = u / np.sqrt(u @ (M @ u))
    lam = float(u @ (K @ u))
    return lam, u, vals


def rayleigh(K, M, u) -> float:
    return float((u @ (K @ u)) / (u @ (M @ u)))


# ---------------------------------------------------------------------------
# reports

@dataclass
class EigenReport:
    check_id: str
    surface: str
    params: dict
    k: int
    lambda1: float
    bound: float
    slack: float
    mesh_size: float
    n_vertices: int
    verdict: str
    verdict_raw: str
    extrapolated: Optional[float] = None
    rel_err: Optional[float] = None
    levels: list = field(default_factory=list)
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    orthogonality: Optional[float] = None
    rayleigh_residual: Optional[float] = None
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    kind: str = "eigen"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return _jsonable({
            "kind": self.kind, "check_id": self.check_id, "surface": self.surface, "params": self.params,
            "k": self.k, "lambda1": self.lambda1, "bound": self.bound, "slack": self.slack,
            "mesh_size": self.mesh_size, "n_vertices": self.n_vertices, "verdict": self.verdict,
            "verdict_raw": self.verdict_raw, "extrapolated": self.extrapolated, "rel_err": self.rel_err,
            "levels": self.levels, "lhs": self.lhs, "rhs": self.rhs, "orthogonality": self.orthogonality,
            "rayleigh_residual": self.rayleigh_residual, "violations": self.violations, "notes": self.notes,
        })


def _richardson(coarse: float, fine: float):
    ext = fine + (fine - coarse) / (2.0**ORDER - 1.0)
    rel = abs(fine - coarse) / ((2.0**ORDER - 1.0) * abs(fine))
    return ext, rel


def _solve_mesh(mesh: SurfaceMesh, k: int):
    K, M = assemble(mesh, k)
    x0 = mesh.vertices[:, 0]
    lam, u, _ = first_nonzero(K, M, v0=x0 - x0.mean())
    ones = np.ones(mesh.n_vertices)
    orth = abs(ones @ (M @ u)) / np.sqrt(ones @ (M @ ones))
    return lam, float(orth), abs(rayleigh(K, M, u) - lam)


def _levels(mesh: SurfaceMesh, k: int, richardson: bool):
    lam, orth, ray = _solve_mesh(mesh, k)
    levels = [{"n_vertices": mesh.n_vertices, "h": mesh.mesh_size(), "lambda1": lam}]
    ext = rel = None
    if richardson and mesh.imm is not None and mesh.target:
        coarse = triangulate(mesh.imm, max(12, mesh.target // 4))
        lam_c, _, _ = _solve_mesh(coarse, k)
        levels.insert(0, {"n_vertices": coarse.n_vertices, "h": coarse.mesh_size(), "lambda1": lam_c})
        ext, rel = _richardson(lam_c, lam)
    return lam, orth, ray, levels, ext, rel


def _verdicts(lhs: float, rhs: float, rel: Optional[float]):
    raw = "pass" if lhs <= rhs else "fail"
    thresh = rhs * (1.0 + ERR_FACTOR * (rel or 0.0)) if rhs >= 0 else rhs * (1.0 - ERR_FACTOR * (rel or 0.0))
    return ("pass" if lhs <= thresh else "fail"), raw


def lambda1(mesh: SurfaceMesh, k: int = 0, richardson: bool = True, strict: bool = False) -> EigenReport:
    """First eigenvalue of -div(T_k grad) against (m-k) C(m,k) max(K sigma_k + sigma_{k+2})."""
    m = mesh.m
    if not 0 <= k <= m - 2:
        raise SizeError(f"k = {k} out of range: sigma_(k+2) needs k + 2 <= m = {m}")
    if mesh.sigma is None:
        raise ConfigError("mesh carries no curvature data")
    space = mesh.space
    if space.family not in ("flat", "sphere", "hyperbolic"):
        raise ConfigError("lambda1 bound holds in R^n, S^n and H^n")
    Kc = space.K
    violations, notes = [], []
    if np.any(mesh.sigma[:, k + 2] <= 0):
        violations.append(f"sigma_{k + 2} <= 0 at some vertex")
    if Kc > 0:
        r = r_values(space, space.default_pole(), mesh.vertices)
        if np.max(r) > np.pi / 4 + 1e-12:
            violations.append("surface not inside the geodesic ball of radius pi/4 about the pole")
    if violations and strict:
        raise HypothesisViolation("; ".join(violations), {"check": "lambda1"})
    bound = (m - k) * comb(m, k) * float(np.max(Kc * mesh.sigma[:, k] + mesh.sigma[:, k + 2]))
    lam, orth, ray, levels, ext, rel = _levels(mesh, k, richardson)
    verdict, raw = _verdicts(lam, bound, rel)
    if ext is None:
        notes.append("single mesh level; no discretization error estimate")
    if violations:
        verdict = "hypothesis_violation"
    return EigenReport(
        "lambda1", mesh.label, _mesh_params(mesh), k, lam, bound, bound - lam, mesh.mesh_size(),
        mesh.n_vertices, verdict, raw, ext, rel, levels, lam, bound, orth, ray, violations, notes,
    )


def _mesh_params(mesh: SurfaceMesh) -> dict:
    p = dict(mesh.imm.params) if mesh.imm is not None else {}
    p["target_vertices"] = mesh.target
    return p


def garay_check(mesh: SurfaceMesh, k: int = 0, cfg: Optional[QuadratureConfig] = None,
                richardson: bool = True, strict: bool = False) -> EigenReport:
    """n lambda_1(T_k) Vol(Omega) against (m-k) C(m,k) max sigma_1 int sigma_k, closed surface in R^3."""
    imm = mesh.imm
    if imm is None:
        raise ConfigError("garay_check needs a mesh generated from an immersion")
    space = imm.ambient
    if not space.is_flat or space.q:
        raise ConfigError("garay_check is stated for hypersurfaces of Euclidean space")
    m = imm.m
    n = m + 1
    if not 0 <= k <= m - 1:
        raise SizeError(f"k = {k} outside 0..{m - 1}")
    smp = sample(imm, cfg)
    _, sig, _, _ = newton_batch(smp.frame.shape_on[:, 0])
    violations = []
    if np.any(sig[:, k] <= 0) or np.any(mesh.sigma[:, k] <= 0):
        violations.append(f"sigma_{k} <= 0 somewhere")
    if violations and strict:
        raise HypothesisViolation("; ".join(violations), {"check": "garay"})
    vol = weighted_volume(imm, None, cfg)
    int_sk = smp.integrate(sig[:, k], "sigma_k")
    max_s1 = float(max(np.max(sig[:, 1]), np.max(mesh.sigma[:, 1])))
    rhs = (m - k) * comb(m, k) * max_s1 * int_sk
    lam, orth, ray, levels, ext, rel = _levels(mesh, k, richardson)
    lhs = n * lam * vol
    verdict, raw = _verdicts(lhs, rhs, rel)
    notes = [f"volume {vol!r}, max sigma_1 {max_s1!r}, int sigma_{k} {int_sk!r}"]
    if violations:
        verdict = "hypothesis_violation"
    return EigenReport(
        "garay", mesh.label, _mesh_params(mesh), k, lam, rhs / (n * vol), rhs / (n * vol) - lam,
        mesh.mesh_size(), mesh.n_vertices, verdict, raw, ext, rel, levels, lhs, rhs, orth, ray, violations, notes,
    )


def convergence_study(imm: Immersion, targets, k: int = 0, exact: Optional[float] = None) -> dict:
    """lambda_1 at several mesh levels and the observed order in mesh size."""
    rows = []
    for t in targets:
        mesh = triangulate(imm, t)
        lam, _, _ = _solve_mesh(mesh, k)
        rows.append({"n_vertices": mesh.n_vertices, "h": mesh.mesh_size(), "lambda1": lam})
    orders = []
    if exact is not None:
        for a, b in zip(rows, rows[1:]):
            orders.append(np.log(abs(a["lambda1"] - exact) / abs(b["lambda1"] - exact)) / np.log(a["h"] / b["h"]))
    elif len(rows) >= 3:
        for a, b, c in zip(rows, rows[1:], rows[2:]):
            orders.append(np.log(abs(a["lambda1"] - b["lambda1"]) / abs(b["lambda1"] - c["lambda1"]))
                          / np.log(a["h"] / b["h"]))
    return {"levels": rows, "orders": [float(o) for o in orders]}


# ---------------------------------------------------------------------------
# Steklov problem on planar star-shaped domains

@dataclass(frozen=True)
class StarDomain:
    """Planar domain {r < rho(t)} with rho given on one-variable jets."""

    label: str
    rho: Callable
    params: dict

    def profile(self, t):
        """rho, rho', rho'' at angles t."""
        t = np.asarray(t, dtype=float)
        tj = J.Jet(t, np.ones((1,) + t.shape), np.zeros((1, 1) + t.shape))
        out = self.rho(tj)
        if not isinstance(out, J.Jet):
            v = np.broadcast_to(np.asarray(out, dtype=float), t.shape).copy()
            return v, np.zeros_like(v), np.zeros_like(v)
        return (np.broadcast_to(out.v, t.shape).astype(float), np.broadcast_to(out.d[0], t.shape).astype(float),
                np.broadcast_to(out.h[0, 0], t.shape).astype(float))

    def curvature(self, t) -> np.ndarray:
        r, r1, r2 = self.profile(t)
        return (r * r + 2 * r1 * r1 - r * r2) / (r * r + r1 * r1) ** 1.5


def star_domain(spec) -> StarDomain:
    """From {"shape": "disk", "R"}, {"shape": "ellipse", "a", "b"}, {"shape": "expr", "rho": "<expr in t>"}."""
    if isinstance(spec, StarDomain):
        return spec
    if not isinstance(spec, dict) or "shape" not in spec:
        raise ConfigError("domain spec needs a 'shape' key")
    shape = spec["shape"]
    if shape == "disk":
        R = float(spec.get("R", 1.0))
        expr = repr(R)
    elif shape == "ellipse":
        a, b = float(spec.get("a", 1.0)), float(spec.get("b", 1.0))
        expr = f"{a * b!r} / sqrt(({b!r} * cos(t))^2 + ({a!r} * sin(t))^2)"
    elif shape == "expr":
        expr = str(spec["rho"])
    else:
        raise ConfigError(f"unknown domain shape {shape!r}")
    w = parse_weight(expr, extra=("t",))
    if not w.names <= {"t"}:
        raise ConfigError(f"domain profile {expr!r} must depend on t only")
    dom = StarDomain(shape, lambda tj: _evaluate(w, {"t": tj}), dict(spec))
    tt = np.linspace(0, 2 * np.pi, 721)
    r, _, _ = dom.profile(tt)
    if not np.all(np.isfinite(r)) or np.min(r) <= 0:
        raise ConfigError(f"domain profile {expr!r} must be finite and positive (star-shaped about 0)")
    if abs(r[0] - r[-1]) > 1e-9 * max(1.0, abs(r[0])):
        raise ConfigError(f"domain profile {expr!r} is not 2 pi periodic")
    return dom


def disk_mesh(dom: StarDomain, n_boundary: int):
    """Points on scaled copies of the boundary curve, Delaunay-triangulated and clipped to the domain."""
    if n_boundary < 8:
        raise ConfigError("need at least 8 boundary points")
    n_rings = max(2, int(round(n_boundary / (2 * np.pi))))
    pts = [np.zeros((1, 2))]
    tb = 2 * np.pi * np.arange(n_boundary) / n_boundary
    rb, _, _ = dom.profile(tb)
    for i in range(1, n_rings):
        s = i / n_rings
        cnt = max(6, int(round(n_boundary * s)))
        t = 2 * np.pi * (np.arange(cnt) + 0.5 * (i % 2)) / cnt
        r, _, _ = dom.profile(t)
        pts.append(np.stack([s * r * np.cos(t), s * r * np.sin(t)], -1))
    interior = np.vstack(pts)
    boundary = np.stack([rb * np.cos(tb), rb * np.sin(tb)], -1)
    P = np.vstack([interior, boundary])
    bidx = np.arange(len(interior), len(P))
    tri = Delaunay(P).simplices
    c = P[tri].mean(axis=1)
    ang = np.arctan2(c[:, 1], c[:, 0]) % (2 * np.pi)
    rc, _, _ = dom.profile(ang)
    tri = tri[np.hypot(c[:, 0], c[:, 1]) < rc]
    # orient counter-clockwise
    d1 = P[tri[:, 1]] - P[tri[:, 0]]
    d2 = P[tri[:, 2]] - P[tri[:, 0]]
    cw = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    tri[cw] = tri[cw][:, ::-1]
    edges = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    bedges = uniq[counts == 1]
    expect = np.sort(np.stack([bidx, np.roll(bidx, -1)], -1), axis=1)
    if len(bedges) != len(expect) or not np.array_equal(np.unique(expect, axis=0), bedges):
        raise ConfigError("domain mesh does not follow the boundary curve; increase the density")
    return P, tri, bidx


def _steklov_level(dom: StarDomain, n_boundary: int):
    P, tri, bidx = disk_mesh(dom, n_boundary)
    n = len(P)
    e1 = P[tri[:, 1]] - P[tri[:, 0]]
    e2 = P[tri[:, 2]] - P[tri[:, 0]]
    G = np.stack([np.stack([np.sum(e1 * e1, -1), np.sum(e1 * e2, -1)], -1),
                  np.stack([np.sum(e1 * e2, -1), np.sum(e2 * e2, -1)], -1)], -2)
    area = 0.5 * np.sqrt(np.linalg.det(G))
    Dm = np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    Kloc = area[:, None, None] * np.einsum("ai,Fab,bj->Fij", Dm, np.linalg.inv(G), Dm)
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    K = sp.coo_matrix((Kloc.ravel(), (rows, cols)), shape=(n, n)).tocsc()
    K = 0.5 * (K + K.T)
    interior = np.setdiff1d(np.arange(n), bidx)
    Kii = K[interior][:, interior].tocsc()
    Kib = K[interior][:, bidx].toarray()
    Kbb = K[bidx][:, bidx].toarray()
    lu = spla.splu(Kii)
    S = Kbb - Kib.T @ lu.solve(Kib)
    S = 0.5 * (S + S.T)
    nb = len(bidx)
    Pb = P[bidx]
    L = np.linalg.norm(np.roll(Pb, -1, axis=0) - Pb, axis=1)
    Mb = np.zeros((nb, nb))
    j = np.arange(nb)
    jn = (j + 1) % nb
    np.add.at(Mb, (j, j), L / 3)
    np.add.at(Mb, (jn, jn), L / 3)
    np.add.at(Mb, (j, jn), L / 6)
    np.add.at(Mb, (jn, j), L / 6)
    try:
        vals, vecs = eigh(S, Mb, subset_by_index=[0, 2])
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"generalized eigenproblem failed: {exc}") from None
    h = float(np.max(L))
    return float(vals[1]), vals, vecs[:, 1], h, n


def steklov_p1(domain, density: int = 256, richardson: bool = True) -> EigenReport:
    """First nonzero Steklov eigenvalue against max sigma_1 of the boundary (the k = -1 form)."""
    dom = star_domain(domain)
    tq = 2 * np.pi * np.arange(4096) / 4096
    r, _, _ = dom.profile(tq)
    kappa = dom.curvature(tq)
    int_r2 = fsum_ordered(r * r) * (2 * np.pi / 4096)  # int X.nu ds = int rho^2 dt
    vol = 0.5 * int_r2
    max_s1 = float(np.max(kappa))
    violations = []
    if np.min(kappa) <= 0:
        violations.append("boundary curvature sigma_1 <= 0 somewhere")
    p, vals, _, h, nv = _steklov_level(dom, density)
    levels = [{"n_boundary": density, "h": h, "n_vertices": nv, "p1": p}]
    ext = rel = None
    if richardson:
        pc, _, _, hc, nvc = _steklov_level(dom, max(8, density // 2))
        levels.insert(0, {"n_boundary": max(8, density // 2), "h": hc, "n_vertices": nvc, "p1": pc})
        ext, rel = _richardson(pc, p)
    best = ext if ext is not None else p
    lhs = best * int_r2
    rhs = 2 * max_s1 * vol
    verdict, raw = _verdicts(best, max_s1, rel)
    notes = [f"int sigma_-1 = {int_r2!r}, 2 Vol = {2 * vol!r}, lowest pencil eigenvalue {vals[0]!r}"]
    if violations:
        notes.append("positive boundary curvature is the k = -1 hypothesis")
        verdict = "hypothesis_violation"
    return EigenReport(
        "steklov", dom.label, dict(dom.params, density=density), -1, p, max_s1, max_s1 - best, h, nv,
        verdict, raw, ext, rel, levels, lhs, rhs, None, None, violations, notes,
    )
