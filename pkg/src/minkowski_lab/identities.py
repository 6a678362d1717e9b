"""Both sides of the weighted integral identities, closure identities and inequality chains."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import comb
from typing import Callable, Optional

import numpy as np

from . import jet as J
from .ambient import AmbientSpace, VectorFieldSpec, conformal_field, default_field, inner
from .curvature import epsilon_oracle, multi_normal_batch, newton_batch, parallel_check
from .errors import ConfigError, HypothesisViolation, PreconditionError, SizeError
from .immersion import Immersion, PointFrame
from .quadrature import QuadratureConfig, Sample, decreasing, refinement_configs, sample
from .weights import Weight, parse_weight, weight_values

DEFAULT_TOL = 1e-7
PARALLEL_TOL = 1e-8
HEMISPHERE_MARGIN = 1e-3
R_MIN = 1e-6


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [float(x) for x in v.ravel()] if v.ndim else float(v)
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class IdentityReport:
    identity_id: str
    surface: str
    params: dict
    k: Optional[int]
    f: str
    lhs: object
    rhs_terms: dict
    residual: float
    relative_residual: float
    resolution: list
    tol: float
    verdict: str
    refinement: list = field(default_factory=list)
    monotone: bool = True
    notes: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return _jsonable({
            "identity_id": self.identity_id,
            "surface": self.surface,
            "params": self.params,
            "k": self.k,
            "f": self.f,
            "lhs": self.lhs,
            "rhs_terms": self.rhs_terms,
            "residual": self.residual,
            "relative_residual": self.relative_residual,
            "resolution": list(self.resolution),
            "tol": self.tol,
            "verdict": self.verdict,
            "refinement": self.refinement,
            "monotone": self.monotone,
            "notes": self.notes,
        })


@dataclass
class ChainReport:
    chain_id: str
    surface: str
    params: dict
    k: int
    values: list
    slacks: list
    min_slack: float
    equality_flag: bool
    tol: float
    verdict: str
    violations: list = field(default_factory=list)

    @property
    def hypothesis_ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return _jsonable({
            "chain_id": self.chain_id,
            "surface": self.surface,
            "params": self.params,
            "k": self.k,
            "values": self.values,
            "slacks": self.slacks,
            "min_slack": self.min_slack,
            "equality_flag": self.equality_flag,
            "tol": self.tol,
            "verdict": self.verdict,
            "violations": self.violations,
        })


# ---------------------------------------------------------------------------
# shared plumbing

def _residuals(lhs, terms: dict):
    lhs = np.asarray(lhs, dtype=float)
    rhs = sum((np.asarray(v, dtype=float) for v in terms.values()), np.zeros_like(lhs))
    res = float(np.max(np.abs(lhs - rhs))) if lhs.ndim else float(abs(lhs - rhs))
    scale = float(np.max(np.abs(lhs))) + float(np.max(np.abs(rhs))) + 1.0
    return res, res / scale


def _run(identity_id: str, imm: Immersion, evaluate: Callable[[Sample], tuple], cfg, tol, refine: bool,
         f_label: str = "", k=None, notes: str = "", area_scaled: bool = False) -> IdentityReport:
    """Evaluate at the target resolution (and two coarser ones when refining).

    With ``area_scaled`` the verdict compares the absolute residual with tol * Area.
    """
    cfg = cfg or QuadratureConfig()
    levels = refinement_configs(cfg) if refine else [cfg]
    rels, last = [], None
    for c in levels:
        smp = sample(imm, c)
        lhs, terms = evaluate(smp)
        res, rel = _residuals(lhs, terms)
        rels.append(res / smp.integrate(1.0) if area_scaled else rel)
        last = (smp, lhs, terms, res, rel)
    smp, lhs, terms, res, rel = last
    mono = decreasing(rels) if refine else True
    metric = rels[-1]
    verdict = "pass" if (np.isfinite(metric) and metric < tol and mono) else "fail"
    return IdentityReport(
        identity_id, imm.label, dict(imm.params), k, f_label, lhs, terms, res, rel,
        list(smp.grid.resolution), tol, verdict, rels, mono, notes,
    )


def _binom_coef(m: int, k: int) -> float:
    """1 / ((m - k) C(m, k)); raises when k is outside 0..m-1."""
    if not 0 <= k <= m - 1:
        raise SizeError(f"k = {k} outside 0..{m - 1}")
    return 1.0 / ((m - k) * comb(m, k))


def _hyper_packet(fr: PointFrame):
    return newton_batch(fr.shape_on[:, 0])


def _pole(space: AmbientSpace, fld: Optional[VectorFieldSpec]):
    if fld is not None:
        for key in ("pole", "origin"):
            if key in fld.params:
                return np.asarray(fld.params[key], dtype=float)
    return space.default_pole()


def r_values(space: AmbientSpace, pole, X) -> np.ndarray:
    """Vectorised polar distance from the pole (slice parameter on de Sitter space)."""
    X = np.asarray(X, dtype=float)
    fam = space.family
    if fam == "flat":
        d = X - pole
        return np.sqrt(np.abs(inner(space, d, d)))
    t = inner(space, pole, X)
    if fam == "sphere":
        return np.arccos(np.clip(t, -1.0, 1.0))
    if fam == "hyperbolic":
        return np.arccosh(np.maximum(-t, 1.0))
    if fam == "de_sitter":
        return np.arcsinh(-t)
    raise ConfigError(f"no polar distance on {space}")


# ---------------------------------------------------------------------------
# Hsiung-Minkowski identities

def hm_identity(imm: Immersion, fld: Optional[VectorFieldSpec] = None, weight="1", k: int = 0,
                cfg: Optional[QuadratureConfig] = None, tol: float = DEFAULT_TOL, refine: bool = True) -> IdentityReport:
    """int alpha f sigma_k = int f sigma_{k+1} nu.Y - c int <T_k grad f, Y^T>.

    Hypersurfaces use the scalar form; in higher codimension k must be even and
    sigma_{k+1}.Y is the contraction of the vector-valued curvature with Y.
    """
    fld = fld or default_field(imm.ambient)
    w = parse_weight(weight)
    m = imm.m
    c = _binom_coef(m, k)

    if imm.is_hypersurface:
        def evaluate(smp: Sample):
            fr = smp.frame
            Y = fld(fr.x)
            alpha = fld.factor(fr.x)
            f, gradf = weight_values(w, imm, fr, fld)
            _, sig, _, T = _hyper_packet(fr)
            yn = fr.inner(Y, fr.normals[:, 0])
            tg = np.einsum("Na,Nab,Nb->N", fr.tangent_coords(gradf), T[:, k], fr.tangent_coords(Y))
            lhs = smp.integrate(alpha * f * sig[:, k], "alpha f sigma_k")
            terms = {
                "support": smp.integrate(f * sig[:, k + 1] * yn, "f sigma_k+1 nu.Y"),
                "gradient": -c * smp.integrate(tg, "<T_k grad f, Y^T>"),
            }
            return lhs, terms
    else:
        if k % 2:
            raise SizeError("in codimension >= 2 the scalar identity needs even k")

        def evaluate(smp: Sample):
            fr = smp.frame
            Y = fld(fr.x)
            alpha = fld.factor(fr.x)
            f, gradf = weight_values(w, imm, fr, fld)
            Hk, Tk = paired_curvature(fr, k)
            Hk1, _ = paired_curvature(fr, k + 1, last=fr.normal_part(Y))
            tg = np.einsum("Na,Nab,Nb->N", fr.tangent_coords(gradf), Tk, fr.tangent_coords(Y))
            lhs = smp.integrate(alpha * f * Hk / comb(m, k), "alpha f sigma_k")
            terms = {
                "support": smp.integrate(f * Hk1 / comb(m, k + 1), "f sigma_k+1 . Y"),
                "gradient": -c * smp.integrate(tg, "<T_k grad f, Y^T>"),
            }
            return lhs, terms

    return _run("hm_identity", imm, evaluate, cfg, tol, refine, w.label, k)


def paired_curvature(fr: PointFrame, k: int, last=None):
    """Scalar H_k and T_k (even k) built from the inner products A_ij . A_kl over the normal frame.

    With ``last`` (an ambient normal vector per node) the final slot is A . last,
    giving H_k contracted with that vector; k is then odd overall.
    """
    c = fr.normals.shape[1]
    m = fr.m
    npairs = k // 2 if last is None else (k - 1) // 2
    if last is not None and k % 2 == 0:
        raise SizeError("a contracted slot needs odd k")
    if last is None and k % 2:
        raise SizeError("scalar curvature needs even k")
    N = fr.n_nodes
    if k > m:
        return np.zeros(N), np.zeros((N, m, m))
    extra = [] if last is None else [fr.shape_op_for(last)]
    H = np.zeros(N)
    T = np.zeros((N, m, m))
    for betas in product(range(c), repeat=npairs):
        w = float(np.prod([fr.eps[b] for b in betas])) if betas else 1.0
        mats = []
        for b in betas:
            mats += [fr.shape_on[:, b], fr.shape_on[:, b]]
        mats += extra
        h, t = epsilon_oracle(mats, m) if mats else (np.ones(N), np.broadcast_to(np.eye(m), (N, m, m)))
        H = H + w * h
        T = T + w * t
    return H, T


def hm_multi_normal(imm: Immersion, normals, fld: Optional[VectorFieldSpec] = None, weight="1",
                    cfg: Optional[QuadratureConfig] = None, tol: float = 1e-8, refine: bool = True,
                    parallel_tol: float = PARALLEL_TOL) -> IdentityReport:
    """int alpha f sigma_k(nu_1..nu_k) = int f sigma_{k+1}(nu_1..nu_k, Y^perp) - c int <T_k(..) grad f, Y^T>.

    ``normals`` are indices into the immersion's normal frame.  Every listed
    normal must be parallel in the normal bundle.  k = m is evaluated literally:
    sigma_{m+1} and T_m vanish as empty delta sums while the coefficient
    1/((m-k) C(m,k)) is undefined, so the gradient term is taken as zero and
    the report carries a note.
    """
    fld = fld or default_field(imm.ambient)
    w = parse_weight(weight)
    normals = [int(b) for b in normals]
    k = len(normals)
    m = imm.m
    if imm.codim < 2:
        raise ConfigError("hm_multi_normal needs codimension >= 2")
    if k > m:
        raise SizeError(f"k = {k} exceeds m = {m}")
    for b in sorted(set(normals)):
        val = parallel_check(imm, b)
        if val > parallel_tol:
            raise PreconditionError(f"normal {b} is not parallel in the normal bundle (parallel_check = {val:.3e})")
    notes = ""
    if k <= m - 1:
        c = 1.0 / ((m - k) * comb(m, k))
    else:
        c = 0.0
        notes = f"k = {k} = m: outside 0 <= k <= m-1; coefficient 1/((m-k)C(m,k)) undefined, T_m = 0"

    def evaluate(smp: Sample):
        fr = smp.frame
        Y = fld(fr.x)
        alpha = fld.factor(fr.x)
        f, gradf = weight_values(w, imm, fr, fld)
        if k:
            Hk, Tk = multi_normal_batch(fr, normals)
        else:
            Hk, Tk = np.ones(fr.n_nodes), np.broadcast_to(np.eye(m), (fr.n_nodes, m, m))
        if k + 1 <= m:
            Hk1, _ = multi_normal_batch(fr, normals + [fr.normal_part(Y)])
            s1 = Hk1 / comb(m, k + 1)
        else:
            s1 = np.zeros(fr.n_nodes)
        tg = np.einsum("Na,Nab,Nb->N", fr.tangent_coords(gradf), Tk, fr.tangent_coords(Y))
        lhs = smp.integrate(alpha * f * Hk / comb(m, k), "alpha f sigma_k(nu..)")
        terms = {
            "support": smp.integrate(f * s1, "f sigma_k+1(nu.., Y^perp)"),
            "gradient": -c * smp.integrate(tg, "<T_k(nu..) grad f, Y^T>"),
        }
        return lhs, terms

    return _run("hm_multi_normal", imm, evaluate, cfg, tol, refine, w.label, k, notes)


def multi_normal_pointwise(imm: Immersion, normals, fld: Optional[VectorFieldSpec] = None,
                           cfg: Optional[QuadratureConfig] = None):
    """Node values of alpha sigma_k(nu..) and sigma_{k+1}(nu.., Y^perp)."""
    fld = fld or default_field(imm.ambient)
    normals = [int(b) for b in normals]
    k, m = len(normals), imm.m
    fr = sample(imm, cfg).frame
    Y = fld(fr.x)
    Hk, _ = multi_normal_batch(fr, normals)
    Hk1, _ = multi_normal_batch(fr, normals + [fr.normal_part(Y)])
    return fld.factor(fr.x) * Hk / comb(m, k), Hk1 / comb(m, k + 1)


# ---------------------------------------------------------------------------
# closure

def closure(imm: Immersion, k: int, cfg: Optional[QuadratureConfig] = None, tol: float = 1e-8) -> IdentityReport:
    """int sigma_k nu = 0 for hypersurfaces of flat space; in higher codimension,
    int sigma_k = 0 for odd k with sigma_k the normal-vector-valued curvature."""
    space = imm.ambient
    if not space.is_flat:
        raise ConfigError("closure identities need a flat ambient space")
    m = imm.m
    if not 0 <= k <= m:
        raise SizeError(f"k = {k} outside 0..{m}")

    if imm.is_hypersurface:
        def evaluate(smp: Sample):
            fr = smp.frame
            _, sig, _, _ = _hyper_packet(fr)
            vec = smp.integrate(sig[:, k, None] * fr.normals[:, 0], "sigma_k nu")
            return vec, {"zero": np.zeros_like(vec)}
    else:
        if k % 2 == 0:
            raise SizeError("vector-valued closure in codimension >= 2 needs odd k")

        def evaluate(smp: Sample):
            fr = smp.frame
            vec_nodes = np.zeros_like(fr.x)
            for g in range(fr.normals.shape[1]):
                h, _ = paired_curvature(fr, k, last=fr.normals[:, g])
                vec_nodes += fr.eps[g] * h[:, None] * fr.normals[:, g]
            vec = smp.integrate(vec_nodes / comb(m, k), "sigma_k (vector)")
            return vec, {"zero": np.zeros_like(vec)}

    return _run("closure", imm, evaluate, cfg, tol, refine=False, k=k, area_scaled=True)


# ---------------------------------------------------------------------------
# weighted volumes and chains

def weighted_volume(imm: Immersion, fld: Optional[VectorFieldSpec] = None,
                    cfg: Optional[QuadratureConfig] = None) -> float:
    """(1/n) int_Sigma Y.nu, which equals int_Omega alpha for the enclosed region."""
    if not imm.embedded:
        raise ConfigError(f"{imm.label} is not embedded; the enclosed region is undefined")
    if not imm.is_hypersurface:
        raise ConfigError("weighted volume needs a hypersurface")
    fld = fld or default_field(imm.ambient)
    smp = sample(imm, cfg)
    fr = smp.frame
    n = imm.ambient.intrinsic_dim
    return smp.integrate(fr.inner(fld(fr.x), fr.normals[:, 0]), "Y.nu") / n


CHAIN_VARIANTS = {
    "euc_area": "flat",
    "euc_volume": "flat",
    "sphere_tan": "sphere",
    "sphere_sin": "sphere",
    "sphere_volume": "sphere",
    "hyper_sinh": "hyperbolic",
    "hyper_volume": "hyperbolic",
}


def chain(imm: Immersion, k: int, variant: str = "euc_area", cfg: Optional[QuadratureConfig] = None,
          tol: float = 1e-9, p: float = 0.0, strict: bool = False) -> ChainReport:
    """Ordered integrals of an inequality chain and their successive slacks.

    Hypothesis failures (sigma_k <= 0 somewhere, the surface touching the
    pole, leaving the hemisphere) produce a report with verdict
    "hypothesis_violation"; with ``strict`` they raise HypothesisViolation.
    """
    if variant not in CHAIN_VARIANTS:
        raise ConfigError(f"unknown chain variant {variant!r}; known: {sorted(CHAIN_VARIANTS)}")
    space = imm.ambient
    fam = CHAIN_VARIANTS[variant]
    if space.family != fam:
        raise ConfigError(f"chain {variant!r} needs a {fam} ambient, got {space}")
    if not imm.is_hypersurface:
        raise ConfigError("chains need a hypersurface")
    m = imm.m
    if not 1 <= k <= m:
        raise SizeError(f"k = {k} outside 1..{m}")
    if variant.endswith("volume") and not imm.embedded:
        raise ConfigError(f"{imm.label} is not embedded; volume chains need an enclosed region")

    fld = conformal_field(space, "PolarRadial")
    pole = _pole(space, fld)
    smp = sample(imm, cfg)
    fr = smp.frame
    _, sig, _, _ = _hyper_packet(fr)
    r = r_values(space, pole, fr.x)

    violations = []
    bad = np.where(sig[:, k] <= 0)[0]
    if bad.size:
        i = int(bad[np.argmin(sig[bad, k])])
        violations.append(f"sigma_{k} <= 0 at {bad.size} nodes (min {sig[i, k]:.3e} at u={fr.u[i].tolist()})")
    if np.min(r) <= R_MIN:
        violations.append(f"surface meets the pole (min r = {np.min(r):.3e})")
    if fam == "sphere" and np.max(r) > np.pi / 2 - HEMISPHERE_MARGIN:
        violations.append(f"surface leaves the open hemisphere (max r = {np.max(r):.6f})")

    integ = smp.integrate
    values = []
    if variant == "euc_area":
        values = [integ(sig[:, j] * r ** (p + j)) for j in range(k + 1)]
    elif variant == "euc_volume":
        values = [integ(fr.inner(fr.x - pole, fr.normals[:, 0]))]
        values += [integ(sig[:, j] * r ** (j + 1)) for j in range(k + 1)]
    elif variant == "sphere_tan":
        values = [integ(sig[:, j] * np.tan(r) ** j) for j in range(k + 1)]
    elif variant == "sphere_sin":
        values = [integ(np.cos(r))]
        values += [integ(sig[:, j] * np.tan(r) ** (j - 1) * np.sin(r)) for j in range(1, k + 1)]
    elif variant == "sphere_volume":
        values = [integ(fr.inner(fld(fr.x), fr.normals[:, 0]))]
        values += [integ(sig[:, j] * np.tan(r) ** (j + 1) * np.cos(r)) for j in range(k + 1)]
    elif variant == "hyper_sinh":
        values = [integ(np.cosh(r))]
        values += [integ(sig[:, j] * np.tanh(r) ** (j - 1) * np.sinh(r)) for j in range(1, k + 1)]
    elif variant == "hyper_volume":
        values = [integ(fr.inner(fld(fr.x), fr.normals[:, 0]))]
        values += [integ(sig[:, j] * np.tanh(r) ** (j + 1) * np.cosh(r)) for j in range(k + 1)]

    slacks = [b - a for a, b in zip(values, values[1:])]
    min_slack = float(min(slacks)) if slacks else 0.0
    equality = bool(all(abs(s) < tol for s in slacks))
    params = dict(imm.params)
    if variant == "euc_area":
        params["p"] = p
    if violations:
        if strict:
            raise HypothesisViolation("; ".join(violations), {"chain": variant, "k": k})
        verdict = "hypothesis_violation"
    else:
        verdict = "pass" if min_slack >= -tol else "fail"
    return ChainReport(variant, imm.label, params, k, values, slacks, min_slack, equality, tol, verdict, violations)


# ---------------------------------------------------------------------------
# pseudo-sphere vector identity

def pseudo_sphere_vector_identity(imm: Immersion, weight="1", k: int = 0, cfg: Optional[QuadratureConfig] = None,
                                  tol: float = DEFAULT_TOL, refine: bool = True, pole=None) -> IdentityReport:
    """int f sigma_k X + mu int f sigma_{k+1} nu - (mu c) int T_k(grad f) = 0 in R^{p,q}."""
    space = imm.ambient
    if space.is_flat:
        raise ConfigError("the vector identity needs a pseudo-sphere ambient")
    if not imm.is_hypersurface:
        raise ConfigError("the vector identity needs a hypersurface")
    w = parse_weight(weight)
    m = imm.m
    c = _binom_coef(m, k)
    mu = space.mu
    pole = space.default_pole() if pole is None else np.asarray(pole, dtype=float)
    fld = conformal_field(space, "PolarRadial", pole=pole)

    def evaluate(smp: Sample):
        fr = smp.frame
        f, gradf = weight_values(w, imm, fr, fld, pole)
        _, sig, _, T = _hyper_packet(fr)
        tg_on = np.einsum("Nab,Nb->Na", T[:, k], fr.tangent_coords(gradf))
        tg = np.einsum("Na,Nan->Nn", tg_on, fr.E)
        lhs = smp.integrate((f * sig[:, k])[:, None] * fr.x, "f sigma_k X")
        terms = {
            "normal": -mu * smp.integrate((f * sig[:, k + 1])[:, None] * fr.normals[:, 0], "f sigma_k+1 nu"),
            "gradient": mu * c * smp.integrate(tg, "T_k grad f"),
        }
        return lhs, terms

    return _run("vector_identity", imm, evaluate, cfg, tol, refine, w.label, k)


# ---------------------------------------------------------------------------
# divergence formula

@dataclass(frozen=True)
class TensorSpec:
    """Symmetric 2-tensor on the surface: a Newton tensor T_k, the metric, or a random field.

    The random field is S_ij = d_i phi^T B(x) d_j phi with B(x) = B0 + sum_l x_l B_l.
    """

    kind: str  # "newton", "identity", "random"
    k: int = 0
    seed: int = 0

    @property
    def label(self) -> str:
        if self.kind == "newton":
            return f"T{self.k}"
        if self.kind == "random":
            return f"random(seed={self.seed})"
        return "identity"


def parse_tensor(spec) -> TensorSpec:
    if isinstance(spec, TensorSpec):
        return spec
    if isinstance(spec, dict):
        kind = spec.get("kind", "newton")
        return TensorSpec(kind, int(spec.get("k", 0)), int(spec.get("seed", 0)))
    if isinstance(spec, str):
        s = spec.strip()
        if s in ("identity", "g", "metric"):
            return TensorSpec("identity")
        if s == "random":
            return TensorSpec("random")
        if s.startswith("T") and s[1:].isdigit():
            return TensorSpec("newton", int(s[1:]))
    raise ConfigError(f"cannot interpret tensor spec {spec!r}")


def _random_B(n: int, seed: int):
    rng = np.random.default_rng(seed)
    mats = rng.normal(size=(n + 1, n, n))
    return 0.5 * (mats + np.swapaxes(mats, -1, -2))


def _tensor_fields(ts: TensorSpec, imm: Immersion, fr: PointFrame):
    """Covariant components S_ij and (div S)_j in the coordinate basis."""
    s = imm.ambient.signs
    m = imm.m
    N = fr.n_nodes
    if ts.kind == "newton":
        if not imm.is_hypersurface:
            raise ConfigError("Newton tensors in the divergence formula need a hypersurface")
        if ts.k > m or ts.k < 0:
            raise SizeError(f"T_{ts.k} undefined for m = {m}")
        if ts.k == m:
            T_on = np.zeros((N, m, m))  # Cayley-Hamilton: H_m I - A T_{m-1} = 0
        else:
            T_on = _hyper_packet(fr)[3][:, ts.k]
        L = fr.chol
        S = np.einsum("Nia,Nab,Njb->Nij", L, T_on, L)
        return S, np.zeros((N, m))  # div T_k = 0 in constant curvature
    n = imm.ambient.ambient_dim
    if ts.kind == "identity":
        B0 = np.diag(s)
        Bl = np.zeros((n, n, n))
    elif ts.kind == "random":
        allB = _random_B(n, ts.seed)
        B0, Bl = allB[0], allB[1:]
    else:
        raise ConfigError(f"unknown tensor kind {ts.kind!r}")
    x, d1, d2 = fr.jet.x, fr.jet.d1, fr.jet.d2
    B = B0 + np.einsum("Nl,lab->Nab", x, Bl)
    S = np.einsum("Nia,Nab,Njb->Nij", d1, B, d1)
    dB = np.einsum("Nkl,lab->Nkab", d1, Bl)  # derivative of B along d_k
    dS = (
        np.einsum("Nkia,Nab,Njb->Nkij", d2, B, d1)
        + np.einsum("Nia,Nab,Nkjb->Nkij", d1, B, d2)
        + np.einsum("Nia,Nkab,Njb->Nkij", d1, dB, d1)
    )
    gam = np.einsum("Nlp,Npn,Nkin->Nlki", fr.g_inv, d1 * s, d2)  # Gamma^l_{ki}
    cov = dS - np.einsum("Nlki,Nlj->Nkij", gam, S) - np.einsum("Nlkj,Nil->Nkij", gam, S)
    div = np.einsum("Nki,Nkij->Nj", fr.g_inv, cov)
    return S, div


def divergence_terms(imm: Immersion, fr: PointFrame, ts: TensorSpec, w: Weight, fld: VectorFieldSpec):
    """Node values of the four terms of div(f T(Y^T)) in coordinates."""
    s = imm.ambient.signs
    S, divS = _tensor_fields(ts, imm, fr)
    gi = fr.g_inv
    d1, d2 = fr.jet.d1, fr.jet.d2
    f, gradf = weight_values(w, imm, fr, fld)
    Y = fld(fr.x)
    grad_c = np.einsum("Nij,Njn,Nn->Ni", gi, d1 * s, gradf)
    yt_c = np.einsum("Nij,Njn,Nn->Ni", gi, d1 * s, Y)
    # derivative of Y along the surface, from the field evaluated on jets
    params = J.Jet.variables(fr.u.T)
    dY = J.stack_grad(fld.evaluator(imm.map(params)))  # (N, m, n)
    Lie = np.einsum("Nkn,Nln->Nkl", dY * s, d1)
    Lie = Lie + np.swapaxes(Lie, -1, -2)
    Yperp = Y - np.einsum("Ni,Nin->Nn", yt_c, d1)
    h = -np.einsum("Nkln,Nn->Nkl", d2 * s, Yperp)
    Sup = np.einsum("Nik,Njl,Nij->Nkl", gi, gi, S)
    t1 = np.einsum("Nij,Ni,Nj->N", S, grad_c, yt_c)
    t2 = f * np.einsum("Nj,Nj->N", divS, yt_c)
    t3 = 0.5 * f * np.einsum("Nkl,Nkl->N", Sup, Lie)
    t4 = -f * np.einsum("Nkl,Nkl->N", Sup, h)
    return {"gradient": t1, "divergence": t2, "lie": t3, "normal": t4}


def divergence_residual(imm: Immersion, tensor="T1", weight="1", fld: Optional[VectorFieldSpec] = None,
                        cfg: Optional[QuadratureConfig] = None, tol: float = 1e-8, refine: bool = True) -> IdentityReport:
    """|int div(f T(Y^T))| from the four-term pointwise formula; must vanish on closed surfaces."""
    fld = fld or default_field(imm.ambient)
    ts = parse_tensor(tensor)
    w = parse_weight(weight)

    def evaluate(smp: Sample):
        terms = divergence_terms(imm, smp.frame, ts, w, fld)
        return 0.0, {name: smp.integrate(v, name) for name, v in terms.items()}

    rep = _run("divergence_residual", imm, evaluate, cfg, tol, refine, w.label, ts.k if ts.kind == "newton" else None,
               area_scaled=True)
    rep.params = dict(rep.params, tensor=ts.label, field=fld.label)
    return rep
