"""Rigidity probes: how far a surface is from a theorem's hypothesis and from being umbilic.

These are consistency probes, not proofs.  A probe records the oscillation of
the quantity a theorem assumes constant and the umbilicity defect of the
surface; on the test zoo a vanishing hypothesis defect should come with a
vanishing umbilicity defect.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import jet as J
from .ambient import VectorFieldSpec, conformal_field, default_field
from .curvature import newton_batch
from .errors import ConfigError, HypothesisViolation, SizeError
from .identities import r_values
from .immersion import Immersion
from .quadrature import QuadratureConfig, Sample, sample
from .weights import _evaluate, parse_weight

EPS_H = 1e-7
EPS_U = 1e-6
GUARD = 1e-300

VARIANTS = ("alex_r", "alex_u", "alex2", "alex3", "koh")


@dataclass
class RigidityProbe:
    variant: str
    surface: str
    params: dict
    hypothesis_defect: float
    umbilicity_defect: float
    sphere_center_estimate: Optional[list]
    hypothesis_holds: bool
    consistent: bool
    violations: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    kind: str = "probe"

    @property
    def hypothesis_ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        from .identities import _jsonable

        return _jsonable({
            "kind": self.kind,
            "variant": self.variant,
            "surface": self.surface,
            "params": self.params,
            "hypothesis_defect": self.hypothesis_defect,
            "umbilicity_defect": self.umbilicity_defect,
            "sphere_center_estimate": self.sphere_center_estimate,
            "hypothesis_holds": self.hypothesis_holds,
            "consistent": self.consistent,
            "violations": self.violations,
            "extras": self.extras,
            "notes": self.notes,
        })


def oscillation(values) -> float:
    """(max - min) / (|mean| + tiny): zero exactly when the node values are constant."""
    v = np.asarray(values, dtype=float).ravel()
    return float((np.max(v) - np.min(v)) / (abs(np.mean(v)) + GUARD))


def umbilicity_defect(shape_on) -> float:
    """max over nodes of |A - sigma_1 I|_F / (1 + |A|_F) for ON-frame shape operators (N, m, m)."""
    A = np.asarray(shape_on, dtype=float)
    m = A.shape[-1]
    s1 = np.trace(A, axis1=-2, axis2=-1) / m
    dev = A - s1[:, None, None] * np.eye(m)
    return float(np.max(np.linalg.norm(dev, axis=(-2, -1)) / (1.0 + np.linalg.norm(A, axis=(-2, -1)))))


def center_estimate(smp: Sample) -> Optional[np.ndarray]:
    """Area-weighted mean of X - nu / sigma_1 (flat hypersurfaces with outward normal)."""
    fr = smp.frame
    if not smp.imm.ambient.is_flat or not smp.imm.is_hypersurface:
        return None
    s1 = np.trace(fr.shape_on[:, 0], axis1=-2, axis2=-1) / fr.m
    if np.any(np.abs(s1) < 1e-12):
        return None
    pts = fr.x - fr.normals[:, 0] / s1[:, None]
    area = smp.integrate(1.0)
    return smp.integrate(pts) / area


def _fn_of(expr, var: str, values):
    """f and f' of a one-variable weight expression at the given values."""
    w = parse_weight(expr)
    if not w.names <= {var}:
        raise ConfigError(f"probe weight {expr!r} must depend on {var} only")
    vj = J.Jet(np.asarray(values, dtype=float), np.ones((1,) + np.shape(values)), np.zeros((1, 1) + np.shape(values)))
    out = _evaluate(w, {var: vj})
    if isinstance(out, J.Jet):
        return np.asarray(out.v, dtype=float), np.asarray(out.d[0], dtype=float)
    val = np.broadcast_to(np.asarray(out, dtype=float), np.shape(values)).copy()
    return val, np.zeros_like(val)


def _family_field(imm: Immersion) -> VectorFieldSpec:
    space = imm.ambient
    if space.is_flat:
        return conformal_field(space, "Position")
    return conformal_field(space, "PolarRadial")


def alexandrov_probe(imm: Immersion, weight="1", k: int = 1, variant: str = "alex_r", l: int = 1,
                     cfg: Optional[QuadratureConfig] = None, eps_h: float = EPS_H, eps_u: float = EPS_U,
                     strict: bool = False) -> RigidityProbe:
    """Probe the Alexandrov-type statements.

    alex_r: sigma_k f(r) constant; alex_u: sigma_k f(u) constant with u = Y.nu on a
    convex surface; alex2: f(r) sigma_k / sigma_l constant; alex3: the same in
    de Sitter space.
    """
    if variant not in ("alex_r", "alex_u", "alex2", "alex3"):
        raise ConfigError(f"unknown probe variant {variant!r}")
    space = imm.ambient
    fam = space.family
    if variant == "alex3" and fam != "de_sitter":
        raise ConfigError("alex3 probes surfaces in de Sitter space")
    if variant != "alex3" and fam not in ("flat", "sphere", "hyperbolic"):
        raise ConfigError(f"{variant} probes surfaces in R^n, S^n or H^n")
    if not imm.is_hypersurface:
        raise ConfigError("rigidity probes need a hypersurface")
    m = imm.m
    if not 1 <= k <= m:
        raise SizeError(f"k = {k} outside 1..{m}")
    if variant in ("alex2", "alex3") and not 1 <= l < k:
        raise SizeError(f"need 1 <= l < k, got l = {l}, k = {k}")

    smp = sample(imm, cfg)
    fr = smp.frame
    A = fr.shape_on[:, 0]
    fld = _family_field(imm)
    pole = space.default_pole()
    notes, violations = [], []
    if variant in ("alex2", "alex3"):
        s1 = np.trace(A, axis1=-2, axis2=-1)
        if np.all(s1 < 0):
            A = -A
            notes.append("normal inverted so that sigma_1 > 0")
    _, sig, _, _ = newton_batch(A)
    r = r_values(space, pole, fr.x)
    if fam == "sphere" and np.max(r) >= np.pi / 2:
        violations.append("surface leaves the open hemisphere")

    if variant == "alex_u":
        u = fr.inner(fld(fr.x), fr.normals[:, 0])
        f, fp = _fn_of(weight, "u", u)
        if np.any(np.linalg.eigvalsh(A)[:, 0] <= 0):
            violations.append("surface not convex (A^nu not positive definite at some node)")
        qty = sig[:, k] * f
    else:
        f, fp = _fn_of(weight, "r", r)
        if variant == "alex_r":
            qty = sig[:, k] * f
        else:
            if np.any(sig[:, l] <= 0):
                violations.append(f"sigma_{l} <= 0 at some node")
            qty = f * sig[:, k] / np.where(sig[:, l] == 0, np.nan, sig[:, l])
    if np.any(f <= 0):
        violations.append("f <= 0 at some node")
    if np.any(fp < 0):
        violations.append("f' < 0 at some node")

    return _finish(variant, imm, smp, qty, A, eps_h, eps_u, violations, notes, {}, strict)


def koh_probe(imm: Immersion, fld: Optional[VectorFieldSpec] = None, cfg: Optional[QuadratureConfig] = None,
              eps_h: float = EPS_H, eps_u: float = EPS_U, strict: bool = False) -> RigidityProbe:
    """Probe: sigma_2 / sigma_1 constant should force umbilicity (and constant sigma_1)."""
    if not imm.is_hypersurface:
        raise ConfigError("rigidity probes need a hypersurface")
    if imm.m < 2:
        raise SizeError("sigma_2 needs m >= 2")
    fld = fld or default_field(imm.ambient)
    smp = sample(imm, cfg)
    fr = smp.frame
    A = fr.shape_on[:, 0]
    notes, violations = [], []
    if np.all(np.trace(A, axis1=-2, axis2=-1) < 0):
        A = -A
        notes.append("normal inverted so that sigma_1 > 0")
    _, sig, _, _ = newton_batch(A)
    if np.any(sig[:, 1] <= 0):
        violations.append("sigma_1 <= 0 at some node")
    alpha = np.asarray(fld.factor(fr.x))
    if np.any(alpha <= 0):
        violations.append("conformal factor alpha <= 0 at some node")
    qty = sig[:, 2] / np.where(sig[:, 1] == 0, np.nan, sig[:, 1])
    extras = {"sigma1_oscillation": oscillation(sig[:, 1])}
    return _finish("koh", imm, smp, qty, A, eps_h, eps_u, violations, notes, extras, strict)


def _finish(variant, imm, smp, qty, A, eps_h, eps_u, violations, notes, extras, strict) -> RigidityProbe:
    if violations and strict:
        raise HypothesisViolation("; ".join(violations), {"variant": variant})
    hyp = oscillation(qty) if np.all(np.isfinite(qty)) else float("inf")
    umb = umbilicity_defect(A)
    holds = hyp < eps_h
    consistent = (not holds) or umb < eps_u
    if not holds:
        notes.append("hypothesis fails; the statement is silent")
    c = center_estimate(smp)
    return RigidityProbe(
        variant, imm.label, dict(imm.params), hyp, umb, None if c is None else c.tolist(),
        holds, consistent, violations, extras, notes,
    )


def epsilon_sweep(factory: Callable[[float], Immersion], eps_values: Sequence[float],
                  probe: Callable[[Immersion], RigidityProbe]) -> list:
    """Rows (eps, hypothesis_defect, umbilicity_defect) for a family of surfaces."""
    rows = []
    for eps in eps_values:
        p = probe(factory(eps))
        rows.append({"eps": float(eps), "hypothesis_defect": p.hypothesis_defect,
                     "umbilicity_defect": p.umbilicity_defect})
    return rows


def strictly_increasing(values) -> bool:
    v = list(values)
    return all(b > a for a, b in zip(v, v[1:]))
