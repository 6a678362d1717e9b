"""Tensor-product quadrature over parameter domains, surface gradients and refinement tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import jet as J
from .ambient import polar
from .errors import ConfigError, QuadratureError
from .immersion import Immersion, PointFrame, frames

NOISE_FLOOR = 1e-13


@dataclass(frozen=True)
class QuadratureConfig:
    interval_nodes: int = 64
    periodic_nodes: int = 128

    def scaled(self, factor: float) -> "QuadratureConfig":
        return QuadratureConfig(
            max(2, int(round(self.interval_nodes * factor))),
            max(2, int(round(self.periodic_nodes * factor))),
        )

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "QuadratureConfig":
        if d is None:
            return cls()
        unknown = set(d) - {"interval_nodes", "periodic_nodes"}
        if unknown:
            raise ConfigError(f"unknown quadrature keys {sorted(unknown)}")
        cfg = cls(int(d.get("interval_nodes", 64)), int(d.get("periodic_nodes", 128)))
        if cfg.interval_nodes < 1 or cfg.periodic_nodes < 1:
            raise ConfigError("quadrature node counts must be positive")
        return cfg

    def to_dict(self) -> dict:
        return {"interval_nodes": self.interval_nodes, "periodic_nodes": self.periodic_nodes}


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    nodes: np.ndarray  # (N, m), C order over axes
    weights: np.ndarray  # (N,)
    resolution: tuple
    rules: tuple


def axis_rule(kind: str, a: float, b: float, n: int):
    """Nodes and weights of one axis: Gauss-Legendre on intervals, trapezoid on periods."""
    if kind == "periodic":
        h = (b - a) / n
        return a + h * np.arange(n), np.full(n, h)
    if kind == "interval":
        x, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (b - a)
        return a + half * (x + 1.0), half * w
    raise ConfigError(f"unknown axis kind {kind!r}")


def make_grid(imm: Immersion, cfg: Optional[QuadratureConfig] = None) -> QuadratureGrid:
    cfg = cfg or QuadratureConfig()
    xs, ws, res, rules = [], [], [], []
    for ax in imm.axes:
        n = cfg.periodic_nodes if ax.periodic else cfg.interval_nodes
        x, w = axis_rule(ax.kind, ax.a, ax.b, n)
        xs.append(x)
        ws.append(w)
        res.append(n)
        rules.append("trapezoid" if ax.periodic else "gauss_legendre")
    mesh = np.meshgrid(*xs, indexing="ij")
    wmesh = np.meshgrid(*ws, indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wmesh], axis=-1), axis=-1)
    return QuadratureGrid(nodes, weights, tuple(res), tuple(rules))


@dataclass(eq=False)
class Sample:
    """An immersion evaluated on a grid: frames at every node plus the grid."""

    imm: Immersion
    grid: QuadratureGrid
    frame: PointFrame
    cache: dict = field(default_factory=dict)

    @property
    def dA(self) -> np.ndarray:
        return self.grid.weights * self.frame.sqrt_det_g

    def integrate(self, values, name: str = "integrand"):
        return integrate_values(values, self, name)


def sample(imm: Immersion, cfg: Optional[QuadratureConfig] = None) -> Sample:
    grid = make_grid(imm, cfg)
    return Sample(imm, grid, frames(imm, grid.nodes))


def fsum_ordered(values) -> float:
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def integrate_values(values, smp: Sample, name: str = "integrand"):
    """sum_nodes w * value * sqrt(det g) with exactly rounded summation in node order."""
    v = np.asarray(values, dtype=float)
    dA = smp.dA
    if v.ndim == 0:
        v = np.full(dA.shape, float(v))
    if v.shape[0] != dA.shape[0]:
        raise QuadratureError(f"{name}: expected {dA.shape[0]} node values, got {v.shape[0]}")
    bad = ~np.isfinite(v.reshape(v.shape[0], -1)).all(axis=1)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise QuadratureError(f"{name}: non-finite value at node {i} (u={smp.grid.nodes[i].tolist()})")
    if v.ndim == 1:
        return fsum_ordered(v * dA)
    weighted = v * dA.reshape((-1,) + (1,) * (v.ndim - 1))
    flat = weighted.reshape(v.shape[0], -1)
    out = np.array([fsum_ordered(flat[:, j]) for j in range(flat.shape[1])])
    return out.reshape(v.shape[1:])


def integrate(imm: Immersion, grid_or_cfg, integrand: Callable[[PointFrame], np.ndarray], name: str = "integrand"):
    """Integrate ``integrand(frame)`` (scalar or vector per node) over the immersion."""
    if isinstance(grid_or_cfg, Sample):
        smp = grid_or_cfg
    elif isinstance(grid_or_cfg, QuadratureGrid):
        smp = Sample(imm, grid_or_cfg, frames(imm, grid_or_cfg.nodes))
    else:
        smp = sample(imm, grid_or_cfg)
    return integrate_values(integrand(smp.frame), smp, name)


def area(imm: Immersion, cfg: Optional[QuadratureConfig] = None) -> float:
    smp = sample(imm, cfg)
    return smp.integrate(1.0, "area")


# ---------------------------------------------------------------------------
# gradients

def value_and_gradient(imm: Immersion, fr: PointFrame, f: Callable, kind: str = "ambient"):
    """Values and ambient-coordinate surface gradients of f at the frame's nodes.

    ``kind="ambient"``: f takes the list of ambient position components.
    ``kind="param"``: f takes the list of parameter components.
    Both are evaluated on jets, so the gradient is exact to rounding.
    """
    u = fr.u
    params = J.Jet.variables(u.T)
    if kind == "ambient":
        arg = imm.map(params)
    elif kind == "param":
        arg = params
    else:
        raise ConfigError(f"unknown gradient kind {kind!r}")
    out = f(arg)
    N = u.shape[0]
    if isinstance(out, J.Jet):
        val = np.broadcast_to(out.v, (N,)).astype(float)
        df = np.broadcast_to(np.moveaxis(out.d, 0, -1), (N, imm.m))
    else:
        val = np.broadcast_to(np.asarray(out, dtype=float), (N,)).copy()
        df = np.zeros((N, imm.m))
    grad = np.einsum("Nij,Nj,Nin->Nn", fr.g_inv, df, fr.jet.d1)
    return val, grad


def surface_gradient(imm: Immersion, u, f: Callable, kind: str = "ambient") -> np.ndarray:
    fr = frames(imm, np.atleast_2d(u))
    return value_and_gradient(imm, fr, f, kind)[1]


def radial_gradient(fr: PointFrame, space, pole, fprime: Callable) -> np.ndarray:
    """Closed form grad f(r) = f'(r) Y^T / s_K(r), with Y = s_K(r) d_r the polar-radial field."""
    out = np.zeros_like(fr.x)
    for i, X in enumerate(fr.x):
        r, radial = polar(space, pole, X)
        if radial is not None:
            out[i] = fprime(r) * radial
    return fr.tangent_part(out)


def support_gradient(fr: PointFrame, field, fprime_u=None) -> np.ndarray:
    """Closed form grad u = eps A^nu(Y^T) for u = Y.nu (times f'(u) if given)."""
    Y = field(fr.x)
    yt_on = fr.tangent_coords(Y)
    g_on = fr.eps[0] * np.einsum("Nab,Nb->Na", fr.shape_on[:, 0], yt_on)
    grad = np.einsum("Na,Nan->Nn", g_on, fr.E)
    if fprime_u is not None:
        u = fr.inner(Y, fr.normals[:, 0])
        grad = grad * fprime_u(u)[:, None]
    return grad


# ---------------------------------------------------------------------------
# refinement

@dataclass
class ConvergenceTable:
    resolutions: list
    values: list
    differences: list
    verdict: str
    slow: bool
    tol: float

    def to_dict(self) -> dict:
        return {
            "resolutions": [list(r) if isinstance(r, tuple) else r for r in self.resolutions],
            "values": [_jsonable(v) for v in self.values],
            "differences": list(self.differences),
            "verdict": self.verdict,
            "slow": self.slow,
            "tol": self.tol,
        }


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    return float(v)


def as_config(res) -> QuadratureConfig:
    if isinstance(res, QuadratureConfig):
        return res
    if isinstance(res, (int, np.integer)):
        return QuadratureConfig(int(res), int(res))
    if isinstance(res, (tuple, list)) and len(res) == 2:
        return QuadratureConfig(int(res[0]), int(res[1]))
    if isinstance(res, dict):
        return QuadratureConfig.from_dict(res)
    raise ConfigError(f"cannot interpret resolution {res!r}")


def refine(compute: Callable[[QuadratureConfig], object], resolutions: Sequence, tol: float = 1e-10,
           slow_ratio: float = 0.2) -> ConvergenceTable:
    """Run ``compute`` at increasing resolutions and tabulate successive differences.

    Converged when the last difference is below ``tol``.  A run whose last two
    differences shrink by less than ``slow_ratio`` (while still above tol) is
    flagged slow: the signature of a non-smooth integrand.
    """
    if len(resolutions) < 2:
        raise ConfigError("refine needs at least two resolutions")
    cfgs = [as_config(r) for r in resolutions]
    vals = [compute(c) for c in cfgs]
    diffs = []
    for a, b in zip(vals, vals[1:]):
        diffs.append(float(np.max(np.abs(np.asarray(b, dtype=float) - np.asarray(a, dtype=float)))))
    converged = diffs[-1] < tol
    slow = False
    if not converged and len(diffs) >= 2 and diffs[-2] > 0:
        slow = diffs[-1] / diffs[-2] > slow_ratio
    verdict = "converged" if converged else ("slow" if slow else "not_converged")
    return ConvergenceTable([(c.interval_nodes, c.periodic_nodes) for c in cfgs], vals, diffs, verdict, slow, tol)


def decreasing(residuals: Sequence[float], floor: float = NOISE_FLOOR) -> bool:
    """Non-increasing sequence, where values already below the noise floor count as converged."""
    for a, b in zip(residuals, residuals[1:]):
        if b <= floor:
            continue
        if b > a:
            return False
    return True


def refinement_configs(cfg: QuadratureConfig) -> list:
    """The resolutions used for the monotonicity check: quarter, half, full."""
    return [cfg.scaled(0.25), cfg.scaled(0.5), cfg]
