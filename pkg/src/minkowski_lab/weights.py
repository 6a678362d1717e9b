"""Weight functions f for the integral identities.

A weight is a small expression evaluated on parameter jets, so its surface
gradient is exact.  Available names:

* ``x1 .. xn``  ambient coordinates of the point
* ``r``         distance to the pole (slice parameter on de Sitter space)
* ``u1 .. um``  parameter coordinates
* ``u``         the support function Y.nu; such weights must depend on ``u`` alone
* ``sin cos tan sinh cosh tanh exp log sqrt arcsinh arccosh arctan pi``

``^`` is accepted for powers.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import jet as J
from .ambient import AmbientSpace, VectorFieldSpec, distance_jet
from .errors import ConfigError, DomainError
from .immersion import Immersion, PointFrame

R_MIN = 1e-6

_FUNCS = {
    "sin": J.sin, "cos": J.cos, "tan": J.tan, "sinh": J.sinh, "cosh": J.cosh, "tanh": J.tanh,
    "exp": J.exp, "log": J.log, "sqrt": J.sqrt, "arcsinh": J.arcsinh, "arccosh": J.arccosh,
    "arctan": J.arctan,
}
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


@dataclass(frozen=True)
class Weight:
    expr: str
    kind: str  # "const", "ambient" or "support"
    names: frozenset

    @property
    def label(self) -> str:
        return self.expr

    @property
    def uses_r(self) -> bool:
        return "r" in self.names


def parse_weight(spec, extra=()) -> Weight:
    """Accept a number, an expression string or {"expr": ...}.

    ``extra`` lists further variable names to admit (e.g. a boundary angle).
    """
    if isinstance(spec, dict):
        if "expr" not in spec:
            raise ConfigError("weight dict needs an 'expr' key")
        spec = spec["expr"]
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return Weight(repr(float(spec)) if not float(spec).is_integer() else str(int(spec)), "const", frozenset())
    if not isinstance(spec, str):
        raise ConfigError(f"cannot interpret weight {spec!r}")
    text = spec.strip().replace("^", "**")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad weight expression {spec!r}: {exc.msg}") from None
    names = set()
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ConfigError(f"weight {spec!r}: unsupported syntax {type(node).__name__}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or node.keywords:
                raise ConfigError(f"weight {spec!r}: unknown function")
        elif isinstance(node, ast.Name) and node.id not in _FUNCS and node.id != "pi":
            if not (_valid_var(node.id) or node.id in extra):
                raise ConfigError(f"weight {spec!r}: unknown name {node.id!r}")
            names.add(node.id)
    if "u" in names and names != {"u"}:
        raise ConfigError(f"weight {spec!r}: support-function weights must depend on u alone")
    kind = "support" if "u" in names else ("ambient" if names else "const")
    return Weight(spec.strip(), kind, frozenset(names))


def _valid_var(name: str) -> bool:
    if name in ("r", "u"):
        return True
    for prefix in ("x", "u"):
        if name.startswith(prefix) and name[len(prefix):].isdigit() and int(name[len(prefix):]) >= 1:
            return True
    return False


def _evaluate(w: Weight, env: dict):
    code = compile(ast.parse(w.expr.replace("^", "**"), mode="eval"), "<weight>", "eval")
    ns = dict(_FUNCS)
    ns["pi"] = np.pi
    ns.update(env)
    return eval(code, {"__builtins__": {}}, ns)


def default_pole(space: AmbientSpace, field: Optional[VectorFieldSpec]) -> np.ndarray:
    if field is not None:
        for key in ("pole", "origin"):
            if key in field.params:
                return np.asarray(field.params[key], dtype=float)
    return space.default_pole()


def weight_values(w: Weight, imm: Immersion, fr: PointFrame, field: Optional[VectorFieldSpec] = None,
                  pole=None):
    """(f, grad f) at the frame's nodes; grad as ambient vectors tangent to the surface.

    Support weights use the closed form grad f(u) = f'(u) eps A^nu(Y^T).
    """
    N = fr.n_nodes
    space = imm.ambient
    if w.kind == "const":
        val = float(_evaluate(w, {}))
        return np.full(N, val), np.zeros_like(fr.x)
    if w.kind == "support":
        if field is None or not imm.is_hypersurface:
            raise ConfigError("support-function weights need a field and a hypersurface")
        Y = field(fr.x)
        u = fr.inner(Y, fr.normals[:, 0])
        uj = J.Jet(u, np.ones((1, N)), np.zeros((1, 1, N)))
        out = _evaluate(w, {"u": uj})
        if not isinstance(out, J.Jet):
            return np.broadcast_to(np.asarray(out, float), (N,)).copy(), np.zeros_like(fr.x)
        fprime = out.d[0]
        yt_on = fr.tangent_coords(Y)
        g_on = fr.eps[0] * np.einsum("Nab,Nb->Na", fr.shape_on[:, 0], yt_on)
        grad = np.einsum("Na,Nan->Nn", g_on, fr.E) * fprime[:, None]
        return np.asarray(out.v, float), grad
    pole = default_pole(space, field) if pole is None else np.asarray(pole, dtype=float)
    params = J.Jet.variables(fr.u.T)
    x = imm.map(params)
    env = {f"x{i + 1}": xi for i, xi in enumerate(x)}
    env.update({f"u{i + 1}": p for i, p in enumerate(params)})
    if w.uses_r:
        r = distance_jet(space, pole, x)
        rv = J.value(r)
        if space.family != "de_sitter" and np.min(np.abs(rv)) <= R_MIN:
            raise DomainError(f"weight {w.expr!r}: r <= {R_MIN:g} at a node (surface meets the pole)")
        env["r"] = r
    out = _evaluate(w, env)
    if isinstance(out, J.Jet):
        val = np.broadcast_to(out.v, (N,)).astype(float)
        df = np.moveaxis(np.broadcast_to(out.d, (imm.m, N)), 0, -1)
    else:
        val = np.broadcast_to(np.asarray(out, dtype=float), (N,)).copy()
        df = np.zeros((N, imm.m))
    grad = np.einsum("Nij,Nj,Nin->Nn", fr.g_inv, df, fr.jet.d1)
    return val, grad
