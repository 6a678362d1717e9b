"""Higher-order mean curvatures and Newton transformations.

``packet`` builds sigma_k / H_k / T_k from the eigen-decomposition of a
symmetric shape operator; ``epsilon_oracle`` evaluates the generalised
Kronecker-delta sums literally and is the reference both are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from math import comb, factorial

import numpy as np

from . import jet as J
from .errors import ContractError, SizeError
from .immersion import Immersion, PointFrame, frames

SYM_TOL = 1e-12
SYM_LIMIT = 1e-8
ORACLE_MAX_M = 6


@dataclass(frozen=True)
class CurvaturePacket:
    m: int
    lambdas: np.ndarray
    sigma: np.ndarray  # sigma_0 .. sigma_m
    H: np.ndarray  # H_0 .. H_m
    T: np.ndarray  # T_0 .. T_{m-1}, each m x m
    eps_nu: float = 1.0
    shape_op: np.ndarray = None


@dataclass(frozen=True)
class MultiNormalPacket:
    shape_ops: tuple
    H_k_multi: float
    T_k_multi: np.ndarray

    @property
    def k(self) -> int:
        return len(self.shape_ops)

    @property
    def sigma_k_multi(self) -> float:
        m = self.T_k_multi.shape[-1]
        return self.H_k_multi / comb(m, self.k)


def elementary_symmetric(lam) -> np.ndarray:
    """e_0..e_m of the last axis of ``lam`` by the recurrence e_k += lam_i e_{k-1}."""
    lam = np.asarray(lam, dtype=float)
    m = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (m + 1,))
    e[..., 0] = 1.0
    for i in range(m):
        li = lam[..., i]
        for k in range(i + 1, 0, -1):
            e[..., k] = e[..., k] + li * e[..., k - 1]
    return e


def _check_symmetric(S):
    S = np.asarray(S, dtype=float)
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    drift = float(np.max(np.abs(S - np.swapaxes(S, -1, -2)))) if S.size else 0.0
    if drift > SYM_LIMIT * scale:
        raise ContractError(f"shape operator not symmetric (drift {drift:.3e})")
    return 0.5 * (S + np.swapaxes(S, -1, -2))


def newton_batch(S):
    """Eigen-based sigma/H/T for a stack of symmetric matrices (..., m, m).

    Returns (lambdas, sigma, H, T) with T of shape (..., m, m, m) indexed
    [..., k, i, j] for k = 0..m-1.
    """
    S = _check_symmetric(S)
    m = S.shape[-1]
    lam, Q = np.linalg.eigh(S)
    H = elementary_symmetric(lam)
    binom = np.array([comb(m, k) for k in range(m + 1)], dtype=float)
    sigma = H / binom
    # leave-one-out elementary symmetric functions give the diagonal of T_k
    loo = np.empty(lam.shape + (m,))
    for i in range(m):
        rest = np.delete(lam, i, axis=-1)
        loo[..., i, :] = elementary_symmetric(rest)
    # loo[..., i, k] = e_k(lambda without i), k = 0..m-1
    diag = np.swapaxes(loo, -1, -2)  # [..., k, i]
    T = np.einsum("...ai,...ki,...bi->...kab", Q, diag, Q)
    return lam, sigma, H, T


def packet(shape_op, eps_nu: float = 1.0) -> CurvaturePacket:
    """Curvature packet of one symmetric m x m shape operator (orthonormal basis)."""
    S = np.asarray(shape_op, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ContractError("shape operator must be a square matrix")
    lam, sigma, H, T = newton_batch(S)
    return CurvaturePacket(S.shape[0], lam, sigma, H, T, float(eps_nu), _check_symmetric(S))


def newton_recursion(S, m_max=None):
    """T_k via T_k = H_k I - A T_{k-1}; used as an invariant check, not a construction path."""
    S = np.asarray(S, dtype=float)
    m = S.shape[-1]
    H = elementary_symmetric(np.linalg.eigvalsh(S))
    I = np.eye(m)
    T = [np.broadcast_to(I, S.shape).copy()]
    for k in range(1, m if m_max is None else m_max):
        T.append(H[..., k, None, None] * I - S @ T[-1])
    return np.stack(T, axis=-3)


# ---------------------------------------------------------------------------
# epsilon oracle

@lru_cache(maxsize=None)
def _perm_table(L: int):
    perms = np.array(list(permutations(range(L))), dtype=np.intp).reshape(-1, L)
    signs = np.array([_perm_sign(p) for p in perms], dtype=float)
    return perms, signs


def _perm_sign(p) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def _delta_table(m: int, L: int):
    """All (I, J, sign) with I an ordered tuple of L distinct indices and J a permutation of it."""
    tuples = np.array(list(permutations(range(m), L)), dtype=np.intp).reshape(-1, L)
    perms, signs = _perm_table(L)
    Jt = tuples[:, perms]  # (nI, nP, L)
    return tuples, Jt, signs


def _delta_sum(mats, L, m):
    """Sum over generalised Kronecker deltas of products of matrix entries.

    mats: list of arrays (..., m, m) of length L-1 or L.  When len(mats) == L-1
    the first index pair is left free and the result is an (..., m, m) array.
    """
    I, Jt, signs = _delta_table(m, L)
    free = len(mats) == L - 1
    offset = 1 if free else 0
    batch = np.shape(mats[0])[:-2] if mats else ()
    prod = np.ones(batch + Jt.shape[:2])
    for l, M in enumerate(mats):
        M = np.asarray(M, dtype=float)
        prod = prod * M[..., I[:, None, l + offset], Jt[:, :, l + offset]]
    prod = prod * signs
    if not free:
        return prod.sum(axis=(-1, -2))
    out = np.zeros(batch + (m, m))
    rows = np.broadcast_to(I[:, None, 0], Jt.shape[:2]).ravel()
    cols = Jt[:, :, 0].ravel()
    flat = prod.reshape(batch + (-1,))
    idx = rows * m + cols
    out_flat = out.reshape(batch + (m * m,))
    for b in np.ndindex(*batch) if batch else [()]:
        out_flat[b] = np.bincount(idx, weights=flat[b], minlength=m * m)
    return out_flat.reshape(batch + (m, m))


def epsilon_oracle(shape_ops, m=None):
    """(H_k, T_k) of k (possibly distinct) shape operators from the literal delta sums.

    H_k = (1/k!) sum delta^{i_1..i_k}_{j_1..j_k} (A_1)_{i_1 j_1} ... (A_k)_{i_k j_k}
    (T_k)_{ij} = (1/k!) sum delta^{i i_1..i_k}_{j j_1..j_k} (A_1)_{i_1 j_1} ... (A_k)_{i_k j_k}
    """
    mats = [np.asarray(M, dtype=float) for M in shape_ops]
    if m is None:
        if not mats:
            raise SizeError("need at least one matrix or an explicit m")
        m = mats[0].shape[-1]
    if m > ORACLE_MAX_M:
        raise SizeError(f"epsilon oracle limited to m <= {ORACLE_MAX_M}, got {m}")
    k = len(mats)
    if k > m:
        raise SizeError(f"k = {k} exceeds m = {m}")
    batch = mats[0].shape[:-2] if mats else ()
    if k == 0:
        return np.ones(batch), np.broadcast_to(np.eye(m), batch + (m, m)).copy()
    H = _delta_sum(mats, k, m) / factorial(k)
    if k + 1 > m:
        T = np.zeros(batch + (m, m))
    else:
        T = _delta_sum(mats, k + 1, m) / factorial(k)
    return H, T


def multi_normal(frame: PointFrame, normals, k=None) -> MultiNormalPacket:
    """Polarised H_k(nu_1..nu_k) and T_k(nu_1..nu_k) at one node.

    ``normals`` items are either indices into the frame's normal frame or
    ambient normal vectors (e.g. the normal part of a field).
    """
    mats = _normal_shape_ops(frame, normals)
    m = frame.m
    k = len(mats) if k is None else k
    if k != len(mats):
        raise SizeError("k must equal the number of normals")
    if k > m:
        raise SizeError(f"k = {k} exceeds m = {m}")
    H, T = epsilon_oracle([M[0] for M in mats], m)
    return MultiNormalPacket(tuple(M[0] for M in mats), float(H), T)


def _normal_shape_ops(frame: PointFrame, normals):
    mats = []
    for nu in normals:
        if isinstance(nu, (int, np.integer)):
            vec = frame.normals[:, int(nu), :]
        else:
            vec = np.broadcast_to(np.asarray(nu, dtype=float), frame.x.shape)
        mats.append(frame.shape_op_for(vec))
    return mats


def multi_normal_batch(frame: PointFrame, normals):
    """Vectorised (H_k, T_k) over all nodes of a frame batch."""
    mats = _normal_shape_ops(frame, normals)
    return epsilon_oracle(mats, frame.m)


def parallel_check(imm: Immersion, normal_index: int, samples: int = 64, normal_fn=None, seed: int = 0) -> float:
    """Max norm of the normal-bundle derivative of nu_b along unit tangent directions."""
    if imm.codim < 2:
        raise SizeError("parallel_check needs codimension >= 2")
    rng = np.random.default_rng(seed)
    nodes = np.stack([rng.uniform(ax.a + 1e-3, ax.b - 1e-3, samples) for ax in imm.axes], axis=-1)
    fr = frames(imm, nodes)
    s = imm.ambient.signs
    fn = normal_fn or imm.normal_fn
    if fn is not None:
        comps = fn(J.Jet.variables(nodes.T))[normal_index]
        dnu = J.stack_grad(comps)  # (N, m, n)
    else:
        h = 1e-6
        dnu = np.empty(nodes.shape + (fr.x.shape[-1],))
        for i in range(imm.m):
            step = np.zeros(imm.m)
            step[i] = h
            plus = frames(imm, nodes + step).normals[:, normal_index]
            minus = frames(imm, nodes - step).normals[:, normal_index]
            dnu[:, i] = (plus - minus) / (2 * h)
    on = np.linalg.solve(fr.chol, dnu)  # derivatives along orthonormal directions
    coeff = np.einsum("Nan,Ncn->Nac", on * s, fr.normals)
    return float(np.max(np.sqrt(np.sum(coeff**2, axis=-1))))
