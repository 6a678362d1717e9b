"""Independent reference computations for the derived test values.

Each routine takes a different route from the package: closed-form curvature
of surfaces of revolution with adaptive 1-D quadrature, separated-variable
eigenproblems on surfaces of revolution, and a harmonic-polynomial Ritz method
for the Steklov problem.  Their outputs are frozen as constants in the tests.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad
from scipy.linalg import eigh


# ---------------------------------------------------------------------------
# spheroid x = (a sin t cos p, a sin t sin p, c cos t)

def spheroid_data(a: float, c: float, t):
    """Principal curvatures (meridian, parallel), area density per dt dp and distance to the centre."""
    t = np.asarray(t, dtype=float)
    q = np.sqrt(a * a * np.cos(t) ** 2 + c * c * np.sin(t) ** 2)
    k_mer = a * c / q**3
    k_par = c / (a * q)
    dens = a * np.sin(t) * q
    r = np.sqrt(a * a * np.sin(t) ** 2 + c * c * np.cos(t) ** 2)
    return k_mer, k_par, dens, r


def spheroid_integral(a: float, c: float, fn) -> float:
    """2 pi int_0^pi fn(sigma_1, sigma_2, r) density dt."""
    def integrand(t):
        k1, k2, dens, r = spheroid_data(a, c, t)
        return fn(0.5 * (k1 + k2), k1 * k2, r) * dens

    val, _ = quad(integrand, 0.0, np.pi, epsabs=1e-14, epsrel=1e-13, limit=200)
    return 2 * np.pi * val


def spheroid_area_chain(a: float, c: float, k: int):
    """int sigma_j r^j for j = 0..k."""
    sig = [lambda s1, s2, r: 1.0, lambda s1, s2, r: s1 * r, lambda s1, s2, r: s2 * r * r]
    return [spheroid_integral(a, c, sig[j]) for j in range(k + 1)]


def spheroid_area(a: float, c: float) -> float:
    return spheroid_integral(a, c, lambda s1, s2, r: 1.0)


# ---------------------------------------------------------------------------
# Laplacian on a spheroid by separation of variables

def _revolution_mode(a: float, c: float, mode: int, n_el: int) -> float:
    """Smallest nonzero eigenvalue of the e^{i mode p} block, P1 elements in t with 3-point Gauss."""
    nodes = np.linspace(0.0, np.pi, n_el + 1)
    gx, gw = np.polynomial.legendre.leggauss(3)
    h = np.diff(nodes)
    K = sp.lil_matrix((n_el + 1, n_el + 1))
    M = sp.lil_matrix((n_el + 1, n_el + 1))
    for e in range(n_el):
        t = nodes[e] + 0.5 * h[e] * (gx + 1)
        w = 0.5 * h[e] * gw
        rho = a * np.sin(t)
        L = np.sqrt(a * a * np.cos(t) ** 2 + c * c * np.sin(t) ** 2)
        phi = np.stack([1 - (t - nodes[e]) / h[e], (t - nodes[e]) / h[e]])
        dphi = np.array([-1.0, 1.0]) / h[e]
        for i in range(2):
            for j in range(2):
                kij = np.sum(w * (rho / L * dphi[i] * dphi[j] + mode**2 * L / rho * phi[i] * phi[j]))
                mij = np.sum(w * rho * L * phi[i] * phi[j])
                K[e + i, e + j] += kij
                M[e + i, e + j] += mij
    K, M = K.tocsc(), M.tocsc()
    if mode > 0:
        keep = np.arange(1, n_el)
        K, M = K[keep][:, keep], M[keep][:, keep]
    vals = spla.eigsh(K, k=3, M=M, sigma=-1e-3, which="LM", return_eigenvectors=False)
    vals = np.sort(vals)
    return float(vals[vals > 1e-8][0])


def spheroid_lambda1(a: float, c: float, n_el: int = 4000) -> float:
    """First nonzero Laplace eigenvalue, Richardson-extrapolated over n_el/2 and n_el."""
    best = np.inf
    for mode in (0, 1, 2):
        lc = _revolution_mode(a, c, mode, n_el // 2)
        lf = _revolution_mode(a, c, mode, n_el)
        best = min(best, lf + (lf - lc) / 3.0)
    return best


# ---------------------------------------------------------------------------
# Steklov problem by Ritz on harmonic polynomials

def ellipse_steklov_p1(a: float, b: float, degree: int = 24, n_quad: int = 4096) -> float:
    """Smallest nonzero p from Re/Im (z/s)^n, n <= degree, boundary integrals by the trapezoid rule."""
    t = 2 * np.pi * np.arange(n_quad) / n_quad
    x, y = a * np.cos(t), b * np.sin(t)
    dx, dy = -a * np.sin(t), b * np.cos(t)
    ds = np.hypot(dx, dy)
    nx, ny = dy / ds, -dx / ds
    s = max(a, b)
    z = (x + 1j * y) / s
    funcs, normals = [], []
    for n in range(1, degree + 1):
        zn = z**n
        dzn = n * z ** (n - 1) / s  # derivative of (z/s)^n with respect to z
        for part in (np.real, np.imag):
            f = part(zn)
            # grad Re g = (Re g', -Im g'), grad Im g = (Im g', Re g')
            if part is np.real:
                gx, gy = np.real(dzn), -np.imag(dzn)
            else:
                gx, gy = np.imag(dzn), np.real(dzn)
            funcs.append(f)
            normals.append(gx * nx + gy * ny)
    F = np.array(funcs)
    Nf = np.array(normals)
    w = ds * (2 * np.pi / n_quad)
    A = (F * w) @ Nf.T
    A = 0.5 * (A + A.T)
    B = (F * w) @ F.T
    return float(eigh(A, B, eigvals_only=True)[0])


# ---------------------------------------------------------------------------
# radial graphs of revolution r = rho(t)

def radial_revolution_gauss(rho, drho, d2rho, t):
    """Gauss curvature of (rho sin t cos p, rho sin t sin p, rho cos t) from the profile curve."""
    t = np.asarray(t, dtype=float)
    r, r1, r2 = rho(t), drho(t), d2rho(t)
    f = r * np.sin(t)
    f1 = r1 * np.sin(t) + r * np.cos(t)
    g1 = r1 * np.cos(t) - r * np.sin(t)
    f2 = r2 * np.sin(t) + 2 * r1 * np.cos(t) - r * np.sin(t)
    g2 = r2 * np.cos(t) - 2 * r1 * np.sin(t) - r * np.cos(t)
    speed2 = f1 * f1 + g1 * g1
    k_mer = (f2 * g1 - f1 * g2) / speed2**1.5
    k_par = -g1 / (f * np.sqrt(speed2))
    return k_mer * k_par
