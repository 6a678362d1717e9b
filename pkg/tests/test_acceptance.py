"""Acceptance criteria 1-10, each at its stated tolerance; one summary line per criterion."""

import os
import sys
import time

import numpy as np
import pytest

from minkowski_lab import cli
from minkowski_lab.curvature import epsilon_oracle, newton_batch, newton_recursion
from minkowski_lab.identities import (chain, closure, divergence_residual, hm_identity, hm_multi_normal,
                                      multi_normal_pointwise)
from minkowski_lab.immersion import (ds_slice_graph, ellipsoid, geodesic_sphere_H, geodesic_sphere_S,
                                     perturbed_sphere, product_circle_sphere_R5, product_torus_R4, round_sphere,
                                     torus_of_revolution)
from minkowski_lab.ambient import conformal_field
from minkowski_lab.quadrature import area
from minkowski_lab.rigidity import alexandrov_probe, epsilon_sweep, koh_probe, strictly_increasing
from minkowski_lab.spectral import garay_check, lambda1, steklov_p1, triangulate

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")


# ---------------------------------------------------------------------------
# 1. Newton algebra

def test_criterion_1_newton_oracle(acceptance_line):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst_oracle, worst_lemma = 0.0, 0.0
    for i in range(200):
        m = 2 + i % 5
        B = rng.normal(size=(m, m))
        A = 0.5 * (B + B.T)
        norm = np.linalg.norm(A)
        _, _, H, T = newton_batch(A)
        for k in range(1, m + 1):
            Ho, To = epsilon_oracle([A] * k)
            scale = 1 + norm**k
            worst_oracle = max(worst_oracle, abs(Ho - H[k]) / scale)
            if k < m:
                worst_oracle = max(worst_oracle, np.max(np.abs(To - T[k])) / scale)
        Tr = newton_recursion(A)
        for k in range(m):
            s = 1 + norm ** (k + 1)
            worst_lemma = max(worst_lemma, abs(np.trace(T[k]) - (m - k) * H[k]) / s)
            worst_lemma = max(worst_lemma, abs(np.trace(A @ T[k]) - (k + 1) * H[k + 1]) / s)
            worst_lemma = max(worst_lemma, np.max(np.abs(Tr[k] - T[k])) / s)
    elapsed = time.perf_counter() - t0
    ok = worst_oracle < 1e-9 and worst_lemma < 1e-10 and elapsed < 30
    acceptance_line(1, ok, f"oracle {worst_oracle:.1e} (<1e-9), lemma {worst_lemma:.1e} (<1e-10), {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 2. Hsiung-Minkowski residuals

def hm_zoo():
    return [
        round_sphere(2.0),
        ellipsoid((1.0, 1.2, 1.5), center=(0.1, -0.2, 0.3)),
        torus_of_revolution(2.0, 1.0),
        perturbed_sphere(0.1, sectoral=0.5),
        geodesic_sphere_S(0.7),
        perturbed_sphere(0.05, ambient="S3", R=0.7),
        geodesic_sphere_H(1.0),
        perturbed_sphere(0.05, ambient="H3", R=1.0),
        ds_slice_graph(0.5),
        ds_slice_graph(0.3, bumps=[{"type": "zonal", "l": 2, "amp": 0.05}]),
        product_torus_R4(1.0, 1.0),
        product_torus_R4(2.0, 3.0),
        product_circle_sphere_R5(1.5, 1.0),
    ]


def test_criterion_2_hm_residuals(acceptance_line):
    t0 = time.perf_counter()
    failures, worst, runs = [], 0.0, 0
    for imm in hm_zoo():
        ks = range(imm.m) if imm.is_hypersurface else [k for k in range(imm.m) if k % 2 == 0]
        weights = ["1", "r", "r^2"] + (["exp(u)"] if imm.is_hypersurface else [])
        for k in ks:
            for f in weights:
                rep = hm_identity(imm, weight=f, k=k, tol=1e-7)
                runs += 1
                worst = max(worst, rep.relative_residual)
                if not (rep.relative_residual < 1e-7 and rep.monotone):
                    failures.append((imm.label, k, f, rep.relative_residual, rep.monotone))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 300
    acceptance_line(2, ok, f"{runs} runs, worst relative residual {worst:.1e} (<1e-7), monotone, {elapsed:.0f}s")
    assert not failures, failures
    assert elapsed < 300


# ---------------------------------------------------------------------------
# 3. multi-normal identity

def _multi_cases():
    for a, b in [(1.0, 1.0), (2.0, 3.0)]:
        imm = product_torus_R4(a, b)
        for normals in ([0], [1], [0, 1]):
            for f in ("1", "sin(u1) + 2"):
                yield imm, a, b, normals, f


def _pointwise_worst():
    worst = 0.0
    for a, b in [(1.0, 1.0), (2.0, 3.0)]:
        s1, s2 = multi_normal_pointwise(product_torus_R4(a, b), [0])
        worst = max(worst, float(np.max(np.abs(s1 - 1 / (2 * a)))), float(np.max(np.abs(s2 - 1 / (2 * a)))))
    return worst


def test_criterion_3_admissible_part():
    """The k = 1 cases and the pointwise values; these are inside the identity's range 0 <= k <= m-1."""
    for imm, a, b, normals, f in _multi_cases():
        if len(normals) == 1:
            rep = hm_multi_normal(imm, normals, weight=f, tol=1e-8)
            assert rep.residual < 1e-8 and rep.passed, (a, b, normals, f, rep.residual)
    assert _pointwise_worst() < 1e-10


@pytest.mark.xfail(strict=True, reason="k = 2 = m on the product torus lies outside the identity's range; "
                   "the left side is Area/(2ab) while every right-side term vanishes (see the decision ledger)")
def test_criterion_3_multi_normal(acceptance_line):
    rows = []
    for imm, a, b, normals, f in _multi_cases():
        rep = hm_multi_normal(imm, normals, weight=f, tol=1e-8)
        rows.append((a, b, len(normals), f, rep.residual, rep.passed))
    pw = _pointwise_worst()
    bad = [r for r in rows if not (r[4] < 1e-8 and r[5])]
    ok = not bad and pw < 1e-10
    detail = f"pointwise {pw:.1e} (<1e-10); k=1 max residual {max(r[4] for r in rows if r[2] == 1):.1e}"
    if bad:
        detail += f"; {len(bad)} k=2 cases fail, residual up to {max(r[4] for r in bad):.2f} (k = m, see ledger)"
    acceptance_line(3, ok, detail)
    assert ok


# ---------------------------------------------------------------------------
# 4. closure

def test_criterion_4_closure(acceptance_line):
    worst = 0.0
    for imm in [round_sphere(1.0), ellipsoid((1.0, 1.2, 1.5), center=(0.5, -1.0, 2.0)), torus_of_revolution(2.0, 1.0)]:
        A = area(imm)
        for k in range(3):
            rep = closure(imm, k, tol=1e-8)
            scaled = float(np.max(np.abs(rep.lhs))) / A
            worst = max(worst, scaled)
            assert rep.passed, (imm.label, k, scaled)
    ok = worst < 1e-8
    acceptance_line(4, ok, f"max |int sigma_k nu| / Area = {worst:.1e} (<1e-8)")
    assert ok


# ---------------------------------------------------------------------------
# 5. inequality chains

SPHERE_FAMILY = [
    (round_sphere(1.0), ["euc_area", "euc_volume"]),
    (round_sphere(2.0), ["euc_area", "euc_volume"]),
    (geodesic_sphere_S(0.5), ["sphere_tan", "sphere_sin", "sphere_volume"]),
    (geodesic_sphere_S(1.0), ["sphere_tan", "sphere_sin", "sphere_volume"]),
    (geodesic_sphere_H(0.5), ["hyper_sinh", "hyper_volume"]),
    (geodesic_sphere_H(1.5), ["hyper_sinh", "hyper_volume"]),
]
ELLIPSOID_FAMILY = [
    (ellipsoid((1.0, 1.0, 1.5)), ["euc_area", "euc_volume"]),
    (ellipsoid((1.0, 1.2, 1.5)), ["euc_area", "euc_volume"]),
    (perturbed_sphere(0.05), ["euc_area", "euc_volume"]),
    (perturbed_sphere(0.1, ambient="S3", R=0.7), ["sphere_tan", "sphere_sin", "sphere_volume"]),
    (perturbed_sphere(0.05, ambient="H3", R=1.0), ["hyper_sinh", "hyper_volume"]),
]


def test_criterion_5_chains(acceptance_line):
    eq_worst, ell_min, bad = 0.0, np.inf, []
    for imm, variants in SPHERE_FAMILY:
        for v in variants:
            for k in (1, 2):
                for p in ((0.0, 1.0) if v == "euc_area" else (0.0,)):
                    rep = chain(imm, k, v, p=p)
                    eq_worst = max(eq_worst, max(abs(s) for s in rep.slacks))
                    if not (rep.equality_flag and rep.verdict == "pass"):
                        bad.append((imm.label, v, k, rep.slacks))
    for imm, variants in ELLIPSOID_FAMILY:
        for v in variants:
            for k in (1, 2):
                rep = chain(imm, k, v)
                ell_min = min(ell_min, rep.min_slack)
                if rep.equality_flag or rep.verdict != "pass" or rep.min_slack <= 1e-4:
                    bad.append((imm.label, v, k, rep.slacks))
    ok = not bad and eq_worst < 1e-9 and ell_min > 1e-4
    acceptance_line(5, ok, f"sphere-family |slack| <= {eq_worst:.1e} (<1e-9, equality), ellipsoid-family "
                           f"min slack {ell_min:.3f} (>1e-4)")
    assert ok, bad


# ---------------------------------------------------------------------------
# 6. divergence formula

def test_criterion_6_divergence(acceptance_line):
    worst, runs = 0.0, 0
    surfaces = [round_sphere(1.0), ellipsoid((1.0, 1.2, 1.5), center=(0.2, 0.1, -0.3)), torus_of_revolution(2.0, 1.0)]
    for imm in surfaces:
        fields = [conformal_field(imm.ambient, "Position"),
                  conformal_field(imm.ambient, "Constant", Z0=[0.3, -1.0, 0.5]),
                  conformal_field(imm.ambient, "PolarRadial", pole=[0.1, 0.2, -0.1])]
        for tensor in ("T0", "T1", "T2", "random"):
            for f in ("1", "r^2", "x1"):
                for fld in fields:
                    rep = divergence_residual(imm, tensor, f, fld, tol=1e-8, refine=False)
                    worst = max(worst, rep.relative_residual)
                    runs += 1
                    assert rep.passed, (imm.label, tensor, f, fld.label, rep.relative_residual)
    ok = worst < 1e-8
    acceptance_line(6, ok, f"{runs} combinations, max |int RHS| / Area = {worst:.1e} (<1e-8)")
    assert ok


# ---------------------------------------------------------------------------
# 7. rigidity probes

def test_criterion_7_rigidity(acceptance_line):
    worst = 0.0
    probes = []
    for imm in [round_sphere(1.3), geodesic_sphere_S(0.7), geodesic_sphere_H(1.0)]:
        probes += [alexandrov_probe(imm, "r^2", 1, "alex_r"), alexandrov_probe(imm, "1 + r", 2, "alex_r"),
                   alexandrov_probe(imm, "exp(u)", 1, "alex_u"), alexandrov_probe(imm, "1 + r", 2, "alex2", l=1),
                   koh_probe(imm)]
    ds = ds_slice_graph(0.5)
    probes += [alexandrov_probe(ds, "1", 2, "alex3", l=1), koh_probe(ds)]
    for p in probes:
        worst = max(worst, p.hypothesis_defect, p.umbilicity_defect)
        assert p.consistent and not p.violations
    sweeps_ok = True
    for amb, R in (("R3", 1.0), ("S3", 0.7), ("H3", 1.0)):
        rows = epsilon_sweep(lambda e: perturbed_sphere(e, ambient=amb, R=R), [0.01, 0.02, 0.05, 0.1], koh_probe)
        sweeps_ok &= strictly_increasing([r["hypothesis_defect"] for r in rows])
        sweeps_ok &= strictly_increasing([r["umbilicity_defect"] for r in rows])
    ok = worst < 1e-9 and sweeps_ok
    acceptance_line(7, ok, f"{len(probes)} sphere probes, max defect {worst:.1e} (<1e-9); eps-sweeps strictly increasing: {sweeps_ok}")
    assert ok


# ---------------------------------------------------------------------------
# 8. eigenvalue bounds

def test_criterion_8_eigenvalues(acceptance_line):
    t0 = time.perf_counter()
    sphere_mesh = triangulate(round_sphere(1.0), 10000)
    lam = lambda1(sphere_mesh, 0)
    gar = garay_check(sphere_mesh, 0)
    ell = lambda1(triangulate(ellipsoid((1.0, 1.0, 1.2)), 10000), 0)
    gell = garay_check(triangulate(ellipsoid((1.0, 1.0, 1.3)), 10000), 0)
    elapsed = time.perf_counter() - t0
    garay_gap = abs(gar.lhs / gar.rhs - 1.0)
    ok = (1.98 <= lam.lambda1 <= 2.02 and abs(lam.bound - 2.0) < 1e-12 and lam.verdict == "pass"
          and abs(gar.rhs - 8 * np.pi) < 1e-9 and garay_gap < 0.01 and gar.verdict == "pass"
          and ell.slack > 0 and ell.verdict == "pass" and ell.verdict_raw == "pass"
          and gell.rhs - gell.lhs > 0 and gell.verdict_raw == "pass" and elapsed < 120)
    acceptance_line(8, ok, f"sphere lambda1 {lam.lambda1:.5f} (bound {lam.bound:.12g}), Garay {gar.lhs:.4f} vs "
                           f"8pi {gar.rhs:.4f} ({100 * garay_gap:.2f}%), ellipsoid slacks {ell.slack:.3f} / "
                           f"{gell.rhs - gell.lhs:.3f}, {elapsed:.0f}s")
    assert ok


# ---------------------------------------------------------------------------
# 9. Steklov

def test_criterion_9_steklov(acceptance_line):
    t0 = time.perf_counter()
    disk = steklov_p1({"shape": "disk", "R": 1.0}, density=256)
    ell = steklov_p1({"shape": "ellipse", "a": 1.5, "b": 1.0}, density=256)
    elapsed = time.perf_counter() - t0
    ok = (0.999 <= disk.extrapolated <= 1.001 and abs(disk.bound - 1.0) < 1e-9 and disk.verdict == "pass"
          and ell.extrapolated < ell.bound and ell.verdict_raw == "pass" and abs(ell.bound - 1.5) < 1e-9
          and elapsed < 60)
    acceptance_line(9, ok, f"disk p1 {disk.extrapolated:.7f} (max sigma_1 {disk.bound:.6f}, equality), "
                           f"ellipse p1 {ell.extrapolated:.5f} < {ell.bound:.3f}, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 10. determinism

def _report_bytes(out):
    data = {}
    for name in sorted(os.listdir(out)):
        if name != "metadata.json":
            with open(os.path.join(out, name), "rb") as fh:
                data[name] = fh.read()
    return data


def test_criterion_10_determinism(tmp_path, acceptance_line, capsys):
    cfg = os.path.join(SCENARIOS, "unit_sphere.json")
    outs = []
    for i, threads in enumerate((1, 4, 1)):
        out = tmp_path / f"run{i}"
        assert cli.main(["run", "--config", cfg, "--out", str(out), "--threads", str(threads)]) == 0
        outs.append(_report_bytes(out))
    capsys.readouterr()
    ok = outs[0] == outs[1] == outs[2] and len(outs[0]) == 13
    acceptance_line(10, ok, f"{len(outs[0])} report files byte-identical across runs with --threads 1, 4, 1")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
