import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minkowski_lab.ambient import conformal_field
from minkowski_lab.curvature import newton_batch
from minkowski_lab.errors import ConfigError, HypothesisViolation, SizeError
from minkowski_lab.identities import (
    chain, closure, divergence_residual, hm_identity, hm_multi_normal, parse_tensor, pseudo_sphere_vector_identity,
    weighted_volume,
)
from minkowski_lab.immersion import (
    ds_slice_graph, ellipsoid, geodesic_sphere_H, geodesic_sphere_S, perturbed_sphere, product_circle_sphere_R5,
    product_torus_R4, radial_graph, round_sphere, torus_of_revolution,
)
from minkowski_lab.quadrature import QuadratureConfig, sample

from oracles import radial_revolution_gauss

# frozen from oracles.spheroid_area_chain(1, 1.5, 2)
SPHEROID_CHAIN = [16.91821816345997, 17.70832659364391, 19.57063878410654]
# frozen from oracles.spheroid_integral(1, 1.5, .) of r, sigma_1 r^2, sigma_2 r^3
SPHEROID_VOLUME_CHAIN = [19.695283985849898, 21.505195187621656, 25.043993412189288]
SMALL = QuadratureConfig(24, 48)
PEANUT = {"r0": 1.0, "bumps": [{"type": "zonal", "l": 2, "amp": 0.667}]}


@pytest.mark.parametrize("imm,weight,k", [
    (ellipsoid((1.0, 1.2, 1.5)), "r^2", 1),
    (torus_of_revolution(2.0, 1.0), "x1 + x3^2", 0),
    (geodesic_sphere_S(0.9), "cos(r)", 1),
    (perturbed_sphere(0.1, ambient="H3"), "r", 1),
    (ds_slice_graph(0.3, bumps=[{"type": "zonal", "l": 2, "amp": 0.05}]), "1 + r^2", 1),
    (perturbed_sphere(0.1), "exp(u)", 1),
], ids=lambda v: getattr(v, "label", str(v)))
def test_hm_identity(imm, weight, k):
    rep = hm_identity(imm, weight=weight, k=k)
    assert rep.passed and rep.monotone
    assert rep.relative_residual < 1e-9
    assert len(rep.refinement) == 3


def test_hm_identity_higher_codimension_needs_even_k():
    imm = product_circle_sphere_R5(1.0, 1.5)
    assert hm_identity(imm, weight="r^2", k=2, cfg=SMALL).passed
    with pytest.raises(SizeError):
        hm_identity(imm, k=1)


def test_multi_normal_identity_on_products():
    imm = product_circle_sphere_R5(1.0, 1.5)
    assert hm_multi_normal(imm, [0], weight="1 + x1^2", cfg=SMALL).passed
    assert hm_multi_normal(imm, [1], weight="1 + x1^2", cfg=SMALL).passed
    rep = hm_multi_normal(product_torus_R4(1.0, 2.0), [0, 1], refine=False)
    assert rep.notes


@pytest.mark.parametrize("imm", [ellipsoid((1.0, 1.3, 0.7), center=(1.0, 2.0, 3.0)), torus_of_revolution(2.0, 0.8)],
                         ids=lambda s: s.label)
def test_closure(imm):
    for k in range(3):
        rep = closure(imm, k)
        assert rep.passed
    with pytest.raises(ConfigError):
        closure(geodesic_sphere_S(0.5), 1)


def test_vector_identity():
    for imm in (perturbed_sphere(0.1, ambient="S3", R=0.7), perturbed_sphere(0.1, ambient="H3")):
        for k in (0, 1):
            assert pseudo_sphere_vector_identity(imm, weight="r^2", k=k).passed
    with pytest.raises(ConfigError):
        pseudo_sphere_vector_identity(round_sphere(), k=0)


def test_divergence_random_tensor_and_fields():
    imm = ellipsoid((1.0, 1.2, 1.5))
    for tensor in ("T0", "T1", "random", {"random": 7}):
        fld = conformal_field(imm.ambient, "Constant", Z0=[0.0, 1.0, -2.0])
        assert divergence_residual(imm, tensor, "x2^2", fld).passed
    with pytest.raises(ConfigError):
        parse_tensor("T9x")


def test_chain_against_spheroid_oracle():
    rep = chain(ellipsoid((1.0, 1.0, 1.5)), 2, "euc_area")
    assert rep.values == pytest.approx(SPHEROID_CHAIN, rel=1e-12)
    assert rep.verdict == "pass" and not rep.equality_flag
    vol = chain(ellipsoid((1.0, 1.0, 1.5)), 2, "euc_volume")
    assert vol.values[0] == pytest.approx(3 * 4 * np.pi / 3 * 1.5, rel=1e-12)
    assert vol.values[1:] == pytest.approx(SPHEROID_VOLUME_CHAIN, rel=1e-12)


def test_peanut_violates_the_chain_hypothesis():
    imm = radial_graph("R3", **PEANUT)
    rep = chain(imm, 2, "euc_area")
    assert rep.verdict == "hypothesis_violation" and "sigma_2" in rep.violations[0]
    with pytest.raises(HypothesisViolation):
        chain(imm, 2, "euc_area", strict=True)
    # a shallower dent keeps the surface convex
    assert chain(radial_graph("R3", r0=1.0, bumps=[{"type": "zonal", "l": 2, "amp": 0.1}]), 2).verdict == "pass"


def test_peanut_gauss_curvature_against_profile_oracle():
    imm = radial_graph("R3", **PEANUT)
    a = 0.667
    fr = sample(imm).frame
    sigma2 = newton_batch(fr.shape_on[:, 0])[1][:, 2]
    t = fr.u[:, 0]
    ref = radial_revolution_gauss(
        lambda t: 1 + a * (3 * np.cos(t) ** 2 - 1) / 2,
        lambda t: -3 * a * np.cos(t) * np.sin(t),
        lambda t: -3 * a * np.cos(2 * t),
        t,
    )
    assert np.allclose(sigma2, ref, atol=1e-10)
    assert sigma2.min() < 0 < sigma2.max()


def test_weighted_volume():
    assert weighted_volume(round_sphere(1.0)) == pytest.approx(4 * np.pi / 3, rel=1e-13)
    assert weighted_volume(geodesic_sphere_H(1.0)) == pytest.approx(4 * np.pi / 3 * np.sinh(1.0) ** 3, rel=1e-12)
    assert weighted_volume(geodesic_sphere_S(0.8)) == pytest.approx(4 * np.pi / 3 * np.sin(0.8) ** 3, rel=1e-12)
    with pytest.raises(ConfigError):
        weighted_volume(product_torus_R4())


def test_chain_errors():
    with pytest.raises(ConfigError):
        chain(round_sphere(), 1, "sphere_tan")
    with pytest.raises(ConfigError):
        chain(round_sphere(), 1, "unknown")
    with pytest.raises(SizeError):
        chain(round_sphere(), 3)
    rep = chain(geodesic_sphere_S(1.7), 1, "sphere_tan")
    assert rep.verdict == "hypothesis_violation" and any("hemisphere" in v for v in rep.violations)


@settings(max_examples=10)
@given(st.tuples(st.floats(-0.4, 0.4), st.floats(-0.4, 0.4), st.floats(-0.4, 0.4)))
def test_hm_identity_holds_after_translation(c):
    imm = ellipsoid((1.0, 1.1, 1.3), center=c)
    rep = hm_identity(imm, weight="r^2", k=1, refine=False)
    assert rep.relative_residual < 1e-10
