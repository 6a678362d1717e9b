import numpy as np
import pytest
from hypothesis import given, strategies as st

from minkowski_lab.errors import ConfigError
from minkowski_lab.immersion import ellipsoid, geodesic_sphere_H, geodesic_sphere_S, product_torus_R4, round_sphere, torus_of_revolution
from minkowski_lab.quadrature import (
    QuadratureConfig, area, axis_rule, decreasing, integrate, make_grid, refine, refinement_configs, sample,
)

# frozen from tests/oracles.py: spheroid_area(1, 1.3)
SPHEROID_AREA_1_13 = 15.144036899329308


@pytest.mark.parametrize("imm,exact", [
    (round_sphere(1.7), 4 * np.pi * 1.7**2),
    (torus_of_revolution(2.0, 0.5), 4 * np.pi**2 * 2.0 * 0.5),
    (geodesic_sphere_S(0.9), 4 * np.pi * np.sin(0.9) ** 2),
    (geodesic_sphere_H(1.4), 4 * np.pi * np.sinh(1.4) ** 2),
    (product_torus_R4(1.0, 2.5), 4 * np.pi**2 * 2.5),
    (ellipsoid((1.0, 1.0, 1.3)), SPHEROID_AREA_1_13),
], ids=lambda v: getattr(v, "label", ""))
def test_exact_areas(imm, exact):
    assert area(imm) == pytest.approx(exact, rel=1e-12)


@given(st.integers(1, 30), st.floats(-2, 2), st.floats(0.1, 3))
def test_axis_rules_integrate_polynomials(n, a, length):
    x, w = axis_rule("interval", a, a + length, n)
    deg = 2 * n - 1
    b = a + length
    assert np.sum(w * x**deg) == pytest.approx((b ** (deg + 1) - a ** (deg + 1)) / (deg + 1), rel=1e-9, abs=1e-9)
    x, w = axis_rule("periodic", 0.0, 2 * np.pi, n + 2)
    assert np.sum(w * np.cos(x) ** 2) == pytest.approx(np.pi, rel=1e-12)


def test_grid_and_config():
    imm = torus_of_revolution()
    grid = make_grid(imm, QuadratureConfig(10, 20))
    assert grid.nodes.shape == (400, 2)
    assert QuadratureConfig(64, 128).scaled(0.25).to_dict() == {"interval_nodes": 16, "periodic_nodes": 32}
    assert [c.interval_nodes for c in refinement_configs(QuadratureConfig())] == [16, 32, 64]
    with pytest.raises(ConfigError):
        QuadratureConfig.from_dict({"nodes": 3})
    with pytest.raises(ConfigError):
        QuadratureConfig.from_dict({"interval_nodes": 0})
    with pytest.raises(ConfigError):
        axis_rule("spiral", 0, 1, 4)


def test_vector_integrand_and_centroid():
    imm = ellipsoid((1.0, 1.2, 0.8), center=(0.5, -1.0, 2.0))
    smp = sample(imm)
    c = integrate(imm, QuadratureConfig(), lambda fr: fr.x) / area(imm)
    assert np.allclose(c, [0.5, -1.0, 2.0], atol=1e-12)
    assert smp.frame.n_nodes == 64 * 128


def test_refine_verdicts():
    smooth = refine(lambda c: area(round_sphere(), c), [(8, 16), (16, 32), (32, 64)])
    assert smooth.verdict == "converged"
    # a kink across the polar axis converges only algebraically
    kink = refine(lambda c: integrate(round_sphere(), c, lambda fr: np.abs(fr.x[:, 2] - 0.3)),
                  [(8, 16), (16, 32), (32, 64), (64, 128)])
    assert kink.verdict == "slow" and kink.slow
    with pytest.raises(ConfigError):
        refine(lambda c: 0.0, [(8, 16)])


def test_decreasing_with_noise_floor():
    assert decreasing([1e-3, 1e-6, 1e-9])
    assert not decreasing([1e-6, 1e-3])
    assert decreasing([1e-14, 3e-14, 2e-14])
