import math

import numpy as np
import pytest

from conftest import gaussian_inverse_r
from scalelab.density import gaussian
from scalelab.errors import QuadratureError
from scalelab.quadrature import (DEFAULT_QUADRATURE, QuadratureSpec, box_nodes, composite_nodes, integrate_box,
                                 integrate_radial, resolve_r_max)


def test_unit_normalization():
    g = gaussian(1.0, 1.0)
    assert integrate_radial(g.radial_value, DEFAULT_QUADRATURE, resolve_r_max(DEFAULT_QUADRATURE, g)) == \
        pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0])
def test_inverse_r_integral(alpha):
    g = gaussian(alpha, 1.0)
    val = integrate_radial(lambda s: g.radial_value(s) / s, DEFAULT_QUADRATURE, resolve_r_max(DEFAULT_QUADRATURE, g))
    assert val == pytest.approx(gaussian_inverse_r(alpha), rel=1e-12)
    if alpha == 1.0:
        assert val == pytest.approx(1.128379, abs=1e-6)


def test_unit_box():
    assert integrate_box(lambda p: np.ones(len(p)), DEFAULT_QUADRATURE, [0, 0, 0], [1, 1, 1]) == pytest.approx(1.0)


def test_box_polynomial_exact():
    val = integrate_box(lambda p: p[:, 0] ** 3 * p[:, 1] ** 2 * p[:, 2], DEFAULT_QUADRATURE, [0, 0, 0], [1, 2, 3])
    assert val == pytest.approx((1 / 4) * (8 / 3) * (9 / 2), rel=1e-14)


def test_nodes_avoid_origin():
    s, _ = composite_nodes(0.0, 10.0, 60, 8)
    assert np.all(s > 0)


def test_deterministic():
    g = gaussian(1.0, 1.0)
    r = resolve_r_max(DEFAULT_QUADRATURE, g)
    assert integrate_radial(g.radial_value, DEFAULT_QUADRATURE, r) == integrate_radial(g.radial_value,
                                                                                      DEFAULT_QUADRATURE, r)


def test_error_decreases_with_nodes():
    g = gaussian(1.0, 1.0)
    errs = []
    for k in (2, 3, 4, 6):
        q = QuadratureSpec(panels=4, nodes_per_panel=k)
        errs.append(abs(integrate_radial(g.radial_value, q, 6.0) - 1.0))
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_box_error_decreases_with_nodes():
    g = gaussian(1.0, 1.0)
    lo, hi = g.support_box()
    errs = [abs(integrate_box(g.value, DEFAULT_QUADRATURE, lo, hi, nodes=k) - 1.0) for k in (4, 6, 8, 10, 12, 16, 20)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_non_finite_integrand_names_node():
    with pytest.raises(QuadratureError, match="node"):
        integrate_radial(lambda s: np.where(s > 1, np.nan, 1.0), DEFAULT_QUADRATURE, 2.0)
    with pytest.raises(QuadratureError, match="r="), np.errstate(divide="ignore"):
        integrate_box(lambda p: 1.0 / (p[:, 0] - p[0, 0]), DEFAULT_QUADRATURE, [0, 0, 0], [1, 1, 1])


def test_missing_r_max():
    with pytest.raises(QuadratureError):
        integrate_radial(lambda s: s, DEFAULT_QUADRATURE)


def test_breakpoints_split_axes():
    pts, w = box_nodes([-1, -1, -1], [1, 1, 1], 1, 4, breakpoints=[[0.2, 5.0, -0.5]])
    assert len(w) == 8 * 4 * 8
    assert w.sum() == pytest.approx(8.0)


def test_breakpoint_improves_cusp():
    f = lambda p: np.exp(-np.linalg.norm(p, axis=1))
    exact = 8 * math.pi  # int e^{-r} over all space, box [-40,40]^3 is enough
    plain = integrate_box(f, DEFAULT_QUADRATURE, [-40] * 3, [40] * 3, nodes=16)
    split = integrate_box(f, DEFAULT_QUADRATURE, [-40.0, -40, -40], [40.0, 40, 40], nodes=16,
                          breakpoints=[[0.0, 0.0, 0.0]])
    assert abs(split - exact) < abs(plain - exact)


@pytest.mark.parametrize("kw", [dict(panels=0), dict(r_max=-1.0), dict(tail_tolerance=2.0)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        QuadratureSpec(**kw)
