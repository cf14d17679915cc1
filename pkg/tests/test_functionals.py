import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erf

from conftest import (gaussian_hartree_energy, gaussian_hartree_potential, gaussian_inverse_r, gaussian_tf,
                      gaussian_vw, radial_quad)
from scalelab.density import AnisotropicGaussian, Slater, gaussian, sample_points, scale_density
from scalelab.errors import InvalidPerturbationError, ScalelabError, SingularPointError, UnsupportedPathError
from scalelab.functionals import (C_TF, HARTREE, NUMBER, THOMAS_FERMI, VON_WEIZSAECKER, GradientPowerDensity,
                                  HartreeEnergyDensity, energy_density, evaluate_energy, external,
                                  fd_functional_derivative, functional_derivative, hartree_energy_box,
                                  hartree_potential, parse_functional)

ALL = [NUMBER, external(1.0), HARTREE, THOMAS_FERMI, VON_WEIZSAECKER]
DECLARED = {"ne": (1, -3, 3), "ext": (1, -2, 2), "hartree": (2, -5, 2.5), "vw": (1, -1, 1), "tf": (5 / 3, -3, 1.8)}


def test_tf_constant():
    assert C_TF == pytest.approx(0.3 * (3 * math.pi**2) ** (2 / 3), rel=1e-15)
    assert C_TF == pytest.approx(2.871234, abs=1e-6)


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.name)
def test_declared_degrees(spec):
    q, k, m0 = DECLARED[spec.kind]
    assert spec.declared_q == pytest.approx(q) and spec.declared_k == pytest.approx(k)
    assert spec.declared_m0 == pytest.approx(m0, rel=1e-15)
    assert spec.declared_p(spec.declared_m0) == pytest.approx(0.0, abs=1e-15)


def test_parse_functional():
    assert parse_functional("ext(z=2.5)").z == 2.5
    assert [parse_functional(n).kind for n in ("ne", "hartree", "tf", "vw")] == ["ne", "hartree", "tf", "vw"]
    with pytest.raises(ScalelabError):
        parse_functional("exc")


# energies against closed forms


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_gaussian_energies(alpha):
    g = gaussian(alpha, 1.0)
    assert evaluate_energy(VON_WEIZSAECKER, g) == pytest.approx(gaussian_vw(alpha), rel=1e-8)
    assert evaluate_energy(HARTREE, g) == pytest.approx(gaussian_hartree_energy(alpha), rel=1e-8)
    assert evaluate_energy(external(1.0), g) == pytest.approx(-gaussian_inverse_r(alpha), rel=1e-8)
    assert evaluate_energy(external(3.0), g) == pytest.approx(-3 * gaussian_inverse_r(alpha), rel=1e-8)
    assert evaluate_energy(THOMAS_FERMI, g) == pytest.approx(gaussian_tf(alpha), rel=1e-8)


def test_gaussian_reference_numbers(unit_gaussian):
    assert evaluate_energy(NUMBER, gaussian(1.0, 2.5)) == pytest.approx(2.5, rel=1e-12)
    assert evaluate_energy(VON_WEIZSAECKER, unit_gaussian) == pytest.approx(0.75, abs=1e-8)
    assert evaluate_energy(THOMAS_FERMI, unit_gaussian) == pytest.approx(0.42476, abs=1e-5)
    assert evaluate_energy(HARTREE, unit_gaussian) == pytest.approx(0.398942, abs=1e-6)
    assert evaluate_energy(external(1.0), unit_gaussian) == pytest.approx(-1.128379, abs=1e-6)


@pytest.mark.parametrize("zeta", [0.7, 1.0, 2.0])
def test_slater_energies(zeta):
    d = Slater(1.0, zeta)
    assert evaluate_energy(HARTREE, d) == pytest.approx(5 * zeta / 16, rel=1e-8)
    assert evaluate_energy(external(1.0), d) == pytest.approx(-zeta, rel=1e-8)
    # |grad n|^2 / (8n) = zeta^2 n / 2
    assert evaluate_energy(VON_WEIZSAECKER, d) == pytest.approx(zeta**2 / 2, rel=1e-8)
    tf = radial_quad(lambda s: C_TF * (zeta**3 / math.pi * math.exp(-2 * zeta * s)) ** (5 / 3))
    assert evaluate_energy(THOMAS_FERMI, d) == pytest.approx(tf, rel=1e-8)


def test_box_path_matches_radial(unit_gaussian, slater):
    for d in (unit_gaussian, slater):
        for spec in (NUMBER, external(1.0), THOMAS_FERMI, VON_WEIZSAECKER):
            # the box rule sees kinks of |r| along the axes through a cusp or nucleus
            tol = {(True, False): 1e-9, (True, True): 2e-4, (False, False): 2e-4, (False, True): 3e-3}[
                (d is unit_gaussian, spec.kind == "ext")]
            assert evaluate_energy(spec, d, path="box") == pytest.approx(evaluate_energy(spec, d, path="radial"),
                                                                       rel=tol)


def test_anisotropic_uses_box(aniso):
    # separable: vW = (1/8) sum_i int (d_i n)^2 / n = (1/4) sum_i a_i / 2 for unit weight
    assert evaluate_energy(VON_WEIZSAECKER, aniso) == pytest.approx(sum(aniso.exponents) / 4.0, rel=1e-9)
    with pytest.raises(UnsupportedPathError):
        evaluate_energy(HARTREE, aniso, path="radial")
    with pytest.raises(UnsupportedPathError):
        evaluate_energy(VON_WEIZSAECKER, aniso, path="radial")


def test_hartree_6d_oracle_agrees_with_radial():
    d = gaussian(1.0, 1.0)
    assert hartree_energy_box(d) == pytest.approx(evaluate_energy(HARTREE, d), rel=1e-2)


def test_hartree_potential_closed_form(unit_gaussian):
    s = np.array([0.05, 0.3, 1.0, 2.0, 4.5])
    expect = np.array([gaussian_hartree_potential(1.0, x) for x in s])
    np.testing.assert_allclose(hartree_potential(unit_gaussian, s), expect, rtol=1e-10)
    # Slater: v_H(s) = 1/s - e^{-2s}(1/s + 1) for zeta = 1
    sl = Slater(1.0, 1.0)
    np.testing.assert_allclose(hartree_potential(sl, s), 1 / s - np.exp(-2 * s) * (1 / s + 1), rtol=1e-10)


# degree law


LAMBDAS = (0.5, 1 / math.sqrt(2), math.sqrt(2), 2.0)


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.name)
@pytest.mark.parametrize("density", [gaussian(1.0, 1.0), Slater(1.0, 1.0)], ids=["gaussian", "slater"])
def test_degree_law(spec, density):
    base = evaluate_energy(spec, density)
    tol = 1e-6 if spec.kind == "hartree" else 1e-8
    for m in (0, 1, 2, 3):
        for lam in LAMBDAS:
            got = evaluate_energy(spec, scale_density(density, lam, m))
            assert got == pytest.approx(lam ** spec.declared_p(m) * base, rel=tol), (m, lam)


def test_degree_law_box_path(aniso):
    for spec in (NUMBER, external(1.0), THOMAS_FERMI, VON_WEIZSAECKER):
        base = evaluate_energy(spec, aniso)
        for lam in (0.5, 2.0):
            got = evaluate_energy(spec, scale_density(aniso, lam, 1.0))
            assert got == pytest.approx(lam ** spec.declared_p(1.0) * base, rel=1e-8)


# functional derivatives


def test_number_derivative():
    assert np.all(functional_derivative(NUMBER, gaussian(), np.ones((4, 3))) == 1.0)
    assert fd_functional_derivative(NUMBER, gaussian(), [0.3, 0.1, 0.2]) == pytest.approx(1.0, rel=1e-14)


def test_tf_derivative_at_center(unit_gaussian):
    val = float(functional_derivative(THOMAS_FERMI, unit_gaussian, [0, 0, 0]))
    assert val == pytest.approx(5 / 3 * C_TF / math.pi, rel=1e-14)
    assert val == pytest.approx(1.5233, abs=1e-4)
    assert fd_functional_derivative(THOMAS_FERMI, unit_gaussian, [0, 0, 0]) == pytest.approx(val, rel=1e-3)


def test_ext_singular_at_origin(unit_gaussian):
    with pytest.raises(SingularPointError):
        functional_derivative(external(1.0), unit_gaussian, [0, 0, 0])


def test_vw_derivative_gaussian_closed_form(unit_gaussian):
    # 3a/2 - a^2 r^2 / 2 for a normalized Gaussian
    pts = np.random.default_rng(9).normal(size=(20, 3))
    r2 = np.sum(pts**2, axis=1)
    np.testing.assert_allclose(functional_derivative(VON_WEIZSAECKER, unit_gaussian, pts), 1.5 - 0.5 * r2,
                               rtol=1e-12, atol=1e-14)


def test_hartree_bump_at_unit_radius(unit_gaussian):
    fd = fd_functional_derivative(HARTREE, unit_gaussian, [1.0, 0.0, 0.0], width=0.05)
    assert fd == pytest.approx(erf(1.0), abs=1e-3)


def _bump_agreement(spec, density, seed):
    pts = sample_points(density, 20, seed=seed, half_width=2.0, floor=1e-6, min_radius=0.3)
    worst = 0.0
    for r in pts:
        an = float(functional_derivative(spec, density, r))
        fd = fd_functional_derivative(spec, density, r)
        worst = max(worst, abs(fd - an) / max(1.0, abs(an)))
    return worst


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.name)
@pytest.mark.parametrize("density", [gaussian(1.0, 1.0), Slater(1.0, 1.0)], ids=["gaussian", "slater"])
def test_bump_oracle(spec, density):
    assert _bump_agreement(spec, density, seed=12) < 1e-3


@pytest.mark.parametrize("spec", [external(2.0), THOMAS_FERMI, VON_WEIZSAECKER], ids=lambda s: s.name)
def test_bump_oracle_anisotropic(spec, aniso):
    assert _bump_agreement(spec, aniso, seed=13) < 1e-3


def test_bump_rejects_negative_perturbation(unit_gaussian):
    with pytest.raises(InvalidPerturbationError):
        fd_functional_derivative(THOMAS_FERMI, unit_gaussian, [0.5, 0, 0], eps=10.0)
    with pytest.raises(InvalidPerturbationError):
        fd_functional_derivative(HARTREE, unit_gaussian, [0.5, 0, 0], eps=10.0, width=0.05)
    with pytest.raises(InvalidPerturbationError):
        fd_functional_derivative(HARTREE, unit_gaussian, [0.1, 0, 0], width=0.05)


# energy densities


def test_energy_density_examples():
    tf = energy_density(THOMAS_FERMI)
    assert tf.f(np.array(1.0), np.zeros(3), np.zeros(3)) == pytest.approx(2.871234, abs=1e-6)
    vw = energy_density(VON_WEIZSAECKER)
    assert vw.f(np.array(0.3), np.zeros(3), np.ones(3)) == 0.0
    h = energy_density(HARTREE)
    assert isinstance(h, HartreeEnergyDensity) and h.arity == 2
    assert all(energy_density(s).arity == 1 for s in ALL if s.kind != "hartree")
    r1, r2 = np.array([0.1, 0.2, 0.3]), np.array([-0.5, 0.4, 1.0])
    assert h.f(0.2, 0.7, r1, r2) == h.f(0.7, 0.2, r2, r1)


def _fd(fn, x, h=1e-6):
    return (fn(x + h) - fn(x - h)) / (2 * h)


ONE_POINT = [energy_density(s) for s in ALL if s.kind != "hartree"] + [GradientPowerDensity(1.5)]


@pytest.mark.parametrize("ed", ONE_POINT, ids=lambda e: e.name)
@settings(max_examples=30, deadline=None)
@given(n=st.floats(0.05, 3.0), g=st.lists(st.floats(-2, 2), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 0.1), r=st.lists(st.floats(-2, 2), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 0.2))
def test_one_point_partials(ed, n, g, r):
    n, g, r = float(n), np.array(g), np.array(r)
    f = lambda nn, gg, rr: float(ed.f(np.asarray(nn), gg, rr))
    scale = max(1.0, abs(f(n, g, r)))
    assert abs(_fd(lambda x: f(x, g, r), n) - float(ed.d_n(np.asarray(n), g, r))) < 1e-6 * scale
    dg = ed.d_grad(np.asarray(n), g, r)
    dr = ed.d_coord(np.asarray(n), g, r)
    for i, e in enumerate(np.eye(3)):
        assert abs(_fd(lambda x: f(n, g + x * e, r), 0.0) - dg[i]) < 1e-6 * scale
        assert abs(_fd(lambda x: f(n, g, r + x * e), 0.0) - dr[i]) < 1e-6 * scale
    # divergence of r f at frozen slots
    div = sum(_fd(lambda x: (r[i] + x) * f(n, g, r + x * e), 0.0) for i, e in enumerate(np.eye(3)))
    assert abs(div - float(ed.coord_divergence(np.asarray(n), g, r))) < 1e-6 * scale


@settings(max_examples=30, deadline=None)
@given(n1=st.floats(0.05, 3.0), n2=st.floats(0.05, 3.0), seed=st.integers(0, 10**6))
def test_hartree_partials(n1, n2, seed):
    ed = HartreeEnergyDensity()
    r1, r2 = np.random.default_rng(seed).uniform(-2, 2, size=(2, 3))
    if np.linalg.norm(r1 - r2) < 0.2:
        r2 = r2 + 0.5
    f = lambda a, b, x, y: float(ed.f(a, b, x, y))
    assert _fd(lambda x: f(x, n2, r1, r2), n1) == pytest.approx(float(ed.d_n1(n1, n2, r1, r2)), abs=1e-6)
    assert _fd(lambda x: f(n1, x, r1, r2), n2) == pytest.approx(float(ed.d_n2(n1, n2, r1, r2)), abs=1e-6)
    for i, e in enumerate(np.eye(3)):
        assert _fd(lambda x: f(n1, n2, r1 + x * e, r2), 0.0) == pytest.approx(ed.d_coord1(n1, n2, r1, r2)[i], abs=1e-6)
        assert _fd(lambda x: f(n1, n2, r1, r2 + x * e), 0.0) == pytest.approx(ed.d_coord2(n1, n2, r1, r2)[i], abs=1e-6)
    div1 = sum(_fd(lambda x: (r1[i] + x) * f(n1, n2, r1 + x * e, r2), 0.0) for i, e in enumerate(np.eye(3)))
    assert div1 == pytest.approx(float(ed.coord_divergence1(n1, n2, r1, r2)), abs=1e-6)


def test_hartree_coincident_points():
    with pytest.raises(SingularPointError):
        HartreeEnergyDensity().f(1.0, 1.0, np.zeros(3), np.zeros(3))
