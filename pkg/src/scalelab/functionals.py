"""The five Kohn-Sham related functionals, their derivatives and energy densities.

Each functional carries its declared homogeneity degree ``p(m) = q m + k``
and invariance degree ``m0 = -k/q``. Energy densities expose separated
argument slots (density value, gradient, coordinates) so partial
derivatives and the explicit-coordinate divergence are mechanical.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import kernels
from .density import Density, LinearCombination, ShellBump, as_points, gaussian
from .errors import (
    InvalidDensityError,
    InvalidPerturbationError,
    ScalelabError,
    SingularPointError,
    UnsupportedPathError,
)
from .quadrature import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    box_nodes,
    composite_nodes,
    integrate_box,
    integrate_radial,
    resolve_box,
    resolve_r_max,
)

C_TF = 0.3 * (3.0 * math.pi**2) ** (2.0 / 3.0)
C_VW = 1.0 / 8.0

# (q, k) of p(m) = q*m + k
_DEGREES = {
    "ne": (1.0, -3.0),
    "ext": (1.0, -2.0),
    "hartree": (2.0, -5.0),
    "tf": (5.0 / 3.0, -3.0),
    "vw": (1.0, -1.0),
}

FUNCTIONAL_NAMES = tuple(_DEGREES)


@dataclass(frozen=True)
class FunctionalSpec:
    kind: str
    z: float = 1.0

    def __post_init__(self):
        if self.kind not in _DEGREES:
            raise ScalelabError(f"unknown functional {self.kind!r}; expected one of {FUNCTIONAL_NAMES}")
        if self.kind == "ext" and not self.z > 0:
            raise ScalelabError(f"nuclear charge must be positive, got {self.z}")

    @property
    def declared_q(self) -> float:
        return _DEGREES[self.kind][0]

    @property
    def declared_k(self) -> float:
        return _DEGREES[self.kind][1]

    def declared_p(self, m: float) -> float:
        return self.declared_q * m + self.declared_k

    @property
    def declared_m0(self) -> float:
        return -self.declared_k / self.declared_q

    @property
    def name(self) -> str:
        return f"ext(z={self.z:g})" if self.kind == "ext" else self.kind


NUMBER = FunctionalSpec("ne")
HARTREE = FunctionalSpec("hartree")
THOMAS_FERMI = FunctionalSpec("tf")
VON_WEIZSAECKER = FunctionalSpec("vw")


def external(z: float = 1.0) -> FunctionalSpec:
    return FunctionalSpec("ext", z)


_EXT = re.compile(r"^ext(?:\(\s*z\s*=\s*([^)]+)\))?$")


def parse_functional(text: str) -> FunctionalSpec:
    """Parse ``ne``, ``ext(z=...)``, ``hartree``, ``tf`` or ``vw``."""
    name = text.strip().lower().replace(" ", "")
    match = _EXT.match(name)
    if match:
        try:
            z = float(match.group(1)) if match.group(1) else 1.0
        except ValueError:
            raise ScalelabError(f"bad nuclear charge in {text!r}") from None
        return external(z)
    return FunctionalSpec(name)


# ---------------------------------------------------------------------------
# energy densities


class OnePointEnergyDensity:
    """f(n, grad n, r) with analytic partials.

    ``coord_divergence`` is div[r f] with the density slots held fixed, i.e.
    ``3 f + r . d_coord``.
    """

    arity = 1
    uses_density = True
    uses_gradient = False
    uses_coordinates = False
    name = "f"

    def f(self, n, g, r):
        raise NotImplementedError

    def d_n(self, n, g, r):
        raise NotImplementedError

    def d_grad(self, n, g, r):
        return np.zeros(np.shape(g))

    def d_coord(self, n, g, r):
        return np.zeros(np.shape(r))

    def coord_divergence(self, n, g, r):
        return 3.0 * self.f(n, g, r) + np.einsum("...i,...i->...", r, self.d_coord(n, g, r))

    def on_density(self, density: Density, r):
        """f evaluated on the density at points r."""
        r = as_points(r)
        n, g, _ = density.evaluate(r)
        return self.f(n, g, r)


class NumberDensity(OnePointEnergyDensity):
    name = "ne"

    def f(self, n, g, r):
        return np.asarray(n, dtype=float).copy()

    def d_n(self, n, g, r):
        return np.ones_like(np.asarray(n, dtype=float))


class ExternalCoulombDensity(OnePointEnergyDensity):
    """-Z n / |r| for a nucleus at the origin."""

    uses_coordinates = True

    def __init__(self, z=1.0):
        self.z = float(z)
        self.name = f"ext(z={self.z:g})"

    def _inv_r(self, r):
        dist = np.linalg.norm(r, axis=-1)
        if np.any(dist == 0.0):
            raise SingularPointError("external Coulomb potential is singular at the origin")
        return 1.0 / dist

    def f(self, n, g, r):
        return -self.z * n * self._inv_r(r)

    def d_n(self, n, g, r):
        return -self.z * self._inv_r(r)

    def d_coord(self, n, g, r):
        inv = self._inv_r(r)
        return (self.z * n * inv**3)[..., None] * r


class PowerDensity(OnePointEnergyDensity):
    """C n^power; Thomas-Fermi is C = c_TF, power = 5/3."""

    def __init__(self, coeff=1.0, power=1.0, name=None):
        self.coeff = float(coeff)
        self.power = float(power)
        self.name = name or f"{coeff:g}*n^{power:g}"

    def f(self, n, g, r):
        return self.coeff * np.asarray(n, dtype=float) ** self.power

    def d_n(self, n, g, r):
        return self.coeff * self.power * np.asarray(n, dtype=float) ** (self.power - 1.0)


def thomas_fermi_density():
    return PowerDensity(C_TF, 5.0 / 3.0, name="tf")


class VonWeizsaeckerDensity(OnePointEnergyDensity):
    """|grad n|^2 / (8 n)."""

    name = "vw"
    uses_gradient = True

    def f(self, n, g, r):
        return C_VW * np.einsum("...i,...i->...", g, g) / n

    def d_n(self, n, g, r):
        return -C_VW * np.einsum("...i,...i->...", g, g) / (n * n)

    def d_grad(self, n, g, r):
        return (2.0 * C_VW / n)[..., None] * g


class GradientPowerDensity(OnePointEnergyDensity):
    """Synthetic gradient-only density |grad n|^power (no DFT functional has this form)."""

    uses_density = False
    uses_gradient = True

    def __init__(self, power):
        self.power = float(power)
        self.name = f"|grad n|^{power:g}"

    def f(self, n, g, r):
        return np.linalg.norm(g, axis=-1) ** self.power

    def d_n(self, n, g, r):
        return np.zeros(np.shape(n))

    def d_grad(self, n, g, r):
        norm = np.linalg.norm(g, axis=-1)
        return (self.power * norm ** (self.power - 2.0))[..., None] * g


class HartreeEnergyDensity:
    """Two-point density n(r) n(r') / (2 |r - r'|)."""

    arity = 2
    uses_gradient = False
    uses_coordinates = True
    name = "hartree"

    @staticmethod
    def _inv_dist(r1, r2):
        dist = np.linalg.norm(np.asarray(r1) - np.asarray(r2), axis=-1)
        if np.any(dist == 0.0):
            raise SingularPointError("coincident points in the Hartree kernel")
        return 1.0 / dist

    def f(self, n1, n2, r1, r2):
        return 0.5 * n1 * n2 * self._inv_dist(r1, r2)

    def d_n1(self, n1, n2, r1, r2):
        return 0.5 * n2 * self._inv_dist(r1, r2)

    def d_n2(self, n1, n2, r1, r2):
        return 0.5 * n1 * self._inv_dist(r1, r2)

    def d_coord1(self, n1, n2, r1, r2):
        inv = self._inv_dist(r1, r2)
        return (-0.5 * n1 * n2 * inv**3)[..., None] * (np.asarray(r1) - np.asarray(r2))

    def d_coord2(self, n1, n2, r1, r2):
        return -self.d_coord1(n1, n2, r1, r2)

    def coord_divergence1(self, n1, n2, r1, r2):
        return 3.0 * self.f(n1, n2, r1, r2) + np.einsum("...i,...i->...", r1, self.d_coord1(n1, n2, r1, r2))

    def coord_divergence2(self, n1, n2, r1, r2):
        return 3.0 * self.f(n1, n2, r1, r2) + np.einsum("...i,...i->...", r2, self.d_coord2(n1, n2, r1, r2))

    def on_density(self, density: Density, r1, r2):
        return self.f(density.value(r1), density.value(r2), as_points(r1), as_points(r2))


def energy_density(spec: FunctionalSpec):
    if spec.kind == "ne":
        return NumberDensity()
    if spec.kind == "ext":
        return ExternalCoulombDensity(spec.z)
    if spec.kind == "tf":
        return thomas_fermi_density()
    if spec.kind == "vw":
        return VonWeizsaeckerDensity()
    return HartreeEnergyDensity()


# ---------------------------------------------------------------------------
# energies


def _axis_points(s):
    pts = np.zeros(np.shape(s) + (3,))
    pts[..., 0] = s
    return pts


def _cumulative(func, s, r_max, quad):
    """int_0^s func(t) dt for every s, exact to the panel quadrature.

    Whole panels below s come from a prefix sum; the partial panel gets its
    own Gauss-Legendre rule on [edge, s].
    """
    s = np.minimum(np.asarray(s, dtype=float), r_max)
    k = quad.nodes_per_panel
    edges = np.linspace(0.0, r_max, quad.panels + 1)
    t, w = composite_nodes(0.0, r_max, quad.panels, k)
    panel_sums = (w * func(t)).reshape(quad.panels, k).sum(axis=1)
    prefix = np.concatenate([[0.0], np.cumsum(panel_sums)])
    idx = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, quad.panels - 1)
    lo = edges[idx]
    x, wx = np.polynomial.legendre.leggauss(k)
    half = 0.5 * (s - lo)
    tt = (lo + half)[:, None] + half[:, None] * x[None, :]
    partial = (half[:, None] * wx[None, :] * func(tt)).sum(axis=1)
    return prefix[idx] + partial, prefix[-1]


def _require_spherical(density, what):
    if not density.is_spherical:
        raise UnsupportedPathError(f"{what} on the radial path needs a spherically symmetric density, "
                                   f"got {density.label}")


def hartree_potential(density: Density, s, quad: QuadratureSpec = DEFAULT_QUADRATURE):
    """v_H at radius s: 4 pi [ (1/s) int_0^s n t^2 dt + int_s^inf n t dt ]."""
    _require_spherical(density, "hartree potential")
    r_max = resolve_r_max(quad, density)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s <= 0):
        raise SingularPointError("hartree potential evaluated at the origin; use a nonzero radius")
    charge, _ = _cumulative(lambda t: 4 * np.pi * t * t * density.radial_value(t), s, r_max, quad)
    inner, total = _cumulative(lambda t: 4 * np.pi * t * density.radial_value(t), s, r_max, quad)
    return charge / s + (total - inner)


def _hartree_radial(density, quad):
    _require_spherical(density, "hartree energy")
    r_max = resolve_r_max(quad, density)
    s, w = composite_nodes(0.0, r_max, quad.panels, quad.nodes_per_panel)
    charge, _ = _cumulative(lambda t: 4 * np.pi * t * t * density.radial_value(t), s, r_max, quad)
    # E_H = int 4 pi s n(s) Q(s) ds, Q the enclosed charge
    return float(np.sum(w * 4 * np.pi * s * density.radial_value(s) * charge))


def _pair_energy(density, lo, hi, k):
    pa, wa = box_nodes(lo, hi, 1, k)
    pb, wb = box_nodes(lo, hi, 1, k + 1)
    return 0.5 * kernels.coulomb_pair_sum(pa, wa * density.value(pa), pb, wb * density.value(pb))


def hartree_energy_box(density: Density, quad: QuadratureSpec = DEFAULT_QUADRATURE, tail=1e-6) -> float:
    """Direct 6D tensor-product estimate of E_H (desk-scale oracle, ~1e-3).

    Pairs a k-node grid with a (k+1)-node grid so no pair coincides; the
    singular kernel makes the error O(1/k^2), removed to leading order by
    Richardson extrapolation between k and 3k/2.
    """
    lo, hi = density.support_box(tail)
    k1 = quad.hartree_box_nodes
    k2 = (3 * k1) // 2
    e1 = _pair_energy(density, lo, hi, k1)
    e2 = _pair_energy(density, lo, hi, k2)
    return (k2 * k2 * e2 - k1 * k1 * e1) / (k2 * k2 - k1 * k1)


def _integrate_one_point(ed, density, quad, path):
    def integrand(pts):
        n, g, _ = density.evaluate(pts)
        return ed.f(n, g, pts)

    if path == "radial":
        r_max = resolve_r_max(quad, density)
        return integrate_radial(lambda s: integrand(_axis_points(s)), quad, r_max)
    lo, hi = resolve_box(quad, density)
    return integrate_box(integrand, quad, lo, hi, breakpoints=_breakpoints(density, ed.uses_coordinates))


def _breakpoints(density, nucleus):
    pts = density.singular_points()
    return np.concatenate([pts, np.zeros((1, 3))]) if nucleus else pts


def _pick_path(density, path):
    if path not in ("auto", "radial", "box"):
        raise ValueError(f"unknown integration path {path!r}")
    if path == "auto":
        return "radial" if density.is_spherical else "box"
    if path == "radial":
        _require_spherical(density, "radial integration")
    return path


def evaluate_energy(spec: FunctionalSpec, density: Density, quad: QuadratureSpec = DEFAULT_QUADRATURE,
                    path: str = "auto") -> float:
    """Value of the functional in hartree (electrons for N_e)."""
    path = _pick_path(density, path)
    if spec.kind == "hartree":
        return _hartree_radial(density, quad) if path == "radial" else hartree_energy_box(density, quad)
    return _integrate_one_point(energy_density(spec), density, quad, path)


def integrate_functional_derivative(spec, density, weight, quad=DEFAULT_QUADRATURE, path="auto"):
    """int (dF/dn)(r) * weight(n, grad n, r) over all space."""
    path = _pick_path(density, path)

    def integrand(pts):
        n, g, _ = density.evaluate(pts)
        return functional_derivative(spec, density, pts, quad) * weight(n, g, pts)

    if path == "radial":
        r_max = resolve_r_max(quad, density)
        return integrate_radial(lambda s: integrand(_axis_points(s)), quad, r_max)
    if spec.kind == "hartree":
        raise UnsupportedPathError("hartree functional derivative is only available for spherical densities")
    lo, hi = resolve_box(quad, density)
    return integrate_box(integrand, quad, lo, hi, breakpoints=_breakpoints(density, spec.kind == "ext"))


# ---------------------------------------------------------------------------
# functional derivatives


def functional_derivative(spec: FunctionalSpec, density: Density, r, quad: QuadratureSpec = DEFAULT_QUADRATURE):
    """Analytic dF/dn at the point(s) r."""
    r = as_points(r)
    if spec.kind == "ne":
        return np.ones(r.shape[:-1])
    if spec.kind == "ext":
        dist = np.linalg.norm(r, axis=-1)
        if np.any(dist == 0.0):
            raise SingularPointError("external potential -Z/|r| is singular at the origin")
        return -spec.z / dist
    if spec.kind == "hartree":
        dist = np.linalg.norm(r, axis=-1)
        return hartree_potential(density, dist.ravel(), quad).reshape(dist.shape)
    n, g, lap = density.evaluate(r)
    if np.any(n <= 0):
        raise InvalidDensityError("functional derivative needs n(r) > 0")
    if spec.kind == "tf":
        return (5.0 / 3.0) * C_TF * n ** (2.0 / 3.0)
    gg = np.einsum("...i,...i->...", g, g)
    return C_VW * gg / (n * n) - 2.0 * C_VW * lap / n


def fd_functional_derivative(spec: FunctionalSpec, density: Density, r, eps=None, width=0.01,
                             quad: QuadratureSpec = DEFAULT_QUADRATURE, rel_eps=1e-3):
    """Bump-perturbation estimate of dF/dn at a single point r.

    Returns ``(F[n + eps b] - F[n - eps b]) / (2 eps int b)``. For the local
    functionals b is a normalized Gaussian of the given width centered at r,
    and only the box r +/- 6 width is integrated (the integrands agree
    outside it). For Hartree b is a spherical shell through r, so both
    perturbed densities stay on the radial path; this needs a spherical n
    and |r| of at least six widths.
    ``eps`` defaults to ``rel_eps * n(r) / max b``.
    """
    r = as_points(r).reshape(3)
    n0 = float(density.value(r))
    if spec.kind == "hartree":
        radius = float(np.linalg.norm(r))
        if radius < 6.0 * width:
            raise InvalidPerturbationError(f"shell bump needs |r| >= 6 width, got |r|={radius:g}, width={width:g}")
        bump = ShellBump(radius, width)
        eps = rel_eps * n0 if eps is None else eps
        r_max = max(resolve_r_max(quad, density), bump.support_radius(quad.tail_tolerance))
        panels = max(quad.panels, int(math.ceil(4.0 * r_max / width)))
        fine = quad.with_overrides(r_max=r_max, panels=panels)
        plus = LinearCombination(((1.0, density), (eps, bump)))
        minus = LinearCombination(((1.0, density), (-eps, bump)))
        s, _ = composite_nodes(0.0, r_max, fine.panels, fine.nodes_per_panel)
        if np.any(minus.radial_value(s) <= 0):
            raise InvalidPerturbationError(f"eps={eps} drives the perturbed density negative")
        diff = _hartree_radial(plus, fine) - _hartree_radial(minus, fine)
        return diff / (2.0 * eps * bump.analytic_norm())

    alpha = 1.0 / (2.0 * width * width)
    bump = gaussian(alpha=alpha, n=1.0, center=tuple(r))
    peak = (alpha / math.pi) ** 1.5
    eps = rel_eps * n0 / peak if eps is None else eps
    ed = energy_density(spec)
    pts, w = box_nodes(r - 6 * width, r + 6 * width, 2, 16)
    n, g, _ = density.evaluate(pts)
    b, gb, _ = bump.evaluate(pts)
    if np.any(n - eps * b <= 0):
        raise InvalidPerturbationError(f"eps={eps} drives the perturbed density negative")
    diff = ed.f(n + eps * b, g + eps * gb, pts) - ed.f(n - eps * b, g - eps * gb, pts)
    return float(np.sum(w * diff) / (2.0 * eps * np.sum(w * b)))
