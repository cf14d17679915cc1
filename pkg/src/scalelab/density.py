"""Analytic electron densities and the homogeneous coordinate scaling.

Every density evaluates its value, gradient and Hessian in closed form, so
pointwise identities are limited by floating point only. Points are arrays
of shape ``(..., 3)`` in bohr; densities are in electrons/bohr^3.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import InvalidDensityError, InvalidScalingError

DEFAULT_TAIL_TOLERANCE = 1e-18


def as_points(r) -> np.ndarray:
    """Coerce ``r`` to a float array of shape (..., 3), rejecting non-finite input."""
    pts = np.asarray(r, dtype=float)
    if pts.shape == () or pts.shape[-1] != 3:
        raise InvalidDensityError(f"points must have trailing dimension 3, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidDensityError("non-finite coordinates")
    return pts


class Density:
    """Base class: subclasses implement ``_eval`` on an (N, 3) array."""

    is_spherical = False

    def _eval(self, pts):
        raise NotImplementedError

    def _apply(self, r):
        pts = as_points(r)
        flat = pts.reshape(-1, 3)
        n, g, h = self._eval(flat)
        lead = pts.shape[:-1]
        return n.reshape(lead), g.reshape(lead + (3,)), h.reshape(lead + (3, 3))

    def value(self, r):
        return self._apply(r)[0]

    def gradient(self, r):
        return self._apply(r)[1]

    def hessian(self, r):
        return self._apply(r)[2]

    def laplacian(self, r):
        return np.trace(self.hessian(r), axis1=-2, axis2=-1)

    def evaluate(self, r):
        """Return ``(n, grad n, laplacian n)`` at ``r``."""
        n, g, h = self._apply(r)
        return n, g, np.trace(h, axis1=-2, axis2=-1)

    def radial_value(self, s):
        """Density along the +x axis; meaningful for spherical densities."""
        s = np.asarray(s, dtype=float)
        pts = np.zeros(s.shape + (3,))
        pts[..., 0] = s
        return self.value(pts)

    def analytic_norm(self) -> float:
        raise NotImplementedError

    def support_radius(self, tol=DEFAULT_TAIL_TOLERANCE) -> float:
        raise NotImplementedError

    def support_box(self, tol=DEFAULT_TAIL_TOLERANCE):
        r = self.support_radius(tol)
        return np.full(3, -r), np.full(3, r)

    def singular_points(self) -> np.ndarray:
        """Points where the density is not smooth (quadrature breakpoints)."""
        return np.zeros((0, 3))

    @property
    def label(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianMix(Density):
    """Sum of normalized isotropic Gaussians, ``w (a/pi)^{3/2} exp(-a |r - c|^2)``.

    ``components`` is a tuple of ``(w, alpha, (cx, cy, cz))``.
    """

    components: tuple

    def __post_init__(self):
        if not self.components:
            raise InvalidDensityError("gaussian mixture needs at least one component")
        comps = []
        for w, a, c in self.components:
            c = tuple(float(x) for x in c)
            if not (w > 0 and a > 0 and math.isfinite(w) and math.isfinite(a)):
                raise InvalidDensityError(f"gaussian component needs w > 0, alpha > 0; got w={w}, alpha={a}")
            if len(c) != 3 or not all(math.isfinite(x) for x in c):
                raise InvalidDensityError(f"bad gaussian center {c}")
            comps.append((float(w), float(a), c))
        object.__setattr__(self, "components", tuple(comps))

    @property
    def is_spherical(self):
        return all(c == (0.0, 0.0, 0.0) for _, _, c in self.components)

    def _arrays(self):
        w = np.array([c[0] for c in self.components])
        a = np.array([c[1] for c in self.components])
        centers = np.array([c[2] for c in self.components], dtype=float).reshape(-1, 3)
        return w * (a / np.pi) ** 1.5, a, centers

    def _eval(self, pts):
        coeffs, alphas, centers = self._arrays()
        return kernels.gaussian_mix_eval(pts, coeffs, alphas, centers)

    def analytic_norm(self):
        return float(sum(w for w, _, _ in self.components))

    def support_radius(self, tol=DEFAULT_TAIL_TOLERANCE):
        log_tol = math.log(1.0 / tol)
        return max(math.sqrt(log_tol / a) + math.sqrt(sum(x * x for x in c)) for _, a, c in self.components)

    def support_box(self, tol=DEFAULT_TAIL_TOLERANCE):
        log_tol = math.log(1.0 / tol)
        lo = np.min([np.array(c) - math.sqrt(log_tol / a) for _, a, c in self.components], axis=0)
        hi = np.max([np.array(c) + math.sqrt(log_tol / a) for _, a, c in self.components], axis=0)
        return lo, hi

    @property
    def label(self):
        if len(self.components) == 1 and self.is_spherical:
            w, a, _ = self.components[0]
            return f"gaussian:alpha={a:g},n={w:g}"
        body = ";".join(f"{w:g},{a:g},{c[0]:g},{c[1]:g},{c[2]:g}" for w, a, c in self.components)
        return f"gaussian-mix:[{body}]"


def gaussian(alpha=1.0, n=1.0, center=(0.0, 0.0, 0.0)) -> GaussianMix:
    return GaussianMix(((n, alpha, tuple(center)),))


@dataclass(frozen=True)
class Slater(Density):
    """Hydrogen-like exponential ``N (zeta^3/pi) exp(-2 zeta |r|)``.

    The gradient is taken as zero at the cusp; the Hessian diverges there.
    """

    n: float = 1.0
    zeta: float = 1.0
    is_spherical = True

    def __post_init__(self):
        if not (self.n > 0 and self.zeta > 0):
            raise InvalidDensityError(f"slater needs n > 0, zeta > 0; got n={self.n}, zeta={self.zeta}")

    def _eval(self, pts):
        z = self.zeta
        s = np.sqrt(np.einsum("ij,ij->i", pts, pts))
        val = self.n * z**3 / np.pi * np.exp(-2.0 * z * s)
        with np.errstate(divide="ignore", invalid="ignore"):
            unit = np.where(s[:, None] > 0, pts / s[:, None], 0.0)
            tangential = np.where(s > 0, 2.0 * z / s, np.inf)
        grad = (-2.0 * z * val)[:, None] * unit
        outer = unit[:, :, None] * unit[:, None, :]
        proj = np.eye(3) - outer
        hess = val[:, None, None] * (4.0 * z * z * outer - tangential[:, None, None] * proj)
        return val, grad, hess

    def analytic_norm(self):
        return float(self.n)

    def support_radius(self, tol=DEFAULT_TAIL_TOLERANCE):
        return math.log(1.0 / tol) / (2.0 * self.zeta)

    def singular_points(self):
        return np.zeros((1, 3))

    @property
    def label(self):
        return f"slater:zeta={self.zeta:g},n={self.n:g}"


@dataclass(frozen=True)
class AnisotropicGaussian(Density):
    """``w prod_i (a_i/pi)^{1/2} exp(-a_i x_i^2)``; distinct a_i make every d_i n differ."""

    w: float = 1.0
    exponents: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        a = tuple(float(x) for x in self.exponents)
        if len(a) != 3 or not all(x > 0 for x in a) or not self.w > 0:
            raise InvalidDensityError(f"aniso needs w > 0 and three positive exponents; got {self.w}, {a}")
        object.__setattr__(self, "exponents", a)

    @property
    def is_spherical(self):
        ax, ay, az = self.exponents
        return ax == ay == az

    def _eval(self, pts):
        a = np.array(self.exponents)
        pref = self.w * np.prod(np.sqrt(a / np.pi))
        val = pref * np.exp(-(pts * pts) @ a)
        ax = a * pts
        grad = -2.0 * val[:, None] * ax
        hess = val[:, None, None] * (4.0 * ax[:, :, None] * ax[:, None, :] - 2.0 * np.diag(a))
        return val, grad, hess

    def analytic_norm(self):
        return float(self.w)

    def support_radius(self, tol=DEFAULT_TAIL_TOLERANCE):
        return math.sqrt(math.log(1.0 / tol) / min(self.exponents))

    def support_box(self, tol=DEFAULT_TAIL_TOLERANCE):
        ext = np.sqrt(math.log(1.0 / tol) / np.array(self.exponents))
        return -ext, ext

    @property
    def label(self):
        ax, ay, az = self.exponents
        return f"aniso:ax={ax:g},ay={ay:g},az={az:g},w={self.w:g}"


@dataclass(frozen=True)
class ScalingParams:
    lam: float
    m: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise InvalidScalingError(f"scaling strength must be a finite positive number, got {self.lam}")
        if not math.isfinite(self.m):
            raise InvalidScalingError(f"scaling degree must be finite, got {self.m}")


@dataclass(frozen=True)
class ScaledDensity(Density):
    """``lam^m n(lam r)`` for a base density ``n``."""

    base: Density
    scaling: ScalingParams

    @property
    def lam(self):
        return self.scaling.lam

    @property
    def m(self):
        return self.scaling.m

    @property
    def is_spherical(self):
        return self.base.is_spherical

    def _eval(self, pts):
        lam, m = self.lam, self.m
        n, g, h = self.base._eval(lam * pts)
        return lam**m * n, lam ** (m + 1) * g, lam ** (m + 2) * h

    def analytic_norm(self):
        return self.lam ** (self.m - 3) * self.base.analytic_norm()

    def support_radius(self, tol=DEFAULT_TAIL_TOLERANCE):
        return self.base.support_radius(tol) / self.lam

    def support_box(self, tol=DEFAULT_TAIL_TOLERANCE):
        lo, hi = self.base.support_box(tol)
        return lo / self.lam, hi / self.lam

    def singular_points(self):
        return self.base.singular_points() / self.lam

    @property
    def label(self):
        return f"{self.base.label}@lambda={self.lam:g},m={self.m:g}"


def scale_density(base: Density, lam: float, m: float) -> ScaledDensity:
    """Apply ``n -> lam^m n(lam r)``.

    Rescaling an already scaled density with the same degree composes the
    strengths, so ``scale(scale(n, a, m), b, m)`` is ``scale(n, a*b, m)``.
    """
    params = ScalingParams(float(lam), float(m))
    if isinstance(base, ScaledDensity) and base.m == params.m:
        return ScaledDensity(base.base, ScalingParams(base.lam * params.lam, params.m))
    return ScaledDensity(base, params)


@dataclass(frozen=True)
class LinearCombination(Density):
    """``sum_k c_k n_k``; used to build perturbed densities ``n +/- eps b``."""

    terms: tuple

    @property
    def is_spherical(self):
        return all(d.is_spherical for _, d in self.terms)

    def _eval(self, pts):
        n = np.zeros(len(pts))
        g = np.zeros((len(pts), 3))
        h = np.zeros((len(pts), 3, 3))
        for c, d in self.terms:
            dn, dg, dh = d._eval(pts)
            n += c * dn
            g += c * dg
            h += c * dh
        return n, g, h

    def analytic_norm(self):
        return float(sum(c * d.analytic_norm() for c, d in self.terms))

    def support_radius(self, tol=DEFAULT_TAIL_TOLERANCE):
        return max(d.support_radius(tol) for _, d in self.terms)

    def support_box(self, tol=DEFAULT_TAIL_TOLERANCE):
        boxes = [d.support_box(tol) for _, d in self.terms]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def singular_points(self):
        return np.concatenate([d.singular_points() for _, d in self.terms])

    @property
    def label(self):
        return " + ".join(f"{c:g}*({d.label})" for c, d in self.terms)


@dataclass(frozen=True)
class ShellBump(Density):
    """Spherical shell whose radial mass ``4 pi s^2 b(s)`` is a Gaussian in ``s``.

    ``b(s) = exp(-(s - radius)^2 / (2 width^2)) / s^2`` (unnormalized). The
    mass profile is symmetric about ``radius``, so averaging a smooth radial
    function against it is accurate to O(width^2). Meant for
    ``radius >> width``; b is singular at the origin.
    """

    radius: float
    width: float
    is_spherical = True

    def __post_init__(self):
        if not (self.width > 0 and self.radius > 0):
            raise InvalidDensityError("shell bump needs positive radius and width")

    def _eval(self, pts):
        s = np.sqrt(np.einsum("ij,ij->i", pts, pts))
        if np.any(s == 0):
            raise InvalidDensityError("shell bump is singular at the origin")
        t = (s - self.radius) / self.width
        e = np.exp(-0.5 * t * t)
        e1 = -t / self.width * e
        e2 = (t * t - 1.0) / self.width**2 * e
        val = e / s**2
        d1 = e1 / s**2 - 2.0 * e / s**3
        d2 = e2 / s**2 - 4.0 * e1 / s**3 + 6.0 * e / s**4
        unit = pts / s[:, None]
        outer = unit[:, :, None] * unit[:, None, :]
        hess = d2[:, None, None] * outer + (d1 / s)[:, None, None] * (np.eye(3) - outer)
        return val, d1[:, None] * unit, hess

    def analytic_norm(self):
        w, s0 = self.width, self.radius
        return 4.0 * math.pi * w * math.sqrt(math.pi / 2.0) * (1.0 + math.erf(s0 / (w * math.sqrt(2.0))))

    def support_radius(self, tol=DEFAULT_TAIL_TOLERANCE):
        return self.radius + self.width * math.sqrt(2.0 * math.log(1.0 / tol))

    @property
    def label(self):
        return f"shell:radius={self.radius:g},width={self.width:g}"


def evaluate(density: Density, r):
    """Exact ``(n, grad n, laplacian n)`` at ``r``."""
    return density.evaluate(r)


def check_scaling_identities(density: ScaledDensity, r, h=1e-4):
    """Finite-difference check of the two lambda-derivative identities.

    Returns ``(value_residual, gradient_residual)``:
    ``|lam dn/dlam - (m n + r.grad n)|`` and the max over components of
    ``|lam d(d_i n)/dlam - ((m+1) d_i n + sum_j x_j d_j d_i n)|``. Both are
    O(h^2) in the central-difference step.
    """
    if not isinstance(density, ScaledDensity):
        raise TypeError("check_scaling_identities needs a ScaledDensity")
    r = as_points(r)
    lam, m = density.lam, density.m
    if not h < lam:
        raise InvalidScalingError(f"step h={h} must be smaller than lambda={lam}")
    plus = ScaledDensity(density.base, ScalingParams(lam + h, m))
    minus = ScaledDensity(density.base, ScalingParams(lam - h, m))
    n_p, g_p, _ = plus._apply(r)
    n_m, g_m, _ = minus._apply(r)
    n, g, hess = density._apply(r)
    dn = lam * (n_p - n_m) / (2 * h)
    dg = lam * (g_p - g_m) / (2 * h)
    expect_n = m * n + np.einsum("...i,...i->...", r, g)
    expect_g = (m + 1) * g + np.einsum("...j,...ji->...i", r, hess)
    return float(np.max(np.abs(dn - expect_n))), float(np.max(np.abs(dg - expect_g)))


def sample_points(density: Density, count: int, seed: int, half_width=2.0, floor=1e-8,
                  min_radius=0.0) -> np.ndarray:
    """Uniform points in ``[-half_width, half_width]^3`` with ``n > floor``.

    Deterministic for a fixed seed. ``min_radius`` keeps points off the origin.
    """
    rng = np.random.default_rng(seed)
    out = []
    have = 0
    for _ in range(1000):
        cand = rng.uniform(-half_width, half_width, size=(4 * count, 3))
        keep = density.value(cand) > floor
        if min_radius > 0:
            keep &= np.linalg.norm(cand, axis=1) >= min_radius
        cand = cand[keep]
        out.append(cand)
        have += len(cand)
        if have >= count:
            break
    pts = np.concatenate(out)[:count]
    if len(pts) < count:
        raise InvalidDensityError("could not draw enough sample points above the density floor")
    return pts


_KV = re.compile(r"^\s*([A-Za-z]+)\s*=\s*([^,]+?)\s*$")


def _kv(body: str, allowed: Sequence[str], text: str) -> dict:
    out = {}
    if body.strip():
        for item in body.split(","):
            match = _KV.match(item)
            if not match:
                raise InvalidDensityError(f"cannot parse {item!r} in density string {text!r}")
            key, val = match.group(1).lower(), match.group(2)
            if key not in allowed:
                raise InvalidDensityError(f"unknown key {key!r} in {text!r}; allowed {list(allowed)}")
            try:
                out[key] = float(val)
            except ValueError:
                raise InvalidDensityError(f"bad number {val!r} in {text!r}") from None
    return out


def parse_density(text: str) -> Density:
    """Parse the density mini-language.

    >>> parse_density("slater:zeta=2,n=1").label
    'slater:zeta=2,n=1'
    """
    kind, sep, body = text.strip().partition(":")
    kind = kind.strip().lower()
    if not sep:
        raise InvalidDensityError(f"density string {text!r} lacks 'kind:' prefix")
    if kind == "gaussian":
        kv = _kv(body, ("alpha", "n", "cx", "cy", "cz"), text)
        return gaussian(kv.get("alpha", 1.0), kv.get("n", 1.0),
                        (kv.get("cx", 0.0), kv.get("cy", 0.0), kv.get("cz", 0.0)))
    if kind == "slater":
        kv = _kv(body, ("zeta", "n"), text)
        return Slater(n=kv.get("n", 1.0), zeta=kv.get("zeta", 1.0))
    if kind == "aniso":
        kv = _kv(body, ("ax", "ay", "az", "w"), text)
        return AnisotropicGaussian(w=kv.get("w", 1.0),
                                   exponents=(kv.get("ax", 1.0), kv.get("ay", 1.0), kv.get("az", 1.0)))
    if kind == "gaussian-mix":
        body = body.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise InvalidDensityError(f"gaussian-mix expects [w,alpha,cx,cy,cz;...], got {text!r}")
        comps = []
        for chunk in body[1:-1].split(";"):
            try:
                vals = [float(x) for x in chunk.split(",")]
            except ValueError:
                raise InvalidDensityError(f"bad number in {chunk!r}") from None
            if len(vals) != 5:
                raise InvalidDensityError(f"gaussian-mix component needs 5 numbers, got {chunk!r}")
            comps.append((vals[0], vals[1], tuple(vals[2:])))
        return GaussianMix(tuple(comps))
    raise InvalidDensityError(f"unknown density kind {kind!r}")

