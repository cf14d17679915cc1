"""Composite Gauss-Legendre quadrature on radial intervals and boxes."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from .density import DEFAULT_TAIL_TOLERANCE
from .errors import QuadratureError


@dataclass(frozen=True)
class QuadratureSpec:
    """Node layout for radial and box integration.

    ``r_max`` / ``box_lower`` / ``box_upper`` left as None are taken from the
    density's support at ``tail_tolerance`` (its decay envelope relative to
    the peak), which makes the grid of a scaled density an exact rescaling of
    the base grid.
    """

    r_max: Optional[float] = None
    panels: int = 60
    nodes_per_panel: int = 8
    box_lower: Optional[tuple] = None
    box_upper: Optional[tuple] = None
    box_panels: int = 2
    box_nodes: int = 20
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE
    hartree_box_nodes: int = 16

    def __post_init__(self):
        for name in ("panels", "nodes_per_panel", "box_panels", "box_nodes", "hartree_box_nodes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.r_max is not None and not self.r_max > 0:
            raise ValueError("r_max must be positive")
        if not 0 < self.tail_tolerance < 1:
            raise ValueError("tail_tolerance must lie in (0, 1)")

    def with_overrides(self, **kw) -> "QuadratureSpec":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


DEFAULT_QUADRATURE = QuadratureSpec()


@lru_cache(maxsize=64)
def _leggauss(k):
    x, w = np.polynomial.legendre.leggauss(k)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_nodes(a: float, b: float, panels: int, k: int):
    """Nodes and weights of ``panels`` equal Gauss-Legendre panels on [a, b]."""
    x, w = _leggauss(k)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def resolve_r_max(quad: QuadratureSpec, density=None) -> float:
    if quad.r_max is not None:
        return float(quad.r_max)
    if density is None:
        raise QuadratureError("r_max not set and no density to size the radial grid from")
    return float(density.support_radius(quad.tail_tolerance))


def resolve_box(quad: QuadratureSpec, density=None):
    if quad.box_lower is not None and quad.box_upper is not None:
        return np.asarray(quad.box_lower, dtype=float), np.asarray(quad.box_upper, dtype=float)
    if density is None:
        raise QuadratureError("box corners not set and no density to size the box from")
    return density.support_box(quad.tail_tolerance)


def radial_nodes(quad: QuadratureSpec, r_max: float):
    return composite_nodes(0.0, r_max, quad.panels, quad.nodes_per_panel)


def _check_finite(values, where):
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = int(np.flatnonzero(bad.ravel())[0])
        raise QuadratureError(f"non-finite integrand {values.ravel()[idx]} at node {where(idx)}")
    return values


def integrate_radial(f, quad: QuadratureSpec = DEFAULT_QUADRATURE, r_max: Optional[float] = None) -> float:
    """Integral over all space of a spherically symmetric function ``f(s)``.

    Computes ``int_0^R 4 pi s^2 f(s) ds``; nodes are interior to the panels so
    the origin is never sampled.
    """
    if r_max is None:
        r_max = resolve_r_max(quad)
    s, w = radial_nodes(quad, r_max)
    vals = _check_finite(f(s), lambda i: f"s={s[i]!r}")
    return float(np.sum(w * 4.0 * np.pi * s * s * vals))


def _axis_rule(lo, hi, panels, k, cuts=()):
    inner = sorted(c for c in set(cuts) if lo < c < hi)
    edges = [lo, *inner, hi]
    parts = [composite_nodes(a, b, panels, k) for a, b in zip(edges[:-1], edges[1:])]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def box_nodes(lower, upper, panels: int, k: int, breakpoints=None):
    """Tensor-product nodes (N, 3) and weights (N,) on an axis-aligned box.

    Each point in ``breakpoints`` (shape (K, 3)) splits every axis at its
    coordinate, so a point singularity sits on sub-box corners.
    """
    cuts = np.zeros((0, 3)) if breakpoints is None else np.asarray(breakpoints, dtype=float).reshape(-1, 3)
    axes = [_axis_rule(lo, hi, panels, k, cuts[:, i]) for i, (lo, hi) in enumerate(zip(lower, upper))]
    x, y, z = np.meshgrid(axes[0][0], axes[1][0], axes[2][0], indexing="ij")
    wx, wy, wz = np.meshgrid(axes[0][1], axes[1][1], axes[2][1], indexing="ij")
    pts = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    return pts, (wx * wy * wz).ravel()


def integrate_box(f, quad: QuadratureSpec = DEFAULT_QUADRATURE, lower=None, upper=None,
                  nodes: Optional[int] = None, breakpoints=None) -> float:
    """Integral of ``f(points)`` over a box; ``points`` has shape (N, 3)."""
    if lower is None or upper is None:
        lower, upper = resolve_box(quad)
    pts, w = box_nodes(lower, upper, quad.box_panels, nodes or quad.box_nodes, breakpoints)
    vals = _check_finite(f(pts), lambda i: f"r={tuple(pts[i])!r}")
    return float(np.sum(w * vals))
