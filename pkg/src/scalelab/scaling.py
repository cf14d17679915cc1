"""Numerical recovery of homogeneity and invariance degrees.

Homogeneity degrees come from a log-log least-squares slope of
``|F[n_{lam m}]|`` against ``lam``; the invariance degree is the root of the
affine fit ``p(m) = q m + k`` through those slopes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .density import Density, scale_density
from .errors import DegenerateFitError, DegreeError, FitError, NearZeroFunctionalError
from .functionals import FunctionalSpec, evaluate_energy, functional_derivative, integrate_functional_derivative
from .quadrature import DEFAULT_QUADRATURE, QuadratureSpec

DEFAULT_LAMBDAS = (0.5, 1.0 / math.sqrt(2.0), math.sqrt(2.0), 2.0)
DEFAULT_M_SET = (0.0, 1.0, 2.0, 3.0)
ENERGY_FLOOR = 1e-12
Q_TOLERANCE = 1e-8


@dataclass
class HomogeneityFit:
    functional: str
    density: str
    m: float
    lambda_set: list
    energies: list
    log_values: list  # (ln lam, ln|F|)
    p_hat: float
    intercept: float
    residual_rms: float
    sign: int

    def to_dict(self):
        return asdict(self)


@dataclass
class InvarianceResult:
    functional: str
    density: str
    m_set: list
    p_hats: list
    q_hat: float
    k_hat: float
    m0_hat: float
    fit_residual: float
    degenerate: bool = False
    fits: list = field(default_factory=list, repr=False)

    def to_dict(self):
        d = asdict(self)
        d["fits"] = [f.to_dict() for f in self.fits]
        return d


def least_squares_line(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    design = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def fit_homogeneity_degree(spec: FunctionalSpec, density: Density, m: float,
                           lambda_set: Sequence[float] = DEFAULT_LAMBDAS,
                           quad: QuadratureSpec = DEFAULT_QUADRATURE) -> HomogeneityFit:
    """Slope of ln|F[n_{lam m}]| versus ln lam."""
    lams = [float(x) for x in lambda_set]
    if any(not (x > 0 and math.isfinite(x)) for x in lams):
        raise FitError(f"lambda values must be positive and finite: {lams}")
    if len(set(lams)) < 3:
        raise FitError(f"homogeneity fit needs at least 3 distinct lambda values, got {sorted(set(lams))}")
    energies = [evaluate_energy(spec, scale_density(density, lam, m), quad) for lam in lams]
    small = [e for e in energies if abs(e) < ENERGY_FLOOR]
    if small:
        raise NearZeroFunctionalError(f"|F| below {ENERGY_FLOOR:g} for {spec.name} at m={m}: {small}")
    signs = {int(np.sign(e)) for e in energies}
    if len(signs) != 1:
        raise FitError(f"{spec.name} changes sign across the lambda sweep at m={m}")
    x = [math.log(lam) for lam in lams]
    y = [math.log(abs(e)) for e in energies]
    slope, intercept, rms = least_squares_line(x, y)
    return HomogeneityFit(spec.name, density.label, float(m), lams, energies,
                          [list(p) for p in zip(x, y)], slope, intercept, rms, signs.pop())


def fit_invariance_degree(spec: FunctionalSpec, density: Density, m_set: Sequence[float] = DEFAULT_M_SET,
                          lambda_set: Sequence[float] = DEFAULT_LAMBDAS,
                          quad: QuadratureSpec = DEFAULT_QUADRATURE) -> InvarianceResult:
    """Affine fit of the per-m slopes; m0_hat = -k_hat/q_hat.

    Raises DegenerateFitError (carrying the result) when |q_hat| < 1e-8.
    """
    ms = [float(m) for m in m_set]
    if len(set(ms)) < 2:
        raise FitError(f"invariance fit needs at least 2 distinct m values, got {ms}")
    return invariance_from_fits(spec, density, [fit_homogeneity_degree(spec, density, m, lambda_set, quad)
                                                for m in ms])


def invariance_from_fits(spec: FunctionalSpec, density: Density, fits) -> InvarianceResult:
    ms = [f.m for f in fits]
    if len(set(ms)) < 2:
        raise FitError(f"invariance fit needs at least 2 distinct m values, got {ms}")
    p_hats = [f.p_hat for f in fits]
    q_hat, k_hat, resid = least_squares_line(ms, p_hats)
    result = InvarianceResult(spec.name, density.label, ms, p_hats, q_hat, k_hat, math.nan, resid, fits=list(fits))
    if abs(q_hat) < Q_TOLERANCE:
        result.degenerate = True
        raise DegenerateFitError(f"{spec.name}: p(m) does not depend on m (q_hat={q_hat:.3g}); "
                                 "no finite invariance degree", result)
    result.m0_hat = -k_hat / q_hat
    return result


def _scaling_generator(m):
    """m n + r . grad n, the lam-derivative of n_{lam m} at lam = 1."""
    return lambda n, g, r: m * n + np.einsum("...i,...i->...", r, g)


def _require_nonzero_degree(spec, m):
    p = spec.declared_p(m)
    if abs(p) < 1e-14:
        raise DegreeError(f"p({m:g}) = 0 for {spec.name} (m is its invariance degree); "
                          "use check_invariance_condition instead")
    return p


def check_euler_relation(spec: FunctionalSpec, density: Density, m: float,
                         quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """|F - (1/p(m)) int (dF/dn)(m n + r.grad n)| / |F|."""
    p = _require_nonzero_degree(spec, m)
    energy = evaluate_energy(spec, density, quad)
    rhs = integrate_functional_derivative(spec, density, _scaling_generator(m), quad) / p
    return abs(energy - rhs) / abs(energy)


def check_invariance_condition(spec: FunctionalSpec, density: Density,
                               quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """|int (dF/dn)(m0 n + r.grad n)| normalized by int |dF/dn| n."""
    m0 = spec.declared_m0
    num = integrate_functional_derivative(spec, density, _scaling_generator(m0), quad)

    def abs_weighted(n, g, r):
        return np.sign(functional_derivative(spec, density, r, quad)) * n

    den = integrate_functional_derivative(spec, density, abs_weighted, quad)
    return abs(num) / abs(den)


def check_integral_representation(spec: FunctionalSpec, density: Density, m: float,
                                  quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """|F - ((m - m0)/p(m)) int (dF/dn) n| / |F|."""
    p = _require_nonzero_degree(spec, m)
    energy = evaluate_energy(spec, density, quad)
    coeff = (m - spec.declared_m0) / p
    rhs = coeff * integrate_functional_derivative(spec, density, lambda n, g, r: n, quad)
    return abs(energy - rhs) / abs(energy)
