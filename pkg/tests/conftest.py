import math
import sys

import numpy as np
import pytest
from scipy import integrate
from scipy.special import erf

from scalelab import kernels
from scalelab.density import AnisotropicGaussian, Slater, gaussian


@pytest.fixture
def unit_gaussian():
    return gaussian(alpha=1.0, n=1.0)


@pytest.fixture
def slater():
    return Slater(n=1.0, zeta=1.0)


@pytest.fixture
def aniso():
    return AnisotropicGaussian(w=1.0, exponents=(1.0, 2.0, 0.5))


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    before = kernels.backend()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(before)


# closed-form oracles, written independently of the package code paths


def gaussian_inverse_r(alpha):
    return 2.0 * math.sqrt(alpha / math.pi)


def gaussian_hartree_potential(alpha, s):
    return erf(math.sqrt(alpha) * s) / s


def gaussian_hartree_energy(alpha):
    return math.sqrt(alpha / (2.0 * math.pi))


def gaussian_vw(alpha):
    return 0.75 * alpha


def gaussian_tf(alpha):
    c_tf = 0.3 * (3.0 * math.pi**2) ** (2.0 / 3.0)
    return c_tf * (alpha / math.pi) * (3.0 / 5.0) ** 1.5


def radial_quad(fn):
    """scipy adaptive quadrature of int_0^inf 4 pi s^2 fn(s) ds."""
    val, _ = integrate.quad(lambda s: 4 * math.pi * s * s * fn(s), 0, np.inf, epsabs=0, epsrel=1e-13, limit=400)
    return val


def central_gradient(fn, r, h=1e-4):
    r = np.asarray(r, dtype=float)
    out = np.zeros(r.shape)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        out[..., i] = (fn(r + e) - fn(r - e)) / (2 * h)
    return out


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
