"""Backend selection for the hot kernels.

The compiled Cython module is used when it was built at install time;
otherwise the numpy implementations are used. ``use_backend`` switches
explicitly (benchmarks and tests compare the two).
"""

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

_active = _ckernels if _ckernels is not None else _pykernels


def available_backends():
    return sorted(_BACKENDS)


def backend():
    """Name of the active backend."""
    return "cython" if _active is _ckernels and _ckernels is not None else "python"


def use_backend(name):
    global _active
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}") from None


def gaussian_mix_eval(points, coeffs, alphas, centers):
    return _active.gaussian_mix_eval(points, coeffs, alphas, centers)


def coulomb_pair_sum(pa, qa, pb, qb):
    return _active.coulomb_pair_sum(pa, qa, pb, qb)
