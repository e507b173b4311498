"""Numerical kernel backends.

The compiled Cython extension is preferred when it imported successfully;
otherwise the pure-numpy fallback is used. Both expose the same three
functions and agree to floating-point accuracy. ``use_backend`` switches
explicitly (benchmarks compare the two); within one backend all kernels
are deterministic: repeated calls with identical inputs are bit-identical
regardless of the thread count.
"""

import numpy as np

from . import _numpy

try:
    from . import _core
except ImportError:  # extension not built; numpy fallback stays active
    _core = None

_BACKENDS = {"numpy": _numpy}
if _core is not None:
    _BACKENDS["compiled"] = _core

_active = _BACKENDS.get("compiled", _numpy)
_num_threads = 0  # 0 = library default


def available_backends():
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return _active.NAME


def use_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = _BACKENDS[name]


def set_num_threads(n: int) -> None:
    """Thread count for the compiled kernels (0 = library default).

    The numpy backend ignores this; determinism of results does not depend
    on it either way.
    """
    global _num_threads
    if n < 0:
        raise ValueError("thread count must be >= 0")
    _num_threads = n


def get_num_threads() -> int:
    return _num_threads


def _c_array(arr, dtype=np.float64):
    return np.ascontiguousarray(arr, dtype=dtype)


def intrinsic_matrices(centers, normals, areas):
    return _active.intrinsic_matrices(_c_array(centers), _c_array(normals), _c_array(areas))


def source_field_sweep(gain, delay, rho, t_gains, t_delays, freqs, bounces):
    if bounces < 1:
        raise ValueError("bounce count must be >= 1")
    if not np.any(rho):  # black room: the field is identically zero
        return np.zeros((len(freqs), t_gains.shape[0], t_gains.shape[1]), dtype=np.complex128)
    return _active.source_field_sweep(
        _c_array(gain),
        _c_array(delay),
        _c_array(rho),
        _c_array(t_gains),
        _c_array(t_delays),
        _c_array(freqs),
        int(bounces),
        _num_threads,
    )


def receive_sweep(fields, r_gains, r_delays, freqs):
    return _active.receive_sweep(
        _c_array(fields, np.complex128),
        _c_array(r_gains),
        _c_array(r_delays),
        _c_array(freqs),
        _num_threads,
    )
