"""Closed-form amplitudes for the uniform chain.

Used as independent references for the numerical propagator: the finite-chain
sine-mode sum, its infinite-chain Bessel limit ``i^d J_d(2t)``, Bell-pair
superpositions, and the arrival time of the ballistic front.

Bessel functions of integer order are evaluated by Miller's downward
recurrence (normalised with ``J_0^2 + 2 sum J_n^2 = 1``) for ``z > 1`` and by
the ascending series below; see :mod:`magnon.kernels`.
"""

import math

import numpy as np

from . import kernels
from .errors import BesselRangeError, InvalidInputError, NumericalFailure

MAX_ARGUMENT = 1.0e4
MAX_ORDER = 100_000
_SCAN_STEP = 0.05
_PHASES = np.array([1.0, 1.0j, -1.0, -1.0j])


def _check_bessel_args(m, z):
    if int(m) != m or m < 0 or m > MAX_ORDER:
        raise BesselRangeError(f"order must be an integer in [0, {MAX_ORDER}], got {m}")
    if not (0.0 <= z <= MAX_ARGUMENT):
        raise BesselRangeError(f"argument must lie in [0, {MAX_ARGUMENT:g}], got {z}")


def bessel_j_orders(m_max: int, z) -> np.ndarray:
    """``J_0(z) .. J_{m_max}(z)``; for an array ``z`` one row per argument."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    for value in (z_arr.min(), z_arr.max()):
        _check_bessel_args(m_max, float(value))
    table = kernels.bessel_table(int(m_max), np.ascontiguousarray(z_arr))
    return table[0] if np.ndim(z) == 0 else table


def bessel_j(m: int, z: float) -> float:
    """Bessel function of the first kind ``J_m(z)``, ``m >= 0``, ``0 <= z <= 1e4``."""
    _check_bessel_args(m, z)
    return float(bessel_j_orders(int(m), float(z))[int(m)])


def bessel_amplitude(x0, x, t: float):
    """Infinite-chain amplitude ``i^|x-x0| J_|x-x0|(2t)`` at site(s) ``x``."""
    if t < 0:
        raise InvalidInputError("time must be non-negative")
    d = np.abs(np.asarray(x, dtype=np.int64) - int(x0))
    table = bessel_j_orders(int(d.max()), 2.0 * t)
    out = _PHASES[d % 4] * table[d]
    return complex(out) if out.ndim == 0 else out


def plane_wave_amplitude(n_sites: int, x0: int, x, t: float):
    """Finite open chain amplitude as an explicit sum over the ``N`` sine modes."""
    x_arr = np.asarray(x, dtype=np.int64)
    if not 1 <= x0 <= n_sites or np.any(x_arr < 1) or np.any(x_arr > n_sites):
        raise InvalidInputError(f"sites must lie in 1..{n_sites}")
    if t < 0:
        raise InvalidInputError("time must be non-negative")
    k = 2.0 * np.pi * np.arange(1, n_sites + 1) / (n_sites + 1)
    weights = np.exp(2j * np.cos(k / 2.0) * t) * np.sin(k * x0 / 2.0)
    modes = np.sin(np.outer(np.atleast_1d(x_arr), k) / 2.0)
    out = (2.0 / (n_sites + 1)) * (modes @ weights)
    return complex(out[0]) if x_arr.ndim == 0 else out


def bell_amplitude(i: int, j: int, sign_phase: int, ell, t: float):
    """Amplitude at ``ell`` evolved from ``(|i> + sign_phase |j>)/sqrt(2)`` on the infinite chain.

    Each Bessel order is the absolute site distance and carries its own
    ``i^distance`` phase, so the result is the linear superposition of two
    single-site Bessel waves.
    """
    if i == j:
        raise InvalidInputError("Bell pair needs two distinct sites")
    return (bessel_amplitude(i, ell, t) + sign_phase * bessel_amplitude(j, ell, t)) / math.sqrt(2.0)


def _derivative_sign_fn(m, z):
    # J_m'(z) = J_{m-1}(z) - (m/z) J_m(z)
    table = kernels.bessel_table(m, np.ascontiguousarray(np.atleast_1d(z), dtype=float))
    return table[:, m - 1] - (m / np.atleast_1d(z)) * table[:, m]


def first_maximum_argument(m: int) -> float:
    """First positive root of ``dJ_m/dz`` (location of the first maximum of ``J_m``)."""
    if int(m) != m or m < 1:
        raise InvalidInputError("order must be a positive integer")
    m = int(m)
    z_limit = m + 10.0 * m ** (1.0 / 3.0) + 10.0
    grid = np.arange(_SCAN_STEP, z_limit + _SCAN_STEP, _SCAN_STEP)
    f = _derivative_sign_fn(m, grid)
    crossings = np.flatnonzero((f[:-1] > 0) & (f[1:] <= 0))
    if crossings.size == 0:
        raise NumericalFailure(f"no maximum of J_{m} bracketed below z = {z_limit:.1f}")
    lo, hi = grid[crossings[0]], grid[crossings[0] + 1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _derivative_sign_fn(m, mid)[0] > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def first_maximum_time(m: int) -> float:
    """Time at which the front reaches distance ``m`` (units of 1/J): half the first root."""
    return first_maximum_argument(m) / 2.0
