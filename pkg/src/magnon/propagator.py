"""Exact spectral time evolution in the single-excitation sector.

One eigendecomposition ``H = V diag(E) V^T`` is computed per Hamiltonian and
reused for every time and observable: ``w(t) = V (exp(-i E t) * V^T w(0))``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from . import kernels
from .chain import HoppingMatrix
from .errors import InvalidInputError, NumericalFailure

NORM_TOL = 1e-10
# implicit QL: iterations allowed per eigenvalue before giving up
QL_MAX_ITER = 30
# complex entries per evolution block (N x block_times)
_BLOCK_ENTRIES = 1 << 21


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues and the matching orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def n_sites(self) -> int:
        return self.eigenvalues.size

    def orthonormality_error(self) -> float:
        v = self.eigenvectors
        return float(np.abs(v.T @ v - np.eye(self.n_sites)).max())

    def reconstruction_error(self, h: HoppingMatrix) -> float:
        v = self.eigenvectors
        rebuilt = (v * self.eigenvalues) @ v.T
        return float(np.abs(rebuilt - h.dense()).max())


def _diagonalize_lapack(h):
    try:
        return eigh_tridiagonal(h.diagonal, h.off_diagonal)
    except LinAlgError as exc:
        raise NumericalFailure(f"LAPACK tridiagonal eigensolver failed: {exc}") from exc


def _diagonalize_ql(h, max_iter):
    n = h.n_sites
    d = np.array(h.diagonal, dtype=float)
    e = np.zeros(n)
    e[: n - 1] = h.off_diagonal
    rows = np.eye(n)
    failed = kernels.tql_inplace(d, e, rows, max_iter)
    if failed >= 0:
        raise NumericalFailure(f"implicit QL did not converge for eigenvalue {failed} within {max_iter} iterations")
    order = np.argsort(d, kind="stable")
    return d[order], np.ascontiguousarray(rows[order].T)


def diagonalize(h: HoppingMatrix, method: str = "lapack", max_iter: int = QL_MAX_ITER) -> SpectralDecomposition:
    """Full eigendecomposition of a symmetric tridiagonal matrix.

    ``method="lapack"`` (default) calls the LAPACK MRRR driver through scipy;
    ``method="ql"`` runs the in-package implicit-shift QL kernel, which raises
    :class:`NumericalFailure` once any eigenvalue needs more than
    ``max_iter`` sweeps.
    """
    if method == "lapack":
        values, vectors = _diagonalize_lapack(h)
    elif method == "ql":
        values, vectors = _diagonalize_ql(h, max_iter)
    else:
        raise InvalidInputError(f"unknown eigensolver {method!r}")
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(vectors))):
        raise NumericalFailure("eigensolver returned non-finite values")
    values.setflags(write=False)
    vectors.setflags(write=False)
    return SpectralDecomposition(values, vectors)


@dataclass(frozen=True, eq=False)
class AmplitudeState:
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.amplitudes, dtype=complex)
        if w.ndim != 1 or w.size == 0:
            raise InvalidInputError("amplitudes must be a non-empty 1-D array")
        norm = float(np.vdot(w, w).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidInputError(f"state is not normalized (norm {norm!r})")
        object.__setattr__(self, "amplitudes", w)

    @property
    def n_sites(self) -> int:
        return self.amplitudes.size

    @classmethod
    def localized(cls, n_sites: int, site: int) -> "AmplitudeState":
        """Excitation on ``site`` (1-based)."""
        _check_site(site, n_sites)
        w = np.zeros(n_sites, dtype=complex)
        w[site - 1] = 1.0
        return cls(w)

    @classmethod
    def bell(cls, n_sites: int, i: int, j: int, sign: int = 1) -> "AmplitudeState":
        """``(|i> + sign |j>) / sqrt(2)`` with 1-based sites."""
        _check_site(i, n_sites)
        _check_site(j, n_sites)
        if i == j:
            raise InvalidInputError("Bell pair needs two distinct sites")
        w = np.zeros(n_sites, dtype=complex)
        w[i - 1] = 1.0 / np.sqrt(2.0)
        w[j - 1] = sign / np.sqrt(2.0)
        return cls(w)


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    """Amplitudes ``w_x(t)`` on a strictly increasing time grid.

    ``amplitudes[t, s]`` belongs to time ``times[t]`` and site ``sites[s]``
    (1-based). A trajectory restricted to a subset of sites cannot check
    normalization; full-chain ones do.
    """

    times: np.ndarray
    amplitudes: np.ndarray = field(repr=False)
    sites: np.ndarray = None
    n_sites: int = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 2 or amps.shape[0] != times.size:
            raise InvalidInputError("amplitudes must have shape (len(times), n_sites)")
        n_sites = amps.shape[1] if self.n_sites is None else int(self.n_sites)
        sites = np.arange(1, n_sites + 1) if self.sites is None else np.asarray(self.sites, dtype=np.int64)
        if sites.size != amps.shape[1]:
            raise InvalidInputError("sites and amplitude columns disagree")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "n_sites", n_sites)

    @property
    def is_full(self) -> bool:
        return self.sites.size == self.n_sites

    def norms(self) -> np.ndarray:
        if not self.is_full:
            raise InvalidInputError("norm needs the full chain")
        return np.einsum("ts,ts->t", self.amplitudes.real, self.amplitudes.real) + np.einsum(
            "ts,ts->t", self.amplitudes.imag, self.amplitudes.imag
        )

    def state(self, index: int) -> AmplitudeState:
        return AmplitudeState(self.amplitudes[index], float(self.times[index]))

    def columns(self, sites) -> np.ndarray:
        """Amplitude columns for the given 1-based sites."""
        sites = np.atleast_1d(np.asarray(sites, dtype=np.int64))
        pos = np.searchsorted(self.sites, sites)
        if np.any(pos >= self.sites.size) or np.any(self.sites[np.minimum(pos, self.sites.size - 1)] != sites):
            raise InvalidInputError("requested sites are not part of this trajectory")
        return self.amplitudes[:, pos]


def _check_site(site, n_sites):
    if not 1 <= site <= n_sites:
        raise InvalidInputError(f"site {site} outside 1..{n_sites}")


def _check_dims(sd, initial):
    if initial.n_sites != sd.n_sites:
        raise InvalidInputError(f"state has {initial.n_sites} sites, decomposition has {sd.n_sites}")


def time_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive uniform grid ``start, start + step, ..., stop`` (stop rounded to the grid)."""
    if not step > 0 or stop < start:
        raise InvalidInputError(f"bad time grid start={start} stop={stop} step={step}")
    count = int(round((stop - start) / step)) + 1
    return start + step * np.arange(count)


def _validate_grid(times):
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.ndim != 1 or times.size == 0:
        raise InvalidInputError("time grid must be a non-empty 1-D sequence")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise InvalidInputError("time grid must be non-negative and strictly increasing")
    return times


def _propagate_block(sd, coeffs, rows, times):
    phases = np.exp(-1j * np.outer(sd.eigenvalues, times)) * coeffs[:, None]
    # one real BLAS product on contiguous [Re | Im] columns
    nt = len(times)
    packed = np.empty((phases.shape[0], 2 * nt))
    packed[:, :nt] = phases.real
    packed[:, nt:] = phases.imag
    prod = rows @ packed
    return (prod[:, :nt] + 1j * prod[:, nt:]).T


def evolve_state(sd: SpectralDecomposition, initial: AmplitudeState, t: float) -> AmplitudeState:
    _check_dims(sd, initial)
    if t == 0:
        return AmplitudeState(initial.amplitudes.copy(), initial.time)
    v = sd.eigenvectors
    coeffs = v.T @ initial.amplitudes
    w = _propagate_block(sd, coeffs, v, np.array([float(t)]))[0]
    return AmplitudeState(w, initial.time + float(t))


def iter_series(sd: SpectralDecomposition, initial: AmplitudeState, times, sites=None, block: int = None):
    """Yield :class:`AmplitudeTrajectory` pieces covering ``times`` in order.

    Overlaps ``V^T w(0)`` are computed once. Only the requested ``sites``
    (1-based, default all) are materialised, in blocks of ``block`` times.
    """
    _check_dims(sd, initial)
    times = _validate_grid(times)
    v = sd.eigenvectors
    coeffs = v.T @ initial.amplitudes
    if sites is None:
        site_idx = None
        rows = v
    else:
        site_idx = np.asarray(sites, dtype=np.int64)
        if site_idx.size == 0 or site_idx.min() < 1 or site_idx.max() > sd.n_sites:
            raise InvalidInputError("sites outside the chain")
        rows = np.ascontiguousarray(v[site_idx - 1])
    if block is None:
        block = max(1, _BLOCK_ENTRIES // sd.n_sites)
    for start in range(0, times.size, block):
        tb = times[start : start + block]
        amps = _propagate_block(sd, coeffs, rows, tb)
        if start == 0 and tb[0] == 0:
            # exact identity at t = 0
            amps[0] = initial.amplitudes if site_idx is None else initial.amplitudes[site_idx - 1]
        yield AmplitudeTrajectory(tb, amps, site_idx, sd.n_sites)


def evolve_series(sd: SpectralDecomposition, initial: AmplitudeState, times, sites=None) -> AmplitudeTrajectory:
    pieces = list(iter_series(sd, initial, times, sites))
    traj = AmplitudeTrajectory(
        np.concatenate([p.times for p in pieces]),
        np.concatenate([p.amplitudes for p in pieces]),
        pieces[0].sites if sites is not None else None,
        sd.n_sites,
    )
    if traj.is_full:
        err = np.abs(traj.norms() - 1.0).max()
        if err > NORM_TOL:
            raise NumericalFailure(f"norm drifted by {err:.3e} during evolution")
    return traj


def energy_expectation(h: HoppingMatrix, amplitudes) -> np.ndarray:
    """``<psi|H|psi>`` evaluated directly from the tridiagonal matrix.

    Accepts one state (1-D) or a stack of states (times along the first axis).
    """
    w = np.asarray(amplitudes, dtype=complex)
    hw = h.apply(w.T)
    return np.real(np.sum(np.conj(w.T) * hw, axis=0))


def spectral_energy(sd: SpectralDecomposition, initial: AmplitudeState) -> float:
    """``sum_k E_k |<E_k|psi(0)>|^2``, the conserved value of ``<H>``."""
    coeffs = sd.eigenvectors.T @ initial.amplitudes
    return float(np.sum(sd.eigenvalues * np.abs(coeffs) ** 2))
