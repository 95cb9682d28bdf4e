"""Entanglement measures for single-excitation states.

For ``|psi> = sum_i w_i |i>`` every two-spin reduced state is an X-shaped
4x4 matrix built from ``w_i, w_j`` alone, and its concurrence collapses to
``2 |w_i| |w_j|``. Both routes are implemented: the general Wootters formula
for arbitrary two-qubit densities and the closed form used in bulk work.

All site arguments are 1-based.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import BoundaryContaminationError, InvalidInputError, InvalidPairError, InvalidStateError
from .propagator import AmplitudeState, AmplitudeTrajectory

STATE_TOL = 1e-12
DRIFT_TOL = 0.02
TR_STEP = 0.5
# basis |0_i 0_j>, |1_i 0_j>, |0_i 1_j>, |1_i 1_j>; sigma_y x sigma_y is the same in either middle ordering
_YY = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=complex)


def _amps(state) -> np.ndarray:
    if isinstance(state, AmplitudeState):
        return state.amplitudes
    return np.asarray(state, dtype=complex)


def _check_pair(i, j, n_sites):
    if i == j:
        raise InvalidPairError(f"pair needs two distinct sites, got {i} twice")
    for s in (i, j):
        if not 1 <= s <= n_sites:
            raise InvalidInputError(f"site {s} outside 1..{n_sites}")


@dataclass(frozen=True, eq=False)
class TwoQubitDensity:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise InvalidStateError(f"two-qubit density must be 4x4, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    def validate(self, tol: float = STATE_TOL) -> None:
        m = self.matrix
        if np.abs(m - m.conj().T).max() > tol:
            raise InvalidStateError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > tol or abs(np.trace(m).imag) > tol:
            raise InvalidStateError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(m).min() < -tol:
            raise InvalidStateError("density matrix has a negative eigenvalue")


def reduced_density(state, i: int, j: int) -> TwoQubitDensity:
    w = _amps(state)
    _check_pair(i, j, w.size)
    wi, wj = w[i - 1], w[j - 1]
    pi, pj = abs(wi) ** 2, abs(wj) ** 2
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0 - pi - pj
    rho[1, 1] = pi
    rho[2, 2] = pj
    rho[1, 2] = wi * np.conj(wj)
    rho[2, 1] = wj * np.conj(wi)
    return TwoQubitDensity(rho)


def wootters_concurrence(rho) -> float:
    """``max(0, s1 - s2 - s3 - s4)`` with ``s_k`` the square roots of the spectrum of ``rho rho~``.

    The ``s_k`` are taken as the singular values of ``A^T (Y x Y) A`` where
    ``rho = A A^dagger``; this matrix has exactly the same ``s_k`` but avoids
    square roots of rounding-level eigenvalues, which would otherwise cost
    eight digits on rank-deficient (e.g. pure) states.
    """
    if not isinstance(rho, TwoQubitDensity):
        rho = TwoQubitDensity(rho)
    rho.validate()
    m = 0.5 * (rho.matrix + rho.matrix.conj().T)
    mu, vecs = np.linalg.eigh(m)
    factor = vecs * np.sqrt(np.clip(mu, 0.0, None))
    tau = factor.T @ _YY @ factor
    s = np.linalg.svd(tau, compute_uv=False)
    return float(max(0.0, s[0] - s[1] - s[2] - s[3]))


def concurrence_pair(state, i: int, j: int) -> float:
    w = _amps(state)
    _check_pair(i, j, w.size)
    return float(2.0 * abs(w[i - 1]) * abs(w[j - 1]))


@dataclass(frozen=True, eq=False)
class ConcurrenceMap:
    sites: np.ndarray
    values: np.ndarray = field(repr=False)

    def row(self, site: int) -> np.ndarray:
        return self.values[int(np.searchsorted(self.sites, site))]


def window_sites(n_sites: int, center: int = None, half_width: int = None, bounds=None) -> np.ndarray:
    """1-based sites of a window: explicit ``bounds=(lo, hi)`` or ``center +- half_width`` clipped to the chain."""
    if bounds is not None:
        lo, hi = bounds
    elif center is None or half_width is None:
        lo, hi = 1, n_sites
    else:
        lo, hi = max(1, center - half_width), min(n_sites, center + half_width)
    if hi < lo:
        raise InvalidInputError("empty site window")
    if lo < 1 or hi > n_sites:
        raise InvalidInputError(f"window {lo}..{hi} exceeds chain 1..{n_sites}")
    return np.arange(lo, hi + 1)


def _window(site_window, n_sites):
    if isinstance(site_window, np.ndarray) or (isinstance(site_window, (list, tuple)) and len(site_window) != 2):
        sites = np.asarray(site_window, dtype=np.int64)
        if sites.size == 0:
            raise InvalidInputError("empty site window")
        if sites.min() < 1 or sites.max() > n_sites or np.any(np.diff(sites) <= 0):
            raise InvalidInputError("window sites must be increasing and inside the chain")
        return sites
    if site_window is None:
        return np.arange(1, n_sites + 1)
    return window_sites(n_sites, bounds=site_window)


def _pair_map(moduli):
    c = 2.0 * np.outer(moduli, moduli)
    np.fill_diagonal(c, 0.0)
    return c


def concurrence_map(state, site_window=None) -> ConcurrenceMap:
    """``C_ij = 2 |w_i w_j|`` over a window (``(lo, hi)`` or explicit sites), zero on the diagonal."""
    w = _amps(state)
    sites = _window(site_window, w.size)
    return ConcurrenceMap(sites, _pair_map(np.abs(w[sites - 1])))


def max_concurrence_map(trajectory, site_window=None) -> ConcurrenceMap:
    """Elementwise maximum of :func:`concurrence_map` over all sampled times.

    ``trajectory`` is an :class:`AmplitudeTrajectory` or any iterable of them
    (e.g. :func:`magnon.propagator.iter_series`); pieces are folded into a
    running maximum and never stored.
    """
    pieces = [trajectory] if isinstance(trajectory, AmplitudeTrajectory) else trajectory
    out = None
    sites = None
    for piece in pieces:
        if out is None:
            sites = _window(site_window, piece.n_sites)
            out = np.zeros((sites.size, sites.size))
        moduli = np.ascontiguousarray(np.abs(piece.columns(sites)))
        kernels.running_max_pairs(out, moduli)
    if out is None:
        raise InvalidInputError("empty trajectory")
    np.fill_diagonal(out, 0.0)
    return ConcurrenceMap(sites, out)


def binary_entropy(p):
    """``-p log2 p - (1-p) log2 (1-p)`` with ``0 log 0 = 0``."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -np.where(p > 0, p * np.log2(p), 0.0) - np.where(q > 0, q * np.log2(q), 0.0)
    return float(s) if s.ndim == 0 else s


def block_entropy(state, block) -> float:
    w = _amps(state)
    idx = np.atleast_1d(np.asarray(block, dtype=np.int64))
    if idx.size == 0:
        raise InvalidInputError("block must contain at least one site")
    if idx.min() < 1 or idx.max() > w.size:
        raise InvalidInputError("block exceeds the chain")
    return binary_entropy(np.sum(np.abs(w[np.unique(idx) - 1]) ** 2))


def entropy_scan(state, x0: int, l_max: int):
    """Block entropy of ``{x0+1, ..., x0+L}`` for ``L = 1..l_max``; returns ``(L, S)``."""
    w = _amps(state)
    if l_max < 1 or x0 < 1 or x0 + l_max > w.size:
        raise InvalidInputError(f"blocks up to site {x0 + l_max} exceed chain of {w.size}")
    p = np.cumsum(np.abs(w[x0 : x0 + l_max]) ** 2)
    return np.arange(1, l_max + 1), binary_entropy(p)


def external_qubit_concurrence(trajectory: AmplitudeTrajectory, r=None) -> np.ndarray:
    """``C_r(t) = |<r|U(t)|s>|`` for a trajectory started from ``|s>``.

    With ``r=None`` every available site is returned (shape ``(times, sites)``).
    """
    if r is None:
        return np.abs(trajectory.amplitudes)
    cols = np.abs(trajectory.columns(r))
    return cols[:, 0] if np.ndim(r) == 0 else cols


def ckw_residual(trajectory: AmplitudeTrajectory) -> np.ndarray:
    """``sum_r C_r(t)^2 - 1`` at each time (zero when all entanglement is pairwise)."""
    c = external_qubit_concurrence(trajectory)
    return np.sum(c**2, axis=1) - 1.0


def stationary_window(n_sites: int, sender: int, coupling: float = 1.0, step: float = TR_STEP):
    """Late-time sampling grid ``[0.8 t_f, t_f]`` with ``t_f = (N - s - 10) / (2J)``.

    The ballistic front moves two sites per unit ``1/J``, so at ``t_f`` it is
    still ten sites short of the far end.
    """
    t_final = (n_sites - sender - 10) / (2.0 * coupling)
    if t_final <= 0:
        raise BoundaryContaminationError(f"chain of {n_sites} sites is too short for sender {sender}")
    count = int(np.floor(0.2 * t_final / step + 1e-9)) + 1
    return t_final - step * np.arange(count)[::-1]


def boundary_arrival_time(n_sites: int, sender: int, coupling: float = 1.0) -> float:
    return (n_sites - sender) / (2.0 * coupling)


@dataclass(frozen=True, eq=False)
class TransmissionReport:
    r0: int
    transmission: float
    reflection: float
    residual: float
    window: tuple
    drift: float
    drift_flag: bool
    times: np.ndarray = field(repr=False)
    transmission_t: np.ndarray = field(repr=False)
    reflection_t: np.ndarray = field(repr=False)
    residual_t: np.ndarray = field(repr=False)

    @property
    def sum_rule_error(self) -> float:
        return float(np.abs(self.transmission_t + self.reflection_t + self.residual_t - 1.0).max())


def transmission_reflection(
    trajectory: AmplitudeTrajectory, r0: int, sender: int, coupling: float = 1.0, window=None
) -> TransmissionReport:
    """Squared-concurrence weight beyond (``T``) and before (``R``) site ``r0``.

    Both are averaged over the trajectory samples inside ``window``
    (default :func:`stationary_window`). The window must end before the front
    can reach the far boundary.
    """
    if not trajectory.is_full:
        raise InvalidInputError("transmission needs full-chain amplitudes")
    n = trajectory.n_sites
    if not 1 <= r0 <= n:
        raise InvalidInputError(f"reference site {r0} outside 1..{n}")
    if window is None:
        grid = stationary_window(n, sender, coupling)
        window = (float(grid[0]), float(grid[-1]))
    t_start, t_end = window
    if t_end >= boundary_arrival_time(n, sender, coupling):
        raise BoundaryContaminationError(
            f"window ends at t={t_end} but the front reaches site {n} at t={boundary_arrival_time(n, sender, coupling)}"
        )
    tol = 1e-9 * max(1.0, abs(t_end))
    mask = (trajectory.times >= t_start - tol) & (trajectory.times <= t_end + tol)
    if not mask.any():
        raise InvalidInputError(f"trajectory has no samples in window [{t_start}, {t_end}]")
    c2 = np.abs(trajectory.amplitudes[mask]) ** 2
    t_series = c2[:, r0:].sum(axis=1)
    r_series = c2[:, : r0 - 1].sum(axis=1)
    res_series = c2[:, r0 - 1]
    drift = float(t_series.max() - t_series.min())
    return TransmissionReport(
        r0=r0,
        transmission=float(t_series.mean()),
        reflection=float(r_series.mean()),
        residual=float(res_series.mean()),
        window=(float(t_start), float(t_end)),
        drift=drift,
        drift_flag=drift > DRIFT_TOL,
        times=trajectory.times[mask],
        transmission_t=t_series,
        reflection_t=r_series,
        residual_t=res_series,
    )
