"""Long-range-correlated on-site energies with power-law spectral density.

A sequence of ``N`` energies is synthesised as a sum of ``N/2`` cosines with
amplitudes ``k**(-alpha/2)`` and independent uniform phases, then shifted and
scaled to zero mean and unit variance (per realization). ``alpha = 0`` is
white noise; ``alpha = 2`` looks like a Brownian trace.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateSequenceError, InsufficientDataError, InvalidSpecError

MIN_SITES = 4
MIN_SLOPE_SITES = 256
# periodogram bins below this fraction of the peak are treated as exact zeros
_DEGENERATE_POWER = 1e-24
_UINT64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class DisorderSpec:
    n_sites: int
    alpha: float
    seed: int

    def __post_init__(self):
        if isinstance(self.n_sites, bool) or int(self.n_sites) != self.n_sites:
            raise InvalidSpecError(f"n_sites must be an integer, got {self.n_sites!r}")
        if self.n_sites < MIN_SITES or self.n_sites % 2:
            raise InvalidSpecError(f"n_sites must be even and >= {MIN_SITES}, got {self.n_sites}")
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise InvalidSpecError(f"alpha must be a finite non-negative number, got {self.alpha}")
        if not 0 <= int(self.seed) <= _UINT64_MAX:
            raise InvalidSpecError(f"seed must fit in 64 unsigned bits, got {self.seed}")


@dataclass(frozen=True, eq=False)
class DisorderSequence:
    values: np.ndarray = field(repr=False)
    spec: DisorderSpec

    def __len__(self):
        return self.values.size


def phase_generator(seed: int) -> np.random.Generator:
    """The single documented phase RNG: numpy ``PCG64`` seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def draw_phases(spec: DisorderSpec) -> np.ndarray:
    """``N/2`` phases, uniform on the half-open interval ``[0, 2*pi)``."""
    return 2.0 * np.pi * phase_generator(spec.seed).random(spec.n_sites // 2)


def raw_sequence(n_sites: int, alpha: float, phases: np.ndarray) -> np.ndarray:
    """Un-normalised cosine sum for sites ``n = 1..N``."""
    k = np.arange(1, n_sites // 2 + 1, dtype=float)
    amplitudes = k ** (-0.5 * alpha)
    return kernels.synthesize_disorder(np.ascontiguousarray(phases, dtype=float), amplitudes, n_sites)


def normalize(values: np.ndarray) -> np.ndarray:
    """Affine map to empirical mean 0 and (population) variance 1."""
    centred = values - values.mean()
    sigma = np.sqrt(np.mean(centred**2))
    if not sigma > 0:
        raise DegenerateSequenceError("sequence has zero variance before rescaling")
    out = centred / sigma
    # second pass mops up the O(eps) residual mean left by the first
    return out - out.mean()


def generate_correlated_sequence(spec: DisorderSpec) -> DisorderSequence:
    values = normalize(raw_sequence(spec.n_sites, spec.alpha, draw_phases(spec)))
    values.setflags(write=False)
    return DisorderSequence(values, spec)


def _as_values(sequence) -> np.ndarray:
    if isinstance(sequence, DisorderSequence):
        return sequence.values
    return np.asarray(sequence, dtype=float)


def spectral_slope(sequence) -> float:
    """Slope of ``log|F_k|^2`` against ``log k`` for ``k = 1..N/2``.

    ``F_k`` is the direct discrete Fourier sum of the sequence. A sequence
    generated with exponent ``alpha`` has slope ``-alpha`` up to the Nyquist
    bin. Raises :class:`DegenerateSequenceError` when some bins are
    numerically empty (e.g. a pure cosine), since their logarithm is noise.
    """
    values = _as_values(sequence)
    if values.size < MIN_SLOPE_SITES:
        raise InsufficientDataError(f"need at least {MIN_SLOPE_SITES} sites, got {values.size}")
    power = kernels.periodogram(np.ascontiguousarray(values - values.mean()))
    peak = power.max()
    if not peak > 0 or power.min() <= _DEGENERATE_POWER * peak:
        raise DegenerateSequenceError("periodogram has empty bins; slope fit is degenerate")
    log_k = np.log(np.arange(1, power.size + 1))
    slope, _ = np.polyfit(log_k, np.log(power), 1)
    return float(slope)


def hurst_exponent(alpha: float) -> float:
    return (alpha - 1.0) / 2.0


def lag_autocorrelation(sequence, lag: int = 1) -> float:
    values = _as_values(sequence)
    x = values - values.mean()
    return float(np.dot(x[:-lag], x[lag:]) / np.dot(x, x))
