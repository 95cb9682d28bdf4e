"""Single-excitation Hamiltonian of the open XX chain.

In the one-magnon sector the chain reduces to an ``N x N`` real symmetric
tridiagonal matrix: the on-site fields ``eps_n`` on the diagonal and ``-J``
on both off-diagonals (open boundaries).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError


@dataclass(frozen=True, eq=False)
class ChainSpec:
    n_sites: int
    coupling: float = 1.0
    on_site: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if isinstance(self.n_sites, bool) or int(self.n_sites) != self.n_sites or self.n_sites < 1:
            raise InvalidSpecError(f"n_sites must be a positive integer, got {self.n_sites!r}")
        if not (np.isfinite(self.coupling) and self.coupling > 0):
            raise InvalidSpecError(f"coupling must be positive, got {self.coupling}")
        on_site = np.zeros(self.n_sites) if self.on_site is None else np.asarray(self.on_site, dtype=float)
        if on_site.shape != (self.n_sites,):
            raise InvalidSpecError(f"on_site has shape {on_site.shape}, expected ({self.n_sites},)")
        if not np.all(np.isfinite(on_site)):
            raise InvalidSpecError("on_site energies must be finite")
        object.__setattr__(self, "on_site", on_site)

    @classmethod
    def ordered(cls, n_sites: int, coupling: float = 1.0) -> "ChainSpec":
        return cls(n_sites, coupling)


@dataclass(frozen=True, eq=False)
class HoppingMatrix:
    diagonal: np.ndarray
    off_diagonal: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.diagonal.size

    def dense(self) -> np.ndarray:
        return np.diag(self.diagonal) + np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        """``H @ v`` along the first axis, without forming the dense matrix."""
        v = np.asarray(vectors)
        d = self.diagonal.reshape((-1,) + (1,) * (v.ndim - 1))
        e = self.off_diagonal.reshape((-1,) + (1,) * (v.ndim - 1))
        out = d * v
        out[:-1] += e * v[1:]
        out[1:] += e * v[:-1]
        return out


def build_hamiltonian(spec: ChainSpec) -> HoppingMatrix:
    diagonal = spec.on_site.copy()
    off_diagonal = np.full(spec.n_sites - 1, -float(spec.coupling))
    diagonal.setflags(write=False)
    off_diagonal.setflags(write=False)
    return HoppingMatrix(diagonal, off_diagonal)


def ordered_spectrum(n_sites: int, coupling: float = 1.0) -> np.ndarray:
    """Analytic band ``2 J cos(pi m / (N + 1))``, ``m = 1..N``, sorted ascending."""
    m = np.arange(1, n_sites + 1)
    return np.sort(2.0 * coupling * np.cos(np.pi * m / (n_sites + 1)))
