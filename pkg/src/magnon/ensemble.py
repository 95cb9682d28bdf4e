"""Disorder-ensemble orchestration.

Each realization ``r`` gets its own seed ``derive_seed(base_seed, r)``,
builds a disorder sequence and Hamiltonian, diagonalises once and evaluates
the requested observable. Realizations may run on a thread pool, but results
are folded (Welford mean/variance) strictly in realization-index order, so the
output does not depend on the worker count.
"""

import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainSpec, build_hamiltonian
from .disorder import DisorderSpec, generate_correlated_sequence
from .errors import BoundaryContaminationError, EnsembleError, InvalidInputError, NumericalFailure
from .observables import (
    DRIFT_TOL,
    TR_STEP,
    boundary_arrival_time,
    ckw_residual,
    concurrence_map,
    entropy_scan,
    max_concurrence_map,
    stationary_window,
    transmission_reflection,
    window_sites,
)
from .propagator import (
    AmplitudeState,
    diagonalize,
    energy_expectation,
    evolve_series,
    evolve_state,
    iter_series,
    spectral_energy,
)

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
THREADS_ENV = "MAGNON_THREADS"


def _splitmix64_mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, realization_index: int) -> int:
    """Output number ``index + 1`` of a SplitMix64 stream started at ``base_seed``.

    ``mix(base + (index + 1) * 0x9E3779B97F4A7C15 mod 2**64)``; the additive
    step is odd and the finaliser is a bijection, so distinct indices below
    ``2**64`` never collide. Frozen: changing it changes every ensemble.
    """
    state = (int(base_seed) + (int(realization_index) + 1) * _GOLDEN_GAMMA) & _MASK64
    return _splitmix64_mix(state)


def default_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise InvalidInputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise InvalidInputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def _norm_error(amplitudes) -> float:
    a = np.atleast_2d(amplitudes)
    norms = np.einsum("ts,ts->t", a.real, a.real) + np.einsum("ts,ts->t", a.imag, a.imag)
    return float(np.abs(norms - 1.0).max())


# ---------------------------------------------------------------------------
# experiment requests


@dataclass(frozen=True)
class EvolveRequest:
    x0: int
    times: tuple
    kind = "evolve"

    def validate(self, n_sites):
        _site_in(self.x0, n_sites, "x0")

    def observe(self, sd, h, n_sites):
        initial = AmplitudeState.localized(n_sites, self.x0)
        traj = evolve_series(sd, initial, np.asarray(self.times))
        energy = energy_expectation(h, traj.amplitudes)
        diag = {
            "norm_error": _norm_error(traj.amplitudes),
            "ckw_error": float(np.abs(ckw_residual(traj)).max()),
            "energy_drift": float(np.abs(energy - spectral_energy(sd, initial)).max()),
        }
        values = {
            "prob": np.abs(traj.amplitudes) ** 2,
            "re": traj.amplitudes.real,
            "im": traj.amplitudes.imag,
        }
        return values, diag


@dataclass(frozen=True)
class EntropyScanRequest:
    x0: int
    time: float
    l_max: int
    kind = "entropy-scan"

    def validate(self, n_sites):
        _site_in(self.x0, n_sites, "x0")
        if self.l_max < 1 or self.x0 + self.l_max > n_sites:
            raise InvalidInputError(f"L_max={self.l_max} takes the block past site {n_sites}")
        if self.time < 0:
            raise InvalidInputError("time must be non-negative")

    def observe(self, sd, h, n_sites):
        state = evolve_state(sd, AmplitudeState.localized(n_sites, self.x0), self.time)
        _, s = entropy_scan(state, self.x0, self.l_max)
        return {"S": s}, {"norm_error": _norm_error(state.amplitudes)}


@dataclass(frozen=True)
class ConcurrenceMapRequest:
    x0: int
    time: float
    bounds: tuple
    kind = "concurrence-map"

    def validate(self, n_sites):
        _site_in(self.x0, n_sites, "x0")
        window_sites(n_sites, bounds=self.bounds)

    def observe(self, sd, h, n_sites):
        state = evolve_state(sd, AmplitudeState.localized(n_sites, self.x0), self.time)
        cmap = concurrence_map(state, self.bounds)
        return {"C": cmap.values}, {"norm_error": _norm_error(state.amplitudes)}


@dataclass(frozen=True)
class MaxConcurrenceRequest:
    x0: int
    times: tuple
    bounds: tuple
    kind = "max-concurrence"

    def validate(self, n_sites):
        _site_in(self.x0, n_sites, "x0")
        window_sites(n_sites, bounds=self.bounds)

    def observe(self, sd, h, n_sites):
        initial = AmplitudeState.localized(n_sites, self.x0)
        worst = [0.0]

        def checked(pieces):
            for piece in pieces:
                worst[0] = max(worst[0], _norm_error(piece.amplitudes))
                yield piece

        cmap = max_concurrence_map(checked(iter_series(sd, initial, np.asarray(self.times))), self.bounds)
        return {"C": cmap.values}, {"norm_error": worst[0]}


@dataclass(frozen=True)
class TransmissionRequest:
    sender: int
    r0_list: tuple
    window: tuple = None
    step: float = TR_STEP
    kind = "transmission"

    def grid(self, n_sites, coupling):
        if self.window is None:
            return stationary_window(n_sites, self.sender, coupling, self.step)
        start, stop = self.window
        count = int(np.floor((stop - start) / self.step + 1e-9)) + 1
        return stop - self.step * np.arange(count)[::-1]

    def validate(self, n_sites, coupling=1.0):
        _site_in(self.sender, n_sites, "sender")
        for r0 in self.r0_list:
            _site_in(r0, n_sites, "r0")
        grid = self.grid(n_sites, coupling)
        arrival = boundary_arrival_time(n_sites, self.sender, coupling)
        if grid[-1] >= arrival:
            raise BoundaryContaminationError(
                f"evaluation window ends at t={grid[-1]:g}, front reaches the far end at t={arrival:g}"
            )

    def observe(self, sd, h, n_sites, coupling=1.0):
        grid = self.grid(n_sites, coupling)
        traj = evolve_series(sd, AmplitudeState.localized(n_sites, self.sender), grid)
        reports = [
            transmission_reflection(traj, r0, self.sender, coupling, (grid[0], grid[-1])) for r0 in self.r0_list
        ]
        values = {
            "T": np.array([r.transmission for r in reports]),
            "R": np.array([r.reflection for r in reports]),
            "residual": np.array([r.residual for r in reports]),
            "T_t": np.array([r.transmission_t for r in reports]),
            "R_t": np.array([r.reflection_t for r in reports]),
        }
        diag = {
            "norm_error": _norm_error(traj.amplitudes),
            "ckw_error": float(np.abs(ckw_residual(traj)).max()),
            "tr_error": max(r.sum_rule_error for r in reports),
        }
        return values, diag


def _site_in(site, n_sites, name):
    if not 1 <= site <= n_sites:
        raise InvalidInputError(f"{name}={site} outside 1..{n_sites}")


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleConfig:
    n_sites: int
    alpha: float
    experiment: object
    realizations: int = 100
    base_seed: int = 0
    coupling: float = 1.0
    first_realization: int = 0
    max_workers: int = None
    eigensolver: str = "lapack"

    @property
    def ordered(self) -> bool:
        return self.alpha is None

    def __post_init__(self):
        if self.realizations < 1:
            raise InvalidInputError("realizations must be >= 1")
        if self.first_realization < 0:
            raise InvalidInputError("first_realization must be >= 0")


@dataclass(eq=False)
class EnsembleResult:
    kind: str
    alpha: float
    mean: dict
    stderr: dict
    seeds: list
    diagnostics: dict
    realizations: int
    derived: dict = field(default_factory=dict)

    def manifest(self, base_seed) -> dict:
        return {
            "alpha": self.alpha,
            "base_seed": base_seed,
            "realizations": [{"index": i, "seed": s} for i, s in self.seeds],
        }


class _Welford:
    def __init__(self):
        self.count = 0
        self.mean = {}
        self.m2 = {}

    def push(self, values):
        self.count += 1
        for key, x in values.items():
            x = np.asarray(x, dtype=float)
            if self.count == 1:
                self.mean[key] = x.copy()
                self.m2[key] = np.zeros_like(x)
                continue
            delta = x - self.mean[key]
            self.mean[key] += delta / self.count
            self.m2[key] += delta * (x - self.mean[key])

    def stderr(self):
        if self.count < 2:
            return {k: np.zeros_like(v) for k, v in self.mean.items()}
        return {k: np.sqrt(v / (self.count - 1) / self.count) for k, v in self.m2.items()}


def realization_disorder(config: EnsembleConfig, index: int):
    """On-site energies and seed for one realization (``None`` seed when ordered)."""
    if config.ordered:
        return np.zeros(config.n_sites), None
    seed = derive_seed(config.base_seed, index)
    seq = generate_correlated_sequence(DisorderSpec(config.n_sites, config.alpha, seed))
    return seq.values, seed


def _run_one(config, index):
    on_site, seed = realization_disorder(config, index)
    h = build_hamiltonian(ChainSpec(config.n_sites, config.coupling, on_site))
    try:
        sd = diagonalize(h, config.eigensolver)
        if isinstance(config.experiment, TransmissionRequest):
            values, diag = config.experiment.observe(sd, h, config.n_sites, config.coupling)
        else:
            values, diag = config.experiment.observe(sd, h, config.n_sites)
    except NumericalFailure as exc:
        raise EnsembleError(str(exc), index, seed) from exc
    return index, seed, values, diag


def _validate_experiment(config):
    exp = config.experiment
    if isinstance(exp, TransmissionRequest):
        exp.validate(config.n_sites, config.coupling)
    else:
        exp.validate(config.n_sites)


def run_ensemble(config: EnsembleConfig) -> EnsembleResult:
    """Run every realization and reduce to means and standard errors.

    An ordered chain (``alpha=None``) is deterministic and runs once.
    Any failing realization aborts the whole ensemble with its seed attached.
    """
    _validate_experiment(config)
    count = 1 if config.ordered else config.realizations
    indices = range(config.first_realization, config.first_realization + count)
    workers = config.max_workers or default_workers()
    acc = _Welford()
    seeds = []
    diagnostics = {}

    def fold(item):
        index, seed, values, diag = item
        acc.push(values)
        if seed is not None:
            seeds.append((index, seed))
        for key, value in diag.items():
            diagnostics[key] = max(diagnostics.get(key, 0.0), value)

    if workers == 1 or count == 1:
        for index in indices:
            fold(_run_one(config, index))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pending = deque()
            for index in indices:
                if len(pending) >= workers:
                    fold(pending.popleft().result())
                pending.append(pool.submit(_run_one, config, index))
            while pending:
                fold(pending.popleft().result())

    result = EnsembleResult(
        kind=config.experiment.kind,
        alpha=config.alpha,
        mean=acc.mean,
        stderr=acc.stderr(),
        seeds=seeds,
        diagnostics=diagnostics,
        realizations=acc.count,
    )
    if isinstance(config.experiment, TransmissionRequest):
        curve = result.mean["T_t"]
        drift = curve.max(axis=1) - curve.min(axis=1)
        result.derived = {
            "times": config.experiment.grid(config.n_sites, config.coupling),
            "drift": drift,
            "drift_flag": drift > DRIFT_TOL,
        }
    return result
