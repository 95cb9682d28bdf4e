import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from magnon import (
    AmplitudeState,
    BoundaryContaminationError,
    ChainSpec,
    DisorderSpec,
    InvalidInputError,
    InvalidPairError,
    InvalidStateError,
    block_entropy,
    build_hamiltonian,
    concurrence_map,
    concurrence_pair,
    diagonalize,
    entropy_scan,
    evolve_series,
    evolve_state,
    external_qubit_concurrence,
    generate_correlated_sequence,
    max_concurrence_map,
    reduced_density,
    stationary_window,
    time_grid,
    transmission_reflection,
    wootters_concurrence,
)
from magnon.observables import binary_entropy, ckw_residual
from magnon.propagator import iter_series
from magnon.oracle import bessel_j_orders

# -(1/4) log2(1/4) - (3/4) log2(3/4)
ENTROPY_QUARTER = 0.8112781244591328


def random_state(rng, n):
    w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return w / np.linalg.norm(w)


def disordered_sd(n, alpha, seed):
    eps = generate_correlated_sequence(DisorderSpec(n, alpha, seed)).values
    return diagonalize(build_hamiltonian(ChainSpec(n, 1.0, eps)))


def test_reduced_density_examples():
    w = np.zeros(6, complex)
    w[1] = 1.0
    np.testing.assert_array_equal(reduced_density(w, 2, 5).matrix, np.diag([0, 1, 0, 0]))
    np.testing.assert_array_equal(reduced_density(w, 3, 5).matrix, np.diag([1, 0, 0, 0]))
    w = np.zeros(6, complex)
    w[[1, 4]] = 1 / np.sqrt(2)
    rho = reduced_density(w, 2, 5).matrix
    np.testing.assert_allclose(rho[1:3, 1:3], 0.5 * np.ones((2, 2)), atol=1e-15)
    assert np.abs(rho).sum() == pytest.approx(2.0)
    with pytest.raises(InvalidPairError):
        reduced_density(w, 2, 2)


def test_wootters_examples():
    bell = np.zeros(4, complex)
    bell[[1, 2]] = 1 / np.sqrt(2)
    assert wootters_concurrence(np.outer(bell, bell.conj())) == pytest.approx(1.0, abs=1e-12)
    assert wootters_concurrence(np.diag([1.0, 0, 0, 0])) == 0.0
    w = np.zeros(10, complex)
    w[2], w[7] = 0.6, 0.5j
    w[0] = np.sqrt(1 - 0.61)
    assert wootters_concurrence(reduced_density(w, 3, 8)) == pytest.approx(0.6, abs=1e-12)


def test_wootters_on_general_states():
    # Werner state p |psi-><psi-| + (1-p) I/4 has C = max(0, (3p - 1)/2)
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    for p in (0.2, 1 / 3, 0.5, 0.9):
        rho = p * np.outer(psi, psi) + (1 - p) * np.eye(4) / 4
        assert wootters_concurrence(rho) == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-12)


@pytest.mark.parametrize(
    "matrix",
    [
        np.diag([0.5, 0.5, 0.5, 0.0]),
        np.diag([1.2, -0.2, 0, 0]),
        np.array([[0.5, 0.1, 0, 0], [0.2, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]),
        np.eye(3) / 3,
    ],
)
def test_non_physical_density_rejected(matrix):
    with pytest.raises(InvalidStateError):
        wootters_concurrence(matrix)


def test_closed_form_equals_wootters_on_random_states(rng):
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 65))
        w = random_state(rng, n)
        i, j = rng.choice(np.arange(1, n + 1), 2, replace=False)
        worst = max(worst, abs(concurrence_pair(w, i, j) - wootters_concurrence(reduced_density(w, i, j))))
    assert worst < 1e-12


def test_concurrence_pair_examples():
    w = np.zeros(8, complex)
    w[[2, 5]] = 1 / np.sqrt(2)
    assert concurrence_pair(w, 3, 6) == pytest.approx(1.0)
    loc = AmplitudeState.localized(8, 4)
    assert all(concurrence_pair(loc, i, j) == 0 for i in range(1, 9) for j in range(1, 9) if i != j)
    with pytest.raises(InvalidPairError):
        concurrence_pair(w, 3, 3)
    with pytest.raises(InvalidInputError):
        concurrence_pair(w, 3, 9)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(2, 40), elements=st.floats(-1, 1)), st.integers(0, 2**32 - 1))
def test_values_within_unit_interval(raw, seed):
    if np.linalg.norm(raw) < 1e-3:
        return
    phase = np.exp(1j * np.random.default_rng(seed).uniform(0, 2 * np.pi, raw.size))
    w = raw * phase / np.linalg.norm(raw)
    c = concurrence_map(w).values
    assert c.min() >= 0.0 and c.max() <= 1.0 + 1e-15
    _, s = entropy_scan(w, 1, raw.size - 1)
    assert s.min() >= 0.0 and s.max() <= 1.0


def test_concurrence_map_structure(rng):
    w = random_state(rng, 30)
    cmap = concurrence_map(w, (5, 20))
    assert cmap.sites.tolist() == list(range(5, 21))
    assert np.array_equal(cmap.values, cmap.values.T)
    assert np.all(np.diag(cmap.values) == 0)
    assert cmap.row(9)[3] == pytest.approx(concurrence_pair(w, 9, 8))
    assert not concurrence_map(AmplitudeState.localized(30, 7)).values.any()
    with pytest.raises(InvalidInputError):
        concurrence_map(w, (20, 5))
    with pytest.raises(InvalidInputError):
        concurrence_map(w, [])


def test_ordered_snapshot_front_and_mirror():
    n, x0 = 401, 201
    sd = diagonalize(build_hamiltonian(ChainSpec.ordered(n)))
    state = evolve_state(sd, AmplitudeState.localized(n, x0), 20.0)
    cmap = concurrence_map(state, (x0 - 60, x0 + 60))
    i, j = np.unravel_index(np.argmax(cmap.values), cmap.values.shape)
    offsets = np.abs(cmap.sites[[i, j]] - x0)
    assert np.all((offsets >= 35) & (offsets <= 41))
    # reflection about x0: C[x0+a, x0+b] == C[x0-a, x0-b]
    assert np.abs(cmap.values - cmap.values[::-1, ::-1]).max() < 1e-10
    # inside the light cone the map oscillates from site to site
    row = cmap.row(x0 + 38)[60:100]
    assert np.sum(np.diff(np.sign(np.diff(row))) != 0) > 10


def test_binary_entropy_examples():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0 and binary_entropy(1.0) == 0.0
    assert binary_entropy(0.25) == pytest.approx(ENTROPY_QUARTER, abs=1e-12)


def test_block_entropy():
    w = np.zeros(10, complex)
    w[[1, 6]] = 0.5, np.sqrt(0.75)
    assert block_entropy(w, [2, 3, 4]) == pytest.approx(ENTROPY_QUARTER, abs=1e-12)
    assert block_entropy(w, [7]) == pytest.approx(ENTROPY_QUARTER, abs=1e-12)
    # p = 1 up to one rounding unit
    assert block_entropy(w, [2, 7]) == pytest.approx(0.0, abs=1e-13)
    with pytest.raises(InvalidInputError):
        block_entropy(w, [11])
    with pytest.raises(InvalidInputError):
        block_entropy(w, [])


def test_entropy_scan(ordered400):
    L, s = entropy_scan(AmplitudeState.localized(400, 200), 200, 50)
    assert L.tolist() == list(range(1, 51)) and not s.any()
    _, sd = ordered400
    state = evolve_state(sd, AmplitudeState.localized(400, 200), 40.0)
    L, s = entropy_scan(state, 200, 120)
    assert s[79] > 0.95 and s[-1] > 0.99
    p = np.cumsum(np.abs(state.amplitudes[200:320]) ** 2)
    below = p <= 0.5
    assert np.all(np.diff(s[below]) >= -1e-15)
    with pytest.raises(InvalidInputError):
        entropy_scan(state, 300, 101)


def test_max_map_single_time_and_streaming():
    sd = disordered_sd(128, 2.0, 3)
    psi = AmplitudeState.localized(128, 64)
    grid = time_grid(0.0, 25.0, 0.1)
    one = evolve_series(sd, psi, [7.3])
    assert np.array_equal(max_concurrence_map(one, (40, 90)).values, concurrence_map(one.state(0), (40, 90)).values)
    traj = evolve_series(sd, psi, grid)
    brute = np.max([concurrence_map(traj.state(k), (40, 90)).values for k in range(grid.size)], axis=0)
    streamed = max_concurrence_map(iter_series(sd, psi, grid, block=13), (40, 90))
    np.testing.assert_allclose(streamed.values, brute, atol=1e-15)
    with pytest.raises(InvalidInputError):
        max_concurrence_map(iter([]), (40, 90))


def test_external_qubit_concurrence_and_ckw(ordered400):
    _, sd = ordered400
    s = 150
    traj = evolve_series(sd, AmplitudeState.localized(400, s), time_grid(0.0, 40.0, 0.5))
    c = external_qubit_concurrence(traj)
    assert c[0, s - 1] == 1.0 and c[0].sum() == 1.0
    assert np.abs(ckw_residual(traj)).max() < 1e-10
    r = np.arange(100, 201)
    bessel = np.abs(bessel_j_orders(60, 2.0 * traj.times)[:, np.abs(r - s)])
    assert np.abs(external_qubit_concurrence(traj, r) - bessel).max() < 1e-6
    assert external_qubit_concurrence(traj, 151).shape == traj.times.shape


def test_transmission_sum_rule_and_limits():
    sd = disordered_sd(200, 1.0, 8)
    sender = 1
    grid = stationary_window(200, sender)
    assert grid[-1] == pytest.approx((200 - 1 - 10) / 2.0)
    assert grid[0] >= 0.8 * grid[-1] - 1e-9 and np.allclose(np.diff(grid), 0.5)
    traj = evolve_series(sd, AmplitudeState.localized(200, sender), grid)
    rep = transmission_reflection(traj, 20, sender)
    assert np.abs(rep.transmission_t + rep.reflection_t + rep.residual_t - 1.0).max() < 1e-9
    assert rep.sum_rule_error < 1e-9
    assert 0.0 <= rep.transmission <= 1.0 and 0.0 <= rep.reflection <= 1.0
    assert rep.drift == pytest.approx(rep.transmission_t.max() - rep.transmission_t.min())
    assert rep.drift_flag == (rep.drift > 0.02)
    early = evolve_series(sd, AmplitudeState.localized(200, sender), time_grid(0.0, 0.5, 0.05))
    rep0 = transmission_reflection(early, 20, sender, window=(0.0, 0.5))
    assert rep0.transmission < 1e-10 and rep0.reflection > 0.99


def test_transmission_boundary_guard():
    sd = disordered_sd(100, 1.0, 8)
    traj = evolve_series(sd, AmplitudeState.localized(100, 1), time_grid(0.0, 60.0, 0.5))
    with pytest.raises(BoundaryContaminationError):
        transmission_reflection(traj, 20, 1, window=(40.0, 50.0))
    with pytest.raises(BoundaryContaminationError):
        stationary_window(10, 1)
