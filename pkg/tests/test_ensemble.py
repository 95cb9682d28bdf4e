import threading
import time

import numpy as np
import pytest

from magnon import (
    ConcurrenceMapRequest,
    DisorderSpec,
    EnsembleConfig,
    EnsembleError,
    EntropyScanRequest,
    EvolveRequest,
    InvalidInputError,
    MaxConcurrenceRequest,
    NumericalFailure,
    TransmissionRequest,
    derive_seed,
    generate_correlated_sequence,
    run_ensemble,
    time_grid,
)
from magnon import ensemble as ens

# reference outputs of SplitMix64 (Vigna) for seeds 0 and 1234567
SPLITMIX_SEED0 = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F, 0xF88BB8A8724C81EC]
SPLITMIX_SEED1234567_FIRST = 6457827717110365317

ENTROPY = EntropyScanRequest(x0=64, time=10.0, l_max=40)


def assert_same(a, b):
    assert a.kind == b.kind and a.realizations == b.realizations and a.seeds == b.seeds
    for key in a.mean:
        assert a.mean[key].tobytes() == b.mean[key].tobytes()
        assert a.stderr[key].tobytes() == b.stderr[key].tobytes()


def test_derive_seed_reference_values():
    assert [derive_seed(0, i) for i in range(4)] == SPLITMIX_SEED0
    assert derive_seed(1234567, 0) == SPLITMIX_SEED1234567_FIRST
    assert derive_seed(2**64 - 1, 5) == derive_seed(2**64 - 1, 5)
    assert all(0 <= derive_seed(s, 3) < 2**64 for s in (0, 1, 2**63, 2**64 - 1))


def test_derive_seed_no_collisions_below_one_million():
    seeds = {derive_seed(42, i) for i in range(1_000_000)}
    assert len(seeds) == 1_000_000


def test_derive_seed_never_returns_base():
    rng = np.random.default_rng(0)
    bases = [int(b) for b in rng.integers(0, 2**63, 10_000)]
    assert all(derive_seed(b, 0) != b for b in bases)
    assert all(derive_seed(b, 0) != b for b in range(10_000))


def test_single_realization_has_zero_stderr():
    res = run_ensemble(EnsembleConfig(128, 1.0, ENTROPY, realizations=1, base_seed=5))
    assert res.realizations == 1 and not res.stderr["S"].any()
    seed = derive_seed(5, 0)
    assert res.seeds == [(0, seed)]
    on_site, s = ens.realization_disorder(EnsembleConfig(128, 1.0, ENTROPY, base_seed=5), 0)
    assert s == seed
    assert on_site.tobytes() == generate_correlated_sequence(DisorderSpec(128, 1.0, seed)).values.tobytes()


def test_repeat_runs_are_bit_identical():
    cfg = EnsembleConfig(128, 2.0, ENTROPY, realizations=6, base_seed=11)
    assert_same(run_ensemble(cfg), run_ensemble(cfg))


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_worker_count_does_not_change_bits(workers):
    base = run_ensemble(EnsembleConfig(128, 2.0, ENTROPY, realizations=7, base_seed=3, max_workers=1))
    threaded = run_ensemble(EnsembleConfig(128, 2.0, ENTROPY, realizations=7, base_seed=3, max_workers=workers))
    assert_same(base, threaded)


def test_env_worker_setting(monkeypatch):
    monkeypatch.setenv("MAGNON_THREADS", "4")
    assert ens.default_workers() == 4
    for bad in ("0", "-2", "many"):
        monkeypatch.setenv("MAGNON_THREADS", bad)
        with pytest.raises(InvalidInputError):
            ens.default_workers()
    monkeypatch.delenv("MAGNON_THREADS")
    assert ens.default_workers() == 1


def test_in_flight_realizations_are_bounded(monkeypatch):
    active, peak = [0], [0]
    lock = threading.Lock()
    real = ens._run_one

    def tracked(config, index):
        with lock:
            active[0] += 1
            peak[0] = max(peak[0], active[0])
        time.sleep(0.01)
        try:
            return real(config, index)
        finally:
            with lock:
                active[0] -= 1

    monkeypatch.setattr(ens, "_run_one", tracked)
    run_ensemble(EnsembleConfig(64, 1.0, EntropyScanRequest(32, 5.0, 10), realizations=12, max_workers=3))
    assert 1 < peak[0] <= 3


def test_split_ensembles_combine():
    k = 5
    whole = run_ensemble(EnsembleConfig(128, 1.0, ENTROPY, realizations=2 * k, base_seed=9))
    first = run_ensemble(EnsembleConfig(128, 1.0, ENTROPY, realizations=k, base_seed=9))
    second = run_ensemble(EnsembleConfig(128, 1.0, ENTROPY, realizations=k, base_seed=9, first_realization=k))
    combined = (k * first.mean["S"] + k * second.mean["S"]) / (2 * k)
    assert np.abs(whole.mean["S"] - combined).max() < 1e-12
    assert whole.seeds == first.seeds + second.seeds


def test_stderr_scales_as_inverse_sqrt():
    req = TransmissionRequest(sender=1, r0_list=(20,))
    small = run_ensemble(EnsembleConfig(400, 1.0, req, realizations=25, base_seed=1))
    large = run_ensemble(EnsembleConfig(400, 1.0, req, realizations=100, base_seed=1))
    ratio = small.stderr["T"][0] / large.stderr["T"][0]
    assert ratio == pytest.approx(2.0, rel=0.3)


def test_ordered_chain_runs_once():
    res = run_ensemble(EnsembleConfig(128, None, ENTROPY, realizations=50))
    assert res.realizations == 1 and res.seeds == [] and res.alpha is None
    assert res.manifest(0) == {"alpha": None, "base_seed": 0, "realizations": []}


def test_result_shapes_match_requests():
    grid = tuple(time_grid(0.0, 2.0, 0.5))
    cases = [
        (EvolveRequest(32, grid), {"prob": (5, 64), "re": (5, 64), "im": (5, 64)}),
        (EntropyScanRequest(32, 3.0, 20), {"S": (20,)}),
        (ConcurrenceMapRequest(32, 3.0, (20, 40)), {"C": (21, 21)}),
        (MaxConcurrenceRequest(32, grid, (20, 40)), {"C": (21, 21)}),
        (TransmissionRequest(1, (5, 10), window=(20.0, 26.0)), {"T": (2,), "R": (2,), "T_t": (2, 13), "R_t": (2, 13)}),
    ]
    for request, shapes in cases:
        res = run_ensemble(EnsembleConfig(64, 1.0, request, realizations=3))
        for key, shape in shapes.items():
            assert res.mean[key].shape == shape and res.stderr[key].shape == shape
        assert res.diagnostics["norm_error"] < 1e-10


def test_transmission_derived_drift():
    res = run_ensemble(EnsembleConfig(200, 0.0, TransmissionRequest(1, (20,)), realizations=3))
    times = res.derived["times"]
    assert times[-1] == pytest.approx((200 - 1 - 10) / 2)
    drift = res.mean["T_t"][0].max() - res.mean["T_t"][0].min()
    assert res.derived["drift"][0] == drift
    assert res.derived["drift_flag"][0] == (drift > 0.02)
    assert res.diagnostics["tr_error"] < 1e-9 and res.diagnostics["ckw_error"] < 1e-9


def test_failing_realization_aborts_with_seed(monkeypatch):
    real = ens.diagonalize
    calls = [0]

    def flaky(h, method="lapack"):
        calls[0] += 1
        if calls[0] == 3:
            raise NumericalFailure("synthetic convergence failure")
        return real(h, method)

    monkeypatch.setattr(ens, "diagonalize", flaky)
    with pytest.raises(EnsembleError) as info:
        run_ensemble(EnsembleConfig(64, 1.0, EntropyScanRequest(32, 5.0, 10), realizations=5, base_seed=77))
    assert info.value.realization == 2
    assert info.value.seed == derive_seed(77, 2)
    assert str(derive_seed(77, 2)) in str(info.value)


def test_invalid_requests_rejected_before_work():
    with pytest.raises(InvalidInputError):
        run_ensemble(EnsembleConfig(64, 1.0, EntropyScanRequest(60, 5.0, 10)))
    with pytest.raises(InvalidInputError):
        EnsembleConfig(64, 1.0, ENTROPY, realizations=0)
    with pytest.raises(InvalidInputError):
        run_ensemble(EnsembleConfig(64, 1.0, ConcurrenceMapRequest(32, 1.0, (0, 70))))
