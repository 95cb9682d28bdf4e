import math

import mpmath
import numpy as np
import pytest

from magnon import (
    AmplitudeState,
    BesselRangeError,
    ChainSpec,
    InvalidInputError,
    bell_amplitude,
    bessel_amplitude,
    bessel_j,
    bessel_j_orders,
    build_hamiltonian,
    diagonalize,
    evolve_state,
    first_maximum_argument,
    first_maximum_time,
    plane_wave_amplitude,
)

# frozen from 40-digit mpmath evaluations
J1_AT_1 = 0.4400505857449335
J5_AT_20 = 0.15116976798239497
J1_PRIME_ROOT = 1.8411837813406593


def series_table(m_max, z):
    """Ascending power series in 90-digit arithmetic (independent reference)."""
    with mpmath.workdps(90):
        half = mpmath.mpf(z) / 2
        out = []
        for m in range(m_max + 1):
            term = half**m / mpmath.factorial(m)
            total = term
            k = 0
            while True:
                k += 1
                term *= -(half**2) / (k * (k + m))
                total += term
                if k > z and abs(term) < mpmath.mpf(10) ** -40:
                    break
            out.append(float(total))
    return np.array(out)


def test_series_grid_agreement():
    z_grid = np.concatenate([[0.0, 1e-3, 0.5, 1.0, 1.0 + 1e-9], np.arange(2.5, 120.1, 2.5)])
    table = bessel_j_orders(60, z_grid)
    worst = 0.0
    for row, z in zip(table, z_grid):
        worst = max(worst, np.abs(row - series_table(60, z)).max())
    assert worst < 1e-10


def test_frozen_values():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(7, 0.0) == 0.0
    assert bessel_j(1, 1.0) == pytest.approx(J1_AT_1, abs=1e-12)
    assert bessel_j(5, 20.0) == pytest.approx(J5_AT_20, abs=1e-12)


def test_normalization_identity():
    row = bessel_j_orders(120, 80.0)
    total = row[0] ** 2 + 2.0 * np.sum(row[1:] ** 2)
    assert total == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("z", [0.3, 7.0, 333.3, 9999.0])
def test_bounded_and_tail_small(z):
    m_max = int(z) + 200
    row = bessel_j_orders(m_max, z)
    assert np.abs(row).max() <= 1.0
    assert 1.0 - (row[0] ** 2 + 2.0 * np.sum(row[1:] ** 2)) < 1e-12


def test_large_argument_against_scipy():
    from scipy.special import jv

    z = np.array([1234.5, 1e4])
    table = bessel_j_orders(1500, z)
    ref = jv(np.arange(1501)[None, :], z[:, None])
    assert np.abs(table - ref).max() < 1e-12


@pytest.mark.parametrize("m, z", [(-1, 1.0), (1.5, 1.0), (100001, 1.0), (0, -0.1), (0, 1e4 + 1), (0, float("nan"))])
def test_range_errors(m, z):
    with pytest.raises(BesselRangeError):
        bessel_j(m, z)


def test_plane_wave_at_zero_time():
    x = np.arange(1, 51)
    w = plane_wave_amplitude(50, 17, x, 0.0)
    expected = (x == 17).astype(float)
    np.testing.assert_allclose(w, expected, atol=1e-13)


def test_plane_wave_agrees_with_bessel():
    assert abs(plane_wave_amplitude(200, 100, 110, 10.0) - bessel_amplitude(100, 110, 10.0)) < 1e-8


def test_plane_wave_norm():
    w = plane_wave_amplitude(200, 100, np.arange(1, 201), 17.0)
    assert np.sum(np.abs(w) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_plane_wave_range_checks():
    with pytest.raises(InvalidInputError):
        plane_wave_amplitude(10, 11, 3, 1.0)
    with pytest.raises(InvalidInputError):
        plane_wave_amplitude(10, 5, 0, 1.0)


def test_plane_wave_converges_to_bessel():
    x_off = np.arange(-40, 41)
    devs = []
    for n in (100, 200, 400):
        x0 = n // 2
        dev = 0.0
        for t in (5.0, 10.0, 15.0, 20.0):
            dev = max(dev, np.abs(plane_wave_amplitude(n, x0, x0 + x_off, t) - bessel_amplitude(x0, x0 + x_off, t)).max())
        devs.append(dev)
    # finite-size error is visible at N=100 and shrinks until it hits rounding
    floor = 1e-13
    assert devs[0] > 1e-8
    for small, large in zip(devs, devs[1:]):
        assert large < small or large < floor
    assert devs[-1] < floor


def test_bessel_amplitude_values():
    assert bessel_amplitude(3, 3, 0.0) == 1.0
    w = bessel_amplitude(0, 5, 10.0)
    assert w.real == pytest.approx(0.0, abs=1e-15)
    assert w.imag == pytest.approx(J5_AT_20, abs=1e-12)  # i^5 = i
    # i^|d| phase pattern and mirror symmetry
    d = np.arange(-6, 7)
    amps = bessel_amplitude(0, d, 3.0)
    np.testing.assert_allclose(amps, amps[::-1], atol=0)
    np.testing.assert_allclose(amps[6:10] / np.abs(amps[6:10]) * np.sign(bessel_j_orders(3, 6.0)), [1, 1j, -1, -1j])


def test_bell_amplitude_initial_state():
    sites = np.arange(90, 111)
    w = bell_amplitude(100, 103, 1, sites, 0.0)
    expected = np.where((sites == 100) | (sites == 103), 1 / math.sqrt(2.0), 0.0)
    np.testing.assert_allclose(w, expected, atol=1e-15)


def test_bell_amplitude_norm_far_apart():
    sites = np.arange(-200, 801)
    w = bell_amplitude(100, 500, -1, sites, 15.0)
    assert np.sum(np.abs(w) ** 2) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("sign", [1, -1])
def test_bell_amplitude_matches_propagator(ordered400, sign):
    _, sd = ordered400
    w = evolve_state(sd, AmplitudeState.bell(400, 100, 101, sign), 10.0).amplitudes
    sites = np.arange(1, 401)
    assert np.abs(w - bell_amplitude(100, 101, sign, sites, 10.0)).max() < 1e-6


def test_bell_needs_distinct_sites():
    with pytest.raises(InvalidInputError):
        bell_amplitude(4, 4, 1, 4, 1.0)


def test_first_maximum():
    assert first_maximum_argument(1) == pytest.approx(J1_PRIME_ROOT, abs=1e-3)
    assert first_maximum_argument(1) == pytest.approx(J1_PRIME_ROOT, abs=1e-9)
    assert first_maximum_argument(20) == pytest.approx(20.0, rel=0.15)
    assert first_maximum_time(20) == first_maximum_argument(20) / 2.0


@pytest.mark.parametrize("m", [0, -3, 2.5])
def test_first_maximum_needs_positive_order(m):
    with pytest.raises(InvalidInputError):
        first_maximum_time(m)


def test_wavefront_law():
    t = np.arange(0.0, 60.0, 0.005)
    table = bessel_j_orders(50, 2.0 * t)
    for m in range(5, 51):
        t_peak = t[np.argmax(np.abs(table[:, m]))]
        assert m / 2.0 <= t_peak <= m / 2.0 + 2.0 * m ** (1.0 / 3.0)
        assert abs(t_peak - first_maximum_time(m)) < 0.005
