"""Hot numeric kernels.

Every kernel exists twice: a scalar-loop version compiled with numba
(``*_jit``) and a vectorised numpy version (``*_numpy``). The public name is
bound to one of them according to :data:`magnon._accel.USE_NUMBA`; the
benchmark in ``benchmarks/`` times both.

Site and mode indices inside kernels are zero-based.
"""

import math

import numpy as np
from scipy.special import gammaln

from ._accel import USE_NUMBA, jit

TWO_PI = 2.0 * math.pi

# Miller recurrence: rescale the running values once they exceed this.
_RESCALE = 1.0e100
# Bessel arguments at or below this use the ascending series.
SERIES_CUTOFF = 1.0
_SERIES_TERMS = 30


def _miller_start_order(m_max, z_max):
    start = max(m_max, int(math.ceil(z_max))) + 20 + int(math.ceil(15.0 * z_max ** (1.0 / 3.0)))
    return start + (start & 1)


# even starting order for the downward recurrence; callable from jitted code
miller_start_order = jit(_miller_start_order)


# ---------------------------------------------------------------------------
# power-law disorder synthesis


def _unit_circle_loop(n_sites):
    # cos/sin of 2 pi m / N for m = 0..N-1; every n*k term reuses one of these
    c = np.empty(n_sites)
    s = np.empty(n_sites)
    for m in range(n_sites):
        c[m] = math.cos(TWO_PI * m / n_sites)
        s[m] = math.sin(TWO_PI * m / n_sites)
    return c, s


def _unit_circle_numpy(n_sites):
    arg = TWO_PI * np.arange(n_sites) / n_sites
    return np.cos(arg), np.sin(arg)


def _synthesize_loop(phases, amplitudes, n_sites):
    half = phases.shape[0]
    c, s = _unit_circle(n_sites)
    a_cos = np.empty(half)
    a_sin = np.empty(half)
    for k in range(half):
        a_cos[k] = amplitudes[k] * math.cos(phases[k])
        a_sin[k] = amplitudes[k] * math.sin(phases[k])
    out = np.empty(n_sites)
    for n in range(1, n_sites + 1):
        acc = 0.0
        idx = 0
        for k in range(half):
            idx += n
            if idx >= n_sites:
                idx -= n_sites
            # cos(x + phi) = cos x cos phi - sin x sin phi, x = 2 pi (n k mod N) / N
            acc += c[idx] * a_cos[k] - s[idx] * a_sin[k]
        out[n - 1] = acc
    return out


def _synthesize_numpy(phases, amplitudes, n_sites):
    half = phases.shape[0]
    c, s = _unit_circle_numpy(n_sites)
    a_cos = amplitudes * np.cos(phases)
    a_sin = amplitudes * np.sin(phases)
    k = np.arange(1, half + 1, dtype=np.int64)
    out = np.empty(n_sites)
    chunk = max(1, (1 << 22) // max(half, 1))
    for start in range(0, n_sites, chunk):
        n = np.arange(start + 1, min(start + chunk, n_sites) + 1, dtype=np.int64)
        idx = np.outer(n, k) % n_sites
        out[start : start + n.size] = c[idx] @ a_cos - s[idx] @ a_sin
    return out


_unit_circle = jit(_unit_circle_loop)
_synthesize_jit = jit(_synthesize_loop)


# ---------------------------------------------------------------------------
# direct discrete Fourier power


def _periodogram_loop(values):
    n_sites = values.shape[0]
    half = n_sites // 2
    c, s = _unit_circle(n_sites)
    out = np.empty(half)
    for k in range(1, half + 1):
        re = 0.0
        im = 0.0
        idx = 0
        for n in range(n_sites):
            re += values[n] * c[idx]
            im -= values[n] * s[idx]
            idx += k
            if idx >= n_sites:
                idx -= n_sites
        out[k - 1] = re * re + im * im
    return out


def _periodogram_numpy(values):
    n_sites = values.shape[0]
    half = n_sites // 2
    c, s = _unit_circle_numpy(n_sites)
    n = np.arange(n_sites, dtype=np.int64)
    out = np.empty(half)
    chunk = max(1, (1 << 22) // n_sites)
    for start in range(0, half, chunk):
        k = np.arange(start + 1, min(start + chunk, half) + 1, dtype=np.int64)
        idx = np.outer(k, n) % n_sites
        re = c[idx] @ values
        im = s[idx] @ values
        out[start : start + k.size] = re * re + im * im
    return out


_periodogram_jit = jit(_periodogram_loop)


# ---------------------------------------------------------------------------
# Bessel functions of the first kind, integer orders 0..m_max


def _bessel_row_loop(m_max, z, row):
    if z == 0.0:
        row[:] = 0.0
        row[0] = 1.0
        return
    if z <= SERIES_CUTOFF:
        half = 0.5 * z
        q = -half * half
        lh = math.log(half)
        for m in range(m_max + 1):
            term = math.exp(m * lh - math.lgamma(m + 1.0))
            acc = term
            for s in range(_SERIES_TERMS):
                term *= q / ((s + 1.0) * (m + s + 1.0))
                acc += term
            row[m] = acc
        return
    start = miller_start_order(m_max, z)
    row[:] = 0.0
    j_up = 0.0
    j_k = 1.0e-30
    even_sum = 0.0
    square_sum = 0.0
    for k in range(start, 0, -1):
        if k <= m_max:
            row[k] = j_k
        square_sum += 2.0 * j_k * j_k
        if k % 2 == 0:
            even_sum += 2.0 * j_k
        j_down = (2.0 * k / z) * j_k - j_up
        j_up = j_k
        j_k = j_down
        if abs(j_k) > _RESCALE:
            j_k /= _RESCALE
            j_up /= _RESCALE
            even_sum /= _RESCALE
            square_sum /= _RESCALE * _RESCALE
            for i in range(k, m_max + 1):
                row[i] /= _RESCALE
    row[0] = j_k
    even_sum += j_k
    square_sum += j_k * j_k
    # magnitude from sum J_n^2 = 1 (no cancellation), sign from J_0 + 2 sum J_2k = 1
    scale = 1.0 / math.sqrt(square_sum)
    if even_sum < 0.0:
        scale = -scale
    for i in range(m_max + 1):
        row[i] *= scale


_bessel_row = jit(_bessel_row_loop)


def _bessel_table_loop(m_max, z):
    out = np.empty((z.shape[0], m_max + 1))
    for i in range(z.shape[0]):
        _bessel_row(m_max, z[i], out[i])
    return out


def _bessel_series_numpy(m_max, z):
    half = 0.5 * z[:, None]
    m = np.arange(m_max + 1, dtype=float)
    term = np.exp(m * np.log(half) - gammaln(m + 1.0))
    acc = term.copy()
    q = -half * half
    for s in range(_SERIES_TERMS):
        term = term * q / ((s + 1.0) * (m + s + 1.0))
        acc += term
    return acc


def _bessel_miller_numpy(m_max, z):
    start = miller_start_order(m_max, float(z.max()))
    out = np.zeros((z.size, m_max + 1))
    j_up = np.zeros_like(z)
    j_k = np.full_like(z, 1.0e-30)
    even_sum = np.zeros_like(z)
    square_sum = np.zeros_like(z)
    for k in range(start, 0, -1):
        if k <= m_max:
            out[:, k] = j_k
        square_sum += 2.0 * j_k * j_k
        if k % 2 == 0:
            even_sum += 2.0 * j_k
        j_k, j_up = (2.0 * k / z) * j_k - j_up, j_k
        big = np.abs(j_k) > _RESCALE
        if big.any():
            j_k[big] /= _RESCALE
            j_up[big] /= _RESCALE
            even_sum[big] /= _RESCALE
            square_sum[big] /= _RESCALE * _RESCALE
            if k <= m_max:
                out[big, k:] /= _RESCALE
    out[:, 0] = j_k
    even_sum += j_k
    square_sum += j_k * j_k
    scale = np.copysign(1.0 / np.sqrt(square_sum), even_sum)
    return out * scale[:, None]


def _bessel_table_numpy(m_max, z):
    out = np.zeros((z.size, m_max + 1))
    zero = z == 0.0
    small = (z > 0.0) & (z <= SERIES_CUTOFF)
    large = z > SERIES_CUTOFF
    out[zero, 0] = 1.0
    if small.any():
        out[small] = _bessel_series_numpy(m_max, z[small])
    if large.any():
        # shared start order: group by magnitude so small z do not pay for the largest
        idx = np.flatnonzero(large)
        order = idx[np.argsort(z[idx], kind="stable")]
        for block in np.array_split(order, max(1, order.size // 64)):
            out[block] = _bessel_miller_numpy(m_max, z[block])
    return out


_bessel_table_jit = jit(_bessel_table_loop)


# ---------------------------------------------------------------------------
# streaming running maximum of 2|w_i||w_j|


def _running_max_loop(out, moduli):
    n_times, width = moduli.shape
    for t in range(n_times):
        for i in range(width):
            ai = 2.0 * moduli[t, i]
            for j in range(width):
                c = ai * moduli[t, j]
                if c > out[i, j]:
                    out[i, j] = c


def _running_max_numpy(out, moduli):
    width = moduli.shape[1]
    chunk = max(1, (1 << 22) // max(width * width, 1))
    for start in range(0, moduli.shape[0], chunk):
        block = moduli[start : start + chunk]
        pair = 2.0 * block[:, :, None] * block[:, None, :]
        np.maximum(out, pair.max(axis=0), out=out)


_running_max_jit = jit(_running_max_loop)


# ---------------------------------------------------------------------------
# implicit-shift QL for symmetric tridiagonal matrices
#
# ``rows`` holds eigenvectors as rows (transposed), so each plane rotation
# touches two contiguous rows. Returns -1 on success, otherwise the index of
# the eigenvalue that exhausted ``max_iter``.


def _tql_loop(d, e, rows, max_iter):
    n = d.shape[0]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) + dd == dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                return l
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                for k in range(n):
                    f = rows[i + 1, k]
                    rows[i + 1, k] = s * rows[i, k] + c * f
                    rows[i, k] = c * rows[i, k] - s * f
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


def _tql_numpy(d, e, rows, max_iter):
    n = d.shape[0]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) + dd == dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                return l
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s, c, p = 1.0, 1.0, 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                lo = rows[i].copy()
                hi = rows[i + 1]
                rows[i] = c * lo - s * hi
                rows[i + 1] = s * lo + c * hi
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


_tql_jit = jit(_tql_loop)


if USE_NUMBA:
    synthesize_disorder = _synthesize_jit
    periodogram = _periodogram_jit
    bessel_table = _bessel_table_jit
    running_max_pairs = _running_max_jit
    tql_inplace = _tql_jit
else:
    synthesize_disorder = _synthesize_numpy
    periodogram = _periodogram_numpy
    bessel_table = _bessel_table_numpy
    running_max_pairs = _running_max_numpy
    tql_inplace = _tql_numpy

VARIANTS = {
    "synthesize_disorder": (_synthesize_jit, _synthesize_numpy),
    "periodogram": (_periodogram_jit, _periodogram_numpy),
    "bessel_table": (_bessel_table_jit, _bessel_table_numpy),
    "running_max_pairs": (_running_max_jit, _running_max_numpy),
    "tql_inplace": (_tql_jit, _tql_numpy),
}
