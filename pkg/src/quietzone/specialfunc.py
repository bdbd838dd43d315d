"""Integer-order cylinder functions J_n, Y_n and H^(1)_n of real positive argument.

All orders 0..n_max are produced in one pass.  J_n comes from Miller's
backward recurrence normalised with J_0 + 2 sum J_2k = 1.  The Neumann
series for Y_0 and Y_1 are accumulated during the same backward sweep, and
higher Y_n follow from the (stable) upward recurrence.  For x >= 40 with
n_max <= x/2 the orders 0 and 1 come from the Hankel asymptotic expansion
instead, and both J and Y recur upward from there.

Every function accepts a scalar or an array ``x``; the order axis is
appended last, so the result has shape ``np.shape(x) + (n_max + 1,)``.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061

_RESCALE_AT = 1e250
_STABLE_TOL = 1e-13
_MAX_DOUBLINGS = 8
# above this argument (and for orders n <= x/2) the Hankel expansion plus
# upward recurrence replaces the backward sweep
_ASYM_X = 40.0
_ASYM_TERMS = 16


def _check_args(n_max, x):
    if int(n_max) != n_max or n_max < 0:
        raise DomainError(f"order n_max must be a non-negative integer, got {n_max!r}")
    x = np.asarray(x, dtype=float)
    if x.size and not np.all(x > 0):
        raise DomainError("cylinder functions are only evaluated for x > 0")
    if x.size and not np.all(np.isfinite(x)):
        raise DomainError("argument must be finite")
    return int(n_max), x


@lru_cache(maxsize=64)
def _odd_coefficients(m):
    # weight of J_n (n odd) in  sum_k (-1)^k (J_{2k-1} - J_{2k+1}) / k
    c = np.zeros(m + 2)
    for n in range(1, m + 2, 2):
        k = (n + 1) // 2
        c[n] += (-1) ** k / k
        if n >= 3:
            k = (n - 1) // 2
            c[n] -= (-1) ** k / k
    c.flags.writeable = False
    return c


def _miller(n_max, x, start):
    """Backward sweep from order ``start``; requires n_max >= 1.

    Returns (J[..., 0..n_max], Y_0, Y_1) for the flat array ``x``.
    """
    odd_c = _odd_coefficients(start)
    j_next = np.zeros_like(x)
    j_cur = np.ones_like(x)
    norm = np.zeros_like(x)
    s_y0 = np.zeros_like(x)
    s_y1 = np.zeros_like(x)
    out = np.zeros((n_max + 1,) + x.shape)   # order-major: contiguous row writes
    two_over_x = 2.0 / x
    tmp = np.empty_like(x)
    # |J_n| grows by at most (2 start / x + 1) per step, so overflow checks
    # can be spaced to allow a 1e50 growth between them
    growth = math.log10(2.0 * start / float(x.min()) + 1.0)
    every = max(1, int(50.0 / growth))

    for n in range(start, 0, -1):
        # j_cur holds the unnormalised J_n here
        if n <= n_max:
            out[n] = j_cur
        if n % 2 == 0:
            norm += j_cur
            k = n // 2
            np.multiply(j_cur, (-1) ** k / k, out=tmp)
            s_y0 += tmp
        else:
            np.multiply(j_cur, odd_c[n], out=tmp)
            s_y1 += tmp
        np.multiply(j_cur, two_over_x, out=tmp)
        tmp *= n
        tmp -= j_next
        j_next, j_cur, tmp = j_cur, tmp, j_next

        if n % every == 0 and (j_cur.max() > _RESCALE_AT or j_cur.min() < -_RESCALE_AT):
            big = np.abs(j_cur) > _RESCALE_AT
            scale = 1.0 / _RESCALE_AT
            j_cur[big] *= scale
            j_next[big] *= scale
            norm[big] *= scale
            s_y0[big] *= scale
            s_y1[big] *= scale
            if n - 1 < n_max:
                out[n:, big] *= scale
    out[0] = j_cur
    # norm held sum_{k>=1} J_2k so far
    norm *= 2.0
    norm += j_cur

    out /= norm
    s_y0 /= norm
    s_y1 /= norm
    j0 = out[0]
    j1 = out[1]
    log_term = np.log(x / 2.0) + EULER_GAMMA
    y0 = (2.0 / np.pi) * (log_term * j0 - 2.0 * s_y0)
    y1 = (2.0 / np.pi) * (log_term * j1 - j0 / x + s_y1)
    return out, y0, y1


def _sweep_stats(n_max, x, start):
    j, y0, y1 = _miller(max(n_max, 1), np.array([x]), start)
    return j[: n_max + 1, 0], y0[0], y1[0]


def _hankel_asymptotic01(x):
    """J_0, J_1, Y_0, Y_1 from the large-argument Hankel expansion (x >= 40)."""
    inv8x = 1.0 / (8.0 * x)
    out = []
    for nu in (0, 1):
        mu = 4.0 * nu * nu
        p = np.ones_like(x)
        q = np.zeros_like(x)
        term = np.ones_like(x)
        for k in range(1, _ASYM_TERMS + 1):
            term = term * ((mu - (2 * k - 1) ** 2) / k) * inv8x
            if k % 2:
                q += (-1) ** (k // 2) * term
            else:
                p += (-1) ** (k // 2) * term
        chi = x - (0.5 * nu + 0.25) * np.pi
        c, s = np.cos(chi), np.sin(chi)
        amp = np.sqrt(2.0 / (np.pi * x))
        out.append((amp * (p * c - q * s), amp * (p * s + q * c)))
    (j0, y0), (j1, y1) = out
    return j0, j1, y0, y1


@lru_cache(maxsize=4096)
def _start_order(n_max, x_ceil):
    """Start order whose sweep is stable when its margin is doubled.

    The margin above max(n_max, x) starts at 10 + 2 sqrt(.) and doubles until
    two consecutive trials agree.  The result depends only on (n_max, max x):
    smaller arguments converge faster from the same start, so a batch reuses
    its worst case.
    """
    base = max(n_max, x_ceil, 1)
    margin = math.ceil(10 + 2 * math.sqrt(base))
    x = float(x_ceil)
    start = base + margin + (base + margin) % 2
    ref = _sweep_stats(n_max, x, start)
    for _ in range(_MAX_DOUBLINGS):
        margin *= 2
        trial_start = base + margin + (base + margin) % 2
        trial = _sweep_stats(n_max, x, trial_start)
        if _agree(ref, trial):
            return start
        start, ref = trial_start, trial
    return start


def _ladder(x):
    """Round ``x`` up onto a ~6% geometric ladder so start orders are shared."""
    if x <= 16:
        return int(math.ceil(x))
    step = 2 ** (math.floor(math.log2(x)) - 4)
    return int(math.ceil(x / step) * step)


def _agree(a, b):
    j_a, y0_a, y1_a = a
    j_b, y0_b, y1_b = b
    env = math.hypot(j_b[0], y0_b)
    scale = np.maximum(np.abs(j_b), 1e-6 * env)
    scale = np.where(scale > 0, scale, 1.0)
    if np.max(np.abs(j_a - j_b) / scale) > _STABLE_TOL:
        return False
    return (abs(y0_a - y0_b) <= _STABLE_TOL * env
            and abs(y1_a - y1_b) <= _STABLE_TOL * math.hypot(j_b[min(1, len(j_b) - 1)], y1_b, env))


def _jy(n_max, x):
    """J and Y sequences for a validated array ``x``."""
    flat = x.reshape(-1)
    shape = x.shape + (n_max + 1,)
    if flat.size == 0:
        return np.zeros(shape), np.zeros(shape)
    j = np.empty((n_max + 1, flat.size))
    y = np.empty((n_max + 1, flat.size))
    large = flat >= max(_ASYM_X, 2.0 * n_max)
    if large.any():
        j0, j1, y0, y1 = _hankel_asymptotic01(flat[large])
        j[0, large], y[0, large] = j0, y0
        if n_max >= 1:
            j[1, large], y[1, large] = j1, y1
        if n_max >= 2:
            # forward recurrence is stable for J while n < x
            two_over_x = 2.0 / flat[large]
            prev, cur = j0, j1
            for n in range(1, n_max):
                prev, cur = cur, n * two_over_x * cur - prev
                j[n + 1, large] = cur
    small = ~large
    if small.any():
        xs = flat[small]
        start = _start_order(n_max, _ladder(xs.max()))
        js, y0, y1 = _miller(max(n_max, 1), xs, start)
        j[:, small] = js[: n_max + 1]
        y[0, small] = y0
        if n_max >= 1:
            y[1, small] = y1
    two_over_x = 2.0 / flat
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_max):
            np.multiply(y[n], two_over_x, out=y[n + 1])
            y[n + 1] *= n
            y[n + 1] -= y[n - 1]
    # inf - inf after overflow; Y_n is negative there, so keep -inf
    y[np.isnan(y)] = -np.inf
    return j.T.reshape(shape), y.T.reshape(shape)


def bessel_j_seq(n_max, x):
    """J_0(x) .. J_{n_max}(x)."""
    n_max, x = _check_args(n_max, x)
    return _jy(n_max, x)[0]


def bessel_y_seq(n_max, x):
    """Y_0(x) .. Y_{n_max}(x).  Large orders at small x overflow to -inf."""
    n_max, x = _check_args(n_max, x)
    return _jy(n_max, x)[1]


def bessel_jy_seq(n_max, x):
    n_max, x = _check_args(n_max, x)
    return _jy(n_max, x)


def hankel1_seq(n_max, x):
    """H^(1)_n(x) = J_n(x) + i Y_n(x) for n = 0 .. n_max."""
    n_max, x = _check_args(n_max, x)
    j, y = _jy(n_max, x)
    h = np.empty(j.shape, dtype=complex)
    h.real = j
    h.imag = y
    return h


def reflect_orders(values_nonneg):
    """Extend a sequence over orders 0..N to orders -N..N.

    Uses C_{-n} = (-1)^n C_n, valid for J, Y and H^(1) alike.
    """
    values_nonneg = np.asarray(values_nonneg)
    n_max = values_nonneg.shape[-1] - 1
    negative = values_nonneg[..., :0:-1].copy()
    odd = np.arange(n_max, 0, -1) % 2 == 1
    # negation, not multiplication: keeps overflowed entries from turning into nan
    negative[..., odd] = -negative[..., odd]
    return np.concatenate([negative, values_nonneg], axis=-1)


def hankel1_orders(n_max, x):
    """H^(1)_n(x) for n = -n_max .. n_max (order axis last)."""
    return reflect_orders(hankel1_seq(n_max, x))
