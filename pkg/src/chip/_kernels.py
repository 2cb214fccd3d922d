"""Numba kernels shared by simulation and likelihood code.

Everything here is nopython-compiled and deterministic.  Random numbers come
from hand-rolled SplitMix64 streams so that the events of any (sender,
receiver) pair are a pure function of (seed, sender, receiver); this keeps
network simulation reproducible without allocating one bit generator per pair.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_U53 = 1.1102230246251565e-16  # 2 ** -53


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX_A
    z = (z ^ (z >> np.uint64(27))) * _MIX_B
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _stream_state(seed, i, j):
    z = _mix64(np.uint64(seed) + _GOLDEN * (np.uint64(i) + np.uint64(1)))
    return _mix64(z + _GOLDEN * (np.uint64(j) + np.uint64(2)))


@njit(cache=True, inline="always")
def _next_unit(state):
    """Advance the stream; return (state, u) with u uniform on (0, 1]."""
    state = state + _GOLDEN
    z = _mix64(state)
    return state, ((z >> np.uint64(11)) + np.uint64(1)) * _U53


@njit(cache=True, inline="always")
def _exp_neg(x):
    """exp(x) for x <= 0 with a short-circuit for deep underflow."""
    if x < -700.0:
        return 0.0
    return np.exp(x)


@njit(cache=True)
def _sim_pair(seed, i, j, mu, alpha, beta, horizon):
    """Simulate one exponential-kernel Hawkes process on [0, horizon].

    Ogata thinning with the intensity just after the current reference point
    as the dominating rate; the bound is re-tightened after every proposal,
    accepted or not, so the draw is exact.  Returns the event times, sorted
    and strictly increasing (exact float ties are nudged up one ulp).
    """
    state = _stream_state(seed, i, j)
    cap = 16
    buf = np.empty(cap, np.float64)
    m = 0
    t = 0.0
    excite = 0.0  # alpha-weighted sum of decayed kernels at time t
    while True:
        lam_bar = mu + excite
        state, u = _next_unit(state)
        t_new = t + (-np.log(u) / lam_bar)
        if t_new > horizon:
            break
        excite *= _exp_neg(-beta * (t_new - t))
        t = t_new
        state, v = _next_unit(state)
        if v * lam_bar <= mu + excite:
            if m > 0 and t <= buf[m - 1]:
                t = np.nextafter(buf[m - 1], np.inf)
                if t > horizon:
                    break
            if m == cap:
                cap *= 2
                nbuf = np.empty(cap, np.float64)
                nbuf[:m] = buf[:m]
                buf = nbuf
            buf[m] = t
            m += 1
            excite += alpha
    return buf[:m]


@njit(cache=True)
def _sim_network(labels, mu, alpha, beta, horizon, seed, cap_hint):
    """Simulate every ordered pair (i, j), i != j, of a CHIP network.

    Pair (i, j) uses block parameters (mu, alpha, beta)[labels[i], labels[j]]
    and its own SplitMix64 stream.  Events are returned grouped by pair in
    row-major pair order; the caller re-sorts by time.
    """
    n = labels.size
    cap = cap_hint if cap_hint > 16 else 16
    s_out = np.empty(cap, np.int64)
    r_out = np.empty(cap, np.int64)
    t_out = np.empty(cap, np.float64)
    m = 0
    for i in range(n):
        a = labels[i]
        for j in range(n):
            if j == i:
                continue
            b = labels[j]
            ts = _sim_pair(seed, i, j, mu[a, b], alpha[a, b], beta[a, b], horizon)
            need = m + ts.size
            if need > cap:
                while cap < need:
                    cap *= 2
                ns = np.empty(cap, np.int64)
                ns[:m] = s_out[:m]
                s_out = ns
                nr = np.empty(cap, np.int64)
                nr[:m] = r_out[:m]
                r_out = nr
                nt = np.empty(cap, np.float64)
                nt[:m] = t_out[:m]
                t_out = nt
            for q in range(ts.size):
                s_out[m] = i
                r_out[m] = j
                t_out[m] = ts[q]
                m += 1
    return s_out[:m], r_out[:m], t_out[:m]


@njit(cache=True)
def _loglik_one(times, mu, alpha, beta, horizon):
    """Exact log-likelihood of one process via the O(l) recursion.

    w(q) accumulates sum_{q' < q} exp(-beta (t_q - t_q')) so each event costs
    one decay and one compensator exponential.
    """
    ll = -mu * horizon
    ratio = alpha / beta
    w = 0.0
    for q in range(times.size):
        t_q = times[q]
        if q > 0:
            w = _exp_neg(-beta * (t_q - times[q - 1])) * (1.0 + w)
        ll += ratio * (_exp_neg(-beta * (horizon - t_q)) - 1.0)
        ll += np.log(mu + alpha * w)
    return ll


@njit(cache=True)
def _loglik_pairs(times, offsets, mu, alpha, beta, horizon):
    """Per-pair log-likelihoods for processes sharing one parameter triple.

    times holds the concatenated per-pair sequences, offsets the CSR bounds.
    """
    npairs = offsets.size - 1
    out = np.empty(npairs, np.float64)
    for p in range(npairs):
        out[p] = _loglik_one(times[offsets[p]:offsets[p + 1]], mu, alpha, beta, horizon)
    return out


@njit(cache=True)
def _loglik_total(times, offsets, mu, alpha, beta, horizon, n_zero_pairs):
    """Summed log-likelihood over a block pair, zero-event pairs included."""
    total = n_zero_pairs * (-mu * horizon)
    for p in range(offsets.size - 1):
        total += _loglik_one(times[offsets[p]:offsets[p + 1]], mu, alpha, beta, horizon)
    return total
