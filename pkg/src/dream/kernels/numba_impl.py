"""Numba lane for the sequential event-stream kernels.

Mirrors ``numpy_impl`` operation for operation: same splitmix64 stream,
same draw protocol, same accumulation order, so both lanes return
identical arrays for identical inputs (asserted in test_backends).
"""

import numpy as np
from numba import njit

from .numpy_impl import (
    EFF_CONSTANT,
    EFF_EXPDECAY,
    EFF_LINEAR,
    EFF_QUADRATIC,
    EFF_SINE,
    SRC_OUT_COUNT,
    SRC_RECV_COUNT,
    SRC_SENDER_ATTR,
    SRC_RECEIVER_ATTR,
)

U64 = np.uint64
_GOLDEN = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_SALT = U64(0xA5A5A5A5DEADBEEF)
_S30 = U64(30)
_S27 = U64(27)
_S31 = U64(31)
_S11 = U64(11)
_ONE = U64(1)
_INV53 = 2.0 ** -53


@njit(cache=True)
def _mix64(z):
    z ^= z >> _S30
    z *= _MIX1
    z ^= z >> _S27
    z *= _MIX2
    z ^= z >> _S31
    return z


@njit(cache=True)
def _stream_start(seed, index):
    return _mix64((U64(seed) ^ _SALT) + _GOLDEN * (U64(index) + _ONE))


@njit(cache=True)
def _next_unit(state):
    state += _GOLDEN
    return state, np.float64(_mix64(state) >> _S11) * _INV53


@njit(cache=True)
def rng_unit_stream(seed, index, n):
    out = np.empty(n, dtype=np.float64)
    state = _stream_start(seed, index)
    for i in range(n):
        state, u = _next_unit(state)
        out[i] = u
    return out


@njit(cache=True)
def _effect_scalar(code, p0, p1, p2, x):
    if code == EFF_CONSTANT:
        return 0.0
    if code == EFF_LINEAR:
        return p0 * x
    if code == EFF_SINE:
        return p0 * np.sin(p1 * x + p2)
    if code == EFF_QUADRATIC:
        d = x - p0
        return p1 * d * d
    if code == EFF_EXPDECAY:
        return np.exp(-p0 * x)
    # EFF_BUMP
    z = (x - p0) / p1
    return p2 * np.exp(-0.5 * z * z)


@njit(cache=True)
def _endo_raw_scalar(source, node, t, out_count, recv_count, last_recv, entry_times, cap):
    if source == SRC_OUT_COUNT:
        return np.float64(out_count[node])
    if source == SRC_RECV_COUNT:
        return np.float64(recv_count[node])
    # SRC_TIME_SINCE
    lr = last_recv[node]
    if np.isnan(lr):
        if cap >= 0.0:
            return cap
        return t - entry_times[node]
    return t - lr


@njit(cache=True)
def _upper_bound(a, size, x):
    # first index in [0, size) with a[idx] > x
    lo = 0
    hi = size
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] > x:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def draw_events(
    times,
    s_counts,
    r_counts,
    entry_order,
    entry_times,
    sender_logw,
    recv_logw,
    endo_sources,
    endo_codes,
    endo_params,
    endo_caps,
    seed,
):
    n = times.shape[0]
    n_nodes = entry_order.shape[0]
    n_endo = endo_sources.shape[0]
    senders = np.empty(n, dtype=np.int64)
    receivers = np.empty(n, dtype=np.int64)

    out_count = np.zeros(n_nodes, dtype=np.int64)
    recv_count = np.zeros(n_nodes, dtype=np.int64)
    last_recv = np.full(n_nodes, np.nan)

    s_cdf = np.empty(n_nodes)
    r_cdf = np.empty(n_nodes)
    logw = np.empty(n_nodes)
    raw = np.empty(n_nodes)
    prev_s = -1
    prev_r = -1

    state = _stream_start(seed, 0)

    for i in range(n):
        t = times[i]
        ns = s_counts[i]
        nr = r_counts[i]
        if ns != prev_s:
            mx = -np.inf
            for j in range(ns):
                w = sender_logw[entry_order[j]]
                logw[j] = w
                if w > mx:
                    mx = w
            acc = 0.0
            for j in range(ns):
                acc += np.exp(logw[j] - mx)
                s_cdf[j] = acc
            prev_s = ns
        if nr != prev_r or n_endo > 0:
            for j in range(nr):
                logw[j] = recv_logw[entry_order[j]]
            for e in range(n_endo):
                vmin = np.inf
                vmax = -np.inf
                for j in range(nr):
                    v = _endo_raw_scalar(
                        endo_sources[e], entry_order[j], t,
                        out_count, recv_count, last_recv, entry_times, endo_caps[e],
                    )
                    raw[j] = v
                    if v < vmin:
                        vmin = v
                    if v > vmax:
                        vmax = v
                span = vmax - vmin
                for j in range(nr):
                    x = (raw[j] - vmin) / span if span > 0.0 else 0.0
                    logw[j] += _effect_scalar(
                        endo_codes[e],
                        endo_params[e, 0], endo_params[e, 1], endo_params[e, 2],
                        x,
                    )
            mx = -np.inf
            for j in range(nr):
                if logw[j] > mx:
                    mx = logw[j]
            acc = 0.0
            for j in range(nr):
                acc += np.exp(logw[j] - mx)
                r_cdf[j] = acc
            prev_r = nr
        s_total = s_cdf[ns - 1]
        r_total = r_cdf[nr - 1]
        s = -1
        r = -1
        while True:
            state, u1 = _next_unit(state)
            state, u2 = _next_unit(state)
            sp = _upper_bound(s_cdf, ns, u1 * s_total)
            if sp > ns - 1:
                sp = ns - 1
            rp = _upper_bound(r_cdf, nr, u2 * r_total)
            if rp > nr - 1:
                rp = nr - 1
            s = entry_order[sp]
            r = entry_order[rp]
            if s != r:
                break
        senders[i] = s
        receivers[i] = r
        out_count[s] += 1
        recv_count[r] += 1
        last_recv[r] = t

    return senders, receivers


@njit(cache=True)
def draw_controls(senders, receivers, s_counts, r_counts, entry_order, m, seed):
    n = senders.shape[0]
    ctrl_s = np.empty((n, m), dtype=np.int64)
    ctrl_r = np.empty((n, m), dtype=np.int64)
    for i in range(n):
        ns = s_counts[i]
        nr = r_counts[i]
        case_s = senders[i]
        case_r = receivers[i]
        state = _stream_start(seed, i)
        for j in range(m):
            while True:
                state, u1 = _next_unit(state)
                state, u2 = _next_unit(state)
                sp = int(u1 * ns)
                if sp > ns - 1:
                    sp = ns - 1
                rp = int(u2 * nr)
                if rp > nr - 1:
                    rp = nr - 1
                s = entry_order[sp]
                r = entry_order[rp]
                if s != r and not (s == case_s and r == case_r):
                    break
            ctrl_s[i, j] = s
            ctrl_r[i, j] = r
    return ctrl_s, ctrl_r


@njit(cache=True)
def pair_covariates(
    senders,
    receivers,
    times,
    ctrl_s,
    ctrl_r,
    r_counts,
    entry_order,
    entry_times,
    sender_attr,
    recv_attr,
    cov_sources,
    cov_caps,
):
    n = senders.shape[0]
    m = ctrl_s.shape[1]
    q = cov_sources.shape[0]
    n_nodes = entry_order.shape[0]
    case_x = np.empty((n, q))
    ctrl_x = np.empty((n, m, q))

    out_count = np.zeros(n_nodes, dtype=np.int64)
    recv_count = np.zeros(n_nodes, dtype=np.int64)
    last_recv = np.full(n_nodes, np.nan)

    for i in range(n):
        t = times[i]
        nr = r_counts[i]
        for k in range(q):
            src = cov_sources[k]
            if src == SRC_SENDER_ATTR:
                case_x[i, k] = sender_attr[senders[i]]
                for j in range(m):
                    ctrl_x[i, j, k] = sender_attr[ctrl_s[i, j]]
            elif src == SRC_RECEIVER_ATTR:
                case_x[i, k] = recv_attr[receivers[i]]
                for j in range(m):
                    ctrl_x[i, j, k] = recv_attr[ctrl_r[i, j]]
            else:
                vmin = np.inf
                vmax = -np.inf
                for jj in range(nr):
                    v = _endo_raw_scalar(
                        src, entry_order[jj], t,
                        out_count, recv_count, last_recv, entry_times, cov_caps[k],
                    )
                    if v < vmin:
                        vmin = v
                    if v > vmax:
                        vmax = v
                span = vmax - vmin
                vc = _endo_raw_scalar(
                    src, receivers[i], t,
                    out_count, recv_count, last_recv, entry_times, cov_caps[k],
                )
                case_x[i, k] = (vc - vmin) / span if span > 0.0 else 0.0
                for j in range(m):
                    vj = _endo_raw_scalar(
                        src, ctrl_r[i, j], t,
                        out_count, recv_count, last_recv, entry_times, cov_caps[k],
                    )
                    ctrl_x[i, j, k] = (vj - vmin) / span if span > 0.0 else 0.0
        out_count[senders[i]] += 1
        recv_count[receivers[i]] += 1
        last_recv[receivers[i]] = t

    return case_x, ctrl_x
