"""Pure-numpy lane for the sequential event-stream kernels.

These loops are the fallback used when numba is unavailable (or when
``DREAM_BACKEND=numpy``).  They consume the splitmix64 stream in exactly
the same order as the numba lane, so both lanes produce identical arrays
for identical inputs.

Conventions shared by both lanes:
  - node eligibility is expressed through ``entry_order`` (node ids sorted
    by entry time, stable) plus per-event prefix lengths ``s_counts``
    (senders, entry <= t) and ``r_counts`` (receivers, entry < t);
  - categorical draws are inverse-CDF on an unnormalized cumulative-sum
    of weights, one uniform per draw;
  - rejection (s == r, or control == case) redraws both margins;
  - endogenous receiver statistics are min-max rescaled to [0, 1] over
    the eligible receivers at the event time (constant stat -> 0).
"""

import numpy as np

from ..rng import next_unit, stream_start

# covariate source codes (shared with covariates.py)
SRC_SENDER_ATTR = 0
SRC_RECEIVER_ATTR = 1
SRC_OUT_COUNT = 2
SRC_RECV_COUNT = 3
SRC_TIME_SINCE = 4

# effect kind codes (shared with effects.py)
EFF_CONSTANT = 0
EFF_LINEAR = 1
EFF_SINE = 2
EFF_QUADRATIC = 3
EFF_EXPDECAY = 4
EFF_BUMP = 5


def rng_unit_stream(seed, index, n):
    """First n uniforms of substream `index` (cross-lane test hook)."""
    out = np.empty(n, dtype=np.float64)
    state = stream_start(seed, index)
    for i in range(n):
        state, out[i] = next_unit(state)
    return out


def effect_values(code, params, x):
    """Evaluate one effect over an array of covariate values."""
    x = np.asarray(x, dtype=np.float64)
    if code == EFF_CONSTANT:
        return np.zeros_like(x)
    if code == EFF_LINEAR:
        return params[0] * x
    if code == EFF_SINE:
        return params[0] * np.sin(params[1] * x + params[2])
    if code == EFF_QUADRATIC:
        d = x - params[0]
        return params[1] * d * d
    if code == EFF_EXPDECAY:
        return np.exp(-params[0] * x)
    if code == EFF_BUMP:
        z = (x - params[0]) / params[1]
        return params[2] * np.exp(-0.5 * z * z)
    raise ValueError(f"unknown effect code {code}")


def _endo_raw(source, nodes, t, out_count, recv_count, last_recv, entry_times, cap):
    """Raw endogenous statistic for `nodes` given history strictly before t."""
    if source == SRC_OUT_COUNT:
        return out_count[nodes].astype(np.float64)
    if source == SRC_RECV_COUNT:
        return recv_count[nodes].astype(np.float64)
    if source == SRC_TIME_SINCE:
        lr = last_recv[nodes]
        vals = t - lr
        never = np.isnan(lr)
        if never.any():
            if cap >= 0.0:
                vals[never] = cap
            else:
                vals[never] = t - entry_times[nodes][never]
        return vals
    raise ValueError(f"unknown endogenous source {source}")


def _rescale(vals):
    vmin = vals.min()
    vmax = vals.max()
    if vmax > vmin:
        return (vals - vmin) / (vmax - vmin)
    return np.zeros_like(vals)


def _cdf_from_logw(logw):
    return np.cumsum(np.exp(logw - logw.max()))


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
    """Sequentially draw one dyad per event time.

    Each draw is from the categorical distribution over eligible dyads
    (s, r), s != r, with weight exp(sender score + receiver score); the
    factorized form holds because every covariate is nodal.  Statistics
    feeding endogenous covariates reflect history strictly before each
    draw.  Feasibility (risk set non-empty) is the caller's job.
    """
    n = times.shape[0]
    n_nodes = entry_order.shape[0]
    n_endo = endo_sources.shape[0]
    senders = np.empty(n, dtype=np.int64)
    receivers = np.empty(n, dtype=np.int64)

    out_count = np.zeros(n_nodes, dtype=np.int64)
    recv_count = np.zeros(n_nodes, dtype=np.int64)
    last_recv = np.full(n_nodes, np.nan)

    state = stream_start(seed, 0)
    s_cdf = None
    r_cdf = None
    prev_s = -1
    prev_r = -1

    for i in range(n):
        t = times[i]
        ns = int(s_counts[i])
        nr = int(r_counts[i])
        if ns != prev_s:
            s_cdf = _cdf_from_logw(sender_logw[entry_order[:ns]])
            prev_s = ns
        if nr != prev_r or n_endo > 0:
            nodes = entry_order[:nr]
            logw = recv_logw[nodes].copy()
            for e in range(n_endo):
                raw = _endo_raw(
                    endo_sources[e], nodes, t,
                    out_count, recv_count, last_recv, entry_times, endo_caps[e],
                )
                logw += effect_values(endo_codes[e], endo_params[e], _rescale(raw))
            r_cdf = _cdf_from_logw(logw)
            prev_r = nr
        s_total = s_cdf[ns - 1]
        r_total = r_cdf[nr - 1]
        while True:
            state, u1 = next_unit(state)
            state, u2 = next_unit(state)
            sp = min(np.searchsorted(s_cdf, u1 * s_total, side="right"), ns - 1)
            rp = min(np.searchsorted(r_cdf, u2 * r_total, side="right"), nr - 1)
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


def draw_controls(senders, receivers, s_counts, r_counts, entry_order, m, seed):
    """Uniform non-event dyads: m controls per event, case excluded.

    Each event uses its own RNG substream so output is independent of
    any parallel split across events.
    """
    n = senders.shape[0]
    ctrl_s = np.empty((n, m), dtype=np.int64)
    ctrl_r = np.empty((n, m), dtype=np.int64)
    for i in range(n):
        ns = int(s_counts[i])
        nr = int(r_counts[i])
        case_s = senders[i]
        case_r = receivers[i]
        state = stream_start(seed, i)
        for j in range(m):
            while True:
                state, u1 = next_unit(state)
                state, u2 = next_unit(state)
                s = entry_order[min(int(u1 * ns), ns - 1)]
                r = entry_order[min(int(u2 * nr), nr - 1)]
                if s != r and not (s == case_s and r == case_r):
                    break
            ctrl_s[i, j] = s
            ctrl_r[i, j] = r
    return ctrl_s, ctrl_r


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
    """Covariate vectors for every case and control dyad.

    One sequential pass maintains the endogenous statistics; row i is
    computed from events 0..i-1 only (ties broken by input position).
    """
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
        nr = int(r_counts[i])
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
                nodes = entry_order[:nr]
                raw = _endo_raw(
                    src, nodes, t,
                    out_count, recv_count, last_recv, entry_times, cov_caps[k],
                )
                vmin = raw.min()
                vmax = raw.max()
                span = vmax - vmin

                def scaled(node):
                    v = _endo_raw(
                        src, np.array([node]), t,
                        out_count, recv_count, last_recv, entry_times, cov_caps[k],
                    )[0]
                    return (v - vmin) / span if span > 0.0 else 0.0

                case_x[i, k] = scaled(receivers[i])
                for j in range(m):
                    ctrl_x[i, j, k] = scaled(ctrl_r[i, j])
        out_count[senders[i]] += 1
        recv_count[receivers[i]] += 1
        last_recv[receivers[i]] = t

    return case_x, ctrl_x
