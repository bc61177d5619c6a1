"""Self-measured benchmarks: fit-time scaling in q, and kernel lane comparison."""

import csv
import importlib
import time

import numpy as np

from .sampling import sample_controls
from .simulate import SimConfig, default_covariates, simulate_events
from .training import TrainConfig, train


def bench_scaling(q_list, events=20000, nodes=500, config: TrainConfig | None = None,
                  seed=0):
    """Wall-clock seconds per fit as the covariate count grows.

    Epochs and batches stay fixed across q; only training is timed.
    Returns [{"q": q, "seconds": s}, ...]; empty list for empty q_list.
    """
    config = config or TrainConfig(epochs=3, batch_size=512)
    rows = []
    for q in q_list:
        covariates, effects = default_covariates(q)
        sim = simulate_events(SimConfig(
            node_count=nodes, event_count=events,
            covariates=covariates, effects=effects, seed=seed,
        ))
        dataset, _, _ = sample_controls(sim.seq, sim.risk_set, sim.provider,
                                        m=1, seed=seed + 1)
        t0 = time.perf_counter()
        train(dataset, config)
        rows.append({"q": int(q), "seconds": time.perf_counter() - t0})
    return rows


def write_bench_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "seconds"])
        for row in rows:
            w.writerow([row["q"], repr(row["seconds"])])


def _lane_modules():
    lanes = {"numpy": importlib.import_module("dream.kernels.numpy_impl")}
    try:
        lanes["numba"] = importlib.import_module("dream.kernels.numba_impl")
    except ImportError:
        pass
    return lanes


def bench_backends(nodes=500, events=20000, seed=0, repeats=1):
    """Time the event-stream kernels on each available lane.

    The numba lane is warmed up once before timing so compilation is not
    counted.  Returns [{"kernel", "backend", "seconds"}, ...].
    """
    from . import kernels as active
    from .covariates import CovariateProvider, CovariateSpec
    from .effects import EffectSpec
    from .simulate import _endo_encoding, static_nodal_log_weights
    from .events import RiskSet

    covariates = [
        CovariateSpec("sender_attr"),
        CovariateSpec("receiver_attr"),
        CovariateSpec("recv_received_count"),
        CovariateSpec("recv_time_since_last"),
    ]
    effects = [
        EffectSpec("sine", (1.0, 2.0 * np.pi, 0.0)),
        EffectSpec("quadratic", (0.5, 4.0)),
        EffectSpec("linear", (1.5,)),
        EffectSpec("expdecay", (2.0,)),
    ]
    rng = np.random.default_rng(seed)
    risk_set = RiskSet("full")
    provider = CovariateProvider(covariates, risk_set, nodes,
                                 sender_attr=rng.random(nodes),
                                 receiver_attr=rng.random(nodes))
    times = np.arange(1, events + 1, dtype=np.float64)
    s_counts, r_counts = risk_set.eligible_counts(times, nodes)
    entry_order = risk_set.entry_order(nodes)
    entry_times = risk_set.node_entry_times(nodes)
    sender_logw, recv_logw = static_nodal_log_weights(provider, effects)
    endo_sources, endo_codes, endo_params, endo_caps = _endo_encoding(provider, effects)
    sources, caps = provider.encode()

    rows = []
    reference = active.draw_events(
        times, s_counts, r_counts, entry_order, entry_times,
        sender_logw, recv_logw,
        endo_sources, endo_codes, endo_params, endo_caps, seed,
    )
    for name, impl in _lane_modules().items():
        # warm-up also verifies the lanes agree
        senders, receivers = impl.draw_events(
            times, s_counts, r_counts, entry_order, entry_times,
            sender_logw, recv_logw,
            endo_sources, endo_codes, endo_params, endo_caps, seed,
        )
        if not (np.array_equal(senders, reference[0])
                and np.array_equal(receivers, reference[1])):
            raise AssertionError(f"lane {name} disagrees with the active lane")
        impl.draw_controls(senders, receivers, s_counts, r_counts, entry_order, 1, seed)

        t0 = time.perf_counter()
        for _ in range(repeats):
            impl.draw_events(
                times, s_counts, r_counts, entry_order, entry_times,
                sender_logw, recv_logw,
                endo_sources, endo_codes, endo_params, endo_caps, seed,
            )
        rows.append({"kernel": "draw_events", "backend": name,
                     "seconds": (time.perf_counter() - t0) / repeats})

        t0 = time.perf_counter()
        for _ in range(repeats):
            ctrl_s, ctrl_r = impl.draw_controls(
                senders, receivers, s_counts, r_counts, entry_order, 1, seed
            )
        rows.append({"kernel": "draw_controls", "backend": name,
                     "seconds": (time.perf_counter() - t0) / repeats})

        t0 = time.perf_counter()
        for _ in range(repeats):
            impl.pair_covariates(
                senders, receivers, times, ctrl_s, ctrl_r,
                r_counts, entry_order, entry_times,
                provider.sender_attr, provider.receiver_attr, sources, caps,
            )
        rows.append({"kernel": "pair_covariates", "backend": name,
                     "seconds": (time.perf_counter() - t0) / repeats})
    return rows


def write_backend_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kernel", "backend", "seconds"])
        for row in rows:
            w.writerow([row["kernel"], row["backend"], repr(row["seconds"])])
