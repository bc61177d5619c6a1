"""Event-stream data model: events, risk sets, incremental statistics, CSV IO."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import OrderingError, ValidationError


@dataclass(frozen=True)
class Event:
    """One directed interaction: sender -> receiver at a point in time."""

    sender: int
    receiver: int
    time: float

    def __post_init__(self):
        if self.sender < 0 or self.receiver < 0:
            raise ValidationError(f"node ids must be non-negative, got {self}")
        if self.sender == self.receiver:
            raise ValidationError(f"self-loop event not allowed: {self}")


class EventSequence:
    """Time-ordered events, array-backed.

    Times must be non-decreasing; ties keep input order and history for
    event i is always the strict positional prefix 0..i-1.  Optional
    per-row exogenous columns are carried through CSV round-trips.
    """

    def __init__(self, senders, receivers, times, node_count=None, extra_columns=None):
        self.senders = np.asarray(senders, dtype=np.int64)
        self.receivers = np.asarray(receivers, dtype=np.int64)
        self.times = np.asarray(times, dtype=np.float64)
        n = len(self.senders)
        if len(self.receivers) != n or len(self.times) != n:
            raise ValidationError("senders/receivers/times lengths differ")
        if n and (self.senders == self.receivers).any():
            bad = int(np.argmax(self.senders == self.receivers))
            raise ValidationError(f"self-loop at event {bad}")
        if n and (np.diff(self.times) < 0).any():
            bad = int(np.argmax(np.diff(self.times) < 0)) + 1
            raise ValidationError(f"times decrease at event {bad}")
        if n and min(self.senders.min(), self.receivers.min()) < 0:
            raise ValidationError("negative node id")
        inferred = int(max(self.senders.max(), self.receivers.max())) + 1 if n else 0
        self.node_count = inferred if node_count is None else int(node_count)
        if self.node_count < inferred:
            raise ValidationError(
                f"node_count {self.node_count} smaller than max node id + 1 ({inferred})"
            )
        self.extra_columns = None
        if extra_columns is not None:
            self.extra_columns = np.asarray(extra_columns, dtype=np.float64)
            if self.extra_columns.shape[0] != n:
                raise ValidationError("extra covariate rows do not match event count")

    def __len__(self):
        return len(self.senders)

    def event(self, i) -> Event:
        return Event(int(self.senders[i]), int(self.receivers[i]), float(self.times[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self.event(i)

    @classmethod
    def from_events(cls, events, node_count=None):
        return cls(
            [e.sender for e in events],
            [e.receiver for e in events],
            [e.time for e in events],
            node_count=node_count,
        )


@dataclass(frozen=True)
class RiskSet:
    """Which dyads can produce an event at a given time.

    full:    all ordered pairs (s, r), s != r, over the node set.
    growing: receivers are nodes with entry_time < t; senders are nodes
             with entry_time <= t (a node may act the moment it enters,
             and be targeted strictly after).
    """

    regime: str = "full"
    entry_times: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.regime not in ("full", "growing"):
            raise ValidationError(f"unknown risk-set regime {self.regime!r}")
        if self.regime == "growing":
            if self.entry_times is None:
                raise ValidationError("growing regime requires entry times")
            object.__setattr__(
                self, "entry_times", np.asarray(self.entry_times, dtype=np.float64)
            )

    def node_entry_times(self, node_count):
        if self.regime == "full":
            return np.zeros(node_count)
        if len(self.entry_times) != node_count:
            raise ValidationError("entry_times length != node_count")
        return self.entry_times

    def entry_order(self, node_count):
        """Node ids sorted by entry time (stable); eligibility = prefix."""
        if self.regime == "full":
            return np.arange(node_count, dtype=np.int64)
        return np.argsort(self.entry_times, kind="stable").astype(np.int64)

    def eligible_counts(self, times, node_count):
        """Per-event (senders, receivers) prefix lengths into entry_order."""
        times = np.asarray(times, dtype=np.float64)
        if self.regime == "full":
            full = np.full(len(times), node_count, dtype=np.int64)
            return full, full.copy()
        ordered = np.sort(self.entry_times, kind="stable")
        s_counts = np.searchsorted(ordered, times, side="right").astype(np.int64)
        r_counts = np.searchsorted(ordered, times, side="left").astype(np.int64)
        return s_counts, r_counts

    def size_at(self, t, node_count):
        """|R(t)|: ordered eligible pairs with s != r."""
        s_counts, r_counts = self.eligible_counts(np.array([t]), node_count)
        ns, nr = int(s_counts[0]), int(r_counts[0])
        return ns * nr - nr  # receivers are a subset of senders


@dataclass
class StatState:
    """Incrementally maintained per-node event statistics."""

    node_count: int
    out_count: np.ndarray
    recv_count: np.ndarray
    last_recv_time: np.ndarray  # NaN = never targeted
    last_time: float = -np.inf
    applied: int = 0

    @classmethod
    def empty(cls, node_count):
        return cls(
            node_count=node_count,
            out_count=np.zeros(node_count, dtype=np.int64),
            recv_count=np.zeros(node_count, dtype=np.int64),
            last_recv_time=np.full(node_count, np.nan),
        )


def apply_event(state: StatState, e: Event) -> StatState:
    """Fold one event into the statistics (mutates and returns state)."""
    if e.time < state.last_time:
        raise OrderingError(
            f"event at t={e.time} applied after t={state.last_time}"
        )
    if e.sender >= state.node_count or e.receiver >= state.node_count:
        raise ValidationError(f"event {e} references unknown node")
    state.out_count[e.sender] += 1
    state.recv_count[e.receiver] += 1
    state.last_recv_time[e.receiver] = e.time
    state.last_time = e.time
    state.applied += 1
    return state


ENDO_STATS = ("recv_out_count", "recv_received_count", "recv_time_since_last")


def endogenous_covariates(
    state: StatState,
    dyad,
    t,
    stats=ENDO_STATS,
    cap=None,
    entry_times=None,
):
    """Raw endogenous statistics of the dyad's receiver at time t.

    The state must reflect exactly the events strictly before t.  For a
    never-targeted receiver, time-since-last falls back to `cap`, or to
    t minus the node's entry time when no cap is configured.
    """
    _, r = dyad
    if r < 0 or r >= state.node_count:
        raise ValidationError(f"node {r} unknown to the state")
    out = np.empty(len(stats))
    for i, name in enumerate(stats):
        if name == "recv_out_count":
            out[i] = float(state.out_count[r])
        elif name == "recv_received_count":
            out[i] = float(state.recv_count[r])
        elif name == "recv_time_since_last":
            last = state.last_recv_time[r]
            if np.isnan(last):
                if cap is not None:
                    out[i] = cap
                else:
                    entry = 0.0 if entry_times is None else float(entry_times[r])
                    out[i] = t - entry
            else:
                out[i] = t - last
        else:
            raise ValidationError(f"unknown statistic {name!r}")
    return out


EVENTS_HEADER = ("sender", "receiver", "time")


def write_events_csv(path, seq: EventSequence):
    """Write `sender,receiver,time[,x1..xq]` (floats as shortest round-trip)."""
    qx = 0 if seq.extra_columns is None else seq.extra_columns.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(EVENTS_HEADER) + [f"x{i + 1}" for i in range(qx)])
        for i in range(len(seq)):
            row = [int(seq.senders[i]), int(seq.receivers[i]), repr(float(seq.times[i]))]
            if qx:
                row += [repr(float(v)) for v in seq.extra_columns[i]]
            w.writerow(row)


def read_events_csv(path, node_count=None) -> EventSequence:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or tuple(header[:3]) != EVENTS_HEADER:
            raise ValidationError(f"{path}: expected header sender,receiver,time[,x..]")
        qx = len(header) - 3
        senders, receivers, times = [], [], []
        extra = [] if qx else None
        for row in rd:
            if not row:
                continue
            senders.append(int(row[0]))
            receivers.append(int(row[1]))
            times.append(float(row[2]))
            if qx:
                extra.append([float(v) for v in row[3:]])
    return EventSequence(senders, receivers, times, node_count=node_count,
                         extra_columns=extra)
