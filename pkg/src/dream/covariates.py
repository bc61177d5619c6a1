"""Covariate specifications and the provider that evaluates them for dyads.

A covariate is nodal: it is read off the dyad's sender or receiver.
Exogenous sources index per-node attribute arrays; endogenous sources are
receiver statistics computed from history strictly before the event time
and min-max rescaled to [0, 1] over the receivers eligible at that time.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError
from .events import EventSequence, RiskSet, StatState
from .kernels import numpy_impl

SOURCES = {
    "sender_attr": kernels.SRC_SENDER_ATTR,
    "receiver_attr": kernels.SRC_RECEIVER_ATTR,
    "recv_out_count": kernels.SRC_OUT_COUNT,
    "recv_received_count": kernels.SRC_RECV_COUNT,
    "recv_time_since_last": kernels.SRC_TIME_SINCE,
}
EXOGENOUS = ("sender_attr", "receiver_attr")


@dataclass(frozen=True)
class CovariateSpec:
    """One covariate column; `cap` applies to recv_time_since_last only.

    cap=None means a never-targeted receiver reports t minus its entry
    time; otherwise the configured cap is reported.
    """

    source: str
    cap: float | None = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValidationError(f"unknown covariate source {self.source!r}")
        if self.cap is not None:
            if self.source != "recv_time_since_last":
                raise ValidationError("cap only applies to recv_time_since_last")
            if self.cap < 0:
                raise ValidationError("cap must be non-negative")

    @property
    def is_endogenous(self) -> bool:
        return self.source not in EXOGENOUS


class CovariateProvider:
    """Evaluates covariate vectors for dyads under a fixed risk set."""

    def __init__(self, covariates, risk_set: RiskSet, node_count,
                 sender_attr=None, receiver_attr=None):
        self.covariates = list(covariates)
        if not self.covariates:
            raise ValidationError("at least one covariate is required")
        self.risk_set = risk_set
        self.node_count = int(node_count)
        self.sender_attr = None if sender_attr is None else np.asarray(sender_attr, float)
        self.receiver_attr = (
            None if receiver_attr is None else np.asarray(receiver_attr, float)
        )
        for cov in self.covariates:
            if cov.source == "sender_attr" and self.sender_attr is None:
                raise ValidationError("sender_attr covariate needs sender attributes")
            if cov.source == "receiver_attr" and self.receiver_attr is None:
                raise ValidationError("receiver_attr covariate needs receiver attributes")
        self._entry_times = risk_set.node_entry_times(self.node_count)
        self._entry_order = risk_set.entry_order(self.node_count)

    @property
    def q(self) -> int:
        return len(self.covariates)

    def encode(self):
        """(sources (q,), caps (q,)) in kernel encoding; cap None -> -1."""
        sources = np.array([SOURCES[c.source] for c in self.covariates], dtype=np.int64)
        caps = np.array([-1.0 if c.cap is None else c.cap for c in self.covariates])
        return sources, caps

    def _attr_or_zeros(self, arr):
        return np.zeros(self.node_count) if arr is None else arr

    def compute(self, state: StatState, s, r, t):
        """Covariate vector of dyad (s, r) at time t (reference path).

        The state must hold exactly the events strictly before t; the
        kernels' fast path reproduces this function bitwise.
        """
        if s < 0 or s >= self.node_count or r < 0 or r >= self.node_count:
            raise ValidationError(f"dyad ({s}, {r}) references unknown node")
        sources, caps = self.encode()
        nr = int(
            self.risk_set.eligible_counts(np.array([t]), self.node_count)[1][0]
        )
        nodes = self._entry_order[:nr]
        x = np.empty(self.q)
        for k, cov in enumerate(self.covariates):
            if cov.source == "sender_attr":
                x[k] = self.sender_attr[s]
            elif cov.source == "receiver_attr":
                x[k] = self.receiver_attr[r]
            else:
                raw = numpy_impl._endo_raw(
                    sources[k], nodes, t,
                    state.out_count, state.recv_count, state.last_recv_time,
                    self._entry_times, caps[k],
                )
                vmin, vmax = raw.min(), raw.max()
                span = vmax - vmin
                v = numpy_impl._endo_raw(
                    sources[k], np.array([r]), t,
                    state.out_count, state.recv_count, state.last_recv_time,
                    self._entry_times, caps[k],
                )[0]
                x[k] = (v - vmin) / span if span > 0.0 else 0.0
        return x

    def pair_matrices(self, seq: EventSequence, ctrl_s, ctrl_r):
        """Covariates for all cases and controls via the active kernel lane."""
        sources, caps = self.encode()
        _, r_counts = self.risk_set.eligible_counts(seq.times, self.node_count)
        return kernels.pair_covariates(
            seq.senders, seq.receivers, seq.times,
            np.asarray(ctrl_s, dtype=np.int64), np.asarray(ctrl_r, dtype=np.int64),
            r_counts, self._entry_order, self._entry_times,
            self._attr_or_zeros(self.sender_attr),
            self._attr_or_zeros(self.receiver_attr),
            sources, caps,
        )

    def split_roles(self):
        """Indices of (sender-side, receiver-exogenous, endogenous) covariates."""
        send = [k for k, c in enumerate(self.covariates) if c.source == "sender_attr"]
        recv = [k for k, c in enumerate(self.covariates) if c.source == "receiver_attr"]
        endo = [k for k, c in enumerate(self.covariates) if c.is_endogenous]
        return send, recv, endo
