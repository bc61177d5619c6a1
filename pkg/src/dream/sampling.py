"""Nested case-control sampling: one observed dyad vs. sampled non-events."""

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .covariates import CovariateProvider
from .errors import UnsatisfiableControlError, ValidationError
from .events import EventSequence, RiskSet


@dataclass
class CaseControlDataset:
    """Paired covariate rows; pair i couples case[i] with control[i].

    With m controls per case the case row is repeated m times, so the
    arrays always align one-to-one.
    """

    case: np.ndarray       # (P, q)
    control: np.ndarray    # (P, q)
    event_index: np.ndarray  # (P,)

    def __post_init__(self):
        self.case = np.asarray(self.case, dtype=np.float64)
        self.control = np.asarray(self.control, dtype=np.float64)
        self.event_index = np.asarray(self.event_index, dtype=np.int64)
        if self.case.shape != self.control.shape:
            raise ValidationError("case/control shapes differ")
        if len(self.event_index) != self.case.shape[0]:
            raise ValidationError("event_index length mismatch")
        if not (np.isfinite(self.case).all() and np.isfinite(self.control).all()):
            raise ValidationError("non-finite covariate value")

    def __len__(self):
        return self.case.shape[0]

    @property
    def q(self):
        return self.case.shape[1]

    def subset(self, idx):
        return CaseControlDataset(self.case[idx], self.control[idx], self.event_index[idx])


def sample_controls(
    seq: EventSequence,
    risk_set: RiskSet,
    provider: CovariateProvider,
    m: int = 1,
    seed: int = 0,
) -> tuple[CaseControlDataset, np.ndarray, np.ndarray]:
    """Draw m uniform controls per event and compute both covariate sides.

    Controls are uniform over the risk set at the event time minus the
    observed dyad; covariates use history strictly before the event.
    Each event has its own RNG substream, so results do not depend on
    evaluation order.  Returns (dataset, control_senders, control_receivers).
    """
    if m < 1:
        raise ValidationError("m must be >= 1")
    n = len(seq)
    if n == 0:
        raise ValidationError("empty event sequence")
    node_count = provider.node_count
    if seq.node_count > node_count:
        raise ValidationError("sequence references more nodes than the provider")

    s_counts, r_counts = risk_set.eligible_counts(seq.times, node_count)
    sizes = s_counts * r_counts - r_counts
    short = sizes - 1 < m
    if short.any():
        bad = int(np.argmax(short))
        raise UnsatisfiableControlError(bad, int(sizes[bad]), m)

    entry_order = risk_set.entry_order(node_count)
    ctrl_s, ctrl_r = kernels.draw_controls(
        seq.senders, seq.receivers, s_counts, r_counts, entry_order, m, seed
    )
    case_x, ctrl_x = provider.pair_matrices(seq, ctrl_s, ctrl_r)

    q = provider.q
    dataset = CaseControlDataset(
        case=np.repeat(case_x, m, axis=0),
        control=ctrl_x.reshape(n * m, q),
        event_index=np.repeat(np.arange(n, dtype=np.int64), m),
    )
    return dataset, ctrl_s, ctrl_r


def write_pairs_csv(path, dataset: CaseControlDataset):
    """`event_index,role,x1..xq`; one case row per event, then its controls."""
    q = dataset.q
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["event_index", "role"] + [f"x{i + 1}" for i in range(q)])
        prev = None
        for i in range(len(dataset)):
            ev = int(dataset.event_index[i])
            if ev != prev:
                w.writerow([ev, "case"] + [repr(float(v)) for v in dataset.case[i]])
                prev = ev
            w.writerow([ev, "control"] + [repr(float(v)) for v in dataset.control[i]])


def read_pairs_csv(path) -> CaseControlDataset:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or header[:2] != ["event_index", "role"]:
            raise ValidationError(f"{path}: expected header event_index,role,x..")
        q = len(header) - 2
        cases, controls, idx = [], [], []
        current_case = None
        current_ev = None
        for row in rd:
            if not row:
                continue
            ev = int(row[0])
            vals = [float(v) for v in row[2:]]
            if len(vals) != q:
                raise ValidationError(f"{path}: row width mismatch")
            if row[1] == "case":
                current_case = vals
                current_ev = ev
            elif row[1] == "control":
                if current_case is None or ev != current_ev:
                    raise ValidationError(f"{path}: control row without its case")
                cases.append(current_case)
                controls.append(vals)
                idx.append(ev)
            else:
                raise ValidationError(f"{path}: unknown role {row[1]!r}")
    if not cases:
        raise ValidationError(f"{path}: no pairs found")
    return CaseControlDataset(np.array(cases), np.array(controls), np.array(idx))
