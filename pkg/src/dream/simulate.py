"""Synthetic relational event generator with a known additive ground truth.

Event i is placed at time i (unit spacing): the pairwise likelihood being
estimated is invariant to waiting times, so no baseline hazard is drawn.
Conditional on history, the next dyad is categorical over the risk set
with weight exp(sum of true effects); because every covariate is nodal
the weight factorizes into sender and receiver scores, and a draw is one
categorical per margin with rejection of self-loops (exactly the
conditional law over eligible dyads).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .covariates import CovariateProvider, CovariateSpec
from .effects import EffectSpec, encode_effects
from .errors import ValidationError
from .events import EventSequence, RiskSet
from .kernels import numpy_impl

TRUTH_FORMAT = "dream-truth/1"
_ATTR_STREAM = 0xA77


@dataclass
class SimConfig:
    node_count: int
    event_count: int
    covariates: list = field(default_factory=list)
    effects: list = field(default_factory=list)
    regime: str = "full"
    entry_times: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if self.node_count < 2:
            raise ValidationError("node_count must be >= 2")
        if self.event_count < 1:
            raise ValidationError("event_count must be >= 1")
        if len(self.covariates) != len(self.effects):
            raise ValidationError("need exactly one effect per covariate")
        if not self.covariates:
            raise ValidationError("at least one covariate is required")
        if self.regime == "growing" and self.entry_times is None:
            raise ValidationError("growing regime requires entry_times")

    def risk_set(self) -> RiskSet:
        if self.regime == "full":
            return RiskSet("full")
        return RiskSet("growing", np.asarray(self.entry_times, dtype=np.float64))


@dataclass
class NodeAttributes:
    """Per-node exogenous attributes, independent U(0,1) draws."""

    sender: np.ndarray
    receiver: np.ndarray


@dataclass
class TruthHandle:
    """The generating score function f(x) = sum_k f_k(x_k)."""

    effects: list

    def score(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != len(self.effects):
            raise ValidationError(
                f"expected {len(self.effects)} covariates, got {X.shape[1]}"
            )
        out = np.zeros(X.shape[0])
        for k, eff in enumerate(self.effects):
            out += eff(X[:, k])
        return out


@dataclass
class SimResult:
    seq: EventSequence
    truth: TruthHandle
    provider: CovariateProvider
    attrs: NodeAttributes
    risk_set: RiskSet
    config: SimConfig


def draw_nodal_covariates(config: SimConfig) -> NodeAttributes:
    """Independent sender/receiver attributes per node, deterministic in seed."""
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, _ATTR_STREAM]))
    return NodeAttributes(
        sender=rng.random(config.node_count),
        receiver=rng.random(config.node_count),
    )


def static_nodal_log_weights(provider: CovariateProvider, effects):
    """Per-node log-weights from exogenous covariates (the static scores)."""
    V = provider.node_count
    sender_logw = np.zeros(V)
    recv_logw = np.zeros(V)
    for k, cov in enumerate(provider.covariates):
        if cov.source == "sender_attr":
            sender_logw += effects[k](provider.sender_attr)
        elif cov.source == "receiver_attr":
            recv_logw += effects[k](provider.receiver_attr)
    return sender_logw, recv_logw


def _endo_encoding(provider: CovariateProvider, effects):
    sources, caps = provider.encode()
    endo = [k for k, c in enumerate(provider.covariates) if c.is_endogenous]
    codes, params = encode_effects([effects[k] for k in endo])
    return (
        sources[endo],
        codes,
        params,
        caps[endo],
    )


def simulate_events(config: SimConfig) -> SimResult:
    """Generate the event stream plus the ground-truth score handle."""
    attrs = draw_nodal_covariates(config)
    risk_set = config.risk_set()
    provider = CovariateProvider(
        config.covariates, risk_set, config.node_count,
        sender_attr=attrs.sender, receiver_attr=attrs.receiver,
    )
    times = np.arange(1, config.event_count + 1, dtype=np.float64)
    s_counts, r_counts = risk_set.eligible_counts(times, config.node_count)
    sizes = s_counts * r_counts - r_counts
    if (sizes < 1).any():
        bad = int(np.argmax(sizes < 1))
        raise ValidationError(f"empty risk set at event {bad} (t={times[bad]})")

    sender_logw, recv_logw = static_nodal_log_weights(provider, config.effects)
    endo_sources, endo_codes, endo_params, endo_caps = _endo_encoding(
        provider, config.effects
    )
    entry_order = risk_set.entry_order(config.node_count)
    entry_times = risk_set.node_entry_times(config.node_count)

    senders, receivers = kernels.draw_events(
        times, s_counts, r_counts, entry_order, entry_times,
        sender_logw, recv_logw,
        endo_sources, endo_codes, endo_params, endo_caps,
        config.seed,
    )
    seq = EventSequence(senders, receivers, times, node_count=config.node_count)
    return SimResult(seq, TruthHandle(list(config.effects)), provider, attrs,
                     risk_set, config)


def next_event_log_weights(provider: CovariateProvider, effects, state, t):
    """Dyad log-weight matrix implied by the sampler at time t.

    Built from the same factorized per-node scores the draw kernel uses;
    ineligible dyads get -inf.  Intended for small-instance law checks
    against brute-force enumeration.
    """
    V = provider.node_count
    sender_logw, recv_logw = static_nodal_log_weights(provider, effects)
    endo_sources, endo_codes, endo_params, endo_caps = _endo_encoding(provider, effects)
    entry_order = provider.risk_set.entry_order(V)
    entry_times = provider.risk_set.node_entry_times(V)
    s_counts, r_counts = provider.risk_set.eligible_counts(np.array([t]), V)
    ns, nr = int(s_counts[0]), int(r_counts[0])

    recv_logw = recv_logw.copy()
    nodes = entry_order[:nr]
    dyn = recv_logw[nodes]
    for e in range(len(endo_sources)):
        raw = numpy_impl._endo_raw(
            endo_sources[e], nodes, t,
            state.out_count, state.recv_count, state.last_recv_time,
            entry_times, endo_caps[e],
        )
        dyn += kernels.effect_values(endo_codes[e], endo_params[e],
                                     numpy_impl._rescale(raw))

    logw = np.full((V, V), -np.inf)
    for sp in range(ns):
        s = entry_order[sp]
        for rp in range(nr):
            r = nodes[rp]
            if s != r:
                logw[s, r] = sender_logw[s] + dyn[rp]
    return logw


def gumbel_max_draw(log_weights, rng):
    """Reference categorical draw: argmax of log-weights plus Gumbel noise.

    Equivalent in law to normalized categorical sampling; kept as the
    cross-check for the inverse-CDF draws used in the kernels.
    """
    log_weights = np.asarray(log_weights, dtype=np.float64)
    g = -np.log(-np.log(rng.random(log_weights.shape)))
    total = log_weights + g
    return int(np.argmax(total))


_STUDY_PATTERN = (
    ("sender_attr", EffectSpec("sine", (1.0, 2.0 * np.pi, 0.0))),
    ("receiver_attr", EffectSpec("quadratic", (0.5, 4.0))),
    ("sender_attr", EffectSpec("linear", (2.0,))),
    ("receiver_attr", EffectSpec("bump", (0.5, 0.15, 1.5))),
    ("sender_attr", EffectSpec("expdecay", (3.0,))),
    ("receiver_attr", EffectSpec("sine", (0.8, np.pi, 0.4))),
    ("sender_attr", EffectSpec("quadratic", (0.3, 2.0))),
    ("receiver_attr", EffectSpec("linear", (-1.5,))),
)


def default_covariates(q=2):
    """Standard study covariates: alternating nodal attributes with a
    cycling library of non-linear effects (covariates, effects)."""
    if q < 1:
        raise ValidationError("q must be >= 1")
    covariates, effects = [], []
    for k in range(q):
        source, effect = _STUDY_PATTERN[k % len(_STUDY_PATTERN)]
        covariates.append(CovariateSpec(source))
        effects.append(effect)
    return covariates, effects


def staggered_entry_times(node_count, event_count, initial_nodes=2):
    """Entry schedule for growing networks: a seed core, then steady arrivals."""
    if initial_nodes < 2 or initial_nodes > node_count:
        raise ValidationError("initial_nodes must be in [2, node_count]")
    entry = np.zeros(node_count)
    late = node_count - initial_nodes
    if late:
        entry[initial_nodes:] = np.linspace(1.0, event_count, late, endpoint=False)
    return entry


def save_truth(path, result: SimResult):
    cfg = result.config
    doc = {
        "format": TRUTH_FORMAT,
        "seed": cfg.seed,
        "node_count": cfg.node_count,
        "event_count": cfg.event_count,
        "regime": cfg.regime,
        "entry_times": None if cfg.entry_times is None
        else [float(v) for v in cfg.entry_times],
        "covariates": [
            {"source": c.source, "cap": c.cap} for c in cfg.covariates
        ],
        "effects": [
            {"kind": e.kind, "params": list(e.params)} for e in cfg.effects
        ],
        "sender_attr": [float(v) for v in result.attrs.sender],
        "receiver_attr": [float(v) for v in result.attrs.receiver],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_truth(path):
    """Rebuild (config, truth handle, provider, risk set) from truth.json."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != TRUTH_FORMAT:
        raise ValidationError(f"{path}: not a {TRUTH_FORMAT} file")
    covariates = [CovariateSpec(c["source"], c.get("cap")) for c in doc["covariates"]]
    effects = [EffectSpec(e["kind"], tuple(e["params"])) for e in doc["effects"]]
    entry = doc.get("entry_times")
    config = SimConfig(
        node_count=doc["node_count"],
        event_count=doc["event_count"],
        covariates=covariates,
        effects=effects,
        regime=doc["regime"],
        entry_times=None if entry is None else np.asarray(entry, dtype=np.float64),
        seed=doc["seed"],
    )
    attrs = NodeAttributes(
        sender=np.asarray(doc["sender_attr"], dtype=np.float64),
        receiver=np.asarray(doc["receiver_attr"], dtype=np.float64),
    )
    risk_set = config.risk_set()
    provider = CovariateProvider(
        covariates, risk_set, config.node_count,
        sender_attr=attrs.sender, receiver_attr=attrs.receiver,
    )
    return config, TruthHandle(effects), provider, risk_set, attrs
