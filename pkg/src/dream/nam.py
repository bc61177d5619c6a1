"""Neural additive model: one single-input GCU subnet per covariate.

The score is f(x) = sum_k f_k(x_k).  Hidden layers apply the growing
cosine unit g(u) = u*cos(u) to the affine pre-activation; the output
layer is purely affine.  Training minimizes the mean pairwise logistic
loss softplus(-(f(case) - f(control))), whose per-pair derivative w.r.t.
the score difference is -sigma(delta - ...) on the case branch.

Inputs are min-max rescaled to [0, 1] with training-set bounds stored on
the model; the GCU oscillates, so unbounded raw covariates would alias.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteScoreError, ValidationError
from .numerics import sigmoid, softplus

MODEL_FORMAT = "dream-nam/1"

# architecture presets, small to large
PRESETS = {
    "model1": (64, 128, 64),
    "model2": (128, 256, 64),
    "model3": (256, 512, 256, 128),
    "model4": (512, 1024, 512, 256, 128),
}


def gcu(u):
    """Growing cosine unit: u * cos(u)."""
    return u * np.cos(u)


def gcu_grad(u):
    """d/du of u*cos(u): cos(u) - u*sin(u)."""
    return np.cos(u) - u * np.sin(u)


@dataclass(frozen=True)
class SubnetSpec:
    """Hidden layer widths and dropout rate of one subnet (GCU activation)."""

    hidden_widths: tuple
    dropout_rate: float = 0.0

    def __post_init__(self):
        widths = tuple(int(w) for w in self.hidden_widths)
        if not widths or any(w < 1 for w in widths):
            raise ValidationError(f"hidden widths must all be >= 1, got {widths}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValidationError("dropout_rate must be in [0, 1)")
        object.__setattr__(self, "hidden_widths", widths)

    @property
    def layer_dims(self):
        return (1, *self.hidden_widths, 1)


def preset_spec(name, dropout_rate=0.0) -> SubnetSpec:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; know {sorted(PRESETS)}")
    return SubnetSpec(PRESETS[name], dropout_rate)


@dataclass
class Subnet:
    spec: SubnetSpec
    weights: list  # weights[l]: (dims[l+1], dims[l])
    biases: list   # biases[l]: (dims[l+1],)

    @property
    def n_layers(self):
        return len(self.weights)


@dataclass
class NamModel:
    subnets: list
    x_min: np.ndarray
    x_max: np.ndarray

    @property
    def q(self):
        return len(self.subnets)

    def rescale(self, X):
        span = self.x_max - self.x_min
        safe = np.where(span > 0, span, 1.0)
        Z = (X - self.x_min) / safe
        return np.where(span > 0, Z, 0.0)

    def score(self, X):
        """Eval-mode score f(x) over rows of X (raw covariate values)."""
        scores, _ = forward(self, X, mode="eval")
        return scores

    def subnet_curve(self, k, x):
        """Eval one subnet over raw covariate values x (for curve plots)."""
        x = np.asarray(x, dtype=np.float64)
        span = self.x_max[k] - self.x_min[k]
        z = (x - self.x_min[k]) / span if span > 0 else np.zeros_like(x)
        return _subnet_eval(self.subnets[k], z)


def init_model(specs, x_min, x_max, rng) -> NamModel:
    """Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)), zero biases.

    Keeps GCU pre-activations near u = 0 where the unit is locally linear
    (g'(0) = 1), so signal passes through untouched at the start.
    """
    x_min = np.asarray(x_min, dtype=np.float64)
    x_max = np.asarray(x_max, dtype=np.float64)
    if len(specs) != len(x_min) or len(x_min) != len(x_max):
        raise ValidationError("specs and bounds must have one entry per covariate")
    subnets = []
    for spec in specs:
        dims = spec.layer_dims
        weights, biases = [], []
        for l in range(len(dims) - 1):
            fan_in, fan_out = dims[l], dims[l + 1]
            a = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-a, a, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        subnets.append(Subnet(spec, weights, biases))
    return NamModel(subnets, x_min, x_max)


def zero_model(q) -> NamModel:
    """Constant-zero scorer with the NamModel interface."""
    specs = [SubnetSpec((1,))] * q
    model = init_model(specs, np.zeros(q), np.ones(q), np.random.default_rng(0))
    for sn in model.subnets:
        for w in sn.weights:
            w[:] = 0.0
    return model


def _subnet_eval(subnet, z):
    a = z[:, None]
    L = subnet.n_layers
    for l in range(L - 1):
        a = gcu(a @ subnet.weights[l].T + subnet.biases[l])
    out = a @ subnet.weights[L - 1].T + subnet.biases[L - 1]
    return out[:, 0]


def _subnet_train(subnet, z, rng):
    """Forward with dropout, caching (input, pre-activation, mask) per layer."""
    a = z[:, None]
    rate = subnet.spec.dropout_rate
    L = subnet.n_layers
    cache = []
    for l in range(L - 1):
        pre = a @ subnet.weights[l].T + subnet.biases[l]
        h = gcu(pre)
        mask = None
        if rate > 0.0:
            if rng is None:
                raise ValidationError("train-mode dropout needs an rng")
            mask = (rng.random(h.shape) >= rate).astype(np.float64) / (1.0 - rate)
            h = h * mask
        cache.append((a, pre, mask))
        a = h
    out = a @ subnet.weights[L - 1].T + subnet.biases[L - 1]
    cache.append((a, None, None))
    return out[:, 0], cache


def _subnet_backward(subnet, cache, dout):
    """Exact gradients of sum(dout * subnet_output) w.r.t. weights and biases."""
    L = subnet.n_layers
    grads = [None] * (2 * L)
    g = dout[:, None]
    a_last = cache[L - 1][0]
    grads[2 * (L - 1)] = g.T @ a_last
    grads[2 * (L - 1) + 1] = g.sum(axis=0)
    da = g @ subnet.weights[L - 1]
    for l in range(L - 2, -1, -1):
        a_prev, pre, mask = cache[l]
        dh = da if mask is None else da * mask
        dz = dh * gcu_grad(pre)
        grads[2 * l] = dz.T @ a_prev
        grads[2 * l + 1] = dz.sum(axis=0)
        if l > 0:
            da = dz @ subnet.weights[l]
    return grads


def forward(model: NamModel, X, mode="eval", rng=None):
    """Score rows of X; returns (scores (n,), per-subnet outputs (n, q)).

    Train mode applies inverted dropout (survivors scaled by 1/(1-rate));
    eval mode is deterministic and dropout-free.
    """
    if mode not in ("eval", "train"):
        raise ValidationError(f"mode must be eval|train, got {mode!r}")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.q:
        raise ValidationError(f"expected {model.q} covariates, got {X.shape[1]}")
    Z = model.rescale(X)
    contribs = np.empty((X.shape[0], model.q))
    for k, subnet in enumerate(model.subnets):
        if mode == "eval":
            contribs[:, k] = _subnet_eval(subnet, Z[:, k])
        else:
            contribs[:, k], _ = _subnet_train(subnet, Z[:, k], rng)
        if not np.isfinite(contribs[:, k]).all():
            raise NonFiniteScoreError(k)
    return contribs.sum(axis=1), contribs


def pair_losses(model: NamModel, case_X, ctrl_X):
    """Per-pair loss softplus(-(f(case) - f(control))), eval mode."""
    delta = model.score(case_X) - model.score(ctrl_X)
    return softplus(-delta)


def mean_pair_loss(model: NamModel, case_X, ctrl_X) -> float:
    return float(pair_losses(model, case_X, ctrl_X).mean())


def model_params(model: NamModel):
    """Flat parameter list (per subnet: W0, b0, W1, b1, ...); arrays are views."""
    out = []
    for sn in model.subnets:
        for w, b in zip(sn.weights, sn.biases):
            out.append(w)
            out.append(b)
    return out


def loss_and_grads(model: NamModel, case_X, ctrl_X, rng=None):
    """Mean pair loss over the batch and its exact parameter gradients.

    Grad layout matches model_params.  Both branches share parameters,
    so each pair contributes through the case forward with +dL/ddelta
    and through the control forward with the opposite sign.
    """
    case_X = np.asarray(case_X, dtype=np.float64)
    ctrl_X = np.asarray(ctrl_X, dtype=np.float64)
    n = case_X.shape[0]
    Zc = model.rescale(case_X)
    Zx = model.rescale(ctrl_X)

    case_out = np.empty((n, model.q))
    ctrl_out = np.empty((n, model.q))
    case_caches, ctrl_caches = [], []
    for k, sn in enumerate(model.subnets):
        o, c = _subnet_train(sn, Zc[:, k], rng)
        case_out[:, k] = o
        case_caches.append(c)
        o, c = _subnet_train(sn, Zx[:, k], rng)
        ctrl_out[:, k] = o
        ctrl_caches.append(c)
        if not (np.isfinite(case_out[:, k]).all() and np.isfinite(ctrl_out[:, k]).all()):
            raise NonFiniteScoreError(k)

    delta = case_out.sum(axis=1) - ctrl_out.sum(axis=1)
    loss = float(softplus(-delta).mean())
    ddelta = -sigmoid(-delta) / n  # d(mean loss)/d(delta_i)

    grads = []
    for k, sn in enumerate(model.subnets):
        gc = _subnet_backward(sn, case_caches[k], ddelta)
        gx = _subnet_backward(sn, ctrl_caches[k], -ddelta)
        grads.extend(a + b for a, b in zip(gc, gx))
    return loss, grads


def model_to_dict(model: NamModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "q": model.q,
        "x_min": [float(v) for v in model.x_min],
        "x_max": [float(v) for v in model.x_max],
        "subnets": [
            {
                "hidden_widths": list(sn.spec.hidden_widths),
                "dropout_rate": sn.spec.dropout_rate,
                "layers": [
                    {"w": [[float(v) for v in row] for row in w],
                     "b": [float(v) for v in b]}
                    for w, b in zip(sn.weights, sn.biases)
                ],
            }
            for sn in model.subnets
        ],
    }


def model_from_dict(doc: dict) -> NamModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValidationError(f"not a {MODEL_FORMAT} document")
    subnets = []
    for sd in doc["subnets"]:
        spec = SubnetSpec(tuple(sd["hidden_widths"]), sd["dropout_rate"])
        weights = [np.array(layer["w"], dtype=np.float64) for layer in sd["layers"]]
        biases = [np.array(layer["b"], dtype=np.float64) for layer in sd["layers"]]
        dims = spec.layer_dims
        for l, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (dims[l + 1], dims[l]) or b.shape != (dims[l + 1],):
                raise ValidationError(f"layer {l} shape mismatch in model file")
        subnets.append(Subnet(spec, weights, biases))
    model = NamModel(
        subnets,
        np.array(doc["x_min"], dtype=np.float64),
        np.array(doc["x_max"], dtype=np.float64),
    )
    if model.q != doc["q"]:
        raise ValidationError("subnet count does not match q")
    return model


def save_model(path, model: NamModel):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path) -> NamModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
