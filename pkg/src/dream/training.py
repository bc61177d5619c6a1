"""Mini-batch training, k-fold cross-validation, bootstrap refits."""

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .adam import adam_init, adam_step
from .errors import (
    BootstrapRefitError,
    DreamError,
    NonFiniteScoreError,
    TrainingDivergedError,
    ValidationError,
)
from .nam import (
    SubnetSpec,
    init_model,
    loss_and_grads,
    mean_pair_loss,
    model_params,
    preset_spec,
)
from .sampling import CaseControlDataset


@dataclass
class TrainConfig:
    subnet: object = field(default_factory=lambda: preset_spec("model1"))
    batch_size: int = 256
    epochs: int = 20
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    patience: int | None = None  # early stop on training loss; off by default

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")

    def specs_for(self, q):
        """One SubnetSpec per covariate (a single spec is shared)."""
        if isinstance(self.subnet, SubnetSpec):
            return [self.subnet] * q
        specs = list(self.subnet)
        if len(specs) != q:
            raise ValidationError(f"{len(specs)} subnet specs for {q} covariates")
        return specs


def _dataset_bounds(dataset: CaseControlDataset):
    x_min = np.minimum(dataset.case.min(axis=0), dataset.control.min(axis=0))
    x_max = np.maximum(dataset.case.max(axis=0), dataset.control.max(axis=0))
    return x_min, x_max


def epoch_batches(rng, n, batch_size):
    """Mini-batch index arrays for one epoch: a fresh shuffle, then
    consecutive slices; together they visit every index exactly once."""
    perm = rng.permutation(n)
    return [perm[start:start + batch_size] for start in range(0, n, batch_size)]


def cv_folds(rng, n, k):
    """Contiguous blocks of one shuffled index range; a partition of [0, n)."""
    return np.array_split(rng.permutation(n), k)


def _nonfinite_subnet(model, case_b, ctrl_b):
    from .nam import _subnet_eval  # local: diagnostic path only

    Zc = model.rescale(case_b)
    Zx = model.rescale(ctrl_b)
    for k, sn in enumerate(model.subnets):
        for w in sn.weights:
            if not np.isfinite(w).all():
                return k
        outs = _subnet_eval(sn, Zc[:, k])
        if not np.isfinite(outs).all():
            return k
        outs = _subnet_eval(sn, Zx[:, k])
        if not np.isfinite(outs).all():
            return k
    return None


def train(dataset: CaseControlDataset, config: TrainConfig):
    """Fit a NamModel by Adam on shuffled mini-batches.

    Deterministic in config.seed (init, shuffles and dropout all draw from
    one generator in fixed order).  Returns (model, per-epoch mean loss).
    """
    n = len(dataset)
    if n == 0:
        raise ValidationError("empty dataset")
    rng = np.random.default_rng(config.seed)
    x_min, x_max = _dataset_bounds(dataset)
    model = init_model(config.specs_for(dataset.q), x_min, x_max, rng)
    params = model_params(model)
    state = adam_init(params, lr=config.lr, beta1=config.beta1,
                      beta2=config.beta2, eps=config.eps)
    bs = min(config.batch_size, n)

    trace = []
    best = np.inf
    stale = 0
    for epoch in range(config.epochs):
        batch_losses = []
        for bi, idx in enumerate(epoch_batches(rng, n, bs)):
            try:
                loss, grads = loss_and_grads(
                    model, dataset.case[idx], dataset.control[idx], rng
                )
            except NonFiniteScoreError as err:
                raise TrainingDivergedError(epoch, bi, err.subnet) from err
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    epoch, bi,
                    _nonfinite_subnet(model, dataset.case[idx], dataset.control[idx]),
                )
            adam_step(state, params, grads)
            batch_losses.append(loss)
        epoch_loss = float(np.mean(batch_losses))
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(epoch, -1, None)
        trace.append(epoch_loss)
        if config.patience is not None:
            if epoch_loss < best:
                best = epoch_loss
                stale = 0
            else:
                stale += 1
                if stale > config.patience:
                    break
    return model, trace


def _derived_seed(*entropy) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1)[0])


@dataclass
class CvCell:
    arch: str
    dropout: float
    fold_losses: list

    @property
    def mean(self):
        return float(np.mean(self.fold_losses))

    @property
    def std(self):
        return float(np.std(self.fold_losses, ddof=1)) if len(self.fold_losses) > 1 else 0.0


@dataclass
class CvReport:
    k: int
    cells: list

    def ranked(self):
        return sorted(self.cells, key=lambda c: c.mean)

    def best(self) -> CvCell:
        return self.ranked()[0]


def _grid_cell_spec(arch, dropout):
    if isinstance(arch, str):
        return arch, preset_spec(arch, dropout)
    widths = tuple(int(w) for w in arch)
    label = "(" + ",".join(str(w) for w in widths) + ")"
    return label, SubnetSpec(widths, dropout)


def k_fold_cv(dataset: CaseControlDataset, grid, k, config: TrainConfig) -> CvReport:
    """Contiguous-block folds over one seeded shuffle of the pair indices.

    For every (architecture, dropout) cell, trains on k-1 folds and
    records the mean pair loss on the held-out fold.
    """
    if not grid:
        raise ValidationError("cv grid is empty")
    if k < 2:
        raise ValidationError("k must be >= 2")
    n = len(dataset)
    if n < k:
        raise ValidationError(f"dataset of {n} pairs cannot form {k} folds")
    rng = np.random.default_rng(_derived_seed(config.seed, 0xCF))
    folds = cv_folds(rng, n, k)

    cells = []
    for ci, (arch, dropout) in enumerate(grid):
        label, spec = _grid_cell_spec(arch, dropout)
        fold_losses = []
        for f in range(k):
            val_idx = folds[f]
            train_idx = np.concatenate([folds[j] for j in range(k) if j != f])
            cfg = replace(config, subnet=spec,
                          seed=_derived_seed(config.seed, ci, f))
            model, _ = train(dataset.subset(train_idx), cfg)
            fold_losses.append(
                mean_pair_loss(model, dataset.case[val_idx], dataset.control[val_idx])
            )
        cells.append(CvCell(label, float(dropout), fold_losses))
    return CvReport(k=k, cells=cells)


def write_cv_csv(path, report: CvReport):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["arch", "dropout", "fold", "val_loss"])
        for cell in report.cells:
            for f, loss in enumerate(cell.fold_losses):
                w.writerow([cell.arch, repr(cell.dropout), f, repr(loss)])


def bootstrap_train_seed(seed, b) -> int:
    """Training seed of refit b (exposed so refits are reproducible singly)."""
    return _derived_seed(seed, b, 1)


def bootstrap_indices(seed, b, n):
    """With-replacement resample indices of refit b, size exactly n."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, b, 0]))
    return rng.integers(0, n, size=n)


def _run_refit(args):
    dataset, config, seed, b, idx = args
    if idx is None:
        idx = bootstrap_indices(seed, b, len(dataset))
    cfg = replace(config, seed=bootstrap_train_seed(seed, b))
    model, trace = train(dataset.subset(idx), cfg)
    return model, trace


def bootstrap_refits(dataset: CaseControlDataset, config: TrainConfig, B, seed,
                     jobs=1, indices_override=None):
    """Train B models on with-replacement resamples of the pairs.

    Refits are independent (per-refit derived seeds) and may run in
    parallel; output order and content do not depend on `jobs`.
    """
    if B < 1:
        raise ValidationError("B must be >= 1")
    tasks = [
        (dataset, config, seed, b,
         None if indices_override is None else np.asarray(indices_override[b]))
        for b in range(B)
    ]
    results = [None] * B
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_refit, t) for t in tasks]
            for b, fut in enumerate(futures):
                try:
                    results[b] = fut.result()
                except DreamError as err:
                    raise BootstrapRefitError(b, err) from err
    else:
        for b, t in enumerate(tasks):
            try:
                results[b] = _run_refit(t)
            except DreamError as err:
                raise BootstrapRefitError(b, err) from err
    return [model for model, _ in results]
