"""Scoring against ground truth: log partial likelihood, KL, curve recovery."""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteScoreError, ValidationError
from .gpr import GprFit
from .numerics import log_sigmoid
from .sampling import CaseControlDataset


class ZeroScorer:
    """Constant-zero score function (the no-effect reference model)."""

    def score(self, X):
        X = np.asarray(X, dtype=np.float64)
        return np.zeros(X.shape[0] if X.ndim > 1 else 1)


def log_partial_likelihood(scorer, dataset: CaseControlDataset) -> float:
    """Sum over pairs of log sigma(f(case) - f(control)).

    `scorer` is anything with .score(X): a fitted model, the simulator's
    truth handle, or ZeroScorer.
    """
    if len(dataset) == 0:
        raise ValidationError("empty dataset")
    delta = np.asarray(scorer.score(dataset.case)) - np.asarray(
        scorer.score(dataset.control)
    )
    if not np.isfinite(delta).all():
        raise NonFiniteScoreError(-1, "scorer returned non-finite values")
    return float(log_sigmoid(delta).sum())


def kl_pop_vs_model(truth, model, dataset: CaseControlDataset) -> float:
    """Plug-in KL estimate: log-PL(truth) - log-PL(model) on the same pairs."""
    return log_partial_likelihood(truth, dataset) - log_partial_likelihood(
        model, dataset
    )


def curve_rmse(estimate, truth_effect) -> float:
    """Root-mean-square gap between the estimated and true curve.

    Both curves are centered to grid-mean zero first: additive shifts are
    not identified by pairwise training, so they must not count as error.
    `estimate` is a GprFit or an (x, y) pair of arrays.
    """
    if isinstance(estimate, GprFit):
        x, y = estimate.grid.x, estimate.mean
    else:
        x, y = estimate
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
    t = np.asarray(truth_effect(x), dtype=np.float64)
    yc = y - y.mean()
    tc = t - t.mean()
    return float(np.sqrt(np.mean((yc - tc) ** 2)))


@dataclass
class ScoreReport:
    log_pl_model: float
    log_pl_population: float | None = None
    kl_pop_model: float | None = None
    curve_rmse: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "log_pl_model": self.log_pl_model,
            "log_pl_population": self.log_pl_population,
            "kl_pop_model": self.kl_pop_model,
            "curve_rmse": {str(k): v for k, v in self.curve_rmse.items()},
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def score_model(model, dataset, truth=None, curves=None, truth_effects=None) -> ScoreReport:
    """Assemble the full report; truth-dependent entries only when available.

    `curves` maps covariate index -> GprFit (or (x, y)); RMSE is reported
    for covariates present in both `curves` and `truth_effects`.
    """
    report = ScoreReport(log_pl_model=log_partial_likelihood(model, dataset))
    if truth is not None:
        report.log_pl_population = log_partial_likelihood(truth, dataset)
        report.kl_pop_model = report.log_pl_population - report.log_pl_model
    if curves and truth_effects is not None:
        for k, est in curves.items():
            if k < len(truth_effects):
                report.curve_rmse[k] = curve_rmse(est, truth_effects[k])
    return report
