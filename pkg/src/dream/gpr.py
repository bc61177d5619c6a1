"""Gaussian-process summary of bootstrap curve ensembles.

Bootstrap subnet curves are evaluated on an equidistant grid, centered
per refit (pairwise training identifies each effect only up to an
additive constant), stacked into one observation set, and smoothed with
a GP posterior:

    mu    = K* [K + jitter*I]^-1 y
    Sigma = K** - K* [K + jitter*I]^-1 K*^T

The kernel is exp(-|x - x'| / (2 l^2)): the distance enters unsquared.
That exponential (Ornstein-Uhlenbeck-style) form is the default here;
pass squared=True for the conventional squared-exponential.  The default
jitter is the plain identity.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import FactorizationError, ValidationError

DEFAULT_GRID_N = 100
DEFAULT_LENGTH_SCALE = 0.1
DEFAULT_JITTER = 1.0


@dataclass(frozen=True)
class CurveGrid:
    """Equidistant evaluation points for one covariate."""

    covariate: int
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if len(x) < 2:
            raise ValidationError("grid needs at least 2 points")
        steps = np.diff(x)
        if (steps <= 0).any():
            raise ValidationError("grid must be strictly increasing")
        span = x[-1] - x[0]
        if np.abs(steps - steps[0]).max() > 1e-12 * max(span, 1.0):
            raise ValidationError("grid must be equidistant")
        object.__setattr__(self, "x", x)

    @classmethod
    def build(cls, covariate, x_min, x_max, n=DEFAULT_GRID_N):
        if n < 2:
            raise ValidationError("grid size must be >= 2")
        if not x_max > x_min:
            raise ValidationError("grid needs x_max > x_min")
        return cls(covariate, np.linspace(x_min, x_max, n))

    @property
    def n(self):
        return len(self.x)


@dataclass
class CurveEnsemble:
    """B bootstrap curve evaluations on a common grid, centered per row."""

    grid: CurveGrid
    values: np.ndarray  # (B, N)

    @classmethod
    def from_models(cls, models, covariate, grid: CurveGrid):
        rows = np.stack([m.subnet_curve(covariate, grid.x) for m in models])
        rows = rows - rows.mean(axis=1, keepdims=True)
        return cls(grid, rows)

    @property
    def n_refits(self):
        return self.values.shape[0]


@dataclass
class GprFit:
    grid: CurveGrid
    mean: np.ndarray
    sd: np.ndarray
    cov: np.ndarray
    length_scale: float
    prior_mean: float


def rbf_kernel(xa, xb, length_scale, squared=False):
    """Kernel matrix K[i, j] = exp(-d / (2 l^2)) with d = |xa_i - xb_j|.

    squared=True uses d^2 instead (the conventional form); the unsquared
    distance is the default.
    """
    if length_scale <= 0:
        raise ValidationError("length scale must be positive")
    xa = np.atleast_1d(np.asarray(xa, dtype=np.float64))
    xb = np.atleast_1d(np.asarray(xb, dtype=np.float64))
    d = np.abs(xa[:, None] - xb[None, :])
    if squared:
        d = d * d
    return np.exp(-d / (2.0 * length_scale * length_scale))


def gp_solve(x_obs, y, x_pred, length_scale, jitter=DEFAULT_JITTER,
             squared=False, prior_mean=None):
    """Posterior (mean, cov) at x_pred given observations (x_obs, y).

    The constant prior mean defaults to the observation mean; it is
    removed before the solve and added back to the posterior mean.
    Solves go through a Cholesky factorization of K + jitter*I, never an
    explicit inverse.
    """
    x_obs = np.atleast_1d(np.asarray(x_obs, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x_obs.shape != y.shape or x_obs.size == 0:
        raise ValidationError("observations must be non-empty and aligned")
    m0 = float(y.mean()) if prior_mean is None else float(prior_mean)
    yc = y - m0

    k_oo = rbf_kernel(x_obs, x_obs, length_scale, squared)
    k_oo[np.diag_indices_from(k_oo)] += jitter
    try:
        chol = cho_factor(k_oo, lower=True)
    except np.linalg.LinAlgError as err:
        raise FactorizationError(
            f"kernel factorization failed ({err}); increase the jitter"
        ) from err
    k_po = rbf_kernel(x_pred, x_obs, length_scale, squared)
    mean = k_po @ cho_solve(chol, yc) + m0
    cov = rbf_kernel(x_pred, x_pred, length_scale, squared) - k_po @ cho_solve(
        chol, k_po.T
    )
    return mean, cov


def gpr_posterior(
    ensemble: CurveEnsemble,
    length_scale=DEFAULT_LENGTH_SCALE,
    jitter=DEFAULT_JITTER,
    squared=False,
    prior_mean=None,
) -> GprFit:
    """Posterior over the grid given the stacked (B*N) curve observations."""
    if ensemble.values.size == 0:
        raise ValidationError("empty ensemble")
    grid = ensemble.grid
    x_obs = np.tile(grid.x, ensemble.n_refits)
    mean, cov = gp_solve(x_obs, ensemble.values.reshape(-1), grid.x,
                         length_scale, jitter, squared, prior_mean)
    m0 = (float(ensemble.values.mean()) if prior_mean is None
          else float(prior_mean))
    sd = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return GprFit(grid, mean, sd, cov, float(length_scale), m0)


def confidence_bands(fit: GprFit):
    """(lower, upper) = posterior mean -/+ twice the posterior sd."""
    return fit.mean - 2.0 * fit.sd, fit.mean + 2.0 * fit.sd


def write_curves_csv(path, fit: GprFit, ensemble: CurveEnsemble):
    """`x,mean,lower,upper,b0..b{B-1}`: bands plus each centered refit row."""
    lower, upper = confidence_bands(fit)
    B = ensemble.n_refits
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "mean", "lower", "upper"] + [f"b{i}" for i in range(B)])
        for i in range(fit.grid.n):
            row = [fit.grid.x[i], fit.mean[i], lower[i], upper[i]]
            row += [ensemble.values[b, i] for b in range(B)]
            w.writerow([repr(float(v)) for v in row])


def read_curves_csv(path, covariate=0):
    """Returns (grid, mean, lower, upper, rows) parsed back from the CSV."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or header[:4] != ["x", "mean", "lower", "upper"]:
            raise ValidationError(f"{path}: expected header x,mean,lower,upper,b..")
        B = len(header) - 4
        data = [[float(v) for v in row] for row in rd if row]
    arr = np.array(data)
    grid = CurveGrid(covariate, arr[:, 0])
    return grid, arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4:4 + B].T
