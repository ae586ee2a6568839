"""Gaussian beliefs over indicator weights learned from Likert elicitations.

Priors come from importance/confidence ratings: the mean importance becomes
the prior mean and the scaled reciprocal of mean confidence becomes the
prior variance. Posteriors are the closed-form Gaussian approximation of the
Bernoulli-likelihood update, applied one indicator at a time; a dense grid
integration serves as a diagnostic oracle for the exact posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .hierarchy import (
    AllWeights,
    HierarchyConfig,
    Level,
    WeightSet,
    equal_weights,
    normalize_weights,
)

WEIGHT_FLOOR = 1e-6


class MissingElicitationError(ValueError):
    """A configured indicator received no elicitations."""


@dataclass(frozen=True)
class LikertElicitation:
    """One respondent's importance and confidence ratings for one indicator.

    Importance runs 1 (not important) to 5 (very important); confidence runs
    1 (very uncertain) to 5 (very certain).
    """

    respondent_id: str
    indicator_id: str
    importance: int
    confidence: int

    def __post_init__(self):
        if self.importance not in (1, 2, 3, 4, 5):
            raise ValueError(f"importance must be in 1..5, got {self.importance!r}")
        if self.confidence not in (1, 2, 3, 4, 5):
            raise ValueError(f"confidence must be in 1..5, got {self.confidence!r}")


@dataclass(frozen=True)
class GaussianBelief:
    """Mean/variance belief over one indicator weight."""

    indicator_id: str
    mean: float
    variance: float

    def __post_init__(self):
        if not (math.isfinite(self.variance) and self.variance > 0):
            raise ValueError(
                f"variance must be positive and finite, got {self.variance!r}"
            )
        if not math.isfinite(self.mean):
            raise ValueError(f"mean must be finite, got {self.mean!r}")


@dataclass(frozen=True)
class PriorConfig:
    """``alpha_prior`` scales confidence into variance:
    variance = alpha_prior / mean confidence."""

    alpha_prior: float = 1.0

    def __post_init__(self):
        if self.alpha_prior <= 0:
            raise ValueError(f"alpha_prior must be > 0, got {self.alpha_prior!r}")


def elicit_prior(
    elicitations: Iterable[LikertElicitation],
    cfg: PriorConfig,
    indicator_ids: Sequence[str] | None = None,
) -> dict[str, GaussianBelief]:
    """Build one Gaussian prior per indicator from Likert elicitations.

    Mean = arithmetic mean of the importance ratings; variance =
    ``alpha_prior`` divided by the arithmetic mean of the confidence ratings.
    When ``indicator_ids`` is given, every listed indicator must have at
    least one elicitation.
    """
    by_indicator: dict[str, list[LikertElicitation]] = {}
    for e in elicitations:
        by_indicator.setdefault(e.indicator_id, []).append(e)
    if indicator_ids is not None:
        missing = [i for i in indicator_ids if i not in by_indicator]
        if missing:
            raise MissingElicitationError(
                f"no elicitations for indicators: {missing}"
            )
        keys: Iterable[str] = indicator_ids
    else:
        keys = sorted(by_indicator)
    priors: dict[str, GaussianBelief] = {}
    for ind in keys:
        group = by_indicator[ind]
        mean_importance = sum(e.importance for e in group) / len(group)
        mean_confidence = sum(e.confidence for e in group) / len(group)
        priors[ind] = GaussianBelief(
            indicator_id=ind,
            mean=mean_importance,
            variance=cfg.alpha_prior / mean_confidence,
        )
    return priors


def sigmoid(w):
    """Numerically stable logistic function, elementwise on arrays.

    Stable for |w| up to at least 700: the exponential is only ever taken
    of a non-positive argument.
    """
    arr = np.asarray(w, dtype=float)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ew = np.exp(arr[~pos])
    out[~pos] = ew / (1.0 + ew)
    if np.isscalar(w) or getattr(w, "ndim", 1) == 0:
        return float(out)
    return out


def _check_binary(values: np.ndarray) -> None:
    if values.size and not np.isin(values, (0, 1)).all():
        raise ValueError("observations must be binary (0 or 1)")


def bernoulli_loglik(X, w) -> float:
    """Log-likelihood of a binary observation matrix under per-indicator
    Bernoulli(sigmoid(w_j)) models, independent across children.

    ``X`` is n x k with entries in {0, 1}; ``w`` has length k.
    """
    X = np.asarray(X, dtype=float)
    w = np.asarray(w, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
    if w.ndim != 1 or X.shape[1] != w.shape[0]:
        raise ValueError(
            f"weight vector of length {w.shape} does not match X columns {X.shape}"
        )
    _check_binary(X)
    n = X.shape[0]
    ones = X.sum(axis=0)
    # log sigma(w) and log(1 - sigma(w)) without overflow
    log_sig = -np.logaddexp(0.0, -w)
    log_one_minus = -np.logaddexp(0.0, w)
    return float(np.dot(ones, log_sig) + np.dot(n - ones, log_one_minus))


def posterior_update(prior: GaussianBelief, column) -> GaussianBelief:
    """One-shot Gaussian approximation of the Bernoulli-likelihood posterior
    for a single indicator.

    With prior (mu, var) and binary observations x_1..x_n:

        mu'  = (var * sum(x_i - sigmoid(mu)) + mu * var) / (sum(x_i^2) + var)
        var' = 1 / (1/var + sum(x_i^2))

    The sigmoid is evaluated at the prior mean, and sum(x_i^2) = sum(x_i)
    for binary data. An empty column returns the prior unchanged.
    """
    col = np.asarray(column, dtype=float)
    if col.ndim != 1:
        raise ValueError(f"column must be 1-dimensional, got shape {col.shape}")
    _check_binary(col)
    if col.size == 0:
        return prior
    n = col.size
    sum_x = float(col.sum())
    sum_x_sq = sum_x  # binary data
    mu, var = prior.mean, prior.variance
    new_mean = (var * (sum_x - n * sigmoid(mu)) + mu * var) / (sum_x_sq + var)
    # 1/(1/var + 0) is exactly var; skip the double reciprocal that would
    # round it one ulp upward.
    new_var = var if sum_x_sq == 0 else 1.0 / (1.0 / var + sum_x_sq)
    return GaussianBelief(prior.indicator_id, new_mean, new_var)


def grid_posterior_oracle(
    prior: GaussianBelief,
    column,
    n_points: int = 10001,
    span: float = 10.0,
) -> GaussianBelief:
    """Moment-matched exact posterior, by dense numerical integration.

    Integrates Bernoulli-likelihood x Gaussian-prior over a grid spanning
    ``span`` prior standard deviations each side of the prior mean. Used to
    report how far the closed-form update drifts from the exact posterior,
    never to assert the closed form is exact.
    """
    col = np.asarray(column, dtype=float)
    _check_binary(col)
    if n_points < 3:
        raise ValueError("grid needs at least 3 points")
    sd = math.sqrt(prior.variance)
    grid = np.linspace(prior.mean - span * sd, prior.mean + span * sd, n_points)
    sum_x = float(col.sum())
    n = col.size
    log_lik = -sum_x * np.logaddexp(0.0, -grid) - (n - sum_x) * np.logaddexp(0.0, grid)
    log_prior = -0.5 * np.log(2.0 * math.pi * prior.variance) - (
        (grid - prior.mean) ** 2
    ) / (2.0 * prior.variance)
    log_post = log_lik + log_prior
    log_post -= log_post.max()  # keep exp() in range
    density = np.exp(log_post)
    mass = np.trapezoid(density, grid)
    mean = np.trapezoid(grid * density, grid) / mass
    variance = np.trapezoid((grid - mean) ** 2 * density, grid) / mass
    return GaussianBelief(prior.indicator_id, float(mean), float(variance))


def divergence_report(prior: GaussianBelief, column) -> dict:
    """Compare the closed-form update with the grid oracle on one column.

    Returns the two posteriors and the absolute moment differences; purely
    diagnostic.
    """
    approx = posterior_update(prior, column)
    oracle = grid_posterior_oracle(prior, column)
    return {
        "indicator_id": prior.indicator_id,
        "n_observations": int(np.asarray(column).size),
        "approx_mean": approx.mean,
        "approx_variance": approx.variance,
        "oracle_mean": oracle.mean,
        "oracle_variance": oracle.variance,
        "mean_abs_diff": abs(approx.mean - oracle.mean),
        "variance_abs_diff": abs(approx.variance - oracle.variance),
    }


def beliefs_to_weights(
    beliefs: Mapping[str, GaussianBelief], config: HierarchyConfig
) -> WeightSet:
    """Turn belief means into normalized indicator weights.

    Raw weight = max(mean, 1e-6), then per-construct normalization; the
    floor keeps groups away from the all-zero degenerate case.
    """
    missing = [i for i in config.indicator_ids() if i not in beliefs]
    if missing:
        raise ValueError(f"no belief for indicators: {missing}")
    raw = {i: max(beliefs[i].mean, WEIGHT_FLOOR) for i in config.indicator_ids()}
    return normalize_weights(raw, config.constructs, Level.INDICATOR)


def assemble_all_weights(
    beliefs: Mapping[str, GaussianBelief], config: HierarchyConfig
) -> AllWeights:
    """Learned indicator weights, equal weights at the higher levels, and the
    configured overall weights."""
    return AllWeights(
        indicator=beliefs_to_weights(beliefs, config),
        construct=equal_weights(config, Level.CONSTRUCT),
        broad=equal_weights(config, Level.BROAD),
        overarching=normalize_weights(
            config.overall_weights,
            config.groups_at(Level.OVERARCHING),
            Level.OVERARCHING,
        ),
    )


def beliefs_to_dict(beliefs: Mapping[str, GaussianBelief], wave: int = 0) -> dict:
    """JSON-ready persistence form: belief map plus a wave counter."""
    return {
        "wave": wave,
        "beliefs": {
            ind: {"mean": b.mean, "variance": b.variance}
            for ind, b in sorted(beliefs.items())
        },
    }


def beliefs_from_dict(raw: Mapping) -> tuple[dict[str, GaussianBelief], int]:
    beliefs = {
        ind: GaussianBelief(ind, entry["mean"], entry["variance"])
        for ind, entry in raw["beliefs"].items()
    }
    return beliefs, int(raw.get("wave", 0))
