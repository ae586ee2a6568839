"""Seeded synthetic cohort generator for desk-scale pipeline testing.

The generator inverts the inference model: ground-truth weights are drawn
per indicator, deprivations follow Bernoulli(sigmoid(weight)), importance
ratings are a noisy affine image of the truth on the 1..5 scale, and
response times come from a lognormal whose median shrinks as confidence
grows. Everything is a pure function of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from .beliefs import LikertElicitation, sigmoid
from .hierarchy import HierarchyConfig, IndicatorVector, default_config
from .phenotyping import TimedLikertResponse

BASE_TIME = datetime(2026, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    n_children: int = 100
    n_respondents: int = 10
    hierarchy: HierarchyConfig = field(default_factory=default_config)
    truth_weight_range: tuple[float, float] = (-2.0, 2.0)
    importance_noise: float = 0.5  # sd of rating noise before rounding
    rt_median_slowest: float = 8.0  # median latency (s) at confidence 1
    rt_median_fastest: float = 1.0  # median latency (s) at confidence 5
    rt_sigma: float = 0.5  # lognormal shape
    response_dropout: float = 0.0  # probability a timed response is missing

    def __post_init__(self):
        if self.n_children < 1:
            raise ValueError(f"n_children must be >= 1, got {self.n_children!r}")
        if self.n_respondents < 1:
            raise ValueError(f"n_respondents must be >= 1, got {self.n_respondents!r}")
        lo, hi = self.truth_weight_range
        if not lo <= hi:
            raise ValueError(f"invalid truth_weight_range {self.truth_weight_range!r}")
        if not 0 <= self.response_dropout < 1:
            raise ValueError(f"response_dropout must be in [0, 1), got {self.response_dropout!r}")


@dataclass(frozen=True)
class SimBundle:
    truth_weights: dict[str, float]
    elicitations: list[LikertElicitation]
    observations: list[IndicatorVector]
    responses: list[TimedLikertResponse]


def _affine_to_scale(w: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Map the truth-weight interval onto the 1..5 rating scale."""
    if hi == lo:
        return np.full_like(w, 3.0)
    return 1.0 + 4.0 * (w - lo) / (hi - lo)


def _rated(base: np.ndarray, noise_sd: float, rng: np.random.Generator) -> np.ndarray:
    noisy = base + (rng.normal(0.0, noise_sd, size=base.shape) if noise_sd > 0 else 0.0)
    return np.clip(np.round(noisy), 1, 5).astype(int)


def generate(cfg: SimConfig) -> SimBundle:
    """Produce a ground-truth bundle; bit-identical for a fixed seed."""
    rng = np.random.default_rng(cfg.seed)
    indicator_ids = cfg.hierarchy.indicator_ids()
    k = len(indicator_ids)
    lo, hi = cfg.truth_weight_range

    truth = rng.uniform(lo, hi, size=k)
    truth_weights = {ind: float(w) for ind, w in zip(indicator_ids, truth)}

    # Deprivations: one Bernoulli(sigmoid(w_j)) draw per child and indicator.
    probs = sigmoid(truth)
    depriv = (rng.random((cfg.n_children, k)) < probs[None, :]).astype(int)
    observations = [
        IndicatorVector(
            child_id=f"child-{c:05d}",
            values={ind: int(depriv[c, j]) for j, ind in enumerate(indicator_ids)},
            observed_at=BASE_TIME + timedelta(seconds=c),
        )
        for c in range(cfg.n_children)
    ]

    base_rating = _affine_to_scale(truth, lo, hi)

    # Importance/confidence elicitations, one per respondent and indicator.
    elicitations: list[LikertElicitation] = []
    confidence = np.empty((cfg.n_respondents, k), dtype=int)
    for r in range(cfg.n_respondents):
        importance = _rated(base_rating, cfg.importance_noise, rng)
        confidence[r] = rng.integers(1, 6, size=k)
        for j, ind in enumerate(indicator_ids):
            elicitations.append(
                LikertElicitation(
                    respondent_id=f"resp-{r:04d}",
                    indicator_id=ind,
                    importance=int(importance[j]),
                    confidence=int(confidence[r, j]),
                )
            )

    # Timed Likert responses; latency medians interpolate geometrically from
    # the slowest (confidence 1) to the fastest (confidence 5).
    responses: list[TimedLikertResponse] = []
    log_slow = np.log(cfg.rt_median_slowest)
    log_fast = np.log(cfg.rt_median_fastest)
    seq = 0
    for r in range(cfg.n_respondents):
        ratings = _rated(base_rating, cfg.importance_noise, rng)
        log_median = log_slow + (confidence[r] - 1) / 4.0 * (log_fast - log_slow)
        times = rng.lognormal(mean=log_median, sigma=cfg.rt_sigma)
        keep = (
            rng.random(k) >= cfg.response_dropout
            if cfg.response_dropout > 0
            else np.ones(k, dtype=bool)
        )
        for j, ind in enumerate(indicator_ids):
            if not keep[j]:
                continue
            ms = max(0, int(round(times[j] * 1000.0)))
            responses.append(
                TimedLikertResponse(
                    respondent_id=f"resp-{r:04d}",
                    indicator_id=ind,
                    rating=int(ratings[j]),
                    response_time=ms / 1000.0,
                    captured_at=BASE_TIME + timedelta(seconds=seq),
                    session_id=f"sim-{r:04d}",
                )
            )
            seq += 1
    return SimBundle(truth_weights, elicitations, observations, responses)
