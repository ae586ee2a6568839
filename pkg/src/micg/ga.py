"""Genetic algorithm over flattened network parameters.

Chromosomes are flat gene vectors in canonical order: for each layer, the
row-major weight matrix followed by the bias vector. Fitness is the negative
training loss, so 0 is the attainable maximum. Elitism copies the best
individuals unchanged into the next generation, which makes best-ever
fitness exactly non-decreasing.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .surrogate import FitnessSample, MLPSpec, NetParams, mse_loss

Chromosome = np.ndarray


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 64
    selection: str = "tournament"  # or "roulette"
    tournament_size: int = 3
    crossover_alpha: float | None = None  # None: uniform-random per mating
    mutation_sigma: float = 0.05
    mutation_rate: float = 0.1
    elitism_count: int = 2
    max_generations: int = 500
    stagnation_window: int = 50
    stagnation_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.elitism_count < self.population_size:
            raise ValueError(
                f"need 0 < elitism_count < population_size, got "
                f"{self.elitism_count}/{self.population_size}"
            )
        if self.selection not in ("tournament", "roulette"):
            raise ValueError(f"unknown selection scheme {self.selection!r}")
        if self.crossover_alpha is not None and not 0 <= self.crossover_alpha <= 1:
            raise ValueError(
                f"crossover_alpha must be in [0, 1], got {self.crossover_alpha!r}"
            )
        if self.mutation_sigma <= 0:
            raise ValueError(f"mutation_sigma must be > 0, got {self.mutation_sigma!r}")
        if not 0 <= self.mutation_rate <= 1:
            raise ValueError(f"mutation_rate must be in [0, 1], got {self.mutation_rate!r}")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        if self.stagnation_window < 1:
            raise ValueError("stagnation_window must be >= 1")


@dataclass
class GenerationStats:
    """Per-generation record: best/mean fitness and a snapshot of the best
    chromosome. ``mean_fitness`` averages the finite fitnesses only;
    ``nan_count`` reports how many individuals were quarantined."""

    generation: int
    best_fitness: float
    mean_fitness: float
    best_chromosome: Chromosome
    nan_count: int = 0


def encode(psi: NetParams) -> Chromosome:
    """Flatten parameters: per layer, row-major weights then biases."""
    parts = []
    for W, b in zip(psi.weights, psi.biases):
        parts.append(W.ravel())
        parts.append(b)
    return np.concatenate(parts)


def decode(genes: Chromosome, spec: MLPSpec) -> NetParams:
    """Inverse of :func:`encode`; raises on length mismatch."""
    genes = np.asarray(genes, dtype=float)
    expected = spec.param_count()
    if genes.shape != (expected,):
        raise ValueError(
            f"chromosome length {genes.shape} does not match spec ({expected},)"
        )
    weights, biases = [], []
    pos = 0
    for n_in, n_out in spec.layer_dims():
        weights.append(genes[pos : pos + n_in * n_out].reshape(n_in, n_out))
        pos += n_in * n_out
        biases.append(genes[pos : pos + n_out])
        pos += n_out
    return NetParams(spec, weights, biases)


def evaluate_fitness(
    c: Chromosome, samples: Sequence[FitnessSample], spec: MLPSpec
) -> float:
    """Negative training loss; 0 is the maximum."""
    return -mse_loss(decode(c, spec), samples)


def _tournament_pick(fitnesses: np.ndarray, cfg: GAConfig, rng: np.random.Generator) -> int:
    idx = rng.integers(0, len(fitnesses), size=cfg.tournament_size)
    return min(idx, key=lambda i: (-fitnesses[i], i))


def _roulette_probs(fitnesses: np.ndarray) -> np.ndarray:
    # Fitness is <= 0, so raw proportionality is undefined; weight by rank
    # instead (worst gets 1, best gets n). Ties rank the lower index higher.
    n = len(fitnesses)
    order = sorted(range(n), key=lambda i: (fitnesses[i], -i))
    weights = np.empty(n)
    for rank, i in enumerate(order, start=1):
        weights[i] = rank
    return weights / weights.sum()


def select(
    population: Sequence[Chromosome],
    fitnesses: Sequence[float],
    cfg: GAConfig,
    rng: np.random.Generator,
) -> tuple[Chromosome, Chromosome]:
    """Pick a parent pair by tournament or rank-weighted roulette."""
    if not len(population):
        raise ValueError("population is empty")
    fit = np.asarray(fitnesses, dtype=float)
    if cfg.selection == "tournament":
        i = _tournament_pick(fit, cfg, rng)
        j = _tournament_pick(fit, cfg, rng)
    else:
        probs = _roulette_probs(fit)
        i = int(rng.choice(len(population), p=probs))
        j = int(rng.choice(len(population), p=probs))
    return population[i], population[j]


def crossover(p1: Chromosome, p2: Chromosome, alpha: float) -> Chromosome:
    """Gene-wise convex combination: alpha * p1 + (1 - alpha) * p2."""
    if p1.shape != p2.shape:
        raise ValueError(f"parent lengths differ: {p1.shape} vs {p2.shape}")
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must be in [0, 1], got {alpha!r}")
    return alpha * p1 + (1.0 - alpha) * p2


def mutate(c: Chromosome, cfg: GAConfig, rng: np.random.Generator) -> Chromosome:
    """Each gene independently receives Gaussian noise with probability
    ``mutation_rate``."""
    mask = rng.random(c.shape) < cfg.mutation_rate
    noise = rng.normal(0.0, cfg.mutation_sigma, size=c.shape)
    return c + mask * noise


def _quarantine(value: float) -> float:
    # NaN/inf fitness would poison argmax comparisons; demote to -inf so the
    # individual is never elite.
    return value if math.isfinite(value) else -math.inf


def evolve(
    samples: Sequence[FitnessSample],
    spec: MLPSpec,
    cfg: GAConfig,
    initial_population: list[Chromosome] | None = None,
) -> tuple[NetParams, list[GenerationStats]]:
    """Run the full loop and return the best-ever parameters plus history.

    Each generation: evaluate, copy the ``elitism_count`` best unchanged,
    fill the rest by select -> crossover -> mutate. Stops at
    ``max_generations`` or when best-ever fitness improves by less than
    ``stagnation_epsilon`` over ``stagnation_window`` generations.
    Deterministic for a fixed (seed, config, samples).
    """
    if not samples:
        raise ValueError("evolve needs at least one training sample")
    rng = np.random.default_rng(cfg.seed)
    length = spec.param_count()
    if initial_population is not None:
        population = [np.asarray(c, dtype=float).copy() for c in initial_population]
        if len(population) != cfg.population_size:
            raise ValueError(
                f"initial population size {len(population)} != {cfg.population_size}"
            )
        for c in population:
            if c.shape != (length,):
                raise ValueError(f"chromosome length {c.shape} != ({length},)")
    else:
        population = [
            rng.uniform(-0.5, 0.5, size=length) for _ in range(cfg.population_size)
        ]

    history: list[GenerationStats] = []
    best_ever: Chromosome | None = None
    best_ever_fitness = -math.inf
    best_ever_track: list[float] = []

    for generation in range(cfg.max_generations):
        # overflow to inf/NaN is handled by quarantine, not a warning
        with np.errstate(over="ignore", invalid="ignore"):
            raw = [evaluate_fitness(c, samples, spec) for c in population]
        fitnesses = np.array([_quarantine(f) for f in raw])
        nan_count = int(sum(not math.isfinite(f) for f in raw))
        order = sorted(range(len(population)), key=lambda i: (-fitnesses[i], i))
        gen_best = order[0]
        if fitnesses[gen_best] > best_ever_fitness:
            best_ever_fitness = float(fitnesses[gen_best])
            best_ever = population[gen_best].copy()
        best_ever_track.append(best_ever_fitness)
        finite = fitnesses[np.isfinite(fitnesses)]
        history.append(
            GenerationStats(
                generation=generation,
                best_fitness=float(fitnesses[gen_best]),
                mean_fitness=float(finite.mean()) if finite.size else -math.inf,
                best_chromosome=population[gen_best].copy(),
                nan_count=nan_count,
            )
        )

        if (
            len(best_ever_track) > cfg.stagnation_window
            and best_ever_track[-1] - best_ever_track[-1 - cfg.stagnation_window]
            < cfg.stagnation_epsilon
        ):
            break
        if generation == cfg.max_generations - 1:
            break

        elites = [population[i].copy() for i in order[: cfg.elitism_count]]
        children: list[Chromosome] = []
        while len(elites) + len(children) < cfg.population_size:
            p1, p2 = select(population, fitnesses, cfg, rng)
            alpha = (
                cfg.crossover_alpha
                if cfg.crossover_alpha is not None
                else float(rng.uniform())
            )
            children.append(mutate(crossover(p1, p2, alpha), cfg, rng))
        population = elites + children

    if best_ever is None:  # every individual quarantined in every generation
        best_ever = population[0]
    return decode(best_ever, spec), history


def history_to_csv(history: Sequence[GenerationStats]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["generation", "best_fitness", "mean_fitness", "nan_count"])
    for s in history:
        writer.writerow([s.generation, repr(s.best_fitness), repr(s.mean_fitness), s.nan_count])
    return buf.getvalue()
