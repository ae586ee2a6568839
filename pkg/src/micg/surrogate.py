"""Feed-forward surrogate of the certainty-adjusted posterior fitness.

The target is the product of Gaussian likelihood terms over the adjusted
responses and Gaussian prior terms over the weights. That product underflows
double precision at realistic sizes, so all targets, losses, and network
outputs live in log space; the raw product form is preserved exactly for
tiny diagnostic instances (exp of the log value).

The network is a small tanh MLP with a linear scalar output. It is trained
only by the evolutionary optimizer, never by gradient descent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .beliefs import GaussianBelief
from .phenotyping import AdjustedMatrix


@dataclass(frozen=True)
class MLPSpec:
    """Architecture: tanh hidden layers, identity scalar output."""

    input_dim: int
    hidden_layers: tuple[int, ...] = (16, 16)
    output_dim: int = 1

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim!r}")
        if any(h < 1 for h in self.hidden_layers):
            raise ValueError(f"hidden widths must be >= 1, got {self.hidden_layers!r}")
        if self.output_dim != 1:
            raise ValueError("only scalar output is supported")

    def layer_dims(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) per layer."""
        dims = [self.input_dim, *self.hidden_layers, self.output_dim]
        return list(zip(dims[:-1], dims[1:]))

    def param_count(self) -> int:
        return sum(n_in * n_out + n_out for n_in, n_out in self.layer_dims())


@dataclass
class NetParams:
    """Per-layer weight matrices (fan_in x fan_out) and bias vectors."""

    spec: MLPSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        dims = self.spec.layer_dims()
        if len(self.weights) != len(dims) or len(self.biases) != len(dims):
            raise ValueError("layer count does not match spec")
        for (n_in, n_out), W, b in zip(dims, self.weights, self.biases):
            if W.shape != (n_in, n_out) or b.shape != (n_out,):
                raise ValueError(
                    f"layer shapes {W.shape}/{b.shape} do not match spec ({n_in}, {n_out})"
                )
            if not (np.isfinite(W).all() and np.isfinite(b).all()):
                raise ValueError("parameters must be finite")


def init_params(spec: MLPSpec, rng: np.random.Generator) -> NetParams:
    """Seeded uniform(-0.5, 0.5) initialization for every entry."""
    weights, biases = [], []
    for n_in, n_out in spec.layer_dims():
        weights.append(rng.uniform(-0.5, 0.5, size=(n_in, n_out)))
        biases.append(rng.uniform(-0.5, 0.5, size=n_out))
    return NetParams(spec, weights, biases)


def forward(psi: NetParams, omega) -> float:
    """Evaluate the network on one weight vector."""
    return float(forward_batch(psi, np.asarray(omega, dtype=float)[None, :])[0])


def forward_batch(psi: NetParams, omegas: np.ndarray) -> np.ndarray:
    """Evaluate the network on an N x k batch; returns N predictions."""
    h = np.asarray(omegas, dtype=float)
    if h.ndim != 2 or h.shape[1] != psi.spec.input_dim:
        raise ValueError(
            f"expected batch of shape (N, {psi.spec.input_dim}), got {h.shape}"
        )
    last = len(psi.weights) - 1
    for i, (W, b) in enumerate(zip(psi.weights, psi.biases)):
        h = h @ W + b
        if i != last:
            h = np.tanh(h)
    return h[:, 0]


def gaussian_logpdf(x, mean, var):
    """Log density of N(mean, var) at x; elementwise on arrays."""
    if np.any(np.asarray(var) <= 0):
        raise ValueError(f"variance must be > 0, got {var!r}")
    x = np.asarray(x, dtype=float)
    out = -0.5 * np.log(2.0 * math.pi * np.asarray(var, dtype=float)) - (
        (x - mean) ** 2
    ) / (2.0 * var)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LikelihoodConfig:
    """Likelihood variance and the prior beliefs the fitness combines.

    ``ordered_ids`` fixes the indicator order the weight vector follows
    (lexicographic over the belief keys).
    """

    tau_sq: float
    prior_beliefs: Mapping[str, GaussianBelief]
    ordered_ids: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        if self.tau_sq <= 0:
            raise ValueError(f"tau_sq must be > 0, got {self.tau_sq!r}")
        object.__setattr__(self, "ordered_ids", tuple(sorted(self.prior_beliefs)))

    def prior_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        means = np.array([self.prior_beliefs[i].mean for i in self.ordered_ids])
        variances = np.array([self.prior_beliefs[i].variance for i in self.ordered_ids])
        return means, variances


def true_log_fitness(
    omega, ytilde: AdjustedMatrix | None, cfg: LikelihoodConfig
) -> float:
    """Log of the fitness target: certainty-adjusted likelihood times prior.

    Sums, over every observed cell (i, j), the log density of the adjusted
    response under N(omega_j, tau_sq), plus the log prior density of each
    omega_j under its belief. Missing cells are skipped. ``omega`` follows
    ``cfg.ordered_ids``.
    """
    omega = np.asarray(omega, dtype=float)
    k = len(cfg.ordered_ids)
    if omega.shape != (k,):
        raise ValueError(f"omega must have shape ({k},), got {omega.shape}")
    mu, var = cfg.prior_arrays()
    total = float(np.sum(gaussian_logpdf(omega, mu, var)))
    if ytilde is not None and ytilde.values.size:
        positions = []
        for ind in ytilde.indicator_ids:
            if ind not in cfg.prior_beliefs:
                raise ValueError(f"response matrix has unknown indicator {ind!r}")
            positions.append(cfg.ordered_ids.index(ind))
        col_omega = omega[np.array(positions, dtype=int)]
        mask = ~np.isnan(ytilde.values)
        if mask.any():
            centered = ytilde.values - col_omega[None, :]
            cell_terms = -0.5 * math.log(2.0 * math.pi * cfg.tau_sq) - (
                centered**2
            ) / (2.0 * cfg.tau_sq)
            total += float(cell_terms[mask].sum())
    return total


@dataclass(frozen=True)
class FitnessSample:
    """A weight vector and its log fitness target."""

    omega: np.ndarray
    log_true_fitness: float

    def __post_init__(self):
        if not np.isfinite(self.omega).all():
            raise ValueError("omega entries must be finite")


def mse_loss(psi: NetParams, samples: Sequence[FitnessSample]) -> float:
    """Mean squared error between predictions and log-fitness targets."""
    if not samples:
        raise ValueError("mse_loss needs at least one sample")
    omegas = np.stack([s.omega for s in samples])
    targets = np.array([s.log_true_fitness for s in samples])
    preds = forward_batch(psi, omegas)
    return float(np.mean((preds - targets) ** 2))


def build_training_set(
    rng: np.random.Generator | int,
    ytilde: AdjustedMatrix | None,
    cfg: LikelihoodConfig,
    n_samples: int,
) -> list[FitnessSample]:
    """Draw weight vectors from the prior beliefs and label them with their
    log fitness. Deterministic given the seed."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples!r}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    mu, var = cfg.prior_arrays()
    draws = rng.normal(mu, np.sqrt(var), size=(n_samples, len(mu)))
    return [
        FitnessSample(omega=draws[i], log_true_fitness=true_log_fitness(draws[i], ytilde, cfg))
        for i in range(n_samples)
    ]


def params_to_dict(psi: NetParams) -> dict:
    """JSON-ready form with explicit layer shapes.

    Floats serialize via shortest round-trip decimal (up to 17 significant
    digits), so a dump/load cycle is bit-exact.
    """
    return {
        "spec": {
            "input_dim": psi.spec.input_dim,
            "hidden_layers": list(psi.spec.hidden_layers),
            "output_dim": psi.spec.output_dim,
        },
        "layers": [
            {
                "shape": list(W.shape),
                "weights": W.flatten().tolist(),
                "bias": b.tolist(),
            }
            for W, b in zip(psi.weights, psi.biases)
        ],
    }


def params_from_dict(raw: Mapping) -> NetParams:
    spec = MLPSpec(
        input_dim=raw["spec"]["input_dim"],
        hidden_layers=tuple(raw["spec"]["hidden_layers"]),
        output_dim=raw["spec"].get("output_dim", 1),
    )
    weights, biases = [], []
    for layer in raw["layers"]:
        shape = tuple(layer["shape"])
        weights.append(np.array(layer["weights"], dtype=float).reshape(shape))
        biases.append(np.array(layer["bias"], dtype=float))
    return NetParams(spec, weights, biases)


def params_to_json(psi: NetParams) -> str:
    return json.dumps(params_to_dict(psi), sort_keys=True, separators=(",", ":")) + "\n"


def params_from_json(text: str) -> NetParams:
    return params_from_dict(json.loads(text))
