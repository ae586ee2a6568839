"""Command-line front door: one command per pipeline stage.

Every command prints exactly one machine-readable JSON summary line to
stdout and human-readable diagnostics to stderr. Exit codes are stable:
0 success, 1 validation failure, 2 runtime error, 3 missing upstream
artifact. Commands are pure functions of (inputs, flags, seed): identical
invocations produce byte-identical outputs.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import formats
from .beliefs import (
    MissingElicitationError,
    PriorConfig,
    assemble_all_weights,
    divergence_report,
    elicit_prior,
    posterior_update,
)
from .config import SystemConfig, load_system_config
from .ga import GAConfig, evolve, history_to_csv
from .hierarchy import (
    compute_micg,
    load_config,
    reports_to_csv,
    validate_hierarchy,
)
from .phenotyping import adjust_batch
from .simulate import SimConfig, generate
from .surrogate import LikelihoodConfig, MLPSpec, build_training_set, params_to_dict

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_PRECONDITION = 3


def _summary(**fields) -> None:
    click.echo(json.dumps(fields, sort_keys=True, separators=(",", ":")))


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_cfg(config_path: str | None) -> SystemConfig:
    try:
        return load_system_config(config_path)
    except FileNotFoundError as exc:
        _fail(EXIT_PRECONDITION, f"config file not found: {exc}")
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        _fail(EXIT_VALIDATION, f"bad config file: {exc}")


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        _fail(EXIT_PRECONDITION, f"missing input file: {path}")
    return p


config_option = click.option(
    "--config", "config_path", default=None, help="System config JSON (or $MICG_CONFIG)."
)


@click.group()
def main():
    """Child growth index pipeline."""


@main.command("validate-config")
@config_option
@click.option("--in", "hierarchy_path", default=None, help="Hierarchy JSON to validate.")
def validate_config(config_path, hierarchy_path):
    """Validate a hierarchy configuration (shipped default if none given)."""
    cfg = _load_cfg(config_path)
    try:
        hierarchy = load_config(hierarchy_path) if hierarchy_path else cfg.hierarchy()
    except FileNotFoundError:
        _fail(EXIT_PRECONDITION, f"missing input file: {hierarchy_path}")
    except (json.JSONDecodeError, KeyError) as exc:
        _fail(EXIT_VALIDATION, f"unparseable hierarchy config: {exc!r}")
    violations = validate_hierarchy(hierarchy)
    _summary(
        command="validate-config",
        ok=not violations,
        violations=violations,
        indicators=len(hierarchy.indicators),
    )
    if violations:
        for v in violations:
            click.echo(f"violation: {v}", err=True)
        sys.exit(EXIT_VALIDATION)


@main.command()
@config_option
@click.option("--seed", type=int, default=None, help="Overrides the config seed.")
@click.option("--children", type=int, default=100)
@click.option("--respondents", type=int, default=10)
@click.option("--dropout", type=float, default=0.0)
@click.option("--out", "out_dir", required=True, type=click.Path())
def simulate(config_path, seed, children, respondents, dropout, out_dir):
    """Generate a synthetic cohort bundle."""
    cfg = _load_cfg(config_path)
    try:
        sim = SimConfig(
            seed=seed if seed is not None else cfg.seed,
            n_children=children,
            n_respondents=respondents,
            hierarchy=cfg.hierarchy(),
            response_dropout=dropout,
        )
    except ValueError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    bundle = generate(sim)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_json(out / "truth_weights.json", bundle.truth_weights)
    formats.write_elicitations_json(out / "elicitations.json", bundle.elicitations)
    formats.write_elicitations_csv(out / "elicitations.csv", bundle.elicitations)
    formats.write_observations_jsonl(out / "observations.jsonl", bundle.observations)
    formats.write_responses_jsonl(out / "responses.jsonl", bundle.responses)
    _summary(
        command="simulate",
        ok=True,
        seed=sim.seed,
        children=children,
        respondents=respondents,
        elicitations=len(bundle.elicitations),
        responses=len(bundle.responses),
        out=str(out),
    )


@main.command("elicit-prior")
@config_option
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def elicit_prior_cmd(config_path, in_path, out_path):
    """Build Gaussian priors from an elicitation file (JSON or CSV)."""
    cfg = _load_cfg(config_path)
    path = _require_file(in_path)
    try:
        elicitations = formats.load_elicitations(path)
        priors = elicit_prior(
            elicitations,
            PriorConfig(alpha_prior=cfg.alpha_prior),
            indicator_ids=cfg.hierarchy().indicator_ids(),
        )
    except MissingElicitationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        _fail(EXIT_VALIDATION, f"bad elicitation file: {exc}")
    formats.write_beliefs(out_path, priors, wave=0)
    _summary(
        command="elicit-prior",
        ok=True,
        indicators=len(priors),
        elicitations=len(elicitations),
        out=str(out_path),
    )


@main.command("adjust-responses")
@config_option
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def adjust_responses(config_path, in_path, out_path):
    """Turn timed responses into the certainty-adjusted matrix."""
    cfg = _load_cfg(config_path)
    path = _require_file(in_path)
    try:
        responses = formats.load_responses_jsonl(path)
        matrix = adjust_batch(responses, cfg.certainty())
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        _fail(EXIT_VALIDATION, f"bad responses file: {exc}")
    formats.write_json(out_path, matrix.to_dict())
    _summary(
        command="adjust-responses",
        ok=True,
        respondents=len(matrix.respondent_ids),
        indicators=len(matrix.indicator_ids),
        out=str(out_path),
    )


@main.command("update-posterior")
@config_option
@click.option("--beliefs", "beliefs_path", required=True, type=click.Path())
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def update_posterior(config_path, beliefs_path, in_path, out_path):
    """Update beliefs with binary observations (one survey wave)."""
    _load_cfg(config_path)
    beliefs_file = _require_file(beliefs_path)
    obs_file = _require_file(in_path)
    try:
        beliefs, wave = formats.load_beliefs(beliefs_file)
        observations = formats.load_observations_jsonl(obs_file)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        _fail(EXIT_VALIDATION, f"bad input file: {exc}")
    divergences = []
    if observations:
        updated = {}
        for ind, prior in beliefs.items():
            column = [x.values[ind] for x in observations if ind in x.values]
            updated[ind] = posterior_update(prior, column)
            if column:
                divergences.append(divergence_report(prior, column))
        beliefs, wave = updated, wave + 1
    formats.write_beliefs(out_path, beliefs, wave=wave)
    _summary(
        command="update-posterior",
        ok=True,
        wave=wave,
        observations=len(observations),
        max_divergence_mean=max((d["mean_abs_diff"] for d in divergences), default=0.0),
        max_divergence_variance=max(
            (d["variance_abs_diff"] for d in divergences), default=0.0
        ),
        out=str(out_path),
    )


@main.command("train-fitness")
@config_option
@click.option("--seed", type=int, default=None, help="Overrides the config seed.")
@click.option("--beliefs", "beliefs_path", required=True, type=click.Path())
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
def train_fitness(config_path, seed, beliefs_path, in_path, out_dir):
    """Fit the surrogate network with the genetic algorithm."""
    cfg = _load_cfg(config_path)
    beliefs_file = _require_file(beliefs_path)
    responses_file = _require_file(in_path)
    try:
        beliefs, _ = formats.load_beliefs(beliefs_file)
        responses = formats.load_responses_jsonl(responses_file)
        ytilde = adjust_batch(responses, cfg.certainty())
        likelihood = LikelihoodConfig(tau_sq=cfg.tau_sq, prior_beliefs=beliefs)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        _fail(EXIT_VALIDATION, f"bad input file: {exc}")
    run_seed = seed if seed is not None else cfg.seed
    samples = build_training_set(run_seed, ytilde, likelihood, cfg.training_samples)
    spec = MLPSpec(
        input_dim=len(likelihood.ordered_ids), hidden_layers=tuple(cfg.hidden_layers)
    )
    ga_cfg = GAConfig(**{**cfg.ga.__dict__, "seed": run_seed})
    best, history = evolve(samples, spec, ga_cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_json(out / "net_params.json", params_to_dict(best))
    (out / "ga_history.csv").write_text(history_to_csv(history), encoding="utf-8")
    _summary(
        command="train-fitness",
        ok=True,
        seed=run_seed,
        generations=len(history),
        best_fitness=history[-1].best_fitness,
        final_loss=-max(s.best_fitness for s in history),
        nan_total=sum(s.nan_count for s in history),
        out=str(out),
    )


@main.command("compute-index")
@config_option
@click.option("--beliefs", "beliefs_path", required=True, type=click.Path())
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
def compute_index(config_path, beliefs_path, in_path, out_dir):
    """Compute one index report per child from observations and beliefs."""
    cfg = _load_cfg(config_path)
    beliefs_file = _require_file(beliefs_path)
    obs_file = _require_file(in_path)
    hierarchy = cfg.hierarchy()
    try:
        beliefs, _ = formats.load_beliefs(beliefs_file)
        observations = formats.load_observations_jsonl(obs_file)
        if not observations:
            _fail(EXIT_VALIDATION, "observations file is empty")
        weights = assemble_all_weights(beliefs, hierarchy)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        _fail(EXIT_VALIDATION, f"bad input file: {exc}")
    # deterministic timestamp: the newest observation in the input
    computed_at = max(x.observed_at for x in observations)
    latest = {}
    for i, x in enumerate(observations):
        key = (x.observed_at, i)
        if x.child_id not in latest or key > latest[x.child_id][0]:
            latest[x.child_id] = (key, x)
    try:
        reports = [
            compute_micg(x, weights, hierarchy, computed_at=computed_at)
            for _, (_, x) in sorted(latest.items())
        ]
    except ValueError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_reports_json(out / "reports.json", reports)
    (out / "reports.csv").write_text(
        reports_to_csv(reports, hierarchy), encoding="utf-8"
    )
    _summary(command="compute-index", ok=True, children=len(reports), out=str(out))


@main.command("export-report")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv")
@click.option("--child", "child_id", default=None)
@config_option
def export_report(in_path, out_path, fmt, child_id, config_path):
    """Re-export computed reports as JSON or flat CSV."""
    cfg = _load_cfg(config_path)
    path = _require_file(in_path)
    try:
        reports = formats.load_reports_json(path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        _fail(EXIT_VALIDATION, f"bad reports file: {exc}")
    if child_id is not None:
        reports = [r for r in reports if r.child_id == child_id]
        if not reports:
            _fail(EXIT_VALIDATION, f"no report for child {child_id!r}")
    if fmt == "json":
        formats.write_reports_json(out_path, reports)
    else:
        Path(out_path).write_text(
            reports_to_csv(reports, cfg.hierarchy()), encoding="utf-8"
        )
    _summary(
        command="export-report", ok=True, children=len(reports),
        format=fmt, out=str(out_path),
    )


@main.command()
@config_option
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    cfg = _load_cfg(config_path)
    app = create_app(cfg)
    uvicorn.run(app, host=host or cfg.host, port=port or cfg.port)


if __name__ == "__main__":
    main()
