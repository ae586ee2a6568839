"""Acceptance suite: one test per release criterion, at pinned tolerances.

Each test prints a single ``ACCEPTANCE <name>: PASS`` line once its
assertions hold (run with ``pytest tests/test_acceptance.py -v -s`` to see
them); a failing criterion shows up as an ordinary pytest failure.
"""

import json
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from micg.beliefs import (
    GaussianBelief,
    LikertElicitation,
    PriorConfig,
    assemble_all_weights,
    divergence_report,
    elicit_prior,
    grid_posterior_oracle,
    posterior_update,
)
from micg.cli import main as cli_main
from micg.config import SystemConfig
from micg.formats import (
    load_beliefs,
    load_observations_jsonl,
    load_reports_json,
    load_responses_jsonl,
    write_json,
)
from micg.ga import GAConfig, evolve
from micg.hierarchy import (
    AllWeights,
    IndicatorVector,
    compute_micg,
    validate_weight_set,
)
from micg.phenotyping import AdjustedMatrix, CertaintyConfig, certainty_score
from micg.service import QUESTIONNAIRE_ID, create_app
from micg.simulate import SimConfig, generate
from micg.surrogate import (
    FitnessSample,
    LikelihoodConfig,
    MLPSpec,
    NetParams,
    forward,
    true_log_fitness,
)
from .conftest import TS
from .oracles import rank_correlation, rational_micg
from .test_hierarchy import random_instance


def ok(name, **diagnostics):
    extra = " ".join(f"{k}={v}" for k, v in diagnostics.items())
    print(f"\nACCEPTANCE {name}: PASS" + (f" ({extra})" if extra else ""))


def test_c01_aggregation_oracle(config):
    rng = np.random.default_rng(20260101)
    tol = Fraction(1, 10**12)
    started = time.perf_counter()
    for _ in range(100):
        x, weights = random_instance(config, rng)
        report = compute_micg(x, weights, config)
        d, g, h, overall = rational_micg(x, weights, config)
        for cid, score in report.construct_scores.items():
            assert abs(Fraction(score) - d[cid]) < tol
        for gid, score in report.broad_scores.items():
            assert abs(Fraction(score) - g[gid]) < tol
        for hid, score in report.overarching_scores.items():
            assert abs(Fraction(score) - h[hid]) < tol
        assert abs(Fraction(report.overall) - overall) < tol
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"oracle comparison took {elapsed:.3f}s"
    ok("aggregation-oracle", instances=100, seconds=f"{elapsed:.3f}")


def test_c02_boundary_identities(config):
    weights = AllWeights.equal(config)
    ids = config.indicator_ids()
    all_deprived = compute_micg(IndicatorVector("hi", {i: 1 for i in ids}, TS), weights, config)
    none_deprived = compute_micg(IndicatorVector("lo", {i: 0 for i in ids}, TS), weights, config)
    for report, expected in ((all_deprived, 1.0), (none_deprived, 0.0)):
        assert report.overall == expected
        for scores in (
            report.construct_scores,
            report.broad_scores,
            report.overarching_scores,
        ):
            assert all(v == expected for v in scores.values())
    ok("boundary-identities")


def test_c03_prior_formulas():
    # (importances, confidences, alpha) -> hand-computed (mean, variance)
    cases = [
        ((5, 5), (5, 5), 1.0, 5.0, 0.2),
        ((1, 1, 1), (1, 1, 1), 1.0, 1.0, 1.0),
        ((1, 5), (1, 5), 2.0, 3.0, 2.0 / 3.0),
        ((1, 2, 3), (1, 2), 3.0, 2.0, 2.0),
        ((2, 4), (4, 4), 1.0, 3.0, 0.25),
        ((3,), (2,), 1.0, 3.0, 0.5),
        ((1, 1, 5, 5), (5, 5, 5, 5), 1.0, 3.0, 0.2),
        ((4, 4, 4, 4), (1, 3), 4.0, 4.0, 2.0),
        ((2, 3), (2, 2, 2, 2), 0.5, 2.5, 0.25),
        ((5, 4, 3, 2), (4, 2), 6.0, 3.5, 2.0),
    ]
    for i, (imps, confs, alpha, want_mean, want_var) in enumerate(cases):
        rows = [
            LikertElicitation(f"r{j}", "x", imp, 3) for j, imp in enumerate(imps)
        ] + [
            LikertElicitation(f"s{j}", "y", 3, conf) for j, conf in enumerate(confs)
        ]
        priors = elicit_prior(rows, PriorConfig(alpha_prior=alpha))
        assert priors["x"].mean == want_mean, f"case {i} mean"
        assert priors["y"].variance == want_var, f"case {i} variance"
    ok("prior-formulas", cases=len(cases))


def test_c04_posterior_identity_and_shrinkage():
    prior = GaussianBelief("a", 0.7182818, 1.2345)
    identity = posterior_update(prior, [])
    assert identity.mean == prior.mean and identity.variance == prior.variance

    rng = np.random.default_rng(4)
    for _ in range(1000):
        p = GaussianBelief("a", float(rng.normal()), float(rng.uniform(0.01, 5)))
        column = rng.integers(0, 2, size=int(rng.integers(0, 40)))
        assert posterior_update(p, column).variance <= p.variance

    worked = posterior_update(GaussianBelief("a", 0.0, 1.0), [1, 1, 0])
    assert abs(worked.mean - 1.0 / 6.0) < 1e-12
    assert abs(worked.variance - 1.0 / 3.0) < 1e-12
    ok("posterior-identity-shrinkage", random_cases=1000)


def test_c05_grid_oracle_diagnostic():
    prior = GaussianBelief("a", 1.1, 0.8)
    empty = grid_posterior_oracle(prior, [])
    assert abs(empty.mean - prior.mean) < 1e-6
    assert abs(empty.variance - prior.variance) < 1e-6

    # the divergence for n > 0 is reported, never bounded
    lines = []
    for column in ([1], [1, 1, 0], [0] * 10, [1] * 10 + [0] * 5):
        d = divergence_report(GaussianBelief("a", 0.0, 1.0), column)
        assert math.isfinite(d["mean_abs_diff"]) and math.isfinite(d["variance_abs_diff"])
        lines.append(
            f"n={d['n_observations']}: |dmean|={d['mean_abs_diff']:.4f} "
            f"|dvar|={d['variance_abs_diff']:.4f}"
        )
    ok("grid-oracle-diagnostic", divergence="; ".join(lines))


def test_c06_certainty_curve():
    cfg = CertaintyConfig(alpha_certainty=1.0, t_cap=120.0)
    assert certainty_score(0.0, cfg) == 1.0
    assert certainty_score(1.0, cfg) == 0.5
    grid = np.linspace(0.0, 120.0, 1000)
    scores = [certainty_score(float(t), cfg) for t in grid]
    assert all(a > b for a, b in zip(scores, scores[1:]))
    ok("certainty-curve", grid_points=1000)


def test_c07_true_fitness_product_equivalence():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(100):
        k = int(rng.integers(1, 4))
        n = int(rng.integers(0, 4))
        ids = [f"i{j}" for j in range(k)]
        beliefs = {
            i: GaussianBelief(i, float(rng.normal()), float(rng.uniform(0.2, 2)))
            for i in ids
        }
        tau_sq = float(rng.uniform(0.3, 2.0))
        cfg = LikelihoodConfig(tau_sq=tau_sq, prior_beliefs=beliefs)
        omega = rng.normal(size=k)
        y = rng.uniform(0.2, 5.0, size=(n, k))
        matrix = AdjustedMatrix(
            respondent_ids=tuple(f"r{i}" for i in range(n)),
            indicator_ids=tuple(ids),
            values=y,
        )

        def pdf(x, mean, var):
            return math.exp(-((x - mean) ** 2) / (2 * var)) / math.sqrt(
                2 * math.pi * var
            )

        naive = 1.0
        for i in range(n):
            for j, ind in enumerate(cfg.ordered_ids):
                col = ids.index(ind)
                naive *= pdf(y[i, col], omega[j], tau_sq)
        for j, ind in enumerate(cfg.ordered_ids):
            naive *= pdf(omega[j], beliefs[ind].mean, beliefs[ind].variance)

        got = math.exp(true_log_fitness(omega, matrix if n else None, cfg))
        assert got == pytest.approx(naive, rel=1e-10)
        checked += 1
    assert checked == 100
    ok("true-fitness-product", instances=checked)


def test_c08_network_forward_oracle():
    spec = MLPSpec(input_dim=2, hidden_layers=(3,))
    W1 = np.array([[0.2, -0.4, 0.6], [-0.1, 0.3, 0.5]])
    b1 = np.array([0.05, -0.15, 0.25])
    W2 = np.array([[1.1], [-1.3], [0.7]])
    b2 = np.array([-0.2])
    psi = NetParams(spec, [W1, W2], [b1, b2])
    x = (0.8, -0.6)
    hidden = [
        math.tanh(0.2 * 0.8 + -0.1 * -0.6 + 0.05),
        math.tanh(-0.4 * 0.8 + 0.3 * -0.6 - 0.15),
        math.tanh(0.6 * 0.8 + 0.5 * -0.6 + 0.25),
    ]
    manual = 1.1 * hidden[0] - 1.3 * hidden[1] + 0.7 * hidden[2] - 0.2
    assert abs(forward(psi, np.array(x)) - manual) < 1e-12
    ok("network-forward-oracle")


def test_c09_ga_monotonicity():
    rng = np.random.default_rng(99)
    for run in range(20):
        truth = rng.normal(size=2)
        samples = [
            FitnessSample(v, float(np.dot(truth, v)))
            for v in rng.normal(size=(12, 2))
        ]
        cfg = GAConfig(
            population_size=10,
            elitism_count=1,
            max_generations=25,
            stagnation_window=30,
            seed=run,
        )
        _, history = evolve(samples, MLPSpec(input_dim=2, hidden_layers=()), cfg)
        best_ever = -math.inf
        track = []
        for s in history:
            best_ever = max(best_ever, s.best_fitness)
            track.append(best_ever)
        assert all(b2 >= b1 for b1, b2 in zip(track, track[1:]))
        # elitism makes even the per-generation best exactly monotone
        bests = [s.best_fitness for s in history]
        assert all(b2 >= b1 for b1, b2 in zip(bests, bests[1:]))
    ok("ga-monotonicity", runs=20)


def test_c10_ga_convergence_regression():
    truth_w = np.array([0.5, -0.3, 0.2])
    rng = np.random.default_rng(10)
    samples = [
        FitnessSample(v, float(np.dot(truth_w, v) + 0.1))
        for v in rng.normal(size=(50, 3))
    ]
    cfg = GAConfig(population_size=64, elitism_count=2, max_generations=500, seed=7)
    started = time.perf_counter()
    _, history = evolve(samples, MLPSpec(input_dim=3, hidden_layers=()), cfg)
    elapsed = time.perf_counter() - started
    gen0_loss = -history[0].best_fitness
    final_loss = -max(s.best_fitness for s in history)
    assert final_loss <= 0.1 * gen0_loss, (
        f"final loss {final_loss:.6f} vs generation-0 best {gen0_loss:.6f}"
    )
    assert elapsed < 60.0
    ok(
        "ga-convergence-regression",
        generations=len(history),
        loss_ratio=f"{final_loss / gen0_loss:.4f}",
        seconds=f"{elapsed:.2f}",
    )


def _run_cli_pipeline(runner, base: Path, cfg_path: str, seed: int):
    sim = base / "sim"
    steps = [
        ["simulate", "--out", str(sim), "--seed", str(seed),
         "--children", "200", "--respondents", "10", "--config", cfg_path],
        ["elicit-prior", "--in", str(sim / "elicitations.json"),
         "--out", str(base / "priors.json"), "--config", cfg_path],
        ["adjust-responses", "--in", str(sim / "responses.jsonl"),
         "--out", str(base / "adjusted.json"), "--config", cfg_path],
        ["update-posterior", "--beliefs", str(base / "priors.json"),
         "--in", str(sim / "observations.jsonl"),
         "--out", str(base / "posterior.json"), "--config", cfg_path],
        ["train-fitness", "--beliefs", str(base / "posterior.json"),
         "--in", str(sim / "responses.jsonl"), "--out", str(base / "model"),
         "--seed", str(seed), "--config", cfg_path],
        ["compute-index", "--beliefs", str(base / "posterior.json"),
         "--in", str(sim / "observations.jsonl"),
         "--out", str(base / "reports"), "--config", cfg_path],
    ]
    for step in steps:
        result = runner.invoke(cli_main, step, catch_exceptions=False)
        assert result.exit_code == 0, f"{step[0]} failed: {result.output}"


def test_c11_end_to_end_determinism(tmp_path, config):
    cfg_path = tmp_path / "system.json"
    write_json(
        cfg_path,
        {
            "training_samples": 64,
            "hidden_layers": [8, 8],
            "ga": {
                "population_size": 32,
                "elitism_count": 2,
                "max_generations": 60,
                "stagnation_window": 25,
                "seed": 0,
            },
        },
    )
    runner = CliRunner()
    started = time.perf_counter()
    one, two = tmp_path / "one", tmp_path / "two"
    _run_cli_pipeline(runner, one, str(cfg_path), seed=2026)
    _run_cli_pipeline(runner, two, str(cfg_path), seed=2026)
    elapsed = time.perf_counter() - started
    assert elapsed < 300.0

    artifacts = [
        "sim/truth_weights.json",
        "sim/elicitations.json",
        "sim/elicitations.csv",
        "sim/observations.jsonl",
        "sim/responses.jsonl",
        "priors.json",
        "adjusted.json",
        "posterior.json",
        "model/net_params.json",
        "model/ga_history.csv",
        "reports/reports.json",
        "reports/reports.csv",
    ]
    for name in artifacts:
        assert (one / name).read_bytes() == (two / name).read_bytes(), name

    # intermediate artifacts satisfy their module invariants
    observations = load_observations_jsonl(one / "sim" / "observations.jsonl")
    assert len(observations) == 200
    assert all(set(x.values) == set(config.indicator_ids()) for x in observations)
    responses = load_responses_jsonl(one / "sim" / "responses.jsonl")
    assert all(r.response_time >= 0 and 1 <= r.rating <= 5 for r in responses)
    priors, wave0 = load_beliefs(one / "priors.json")
    posterior, wave1 = load_beliefs(one / "posterior.json")
    assert wave0 == 0 and wave1 == 1
    assert all(b.variance > 0 for b in priors.values())
    assert all(
        posterior[i].variance <= priors[i].variance for i in priors
    )
    matrix = AdjustedMatrix.from_dict(
        json.loads((one / "adjusted.json").read_text())
    )
    observed = matrix.values[~np.isnan(matrix.values)]
    assert ((observed > 0) & (observed <= 5)).all()
    weights = assemble_all_weights(posterior, config)
    weights.validate(config)
    reports = load_reports_json(one / "reports" / "reports.json")
    assert len(reports) == 200
    for r in reports:
        assert 0.0 <= r.overall <= 1.0
        combined = sum(
            r.weights_used.overarching[h] * v for h, v in r.overarching_scores.items()
        )
        assert abs(combined - r.overall) < 1e-9

    # weight recovery is a diagnostic, not an assertion
    truth = json.loads((one / "sim" / "truth_weights.json").read_text())
    ids = config.indicator_ids()
    corr = rank_correlation(
        [truth[i] for i in ids], [posterior[i].mean for i in ids]
    )
    ok(
        "end-to-end-determinism",
        seconds=f"{elapsed:.1f}",
        children=200,
        weight_recovery_rank_corr=f"{corr:.3f}",
    )


def test_c12_event_store_replay(tmp_path, config):
    cfg = SystemConfig(
        data_dir=str(tmp_path / "data"),
        training_samples=16,
        hidden_layers=(4,),
        ga=GAConfig(population_size=8, elitism_count=1, max_generations=5, seed=1),
    )
    bundle = generate(SimConfig(seed=31, n_children=5, n_respondents=2, hierarchy=config))
    with TestClient(create_app(cfg)) as client:
        for e in bundle.elicitations:
            assert client.post("/elicitations", json={
                "respondent_id": e.respondent_id, "indicator_id": e.indicator_id,
                "importance": e.importance, "confidence": e.confidence,
            }).status_code == 200
        for x in bundle.observations:
            assert client.post("/observations", json={
                "child_id": x.child_id, "values": dict(x.values),
                "observed_at": x.observed_at.isoformat(),
            }).status_code == 200
        session = client.post("/sessions", json={
            "respondent_id": "resp-0000", "role": "mother",
            "questionnaire_id": QUESTIONNAIRE_ID,
        }).json()
        for r in bundle.responses[:10]:
            assert client.post(f"/sessions/{session['session_id']}/responses", json={
                "indicator_id": r.indicator_id, "rating": r.rating,
                "response_time_ms": int(round(r.response_time * 1000)),
            }).status_code == 200
        assert client.post("/inference/posterior-update").status_code == 200
        assert client.post("/inference/train-fitness").status_code == 200
        assert client.post("/inference/compute-index").status_code == 200
        service = client.app.state.service
        beliefs_before = service.state.beliefs
        params_before = service.state.net_params
        reports_before = dict(service.state.reports)

    # process gone; replay the log in a brand-new instance
    with TestClient(create_app(cfg)) as client2:
        replayed = client2.app.state.service
        assert replayed.state.beliefs == beliefs_before
        assert replayed.state.net_params == params_before
        assert dict(replayed.state.reports) == reports_before
        for child_id, report in reports_before.items():
            assert client2.get(f"/children/{child_id}/report").json() == report
    ok("event-store-replay", events=replayed.store.last_seq())
