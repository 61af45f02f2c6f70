"""Harness tests: scheme registry, training/eval plumbing, sweeps, CSV outputs."""

import csv
import json
import os

import numpy as np
import pytest

from risnoma.config import PpoConfig, SimConfig
from risnoma.env import EpisodeTrace, SemNomaEnv
from risnoma.harness import (
    RunReport,
    SCHEME_NAMES,
    apply_parameter,
    bench_decision_path,
    case_config,
    emit_plotdata,
    evaluate,
    export_figures,
    fig2_convergence,
    make_scheme,
    mode_histogram,
    run_scheme,
    scheme_config,
    summarize,
    sweep,
    train_ppo_scheme,
)
from risnoma import cli


def tiny_sim(**over):
    """Desk-scale config so exact per-slot optimization stays cheap."""
    defaults = dict(
        num_su=2,
        num_elements=4,
        episode_len=8,
        ppo=PpoConfig(buffer_size=32, minibatch=16, hidden=16, train_steps=64),
    )
    defaults.update(over)
    return SimConfig(**defaults)


# -- parameter plumbing --


def test_apply_parameter_covers_every_sweepable_name():
    sim = SimConfig()
    assert apply_parameter(sim, "num_elements", 12).num_elements == 12
    assert apply_parameter(sim, "ris_x", 3.5).ris_position == (3.5, sim.ris_position[1])
    assert apply_parameter(sim, "arrival_mean", 2.0).arrival_mean == 2.0
    assert apply_parameter(sim, "num_su", 4).num_su == 4
    assert apply_parameter(sim, "noise_dbm", -80.0).noise_dbm == -80.0


def test_apply_parameter_rejects_unknown_name():
    with pytest.raises(ValueError):
        apply_parameter(SimConfig(), "bandwidth", 1.0)


def test_case_config_variants():
    sim = SimConfig()
    stable = case_config(sim, "stable_channel")
    assert stable.fading.rician_k_ris == sim.fading.rician_k_ris * 100.0
    assert stable.arrival_std_frac == 0.6
    assert case_config(sim, "stable_traffic").arrival_std_frac == 0.02
    assert case_config(sim, "fluctuating_both").arrival_std_frac == 0.6
    assert case_config(sim, "base") is sim
    with pytest.raises(ValueError):
        case_config(sim, "quiet_channel")


# -- scheme registry --


def test_make_scheme_names_and_ablation_freezes():
    assert make_scheme("pdoo").name == "pdoo"
    assert make_scheme("lightweight").profile == "lightweight"
    assert make_scheme("all_selection").name == "all_selection"
    assert make_scheme("plain_ppo").name == "plain_ppo"
    assert make_scheme("realtime").name == "realtime"
    assert make_scheme("fixed_phase").freeze == frozenset({"phases"})
    assert make_scheme("fixed_extraction").freeze == frozenset({"rho"})
    assert make_scheme("fixed_decoding").freeze == frozenset({"order"})
    assert make_scheme("non_semantic").freeze == frozenset({"rho"})
    assert make_scheme("alg1").freeze == frozenset()


def test_make_scheme_rejects_unknown_name():
    with pytest.raises(ValueError):
        make_scheme("oracle")


def test_scheme_config_zeroes_semantic_cost_for_non_semantic_only():
    sim = SimConfig()
    ns = scheme_config(sim, "non_semantic")
    assert ns.sem.a == 0.0 and ns.sem.b == 0.0
    assert sim.sem.a > 0.0
    assert scheme_config(sim, "pdoo") is sim


def test_head_sizes_match_action_layouts():
    sim = tiny_sim()
    env = SemNomaEnv(sim, seed=0)
    K, L = sim.num_su, sim.num_elements
    assert make_scheme("pdoo").head_sizes(env) == (2 * K, K, 3)
    assert make_scheme("all_selection").head_sizes(env) == (2 * K, K, 0)
    assert make_scheme("plain_ppo").head_sizes(env) == (4 * K + L, K, 0)
    assert make_scheme("realtime").head_sizes(env) == (0, 0, 3)
    assert make_scheme("alg1").head_sizes(env) == (0, 0, 0)


# -- evaluation plumbing --


def test_evaluate_random_scheme_is_reproducible():
    sim = tiny_sim()
    t1 = evaluate(sim, make_scheme("random", seed=7), None, seed=5, eval_slots=12)
    t2 = evaluate(sim, make_scheme("random", seed=7), None, seed=5, eval_slots=12)
    assert len(t1) == 12
    r1 = [rec["reward"] for rec in t1.slots]
    r2 = [rec["reward"] for rec in t2.slots]
    assert r1 == r2


def test_summarize_mirrors_trace_means():
    sim = tiny_sim()
    trace = evaluate(sim, make_scheme("random", seed=3), None, seed=2, eval_slots=10)
    report = summarize(trace, "random", seed=2, x=1.5)
    assert report.scheme == "random" and report.seed == 2 and report.x == 1.5
    assert report.mean_reward == trace.mean("reward")
    assert report.mean_eta == trace.mean("eta")
    assert report.mean_eta_hat == trace.mean("eta_hat")
    assert report.mean_penalty == trace.mean("penalty")
    assert report.mean_power == trace.mean("power_sum")
    assert abs(sum(report.mode_fractions.values()) - 1.0) < 1e-12
    assert report.trace is trace


def test_mode_histogram_counts_only_family_picks():
    trace = EpisodeTrace(num_su=1)
    for mode in (1, 1, 2, 3, 0):
        trace.add({"mode": mode})
    hist = mode_histogram(trace)
    assert hist == {1: 0.5, 2: 0.25, 3: 0.25}
    empty = mode_histogram(EpisodeTrace(num_su=1))
    assert empty == {1: 0.0, 2: 0.0, 3: 0.0}


def test_emit_plotdata_aggregates_and_is_idempotent(tmp_path):
    reports = []
    for scheme, x, val in [("a", 1.0, 2.0), ("a", 1.0, 4.0), ("a", 2.0, 6.0),
                           ("b", None, 1.0)]:
        reports.append(RunReport(scheme=scheme, seed=0, x=x, mean_eta=val))
    path = tmp_path / "plot.csv"
    rows = emit_plotdata(reports, str(path), metric="mean_eta")
    assert rows == [
        ["a", 1.0, 3.0, 1.0, 2],
        ["a", 2.0, 6.0, 0.0, 1],
        ["b", "", 1.0, 0.0, 1],
    ]
    first = path.read_bytes()
    emit_plotdata(reports, str(path), metric="mean_eta")
    assert path.read_bytes() == first
    with open(path) as fh:
        header = next(csv.reader(fh))
    assert header == ["scheme", "x", "mean", "std", "n"]


# -- training plumbing --


def test_train_ppo_scheme_returns_policy_curve_rewards(tmp_path):
    sim = tiny_sim()
    scheme = make_scheme("pdoo")
    csv_path = tmp_path / "metrics.csv"
    policy, curve, rewards = train_ppo_scheme(
        sim, scheme, seed=0, train_steps=64, metrics_csv=str(csv_path)
    )
    n_cont, n_bin, n_modes = scheme.head_sizes(SemNomaEnv(sim, 0))
    assert policy.n_cont == n_cont and policy.n_bin == n_bin and policy.n_modes == n_modes
    assert [step for step, _ in curve] == [32, 64]
    assert len(rewards) == 64 and all(np.isfinite(rewards))
    with open(csv_path) as fh:
        lines = list(csv.reader(fh))
    assert lines[0] == ["step", "mean_reward", "policy_loss", "value_loss",
                        "entropy", "grad_norm"]
    assert len(lines) == 3


def test_run_scheme_checkpoint_roundtrip(tmp_path):
    sim = tiny_sim()
    ckpt = tmp_path / "pdoo.ckpt"
    trained = run_scheme(sim, "pdoo", seed=0, train_steps=64, eval_slots=10,
                         checkpoint_out=str(ckpt))
    assert ckpt.exists() and trained.train_seconds > 0.0
    reloaded = run_scheme(sim, "pdoo", seed=0, eval_slots=10,
                          checkpoint_in=str(ckpt))
    assert reloaded.train_seconds == 0.0 and reloaded.learning_curve == []
    assert reloaded.mean_reward == trained.mean_reward
    assert reloaded.mean_eta_hat == trained.mean_eta_hat


def test_run_scheme_rejects_unknown_name():
    with pytest.raises(ValueError):
        run_scheme(tiny_sim(), "maximal", seed=0)


def test_sweep_pairs_every_value_with_every_seed():
    sim = tiny_sim(deferrable=False)
    reports = sweep(sim, "alg1", "num_elements", (4, 6), (0, 1), eval_slots=6)
    assert [(r.x, r.seed) for r in reports] == [(4.0, 0), (4.0, 1), (6.0, 0), (6.0, 1)]
    assert all(r.scheme == "alg1" for r in reports)


def test_bench_decision_path_times_each_scheme():
    sim = tiny_sim()
    out = bench_decision_path(sim, ("lightweight", "alg1"), seed=0, steps=4, warmup=1)
    assert set(out) == {"lightweight", "alg1"}
    for mean, std in out.values():
        assert mean > 0.0 and std >= 0.0


# -- figure recipes --


def test_fig2_convergence_schema(tmp_path):
    sim = tiny_sim()
    path = tmp_path / "fig2.csv"
    rows = fig2_convergence(sim, str(path), seeds=(0, 1))
    schemes = {row[0] for row in rows}
    assert schemes == {"alg1", "fixed_phase", "fixed_extraction", "fixed_decoding"}
    for row in rows:
        assert row[4] == 2  # one sample per seed
    by_scheme = {}
    for scheme, x, mean, _, _ in rows:
        by_scheme.setdefault(scheme, []).append((x, mean))
    for scheme, series in by_scheme.items():
        series.sort()
        means = [m for _, m in series]
        assert len(means) == 11
        assert all(b >= a - 1e-12 for a, b in zip(means, means[1:])), scheme


def test_export_figures_rejects_unknown_figure(tmp_path):
    with pytest.raises(ValueError):
        export_figures(tiny_sim(), str(tmp_path), figures=("fig99_bogus",))


# -- command line --


def write_tiny_toml(path):
    path.write_text(
        "\n".join(
            [
                "num_su = 2",
                "num_elements = 4",
                "episode_len = 8",
                "",
                "[ppo]",
                "buffer_size = 32",
                "minibatch = 16",
                "hidden = 16",
                "train_steps = 64",
            ]
        )
    )


def test_cli_parser_accepts_each_verb():
    parser = cli.build_parser()
    run = parser.parse_args(["run", "--scheme", "random", "--seed", "7"])
    assert run.verb == "run" and run.scheme == "random" and run.seed == 7
    sw = parser.parse_args(["sweep", "--param", "num_elements", "--values", "10,30"])
    assert sw.verb == "sweep" and sw.param == "num_elements"
    bench = parser.parse_args(["bench", "--schemes", "alg1"])
    assert bench.verb == "bench"
    exp = parser.parse_args(["export", "--figures", "fig2_convergence"])
    assert exp.verb == "export"
    with pytest.raises(SystemExit):
        parser.parse_args(["run", "--scheme", "not_a_scheme"])


def test_cli_run_writes_trace_and_report(tmp_path):
    cfg = tmp_path / "tiny.toml"
    write_tiny_toml(cfg)
    out = tmp_path / "runs"
    rc = cli.main([
        "run", "--config", str(cfg), "--scheme", "random", "--seed", "3",
        "--eval-slots", "10", "--out", str(out),
    ])
    assert rc == 0
    trace_path = out / "random_seed3_trace.csv"
    report_path = out / "random_seed3_report.json"
    assert trace_path.exists() and report_path.exists()
    with open(trace_path) as fh:
        lines = list(csv.reader(fh))
    assert len(lines) == 11
    assert lines[0][:4] == ["slot", "reward", "eta", "eta_hat"]
    report = json.loads(report_path.read_text())
    assert report["scheme"] == "random" and report["seed"] == 3
    assert set(report) >= {"mean_reward", "mean_eta", "mean_eta_hat",
                           "mean_penalty", "mean_power", "mode_fractions"}


def test_cli_sweep_writes_aggregated_csv(tmp_path):
    cfg = tmp_path / "tiny.toml"
    write_tiny_toml(cfg)
    out = tmp_path / "runs"
    rc = cli.main([
        "sweep", "--config", str(cfg), "--scheme", "alg1",
        "--param", "num_elements", "--values", "4,6", "--seeds", "0",
        "--eval-slots", "6", "--metric", "mean_eta", "--out", str(out),
    ])
    assert rc == 0
    with open(out / "sweep_alg1_num_elements.csv") as fh:
        lines = list(csv.reader(fh))
    assert lines[0] == ["scheme", "x", "mean", "std", "n"]
    assert [row[1] for row in lines[1:]] == ["4.0", "6.0"]


def test_cli_bench_writes_timing_csv(tmp_path):
    cfg = tmp_path / "tiny.toml"
    write_tiny_toml(cfg)
    out = tmp_path / "runs"
    rc = cli.main([
        "bench", "--config", str(cfg), "--schemes", "alg1",
        "--steps", "4", "--out", str(out),
    ])
    assert rc == 0
    with open(out / "table3_timing.csv") as fh:
        lines = list(csv.reader(fh))
    assert lines[0] == ["scheme", "x", "mean", "std", "n"]
    assert lines[1][0] == "alg1" and float(lines[1][2]) > 0.0
