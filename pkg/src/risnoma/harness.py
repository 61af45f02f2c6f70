"""Experiment harness: scheme registry, training loops, sweeps, and timing.

A scheme maps observations to slot actions. Learned schemes wrap the PPO agent
around different head layouts; optimization-only schemes call the alternating
solver per slot, optionally with one control family frozen as an ablation.
"""

from __future__ import annotations

import csv
import time
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import ppo as ppo_mod
from .autodiff import Adam
from .channel import wrap_phase
from .config import SimConfig
from .env import EpisodeTrace, SemNomaEnv, run_policy, squash_unit
from .noma import order_from_priorities, position_in_sequence
from .ppo import ActionSample, PolicyNet, RolloutBuffer
from .slotopt import OptimizerChoice, SlotAction, dispatch, finalize_action, jtac_alternating

SCHEME_NAMES = (
    "pdoo",
    "lightweight",
    "all_selection",
    "plain_ppo",
    "realtime",
    "random",
    "alg1",
    "fixed_phase",
    "fixed_extraction",
    "fixed_decoding",
    "non_semantic",
)

SWEEPABLE = ("num_elements", "ris_x", "arrival_mean", "num_su", "noise_dbm")


def apply_parameter(sim: SimConfig, name: str, value) -> SimConfig:
    """Return a config with one sweepable parameter replaced."""
    if name == "num_elements":
        return replace(sim, num_elements=int(value))
    if name == "ris_x":
        return replace(sim, ris_position=(float(value), sim.ris_position[1]))
    if name == "arrival_mean":
        return replace(sim, arrival_mean=float(value))
    if name == "num_su":
        return replace(sim, num_su=int(value))
    if name == "noise_dbm":
        return replace(sim, noise_dbm=float(value))
    raise ValueError(f"parameter {name!r} is not sweepable; choose one of {SWEEPABLE}")


# -- schemes --


class Scheme:
    """Decision rule for one slot. Learned schemes also declare policy head sizes."""

    name = "base"
    uses_policy = False

    def head_sizes(self, env: SemNomaEnv):
        return (0, 0, 0)

    def build_action(self, env: SemNomaEnv, sample: ActionSample | None) -> SlotAction:
        raise NotImplementedError


class PdooScheme(Scheme):
    """Learned traffic intents plus a learned pick of one optimizer family per slot."""

    uses_policy = True

    def __init__(self, profile: str = "exact"):
        self.profile = profile
        self.name = "pdoo" if profile == "exact" else "lightweight"

    def head_sizes(self, env):
        K = env.config.num_su
        return (2 * K, K, 3)

    def build_action(self, env, sample):
        extract, transmit, schedule = env.decode_learned(sample.cont, sample.flags)
        problem = env.build_problem(extract, transmit, schedule)
        return dispatch(OptimizerChoice(sample.mode + 1), problem, profile=self.profile)


class AllSelectionScheme(Scheme):
    """Learned intents with every optimizer family re-run each slot."""

    name = "all_selection"
    uses_policy = True

    def head_sizes(self, env):
        K = env.config.num_su
        return (2 * K, K, 0)

    def build_action(self, env, sample):
        extract, transmit, schedule = env.decode_learned(sample.cont, sample.flags)
        problem = env.build_problem(extract, transmit, schedule)
        action = dispatch(OptimizerChoice(1), problem)
        action = dispatch(OptimizerChoice(2), problem, current=action)
        action = dispatch(OptimizerChoice(3), problem, current=action)
        return replace(action, mode=0)


class PlainPpoScheme(Scheme):
    """Policy emits every control directly; no per-slot optimizer in the loop."""

    name = "plain_ppo"
    uses_policy = True

    def head_sizes(self, env):
        K, L = env.config.num_su, env.config.num_elements
        return (4 * K + L, K, 0)

    def build_action(self, env, sample):
        K, L = env.config.num_su, env.config.num_elements
        cfg = env.config
        u = sample.cont
        extract = squash_unit(u[:K], cfg.d_max)
        transmit = squash_unit(u[K:2 * K], cfg.z_max)
        rho_min = cfg.sem.rho_min
        rho = rho_min + squash_unit(u[2 * K:3 * K], 1.0) * (1.0 - rho_min)
        phases = wrap_phase(squash_unit(u[3 * K:3 * K + L], 2.0 * np.pi))
        scores = u[3 * K + L:]
        order = order_from_priorities(position_in_sequence(-scores))
        problem = env.build_problem(extract, transmit, np.asarray(sample.flags, dtype=int))
        return finalize_action(problem, rho, order, phases, mode=0)


class RealtimeScheme(Scheme):
    """Transmit-everything-now learner: intents forced, only the optimizer pick is learned."""

    name = "realtime"
    uses_policy = True

    def head_sizes(self, env):
        return (0, 0, 3)

    def build_action(self, env, sample):
        problem = env.build_problem()
        return dispatch(OptimizerChoice(sample.mode + 1), problem)


class RandomScheme(Scheme):
    """Uniform random intents and optimizer pick; physics still honest."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA5]))

    def build_action(self, env, sample):
        cfg = env.config
        K = cfg.num_su
        extract = self.rng.uniform(0.0, cfg.d_max, size=K)
        transmit = self.rng.uniform(0.0, cfg.z_max, size=K)
        schedule = (self.rng.random(K) < 0.5).astype(int)
        mode = int(self.rng.integers(1, 4))
        problem = env.build_problem(extract, transmit, schedule)
        return dispatch(OptimizerChoice(mode), problem)


class Alg1Scheme(Scheme):
    """Per-slot alternating optimization, optionally with one family frozen."""

    def __init__(self, name: str = "alg1", freeze=frozenset(), profile: str = "exact"):
        self.name = name
        self.freeze = frozenset(freeze)
        self.profile = profile
        self.last_result = None

    def build_action(self, env, sample):
        problem = env.build_problem()
        result = jtac_alternating(
            problem,
            eps=env.config.eps_converge,
            freeze=self.freeze,
            profile=self.profile,
        )
        self.last_result = result
        return result.action


def make_scheme(name: str, seed: int = 0, profile: str = "exact") -> Scheme:
    if name == "pdoo":
        return PdooScheme(profile=profile)
    if name == "lightweight":
        return PdooScheme(profile="lightweight")
    if name == "all_selection":
        return AllSelectionScheme()
    if name == "plain_ppo":
        return PlainPpoScheme()
    if name == "realtime":
        return RealtimeScheme()
    if name == "random":
        return RandomScheme(seed=seed)
    if name == "alg1":
        return Alg1Scheme("alg1", profile=profile)
    if name == "fixed_phase":
        return Alg1Scheme("fixed_phase", freeze={"phases"}, profile=profile)
    if name == "fixed_extraction":
        return Alg1Scheme("fixed_extraction", freeze={"rho"}, profile=profile)
    if name == "fixed_decoding":
        return Alg1Scheme("fixed_decoding", freeze={"order"}, profile=profile)
    if name == "non_semantic":
        return Alg1Scheme("non_semantic", freeze={"rho"}, profile=profile)
    raise ValueError(f"unknown scheme {name!r}; choose one of {SCHEME_NAMES}")


def scheme_config(sim: SimConfig, name: str) -> SimConfig:
    """Per-scheme config adjustments that change the accounting, not the physics."""
    if name == "non_semantic":
        return replace(sim, sem=replace(sim.sem, a=0.0, b=0.0))
    return sim


@dataclass
class RunReport:
    scheme: str
    seed: int
    x: float | None = None
    mean_reward: float = 0.0
    mean_eta: float = 0.0
    mean_eta_hat: float = 0.0
    mean_penalty: float = 0.0
    mean_power: float = 0.0
    mode_fractions: dict = field(default_factory=dict)
    learning_curve: list = field(default_factory=list)
    train_seconds: float = 0.0
    trace: EpisodeTrace | None = None


def train_ppo_scheme(
    sim: SimConfig,
    scheme: Scheme,
    seed: int,
    train_steps: int | None = None,
    metrics_csv: str | None = None,
):
    """Train a policy for a learned scheme.

    Returns (policy, learning_curve, rewards) where the curve holds
    (step, trailing-mean-reward) points and rewards is the full per-step
    training reward sequence.
    """
    env = SemNomaEnv(sim, seed)
    n_cont, n_bin, n_modes = scheme.head_sizes(env)
    policy = PolicyNet(env.obs_dim, n_cont, n_bin, n_modes,
                       hidden=sim.ppo.hidden, seed=seed)
    optimizer = Adam(policy.param_list(), lr=sim.ppo.lr)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x9E]))
    buffer = RolloutBuffer(sim.ppo.buffer_size)
    scaler = ppo_mod.ReturnScaler(sim.ppo.gamma)
    steps = sim.ppo.train_steps if train_steps is None else train_steps
    obs = env.reset(seed)
    recent = deque(maxlen=256)
    curve = []
    rewards = []
    writer = None
    fh = None
    if metrics_csv:
        fh = open(metrics_csv, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(["step", "mean_reward", "policy_loss", "value_loss",
                         "entropy", "grad_norm"])
    try:
        for step in range(steps):
            sample = ppo_mod.act(policy, obs, rng)
            action = scheme.build_action(env, sample)
            next_obs, reward, done, _ = env.step(action)
            buffer.add(obs, sample, scaler.scale(reward, done), done)
            recent.append(reward)
            rewards.append(reward)
            obs = env.reset(env.seed + 1) if done else next_obs
            if buffer.full:
                last_value = 0.0 if done else float(policy.value(obs.reshape(1, -1))[0])
                metrics = ppo_mod.update(
                    policy, buffer, optimizer, rng, last_value,
                    gamma=sim.ppo.gamma, gae_lambda=sim.ppo.gae_lambda,
                    clip_ratio=sim.ppo.clip_ratio, entropy_coef=sim.ppo.entropy_coef,
                    value_coef=sim.ppo.value_coef, epochs=sim.ppo.epochs,
                    minibatch=sim.ppo.minibatch, grad_clip=sim.ppo.grad_clip,
                )
                buffer.clear()
                mean_recent = float(np.mean(recent))
                curve.append((step + 1, mean_recent))
                if writer:
                    writer.writerow([step + 1, mean_recent, metrics["policy_loss"],
                                     metrics["value_loss"], metrics["entropy"],
                                     metrics["grad_norm"]])
    finally:
        if fh:
            fh.close()
    return policy, curve, rewards


def evaluate(sim: SimConfig, scheme: Scheme, policy, seed: int,
             eval_slots: int = 400) -> EpisodeTrace:
    """Deterministic rollout of a scheme on a fresh environment."""
    env = SemNomaEnv(sim, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE7]))

    def policy_fn(obs, env_):
        sample = None
        if scheme.uses_policy:
            sample = ppo_mod.act(policy, obs, rng, deterministic=True)
        return scheme.build_action(env_, sample)

    return run_policy(env, policy_fn, eval_slots, seed)


def summarize(trace: EpisodeTrace, scheme: str, seed: int, x=None) -> RunReport:
    report = RunReport(scheme=scheme, seed=seed, x=x)
    report.mean_reward = trace.mean("reward")
    report.mean_eta = trace.mean("eta")
    report.mean_eta_hat = trace.mean("eta_hat")
    report.mean_penalty = trace.mean("penalty")
    report.mean_power = trace.mean("power_sum")
    report.mode_fractions = mode_histogram(trace)
    report.trace = trace
    return report


def run_scheme(
    sim: SimConfig,
    scheme_name: str,
    seed: int = 42,
    profile: str = "exact",
    train_steps: int | None = None,
    eval_slots: int = 400,
    checkpoint_in: str | None = None,
    checkpoint_out: str | None = None,
    metrics_csv: str | None = None,
) -> RunReport:
    """Train (if the scheme learns) and evaluate one scheme; returns its report."""
    if scheme_name not in SCHEME_NAMES:
        raise ValueError(f"unknown scheme {scheme_name!r}; choose one of {SCHEME_NAMES}")
    sim = scheme_config(sim, scheme_name)
    scheme = make_scheme(scheme_name, seed=seed, profile=profile)
    policy, curve, train_seconds = None, [], 0.0
    if scheme.uses_policy:
        if checkpoint_in:
            policy = ppo_mod.load_checkpoint(checkpoint_in)
        else:
            start = time.perf_counter()
            policy, curve, _ = train_ppo_scheme(sim, scheme, seed, train_steps, metrics_csv)
            train_seconds = time.perf_counter() - start
        if checkpoint_out:
            ppo_mod.save_checkpoint(checkpoint_out, policy)
    trace = evaluate(sim, scheme, policy, seed + 1000, eval_slots)
    report = summarize(trace, scheme_name, seed)
    report.learning_curve = curve
    report.train_seconds = train_seconds
    return report


def sweep(
    sim: SimConfig,
    scheme_name: str,
    parameter: str,
    values,
    seeds,
    **run_kwargs,
) -> list:
    """Run a scheme across parameter values with paired seeds per value."""
    reports = []
    for value in values:
        cfg = apply_parameter(sim, parameter, value)
        for seed in seeds:
            report = run_scheme(cfg, scheme_name, seed=seed, **run_kwargs)
            report.x = float(value)
            reports.append(report)
    return reports


def mode_histogram(trace: EpisodeTrace) -> dict:
    """Fraction of slots spent on each optimizer family (modes 1..3)."""
    counts = {1: 0, 2: 0, 3: 0}
    total = 0
    for rec in trace.slots:
        mode = rec["mode"]
        if mode in counts:
            counts[mode] += 1
            total += 1
    if total == 0:
        return {1: 0.0, 2: 0.0, 3: 0.0}
    return {m: counts[m] / total for m in counts}


def emit_plotdata(reports, path: str, metric: str = "mean_eta_hat"):
    """Aggregate reports into (scheme, x, mean, std, n) rows and write CSV."""
    groups = {}
    for rep in reports:
        key = (rep.scheme, rep.x)
        groups.setdefault(key, []).append(getattr(rep, metric))
    rows = []
    for (scheme, x), vals in sorted(groups.items(), key=lambda kv: (kv[0][0], _xkey(kv[0][1]))):
        arr = np.asarray(vals, dtype=float)
        rows.append([scheme, "" if x is None else x, float(arr.mean()),
                     float(arr.std(ddof=0)), len(arr)])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scheme", "x", "mean", "std", "n"])
        writer.writerows(rows)
    return rows


def _xkey(x):
    return (-np.inf if x is None else float(x))


def case_config(sim: SimConfig, case: str) -> SimConfig:
    """Channel/traffic regimes used to study which optimizer family the agent prefers."""
    if case == "base":
        return sim
    if case == "stable_channel":
        fading = replace(
            sim.fading,
            rician_k_ris=sim.fading.rician_k_ris * 100.0,
            rician_k_direct=20.0,
        )
        return replace(sim, fading=fading, arrival_std_frac=0.6)
    if case == "stable_traffic":
        return replace(sim, arrival_std_frac=0.02)
    if case == "fluctuating_both":
        return replace(sim, arrival_std_frac=0.6)
    raise ValueError(
        "unknown case; choose base, stable_channel, stable_traffic, fluctuating_both"
    )


def bench_decision_path(
    sim: SimConfig, scheme_names, seed: int = 42, steps: int = 100, warmup: int = 10
) -> dict:
    """Wall-clock time of the per-slot decision (policy + optimizers), excluding physics.

    Returns {scheme: (mean_seconds, std_seconds)} measured over `steps` slots of a
    live rollout with untrained policies.
    """
    results = {}
    for name in scheme_names:
        cfg = scheme_config(sim, name)
        scheme = make_scheme(name, seed=seed)
        env = SemNomaEnv(cfg, seed)
        policy = None
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB3]))
        if scheme.uses_policy:
            n_cont, n_bin, n_modes = scheme.head_sizes(env)
            policy = PolicyNet(env.obs_dim, n_cont, n_bin, n_modes,
                               hidden=sim.ppo.hidden, seed=seed)
        obs = env.reset(seed)
        times = []
        for i in range(warmup + steps):
            start = time.perf_counter()
            sample = ppo_mod.act(policy, obs, rng) if scheme.uses_policy else None
            action = scheme.build_action(env, sample)
            elapsed = time.perf_counter() - start
            if i >= warmup:
                times.append(elapsed)
            obs, _, done, _ = env.step(action)
            if done:
                obs = env.reset(env.seed + 1)
        arr = np.asarray(times)
        results[name] = (float(arr.mean()), float(arr.std(ddof=0)))
    return results


# -- figure recipes --


def _write_rows(path, rows, header=("scheme", "x", "mean", "std", "n")):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _aggregate(samples: dict) -> list:
    rows = []
    for (scheme, x), vals in sorted(samples.items(), key=lambda kv: (kv[0][0], float(kv[0][1]))):
        arr = np.asarray(vals, dtype=float)
        rows.append([scheme, x, float(arr.mean()), float(arr.std(ddof=0)), len(arr)])
    return rows


def fig2_convergence(sim: SimConfig, path: str, seeds) -> list:
    """Alternating-optimization efficiency per iteration, full loop vs ablations."""
    rt = replace(sim, deferrable=False)
    variants = (
        ("alg1", frozenset()),
        ("fixed_phase", frozenset({"phases"})),
        ("fixed_extraction", frozenset({"rho"})),
        ("fixed_decoding", frozenset({"order"})),
    )
    samples = {}
    for name, freeze in variants:
        for seed in seeds:
            env = SemNomaEnv(rt, seed)
            result = jtac_alternating(
                env.build_problem(), eps=rt.eps_converge, freeze=freeze
            )
            trace = list(result.eta_trace)
            trace += [trace[-1]] * (11 - len(trace))
            for i, eta in enumerate(trace):
                samples.setdefault((name, i), []).append(eta)
    rows = _aggregate(samples)
    _write_rows(path, rows)
    return rows


def fig3_learning(sim: SimConfig, path: str, seeds, train_steps: int,
                  eval_slots: int = 200, schemes=("pdoo", "all_selection", "plain_ppo")) -> list:
    """Reward learning curves for the learned schemes plus a random baseline."""
    samples = {}
    grid = set()
    for name in schemes:
        for seed in seeds:
            scheme = make_scheme(name, seed=seed)
            _, curve, _ = train_ppo_scheme(sim, scheme, seed, train_steps)
            for step, val in curve:
                samples.setdefault((name, step), []).append(val)
                grid.add(step)
    for seed in seeds:
        report = run_scheme(sim, "random", seed=seed, eval_slots=eval_slots)
        for step in sorted(grid):
            samples.setdefault(("random", step), []).append(report.mean_reward)
    rows = _aggregate(samples)
    _write_rows(path, rows)
    return rows


def fig4_ris(sim: SimConfig, path: str, seeds, eval_slots: int = 200,
             values=(1, 2, 3, 4, 5, 6, 7)) -> list:
    """Efficiency against the RIS x-coordinate for the optimizer and ablations."""
    rt = replace(sim, deferrable=False)
    reports = []
    for name in ("alg1", "fixed_phase", "random"):
        reports += sweep(rt, name, "ris_x", values, seeds, eval_slots=eval_slots)
    return emit_plotdata(reports, path, metric="mean_eta")


def fig5_deferrable(sim: SimConfig, path: str, seeds, train_steps: int,
                    eval_slots: int = 200, values=(0.5, 1.0, 1.5, 2.0)) -> list:
    """Deferrable vs immediate vs non-semantic efficiency across arrival rates."""
    reports = []
    for name in ("pdoo", "realtime"):
        reports += sweep(sim, name, "arrival_mean", values, seeds,
                         train_steps=train_steps, eval_slots=eval_slots)
    reports += sweep(sim, "non_semantic", "arrival_mean", values, seeds,
                     eval_slots=eval_slots)
    return emit_plotdata(reports, path, metric="mean_eta_hat")


def fig6_scaling(sim: SimConfig, path: str, seeds, eval_slots: int = 200,
                 values=(2, 3, 4, 5)) -> list:
    """Efficiency as the number of SUs grows."""
    rt = replace(sim, deferrable=False)
    reports = []
    for name in ("alg1", "fixed_phase", "random"):
        reports += sweep(rt, name, "num_su", values, seeds, eval_slots=eval_slots)
    return emit_plotdata(reports, path, metric="mean_eta")


def fig7_behavior(sim: SimConfig, path: str, seed: int, train_steps: int,
                  eval_slots: int = 200) -> list:
    """Per-slot behavior of a trained agent: depths, modes, backlogs."""
    scheme = make_scheme("pdoo", seed=seed)
    policy, _, _ = train_ppo_scheme(sim, scheme, seed, train_steps)
    trace = evaluate(sim, scheme, policy, seed + 1000, eval_slots)
    rows = []
    for rec in trace.slots:
        rows.append([
            rec["slot"],
            float(np.sum(rec["arrivals"])),
            float(np.sum(rec["raw"])),
            float(np.sum(rec["sem"])),
            float(np.mean(rec["rho"])),
            rec["mode"],
            rec["eta_hat"],
            rec["reward"],
        ])
    _write_rows(path, rows, header=("slot", "arrival_total", "raw_total",
                                    "sem_total", "mean_rho", "mode", "eta_hat",
                                    "reward"))
    return rows


def fig8_modes(sim: SimConfig, path: str, seeds, train_steps: int,
               eval_slots: int = 200,
               cases=("stable_channel", "stable_traffic", "fluctuating_both")) -> list:
    """Optimizer-family usage histograms in different channel/traffic regimes."""
    samples = {}
    for case in cases:
        cfg = case_config(sim, case)
        for seed in seeds:
            scheme = make_scheme("pdoo", seed=seed)
            policy, _, _ = train_ppo_scheme(cfg, scheme, seed, train_steps)
            trace = evaluate(cfg, scheme, policy, seed + 1000, eval_slots)
            hist = mode_histogram(trace)
            for mode, frac in hist.items():
                samples.setdefault((case, mode), []).append(frac)
    rows = _aggregate(samples)
    _write_rows(path, rows)
    return rows


def fig9_lightweight(sim: SimConfig, path: str, seeds, train_steps: int) -> list:
    """Learning curves of the exact profile against the lightweight profile."""
    samples = {}
    for name in ("pdoo", "lightweight"):
        for seed in seeds:
            scheme = make_scheme(name, seed=seed)
            _, curve, _ = train_ppo_scheme(sim, scheme, seed, train_steps)
            for step, val in curve:
                samples.setdefault((name, step), []).append(val)
    rows = _aggregate(samples)
    _write_rows(path, rows)
    return rows


def table3_timing(sim: SimConfig, path: str, seed: int = 42, steps: int = 100) -> list:
    """Per-slot decision-path wall time for each scheme."""
    names = ("lightweight", "pdoo", "plain_ppo", "all_selection", "alg1")
    results = bench_decision_path(sim, names, seed=seed, steps=steps)
    rows = [[name, "", mean, std, steps] for name, (mean, std) in results.items()]
    _write_rows(path, rows)
    return rows


FIGURES = ("fig2_convergence", "fig3_learning", "fig4_ris", "fig5_deferrable",
           "fig6_scaling", "fig7_behavior", "fig8_modes", "fig9_lightweight",
           "table3_timing")


def export_figures(sim: SimConfig, out_dir: str, figures=("all",), quick: bool = True,
                   seeds=(42, 43, 44, 45, 46)) -> dict:
    """Produce the experiment CSVs. Quick mode shrinks budgets to a few minutes."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    wanted = set(FIGURES) if "all" in figures else set(figures)
    unknown = wanted - set(FIGURES)
    if unknown:
        raise ValueError(f"unknown figures {sorted(unknown)}; choose from {FIGURES}")
    seeds = tuple(seeds)
    if quick:
        seeds_sweep = seeds[:3]
        train_fig3, train_small, eval_slots, bench_steps = 4096, 2560, 200, 60
    else:
        seeds_sweep = seeds
        train_fig3, train_small, eval_slots, bench_steps = 30080, 10240, 400, 200
    produced = {}

    def out(name):
        return os.path.join(out_dir, f"{name}.csv")

    if "fig2_convergence" in wanted:
        produced["fig2_convergence"] = fig2_convergence(sim, out("fig2_convergence"), seeds)
    if "fig3_learning" in wanted:
        produced["fig3_learning"] = fig3_learning(
            sim, out("fig3_learning"), seeds_sweep, train_fig3, eval_slots
        )
    if "fig4_ris" in wanted:
        produced["fig4_ris"] = fig4_ris(sim, out("fig4_ris"), seeds_sweep, eval_slots)
    if "fig5_deferrable" in wanted:
        produced["fig5_deferrable"] = fig5_deferrable(
            sim, out("fig5_deferrable"), seeds_sweep, train_small, eval_slots
        )
    if "fig6_scaling" in wanted:
        produced["fig6_scaling"] = fig6_scaling(sim, out("fig6_scaling"), seeds_sweep, eval_slots)
    if "fig7_behavior" in wanted:
        produced["fig7_behavior"] = fig7_behavior(
            sim, out("fig7_behavior"), seeds[0], train_small, eval_slots
        )
    if "fig8_modes" in wanted:
        produced["fig8_modes"] = fig8_modes(
            sim, out("fig8_modes"), seeds_sweep, train_small, eval_slots
        )
    if "fig9_lightweight" in wanted:
        produced["fig9_lightweight"] = fig9_lightweight(
            sim, out("fig9_lightweight"), seeds_sweep, train_fig3
        )
    if "table3_timing" in wanted:
        produced["table3_timing"] = table3_timing(
            sim, out("table3_timing"), seeds[0], bench_steps
        )
    return produced
