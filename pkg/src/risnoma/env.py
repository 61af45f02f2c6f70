"""Discrete-time uplink simulator.

Each slot: observe channels and queues, pick a control action (learned intents
plus one re-optimized family), execute the transmission physics, update queues,
and emit an efficiency-minus-lateness reward. Channel states redraw every slot;
SU placement is fixed per reset seed.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    quantize_phases,
    sample_channels,
    sample_su_positions,
    compose_equivalent,
)
from .config import SimConfig
from .noma import DecodingOrder, TransmitProfile, all_capacities, order_from_priorities, sum_capacity
from .semantic import (
    QueuePair,
    delay_window_penalty,
    extraction_energy,
    recovery_energy,
    semantic_energy,
    step_deferrable_queues,
    step_realtime_queue,
)
from .slotopt import SlotAction, SlotProblem, effective_targets, solve_power


def squash_unit(u: np.ndarray, upper: float) -> np.ndarray:
    """Deterministic map from raw policy outputs to [0, upper]."""
    return (np.tanh(np.asarray(u, dtype=np.float64)) + 1.0) * 0.5 * upper


@dataclass
class EpisodeTrace:
    """Per-slot records of one rollout, writable as CSV."""

    num_su: int
    slots: list = field(default_factory=list)

    def add(self, record: dict):
        self.slots.append(record)

    def __len__(self):
        return len(self.slots)

    def header(self):
        base = ["slot", "reward", "eta", "eta_hat", "sum_capacity", "energy",
                "power_sum", "penalty", "mode", "feasible", "decide_seconds"]
        per_su = []
        for k in range(self.num_su):
            per_su += [f"rho_{k}", f"cap_{k}", f"raw_{k}", f"sem_{k}", f"arrival_{k}"]
        return base + per_su

    def rows(self):
        for rec in self.slots:
            row = [rec["slot"], rec["reward"], rec["eta"], rec["eta_hat"],
                   rec["sum_capacity"], rec["energy"], rec["power_sum"],
                   rec["penalty"], rec["mode"], int(rec["feasible"]),
                   rec.get("decide_seconds", 0.0)]
            for k in range(self.num_su):
                row += [rec["rho"][k], rec["capacities"][k], rec["raw"][k],
                        rec["sem"][k], rec["arrivals"][k]]
            yield row

    def write_csv(self, path: str):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header())
            writer.writerows(self.rows())

    def mean(self, key: str) -> float:
        return float(np.mean([rec[key] for rec in self.slots]))


class SemNomaEnv:
    """Uplink slot simulator with deferrable or immediate traffic semantics."""

    def __init__(self, config: SimConfig, seed: int = 0):
        self.config = config
        self.seed = seed
        self.state = None
        self.reset(seed)

    # -- lifecycle --

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.seed = seed
        root = np.random.SeedSequence(self.seed)
        geom_seed, chan_seed, arr_seed = root.spawn(3)
        geom_rng = np.random.default_rng(geom_seed)
        positions = sample_su_positions(
            self.config.su_center, self.config.su_scatter, self.config.num_su, geom_rng
        )
        self.geometry = self.config.geometry(positions)
        self._chan_rng = np.random.default_rng(chan_seed)
        self._arr_rng = np.random.default_rng(arr_seed)
        self.slot = 0
        K = self.config.num_su
        self.queues = [
            QueuePair(window_len=self.config.window_len, b_max=self.config.b_max)
            for _ in range(K)
        ]
        self.rho = np.ones(K)
        self.order = order_from_priorities(np.arange(K))
        self.phases = np.zeros(self.config.num_elements)
        self.power = np.zeros(K)
        self.state = self._draw_channels()
        self.arrivals = self._draw_arrivals()
        return self.observe()

    def _draw_channels(self):
        return sample_channels(
            self.geometry, self.config.fading, self._chan_rng, self.config.num_elements
        )

    def _draw_arrivals(self) -> np.ndarray:
        mean = self.config.arrival_mean
        std = self.config.arrival_std_frac * mean
        draw = self._arr_rng.normal(mean, std, size=self.config.num_su)
        return np.maximum(draw, 0.0)

    # -- views --

    def observe(self) -> np.ndarray:
        gains = np.abs(compose_equivalent(self.state, self.phases)) ** 2
        raw = np.array([q.raw_backlog for q in self.queues])
        sem = np.array([q.sem_backlog for q in self.queues])
        parts = [
            gains / self.config.gain_scale,
            raw / self.config.b_max,
            sem / self.config.b_max,
            self.arrivals / max(self.config.arrival_mean, 1e-12),
            [self.slot / max(self.config.episode_len, 1)],
        ]
        return np.concatenate([np.asarray(p, dtype=np.float64).ravel() for p in parts])

    @property
    def obs_dim(self) -> int:
        return 4 * self.config.num_su + 1

    def decode_learned(self, cont: np.ndarray, flags: np.ndarray):
        """Split and squash the raw continuous head into (extract, transmit, schedule)."""
        K = self.config.num_su
        if len(cont) != 2 * K:
            raise ValueError(f"expected {2 * K} continuous outputs")
        extract = squash_unit(cont[:K], self.config.d_max)
        transmit = squash_unit(cont[K:], self.config.z_max)
        schedule = np.asarray(flags, dtype=int)
        return extract, transmit, schedule

    def build_problem(self, extract=None, transmit=None, schedule=None) -> SlotProblem:
        """Snapshot the slot. Defaults: extract everything, transmit everything, all on."""
        K = self.config.num_su
        raw = np.array([q.raw_backlog for q in self.queues])
        sem = np.array([q.sem_backlog for q in self.queues])
        if extract is None:
            extract = raw + self.arrivals
        if transmit is None:
            transmit = sem + self.rho * np.minimum(extract, raw + self.arrivals)
        if schedule is None:
            schedule = np.ones(K, dtype=int)
        return SlotProblem(
            state=self.state,
            arrivals=self.arrivals.copy(),
            raw_backlog=raw,
            sem_backlog=sem,
            extract=np.asarray(extract, dtype=float),
            transmit=np.asarray(transmit, dtype=float),
            schedule=np.asarray(schedule, dtype=int),
            rho=self.rho.copy(),
            order=self.order,
            phases=self.phases.copy(),
            noise_power=self.config.noise_power,
            slot_duration=self.config.slot_duration,
            bandwidth=self.config.bandwidth,
            s_min=self.config.s_min,
            p_max=self.config.p_max,
            rho_min=self.config.sem.rho_min,
            sem=self.config.sem,
            deferrable=self.config.deferrable,
            power=self.power.copy(),
            quantize_bits=self.config.quantize_bits,
        )

    # -- dynamics --

    def step(self, action: SlotAction):
        """Execute one slot at the action's operating point.

        Returns (obs, reward, done, info). Queues, the persistent operating point,
        and the channel state all advance.
        """
        cfg = self.config
        K = cfg.num_su
        problem = self.build_problem(action.extract, action.transmit, action.schedule)
        rho = np.asarray(action.rho, dtype=float)
        phases = np.asarray(action.phases, dtype=float)
        if cfg.quantize_bits:
            phases = quantize_phases(phases, cfg.quantize_bits)
        # Re-solve power at the executed phases so clamping stays physical.
        sol, targets = solve_power(problem, rho, action.order, phases)
        extract_eff, schedule_eff, _ = effective_targets(problem, rho)
        h = compose_equivalent(self.state, phases)
        caps = all_capacities(
            h, sol.profile, action.order, cfg.noise_power, cfg.slot_duration, cfg.bandwidth
        )
        s_o = sum_capacity(h, sol.profile, cfg.noise_power, cfg.slot_duration, cfg.bandwidth)
        power_sum = float(np.sum(sol.profile.power))

        if cfg.deferrable:
            produced = rho * extract_eff
            sem_now = problem.sem_backlog
            available = sem_now + produced
            delivered = np.minimum(caps, available)
            extraction = sum(
                extraction_energy(produced[k], rho[k], cfg.sem) for k in range(K)
            )
            recovery = sum(
                recovery_energy(delivered[k], rho[k], cfg.sem) for k in range(K)
            )
            energy = extraction + recovery + cfg.slot_duration * power_sum
            eta_hat = 0.0 if energy <= 0.0 else float(np.sum(delivered / rho)) / energy
            eta = 0.0 if energy <= 0.0 else s_o / energy
            new_queues = [
                step_deferrable_queues(
                    self.queues[k], self.arrivals[k], problem.extract[k], rho[k], caps[k]
                )
                for k in range(K)
            ]
            objective = eta_hat
        else:
            energy = sum(semantic_energy(caps[k], rho[k], cfg.sem) for k in range(K))
            energy += cfg.slot_duration * power_sum
            eta = 0.0 if energy <= 0.0 else s_o / energy
            ledger = rho * self.arrivals
            eta_hat = (
                0.0
                if energy <= 0.0
                else float(np.sum(np.minimum(caps, ledger) / rho)) / energy
            )
            new_queues = [
                step_realtime_queue(self.queues[k], self.arrivals[k], caps[k], rho[k])
                for k in range(K)
            ]
            objective = eta

        penalty = sum(
            delay_window_penalty(q, cfg.b_max, cfg.penalty_weight, cfg.penalty_hinge)
            for q in new_queues
        )
        reward = objective - penalty

        record = {
            "slot": self.slot,
            "reward": reward,
            "eta": eta,
            "eta_hat": eta_hat,
            "sum_capacity": s_o,
            "energy": energy,
            "power_sum": power_sum,
            "penalty": penalty,
            "mode": action.mode,
            "feasible": sol.feasible,
            "violation": sol.violation,
            "rho": rho.copy(),
            "capacities": caps.copy(),
            "raw": np.array([q.raw_backlog for q in new_queues]),
            "sem": np.array([q.sem_backlog for q in new_queues]),
            "arrivals": self.arrivals.copy(),
            "targets": targets,
        }

        self.queues = new_queues
        self.rho = rho
        self.order = action.order
        self.phases = phases
        self.power = sol.profile.power
        self.slot += 1
        done = self.slot >= cfg.episode_len
        self.state = self._draw_channels()
        self.arrivals = self._draw_arrivals()
        return self.observe(), reward, done, record


def run_policy(env: SemNomaEnv, policy_fn, num_slots: int, seed: int | None = None) -> EpisodeTrace:
    """Roll a policy function (obs, env) -> SlotAction for num_slots slots.

    Episode boundaries reset queues but keep the same placement seed stream.
    """
    obs = env.reset(seed)
    trace = EpisodeTrace(num_su=env.config.num_su)
    for _ in range(num_slots):
        tic = time.perf_counter()
        action = policy_fn(obs, env)
        decide_seconds = time.perf_counter() - tic
        obs, _, done, record = env.step(action)
        record["decide_seconds"] = decide_seconds
        trace.add(record)
        if done:
            obs = env.reset(env.seed + 1)
    return trace
