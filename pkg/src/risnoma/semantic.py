"""Semantic extraction/recovery cost model, energy accounting, and queue dynamics.

Extraction depth rho in [rho_min, 1] relates semantic size to raw size: processing
raw bits at depth rho yields rho * raw semantic bits, at a compute load that grows
as rho shrinks. Queues come in two flavors: a single raw backlog drained by
capacity/rho (extract-and-send-now), and a raw/semantic pair where extraction and
transmission are separate per-slot decisions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class SemanticParams:
    a: float = 100.0          # extraction load coefficient
    b: float = 200.0          # recovery load coefficient
    alpha_e: float = 4.0      # extraction depth exponent
    alpha_r: float = 2.0      # recovery depth exponent
    f: float = 5e8            # SU compute capacity, cycles/s
    g: float = 1e9            # AP compute capacity, cycles/s
    kappa: float = 1e-21      # energy per cycles^2-ish coefficient
    rho_min: float = 0.2

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("load coefficients must be non-negative")
        if self.alpha_e <= 0 or self.alpha_r <= 0:
            raise ValueError("depth exponents must be positive")
        if not 0.0 < self.rho_min <= 1.0:
            raise ValueError("rho_min must lie in (0, 1]")


def _check_rho(rho: float, params: SemanticParams):
    if rho < params.rho_min - 1e-12 or rho > 1.0 + 1e-12:
        raise ValueError(f"extraction depth {rho} outside [{params.rho_min}, 1]")


def extraction_energy(sem_bits: float, rho: float, params: SemanticParams) -> float:
    """Joules spent producing ``sem_bits`` of semantic data at depth rho."""
    _check_rho(rho, params)
    if sem_bits < 0:
        raise ValueError("semantic size must be non-negative")
    return params.kappa * params.f ** 2 * params.a * sem_bits / rho ** params.alpha_e


def recovery_energy(sem_bits: float, rho: float, params: SemanticParams) -> float:
    """Joules the AP spends recovering ``sem_bits`` extracted at depth rho."""
    _check_rho(rho, params)
    if sem_bits < 0:
        raise ValueError("semantic size must be non-negative")
    return params.kappa * params.g ** 2 * params.b * sem_bits / rho ** params.alpha_r


def semantic_energy(capacity: float, rho: float, params: SemanticParams) -> float:
    """Extraction plus recovery energy when the whole capacity is extracted and sent now."""
    return extraction_energy(capacity, rho, params) + recovery_energy(capacity, rho, params)


def total_energy(capacities, rhos, profile, params: SemanticParams, slot_duration: float) -> float:
    """Semantic energy plus transmit energy summed over SUs."""
    capacities = np.asarray(capacities, dtype=float)
    rhos = np.asarray(rhos, dtype=float)
    if capacities.shape != rhos.shape or capacities.shape != profile.power.shape:
        raise ValueError("capacities, depths, and powers must have matching lengths")
    sem = sum(semantic_energy(s, r, params) for s, r in zip(capacities, rhos))
    return sem + slot_duration * float(np.sum(profile.power))


@dataclass(frozen=True)
class QueuePair:
    """Raw and semantic backlogs with a sliding window of recent total backlogs."""

    raw_backlog: float = 0.0
    sem_backlog: float = 0.0
    window: tuple = ()
    window_len: int = 20
    b_max: float = 3.0

    def _push(self, total: float) -> tuple:
        w = self.window + (total,)
        if len(w) > self.window_len:
            w = w[-self.window_len:]
        return w


def step_realtime_queue(q: QueuePair, arrival: float, capacity: float, rho: float) -> QueuePair:
    """Single-buffer dynamics: capacity drains raw data at rate capacity/rho."""
    if rho <= 0:
        raise ValueError("extraction depth must be positive")
    raw = max(q.raw_backlog + arrival - capacity / rho, 0.0)
    return replace(q, raw_backlog=raw, window=q._push(raw + q.sem_backlog))


def step_deferrable_queues(
    q: QueuePair, arrival: float, extract_size: float, rho: float, capacity: float
) -> QueuePair:
    """Dual-buffer dynamics: extraction moves data raw -> semantic, capacity drains semantic.

    Extraction is clamped to the raw data actually present, so backlogs never go negative.
    """
    if extract_size < 0:
        raise ValueError("extract size must be non-negative")
    available = q.raw_backlog + arrival
    d_eff = min(extract_size, available)
    raw = available - d_eff
    sem = max(q.sem_backlog + rho * d_eff - capacity, 0.0)
    return replace(q, raw_backlog=raw, sem_backlog=sem, window=q._push(raw + sem))


def delay_window_penalty(q: QueuePair, b_max: float, lam: float, hinge: bool = True) -> float:
    """Penalty on the windowed-average total backlog exceeding b_max.

    Hinged by default (violation only); the signed variant subtracts the raw
    difference and can go negative for under-filled queues.
    """
    if not q.window:
        raise ValueError("delay window is empty")
    excess = float(np.mean(q.window)) - b_max
    if hinge:
        excess = max(excess, 0.0)
    return lam * excess


def closed_form_rho(capacity: float, arrival: float, rho_min: float) -> float:
    """Depth that minimizes compute energy subject to capacity covering rho * arrival."""
    if arrival <= 0:
        raise ValueError("arrival must be positive")
    return max(min(capacity / arrival, 1.0), rho_min)
