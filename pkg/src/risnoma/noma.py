"""Uplink SIC capacities under an arbitrary decoding order, plus minimal power control.

A decoding order is a permutation: the SU decoded first sees every later SU as
interference, the SU decoded last is interference-free. Summing the per-SU
capacities telescopes to a closed-form sum capacity that is order-invariant,
which is the main bookkeeping oracle used by the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DecodingOrder:
    """Permutation over SUs as ranks plus the pairwise precedence matrix.

    ``priority[k]`` is SU k's rank (lower decodes earlier); ``pi[k, kp] == 1``
    means SU k is decoded earlier and treats SU kp as interference.
    """

    priority: np.ndarray          # (K,) int
    pi: np.ndarray = field(init=False)  # (K, K) int

    def __post_init__(self):
        ranks = np.asarray(self.priority, dtype=int)
        object.__setattr__(self, "priority", ranks)
        pos = position_in_sequence(ranks)
        pi = (pos[:, None] < pos[None, :]).astype(int)
        np.fill_diagonal(pi, 0)
        object.__setattr__(self, "pi", pi)

    @property
    def num_su(self) -> int:
        return self.priority.shape[0]

    def decode_sequence(self) -> np.ndarray:
        """SU indices in the order the receiver decodes them."""
        return np.lexsort((np.arange(self.num_su), self.priority))


def position_in_sequence(ranks: np.ndarray) -> np.ndarray:
    """Position of each SU in the decode sequence; rank ties break by SU index."""
    seq = np.lexsort((np.arange(len(ranks)), np.asarray(ranks)))
    pos = np.empty(len(ranks), dtype=int)
    pos[seq] = np.arange(len(ranks))
    return pos


def order_from_priorities(ranks) -> DecodingOrder:
    """Build the precedence structure from transmission priorities (ties by SU index)."""
    return DecodingOrder(priority=np.asarray(ranks, dtype=int))


@dataclass(frozen=True)
class TransmitProfile:
    """Per-SU transmit powers in watts and binary scheduling flags."""

    power: np.ndarray      # (K,) float
    schedule: np.ndarray   # (K,) int, 1 = transmitting

    def __post_init__(self):
        object.__setattr__(self, "power", np.asarray(self.power, dtype=float))
        object.__setattr__(self, "schedule", np.asarray(self.schedule, dtype=int))


def _validate(power: np.ndarray, noise_power: float):
    if np.any(power < 0):
        raise ValueError("transmit power must be non-negative")
    if noise_power <= 0:
        raise ValueError("noise power must be positive")


def su_capacity(
    h: np.ndarray,
    profile: TransmitProfile,
    order: DecodingOrder,
    noise_power: float,
    slot_duration: float,
    su: int,
    bandwidth: float = 1.0,
) -> float:
    """Capacity of one SU under SIC, in traffic units per slot.

    Interference comes only from SUs that are both scheduled and decoded later.
    A descheduled SU has zero capacity and contributes no interference anywhere.
    """
    _validate(profile.power, noise_power)
    if profile.schedule[su] == 0:
        return 0.0
    gains = np.abs(h) ** 2
    recv = gains * profile.power * profile.schedule
    interference = float(order.pi[su] @ recv)
    sinr = recv[su] / (interference + noise_power)
    return bandwidth * slot_duration * np.log2(1.0 + sinr)


def all_capacities(
    h, profile, order, noise_power, slot_duration, bandwidth: float = 1.0
) -> np.ndarray:
    """Vector of su_capacity over all SUs."""
    return np.array(
        [
            su_capacity(h, profile, order, noise_power, slot_duration, k, bandwidth)
            for k in range(order.num_su)
        ]
    )


def sum_capacity(
    h, profile: TransmitProfile, noise_power: float, slot_duration: float, bandwidth: float = 1.0
) -> float:
    """Order-invariant sum capacity of all scheduled SUs."""
    _validate(profile.power, noise_power)
    gains = np.abs(np.asarray(h)) ** 2
    total = float(np.sum(gains * profile.power * profile.schedule))
    return bandwidth * slot_duration * np.log2(1.0 + total / noise_power)


def rate_to_sinr(target: float, s_min: float, slot_duration: float, bandwidth: float = 1.0) -> float:
    """SINR needed to carry max(target, s_min) traffic units in one slot."""
    return 2.0 ** (max(target, s_min) / (bandwidth * slot_duration)) - 1.0


@dataclass(frozen=True)
class PowerSolution:
    """Power-control result; ``violation`` is the total watts clipped at p_max."""

    profile: TransmitProfile
    feasible: bool
    violation: float


def min_power_for_targets(
    h,
    order: DecodingOrder,
    targets,
    noise_power: float,
    slot_duration: float,
    p_max: float,
    s_min: float,
    bandwidth: float = 1.0,
    schedule=None,
) -> PowerSolution:
    """Back-substitute the SINR chain from the last-decoded SU upward.

    Each scheduled SU gets the minimal power meeting its SINR requirement given
    the interference of the already-fixed later-decoded SUs. Powers above p_max
    are clipped and reported as a violation so callers can rank or fall back;
    the clipped chain stays physically consistent.
    """
    h = np.asarray(h)
    targets = np.asarray(targets, dtype=float)
    K = h.shape[0]
    if np.any(targets < 0):
        raise ValueError("targets must be non-negative")
    if schedule is None:
        schedule = np.ones(K, dtype=int)
    schedule = np.asarray(schedule, dtype=int)
    if not schedule.any():
        raise ValueError("power control needs a nonempty active set")

    gains = np.abs(h) ** 2
    power = np.zeros(K)
    violation = 0.0
    interference = 0.0  # received power of later-decoded scheduled SUs
    for su in reversed(order.decode_sequence()):
        if schedule[su] == 0:
            continue
        omega = rate_to_sinr(targets[su], s_min, slot_duration, bandwidth)
        need = omega * (interference + noise_power) / gains[su]
        if need > p_max:
            violation += need - p_max
            need = p_max
        power[su] = need
        interference += gains[su] * need
    profile = TransmitProfile(power=power, schedule=schedule)
    return PowerSolution(profile=profile, feasible=violation == 0.0, violation=violation)
