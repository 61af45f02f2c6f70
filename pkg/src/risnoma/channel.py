"""Rician-faded links on a fixed uplink geometry and the RIS-composed equivalent channel.

The surface is modeled as a uniform linear array of L passive elements centered at
``ris_position`` and spaced half a wavelength apart along y, so every element has its
own deterministic line-of-sight phase. Each link is a Rician mixture of that LoS
phasor and circularly symmetric Gaussian scatter, normalized to unit mean power,
then scaled by a log-distance pathloss amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Geometry:
    """AP, RIS-center, and SU coordinates in meters (2-D)."""

    ap_position: tuple[float, float]
    ris_position: tuple[float, float]
    su_positions: tuple[tuple[float, float], ...]

    @property
    def num_su(self) -> int:
        return len(self.su_positions)


@dataclass(frozen=True)
class FadingParams:
    """Log-distance pathloss and Rician small-scale parameters.

    ``pathloss_at_ref`` is the power gain in dB at 1 m; exponents are per link class.
    Rician factors are linear ratios (0 means pure Rayleigh scatter). ``wavelength``
    sets the LoS phase progression and the array element spacing.
    """

    pathloss_at_ref: float = -30.0
    exponent_direct: float = 3.5
    exponent_ap_ris: float = 2.2
    exponent_ris_su: float = 2.2
    rician_k_direct: float = 0.0
    rician_k_ris: float = 3.0
    wavelength: float = 0.06

    def __post_init__(self):
        if min(self.exponent_direct, self.exponent_ap_ris, self.exponent_ris_su) <= 0:
            raise ValueError("pathloss exponents must be positive")
        if min(self.rician_k_direct, self.rician_k_ris) < 0:
            raise ValueError("Rician factors must be non-negative")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")


@dataclass(frozen=True)
class ChannelState:
    """One slot's complex link coefficients.

    ``cascade[k, l]`` is exactly ``h_ap_ris[l] * h_ris_su[k, l]``, the per-element
    reflected path for SU k before any phase shift is applied.
    """

    h_direct: np.ndarray    # (K,) complex
    h_ap_ris: np.ndarray    # (L,) complex
    h_ris_su: np.ndarray    # (K, L) complex
    cascade: np.ndarray     # (K, L) complex

    @property
    def num_su(self) -> int:
        return self.h_direct.shape[0]

    @property
    def num_elements(self) -> int:
        return self.h_ap_ris.shape[0]


def wrap_phase(phi):
    """Wrap angles into [0, 2*pi)."""
    return np.mod(phi, TWO_PI)


def _amplitude(dist: np.ndarray, pathloss_at_ref: float, exponent: float) -> np.ndarray:
    gain_db = pathloss_at_ref - 10.0 * exponent * np.log10(dist)
    return 10.0 ** (gain_db / 20.0)


def _rician(los_phase: np.ndarray, k_factor: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-mean-power small-scale coefficient: deterministic LoS phasor plus CN scatter."""
    shape = np.shape(los_phase)
    los = np.exp(1j * los_phase)
    scatter = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return np.sqrt(k_factor / (k_factor + 1.0)) * los + np.sqrt(1.0 / (k_factor + 1.0)) * scatter


def element_positions(geometry: Geometry, num_elements: int, wavelength: float) -> np.ndarray:
    """Element coordinates (L, 2): half-wavelength linear array along y at the RIS center."""
    spacing = wavelength / 2.0
    offsets = (np.arange(num_elements) - (num_elements - 1) / 2.0) * spacing
    center = np.asarray(geometry.ris_position, dtype=float)
    pos = np.tile(center, (num_elements, 1))
    pos[:, 1] += offsets
    return pos


def sample_channels(
    geometry: Geometry,
    fading: FadingParams,
    rng_seed: int,
    num_elements: int,
) -> ChannelState:
    """Draw one slot's channels. Identical seeds give bitwise-identical states."""
    rng = np.random.default_rng(rng_seed)
    ap = np.asarray(geometry.ap_position, dtype=float)
    sus = np.asarray(geometry.su_positions, dtype=float)
    if sus.ndim != 2 or sus.shape[0] < 1:
        raise ValueError("geometry needs at least one SU")
    if num_elements < 1:
        raise ValueError("need at least one reflecting element")

    elems = element_positions(geometry, num_elements, fading.wavelength)

    d_direct = np.linalg.norm(sus - ap, axis=1)                    # (K,)
    d_ap_ris = np.linalg.norm(elems - ap, axis=1)                  # (L,)
    d_ris_su = np.linalg.norm(sus[:, None, :] - elems[None, :, :], axis=2)  # (K, L)
    if min(d_direct.min(), d_ap_ris.min(), d_ris_su.min()) <= 0.0:
        raise ValueError("invalid geometry: coincident nodes give zero link distance")

    k = TWO_PI / fading.wavelength
    h_direct = _amplitude(d_direct, fading.pathloss_at_ref, fading.exponent_direct) * _rician(
        -k * d_direct, fading.rician_k_direct, rng
    )
    h_ap_ris = _amplitude(d_ap_ris, fading.pathloss_at_ref, fading.exponent_ap_ris) * _rician(
        -k * d_ap_ris, fading.rician_k_ris, rng
    )
    h_ris_su = _amplitude(d_ris_su, fading.pathloss_at_ref, fading.exponent_ris_su) * _rician(
        -k * d_ris_su, fading.rician_k_ris, rng
    )
    cascade = h_ap_ris[None, :] * h_ris_su
    return ChannelState(h_direct=h_direct, h_ap_ris=h_ap_ris, h_ris_su=h_ris_su, cascade=cascade)


def sample_su_positions(
    center: tuple[float, float], radius: float, num_su: int, rng: np.random.Generator
) -> tuple[tuple[float, float], ...]:
    """Scatter SUs uniformly in a disk around the cluster center."""
    r = radius * np.sqrt(rng.uniform(size=num_su))
    ang = rng.uniform(0.0, TWO_PI, size=num_su)
    xs = center[0] + r * np.cos(ang)
    ys = center[1] + r * np.sin(ang)
    return tuple((float(x), float(y)) for x, y in zip(xs, ys))


def compose_equivalent(state: ChannelState, phases: np.ndarray) -> np.ndarray:
    """Per-SU equivalent channel: cascade summed under the phase shifts plus the direct path."""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (state.num_elements,):
        raise ValueError(
            f"phase vector length {phases.shape} does not match {state.num_elements} elements"
        )
    return state.cascade @ np.exp(1j * phases) + state.h_direct


def aligned_phases(state: ChannelState, target_su: int) -> np.ndarray:
    """Co-phase every reflected path with the target SU's direct path.

    This attains the analytic maximum |h_direct| + sum |cascade| of the target's
    equivalent-channel magnitude. Zero-magnitude terms contribute phase 0.
    """
    if not 0 <= target_su < state.num_su:
        raise ValueError(f"target_su {target_su} out of range")
    direct_arg = np.angle(state.h_direct[target_su])
    return wrap_phase(direct_arg - np.angle(state.cascade[target_su]))


def quantize_phases(phases: np.ndarray, bits: int = 2) -> np.ndarray:
    """Round each phase to the nearest of 2**bits uniform levels in [0, 2*pi)."""
    levels = 2 ** bits
    step = TWO_PI / levels
    return wrap_phase(np.round(np.asarray(phases, dtype=float) / step) * step)
