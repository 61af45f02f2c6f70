"""Simulation configuration with defaults matching the standard parameter table.

All traffic quantities are in Kbit; the bandwidth factor rescales the rate
formula so that per-slot capacities land in the same unit. Powers are stored in
dBm and exposed in watts.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

try:
    import tomllib
except ImportError:  # python 3.10
    import tomli as tomllib

from .channel import FadingParams, Geometry
from .semantic import SemanticParams


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class PpoConfig:
    lr: float = 2e-4
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_ratio: float = 0.2
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    epochs: int = 4
    minibatch: int = 32
    buffer_size: int = 128
    hidden: int = 128
    grad_clip: float = 0.5
    train_steps: int = 30000

    def __post_init__(self):
        if self.buffer_size % self.minibatch != 0:
            raise ValueError("buffer_size must be a multiple of minibatch")
        if not (0.0 < self.gamma <= 1.0 and 0.0 <= self.gae_lambda <= 1.0):
            raise ValueError("discount factors out of range")


@dataclass(frozen=True)
class SimConfig:
    num_su: int = 3
    num_elements: int = 70
    ap_position: tuple = (0.0, 0.0)
    ris_position: tuple = (5.0, 0.0)
    su_center: tuple = (7.0, 1.5)
    su_scatter: float = 0.6
    fading: FadingParams = field(default_factory=FadingParams)
    sem: SemanticParams = field(default_factory=SemanticParams)
    p_max_dbm: float = 40.0
    noise_dbm: float = -90.0
    slot_duration: float = 1.0
    bandwidth: float = 0.05
    s_min: float = 0.1
    b_max: float = 3.0
    penalty_weight: float = 0.1
    window_len: int = 20
    penalty_hinge: bool = True
    arrival_mean: float = 1.0
    arrival_std_frac: float = 0.2
    episode_len: int = 200
    d_max: float = 2.0
    z_max: float = 2.0
    quantize_bits: int = 0
    gain_scale: float = 1e-5
    deferrable: bool = True
    eps_converge: float = 1e-3
    ppo: PpoConfig = field(default_factory=PpoConfig)

    def __post_init__(self):
        if self.num_su < 1 or self.num_elements < 1:
            raise ValueError("need at least one SU and one element")
        if self.bandwidth <= 0 or self.slot_duration <= 0:
            raise ValueError("bandwidth and slot duration must be positive")
        if self.s_min <= 0 or self.b_max <= 0:
            raise ValueError("s_min and b_max must be positive")

    @property
    def p_max(self) -> float:
        return dbm_to_watt(self.p_max_dbm)

    @property
    def noise_power(self) -> float:
        return dbm_to_watt(self.noise_dbm)

    def geometry(self, su_positions) -> Geometry:
        return Geometry(
            ap_position=tuple(self.ap_position),
            ris_position=tuple(self.ris_position),
            su_positions=tuple(tuple(p) for p in su_positions),
        )


def _build_sub(cls, data: dict, context: str):
    valid = {f.name for f in fields(cls)}
    unknown = set(data) - valid
    if unknown:
        raise ValueError(f"unknown {context} keys: {sorted(unknown)}")
    return cls(**data)


def load_config(path: str) -> SimConfig:
    """Load a SimConfig from a TOML file; unknown keys are rejected."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> SimConfig:
    raw = dict(raw)
    sub = {}
    if "fading" in raw:
        sub["fading"] = _build_sub(FadingParams, raw.pop("fading"), "fading")
    if "semantic" in raw:
        sub["sem"] = _build_sub(SemanticParams, raw.pop("semantic"), "semantic")
    if "ppo" in raw:
        sub["ppo"] = _build_sub(PpoConfig, raw.pop("ppo"), "ppo")
    for key in ("ap_position", "ris_position", "su_center"):
        if key in raw:
            raw[key] = tuple(raw[key])
    valid = {f.name for f in fields(SimConfig)}
    unknown = set(raw) - valid
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return SimConfig(**raw, **sub)


def config_to_dict(config: SimConfig) -> dict:
    out = asdict(config)
    out["semantic"] = out.pop("sem")
    return out
