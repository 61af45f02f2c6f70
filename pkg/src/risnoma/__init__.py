"""RIS-assisted semantic NOMA uplink: simulator, per-slot optimizers, and PPO harness."""

__version__ = "0.1.0"
