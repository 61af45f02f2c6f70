"""Proximal policy optimization with a hybrid action head.

The actor emits a Gaussian over continuous controls (state-independent log-std),
independent Bernoulli logits for per-SU scheduling flags, and an optional
categorical head for the optimizer-mode pick. The critic is a separate trunk.
Continuous samples are raw; the environment applies the deterministic squash, so
log-probabilities need no change-of-variables term.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)
_MAGIC = b"RNCK"
_VERSION = 1


def _xavier(rng, fan_in, fan_out):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class RunningNorm:
    """Streaming per-dimension mean/variance used to standardize observations.

    Stats advance once per update (on the freshly consumed buffer), never
    during collection, so the log-probs stored at sampling time stay exactly
    reproducible inside the update that consumes them.
    """

    def __init__(self, dim: int):
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.count = 1e-4

    def update(self, x: np.ndarray):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        n = x.shape[0]
        batch_mean = x.mean(axis=0)
        batch_var = x.var(axis=0)
        delta = batch_mean - self.mean
        total = self.count + n
        self.mean = self.mean + delta * n / total
        self.var = (self.var * self.count + batch_var * n
                    + delta ** 2 * self.count * n / total) / total
        self.count = total

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return np.clip((x - self.mean) / np.sqrt(self.var + 1e-8), -8.0, 8.0)


class ReturnScaler:
    """Scales rewards by a running std of the discounted return.

    Keeps value targets O(1) so the shared gradient-norm clip does not starve
    the policy term when raw episode returns are large.
    """

    def __init__(self, gamma: float):
        self.gamma = gamma
        self.ret = 0.0
        self.norm = RunningNorm(1)

    def scale(self, reward: float, done: bool) -> float:
        self.ret = self.gamma * self.ret + reward
        self.norm.update(np.array([self.ret]))
        if done:
            self.ret = 0.0
        return float(reward / np.sqrt(self.norm.var[0] + 1e-8))


@dataclass
class ActionSample:
    cont: np.ndarray            # raw Gaussian draws, squashed by the consumer
    flags: np.ndarray           # binary picks, (n_bin,)
    mode: int                   # categorical pick, -1 when the head is absent
    logprob: float
    value: float


class PolicyNet:
    """Actor-critic with tanh trunks and hybrid heads."""

    def __init__(self, obs_dim: int, n_cont: int, n_bin: int, n_modes: int,
                 hidden: int = 128, seed: int = 0):
        if obs_dim < 1 or n_cont < 0 or n_bin < 0 or n_modes < 0:
            raise ValueError("bad head sizes")
        self.obs_dim, self.n_cont, self.n_bin, self.n_modes = obs_dim, n_cont, n_bin, n_modes
        self.hidden = hidden
        rng = np.random.default_rng(seed)
        self.params: dict[str, Tensor] = {}

        def dense(name, fan_in, fan_out):
            self.params[f"{name}_w"] = Tensor(_xavier(rng, fan_in, fan_out))
            self.params[f"{name}_b"] = Tensor(np.zeros(fan_out))

        dense("a1", obs_dim, hidden)
        dense("a2", hidden, hidden)
        if n_cont:
            dense("mean", hidden, n_cont)
            self.params["logstd"] = Tensor(np.full(n_cont, -0.5))
        if n_bin:
            dense("flag", hidden, n_bin)
        if n_modes:
            dense("mode", hidden, n_modes)
        dense("c1", obs_dim, hidden)
        dense("c2", hidden, hidden)
        dense("value", hidden, 1)
        self.obs_rms = RunningNorm(obs_dim)

    def param_list(self):
        return [self.params[k] for k in sorted(self.params)]

    # -- numpy-only forward passes used for sampling --

    def _np_dense(self, name, x):
        return x @ self.params[f"{name}_w"].data + self.params[f"{name}_b"].data

    def actor_heads(self, obs: np.ndarray):
        obs = self.obs_rms.normalize(obs)
        h = np.tanh(self._np_dense("a1", obs))
        h = np.tanh(self._np_dense("a2", h))
        mean = self._np_dense("mean", h) if self.n_cont else np.zeros((obs.shape[0], 0))
        flag_logits = self._np_dense("flag", h) if self.n_bin else np.zeros((obs.shape[0], 0))
        mode_logits = self._np_dense("mode", h) if self.n_modes else None
        return mean, flag_logits, mode_logits

    def value(self, obs: np.ndarray) -> np.ndarray:
        obs = self.obs_rms.normalize(obs)
        h = np.tanh(self._np_dense("c1", obs))
        h = np.tanh(self._np_dense("c2", h))
        return self._np_dense("value", h)[:, 0]

    # -- tape forward passes used by the update --

    def _t_dense(self, name, x: Tensor) -> Tensor:
        return ad.add(ad.matmul(x, self.params[f"{name}_w"]), self.params[f"{name}_b"])

    def logprob_entropy(self, obs, cont, flags, modes):
        """Differentiable per-sample log-probability and entropy of stored actions."""
        x = Tensor(self.obs_rms.normalize(obs))
        h = ad.tanh(self._t_dense("a1", x))
        h = ad.tanh(self._t_dense("a2", h))
        batch = obs.shape[0]
        logp = Tensor(np.zeros(batch))
        entropy = Tensor(np.zeros(batch))
        if self.n_cont:
            mean = self._t_dense("mean", h)
            logstd = self.params["logstd"]
            inv_std = ad.exp(ad.mul(logstd, -1.0))
            z = ad.mul(ad.add(Tensor(cont), ad.mul(mean, -1.0)), inv_std)
            per = ad.add(ad.mul(ad.square(z), -0.5), ad.mul(logstd, -1.0))
            logp = ad.add(logp, ad.add(ad.sum_axis(per, 1), -self.n_cont * _HALF_LOG_2PI))
            ent_cont = float(self.n_cont) * (0.5 + _HALF_LOG_2PI)
            entropy = ad.add(entropy, ad.add(ad.mul(ad.total(logstd), np.ones(batch)), ent_cont))
        if self.n_bin:
            zf = self._t_dense("flag", h)
            y = np.asarray(flags, dtype=np.float64)
            pos = ad.mul(ad.softplus(ad.mul(zf, -1.0)), y)
            neg = ad.mul(ad.softplus(zf), 1.0 - y)
            logp = ad.add(logp, ad.mul(ad.sum_axis(ad.add(pos, neg), 1), -1.0))
            p = ad.sigmoid(zf)
            hterm = ad.add(
                ad.mul(p, ad.softplus(ad.mul(zf, -1.0))),
                ad.mul(ad.add(ad.mul(p, -1.0), 1.0), ad.softplus(zf)),
            )
            entropy = ad.add(entropy, ad.sum_axis(hterm, 1))
        if self.n_modes:
            lsm = ad.log_softmax(self._t_dense("mode", h))
            logp = ad.add(logp, ad.gather_rows(lsm, modes))
            entropy = ad.add(entropy, ad.mul(ad.sum_axis(ad.mul(ad.exp(lsm), lsm), 1), -1.0))
        return logp, entropy

    def value_tensor(self, obs) -> Tensor:
        x = Tensor(self.obs_rms.normalize(obs))
        h = ad.tanh(self._t_dense("c1", x))
        h = ad.tanh(self._t_dense("c2", h))
        return self._t_dense("value", h)

    def clamp_logstd(self):
        if "logstd" in self.params:
            np.clip(self.params["logstd"].data, LOG_STD_MIN, LOG_STD_MAX,
                    out=self.params["logstd"].data)

    def snapshot(self) -> dict:
        return {k: v.data.copy() for k, v in self.params.items()}

    def restore(self, snap: dict):
        for k, v in snap.items():
            self.params[k].data = v.copy()


def act(policy: PolicyNet, obs: np.ndarray, rng: np.random.Generator,
        deterministic: bool = False) -> ActionSample:
    """Sample (or take the mode of) the hybrid action for one observation."""
    obs2 = np.asarray(obs, dtype=np.float64).reshape(1, -1)
    if obs2.shape[1] != policy.obs_dim:
        raise ValueError(f"expected obs of length {policy.obs_dim}, got {obs2.shape[1]}")
    mean, flag_logits, mode_logits = policy.actor_heads(obs2)
    logp = 0.0
    if policy.n_cont:
        logstd = np.clip(policy.params["logstd"].data, LOG_STD_MIN, LOG_STD_MAX)
        std = np.exp(logstd)
        if deterministic:
            cont = mean[0].copy()
        else:
            cont = mean[0] + std * rng.standard_normal(policy.n_cont)
        z = (cont - mean[0]) / std
        logp += float(np.sum(-0.5 * z ** 2 - logstd - _HALF_LOG_2PI))
    else:
        cont = np.zeros(0)
    if policy.n_bin:
        p = 1.0 / (1.0 + np.exp(-flag_logits[0]))
        if deterministic:
            flags = (p >= 0.5).astype(int)
        else:
            flags = (rng.random(policy.n_bin) < p).astype(int)
        logp += float(np.sum(np.where(flags == 1,
                                      -np.logaddexp(0.0, -flag_logits[0]),
                                      -np.logaddexp(0.0, flag_logits[0]))))
    else:
        flags = np.zeros(0, dtype=int)
    mode = -1
    if policy.n_modes:
        z = mode_logits[0] - np.max(mode_logits[0])
        probs = np.exp(z) / np.sum(np.exp(z))
        if deterministic:
            mode = int(np.argmax(probs))
        else:
            mode = int(rng.choice(policy.n_modes, p=probs))
        logp += float(np.log(probs[mode]))
    value = float(policy.value(obs2)[0])
    return ActionSample(cont=cont, flags=flags, mode=mode, logprob=logp, value=value)


@dataclass
class RolloutBuffer:
    capacity: int
    obs: list = field(default_factory=list)
    cont: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    logprobs: list = field(default_factory=list)
    values: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    dones: list = field(default_factory=list)

    def add(self, obs, sample: ActionSample, reward: float, done: bool):
        if self.full:
            raise ValueError("buffer already full")
        self.obs.append(np.asarray(obs, dtype=np.float64))
        self.cont.append(sample.cont)
        self.flags.append(sample.flags)
        self.modes.append(sample.mode)
        self.logprobs.append(sample.logprob)
        self.values.append(sample.value)
        self.rewards.append(float(reward))
        self.dones.append(bool(done))

    @property
    def size(self) -> int:
        return len(self.rewards)

    @property
    def full(self) -> bool:
        return self.size >= self.capacity

    def clear(self):
        for name in ("obs", "cont", "flags", "modes", "logprobs", "values",
                     "rewards", "dones"):
            getattr(self, name).clear()


def compute_gae(rewards, values, dones, last_value: float,
                gamma: float = 0.99, lam: float = 0.95):
    """Generalized advantage estimates and returns for one rollout segment."""
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    n = len(rewards)
    if not (len(values) == len(dones) == n):
        raise ValueError("mismatched rollout lengths")
    advantages = np.zeros(n)
    acc = 0.0
    for t in range(n - 1, -1, -1):
        next_value = last_value if t == n - 1 else values[t + 1]
        cont = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * cont * next_value - values[t]
        acc = delta + gamma * lam * cont * acc
        advantages[t] = acc
    return advantages, advantages + values


def update(policy: PolicyNet, buffer: RolloutBuffer, optimizer: ad.Adam,
           rng: np.random.Generator, last_value: float = 0.0,
           gamma: float = 0.99, gae_lambda: float = 0.95, clip_ratio: float = 0.2,
           entropy_coef: float = 0.01, value_coef: float = 0.5,
           epochs: int = 4, minibatch: int = 32, grad_clip: float = 0.5) -> dict:
    """One PPO update over a full buffer. Returns aggregate metrics.

    A non-finite loss aborts the update and restores the pre-update parameters.
    """
    if not buffer.full:
        raise ValueError("update requires a full buffer")
    obs = np.stack(buffer.obs)
    cont = np.stack(buffer.cont) if policy.n_cont else np.zeros((buffer.size, 0))
    flags = np.stack(buffer.flags) if policy.n_bin else np.zeros((buffer.size, 0))
    modes = np.asarray(buffer.modes, dtype=int)
    old_logp = np.asarray(buffer.logprobs)
    advantages, returns = compute_gae(
        buffer.rewards, buffer.values, buffer.dones, last_value, gamma, gae_lambda
    )
    advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)

    snap = policy.snapshot()
    opt_state = (optimizer.step_count, [m.copy() for m in optimizer.m],
                 [v.copy() for v in optimizer.v])
    metrics = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "grad_norm": 0.0}
    batches = 0
    for _ in range(epochs):
        perm = rng.permutation(buffer.size)
        for start in range(0, buffer.size, minibatch):
            idx = perm[start:start + minibatch]
            logp, entropy = policy.logprob_entropy(obs[idx], cont[idx], flags[idx], modes[idx])
            ratio = ad.exp(ad.add(logp, -old_logp[idx]))
            adv = advantages[idx]
            clipped = ad.minimum(ad.maximum(ratio, 1.0 - clip_ratio), 1.0 + clip_ratio)
            surr = ad.minimum(ad.mul(ratio, adv), ad.mul(clipped, adv))
            policy_loss = ad.mul(ad.mean(surr), -1.0)
            v_pred = policy.value_tensor(obs[idx])
            value_loss = ad.mean(ad.square(ad.add(v_pred, -returns[idx].reshape(-1, 1))))
            ent = ad.mean(entropy)
            loss = ad.add(
                ad.add(policy_loss, ad.mul(value_loss, value_coef)),
                ad.mul(ent, -entropy_coef),
            )
            if not np.isfinite(loss.data):
                policy.restore(snap)
                optimizer.step_count = opt_state[0]
                optimizer.m = [m.copy() for m in opt_state[1]]
                optimizer.v = [v.copy() for v in opt_state[2]]
                metrics["aborted"] = True
                return metrics
            optimizer.zero_grad()
            loss.backward()
            norm = ad.clip_grad_norm(optimizer.params, grad_clip)
            optimizer.step()
            policy.clamp_logstd()
            metrics["policy_loss"] += float(policy_loss.data)
            metrics["value_loss"] += float(value_loss.data)
            metrics["entropy"] += float(ent.data)
            metrics["grad_norm"] += norm
            batches += 1
    for key in metrics:
        metrics[key] /= max(batches, 1)
    metrics["aborted"] = False
    for p in policy.param_list():
        if not np.all(np.isfinite(p.data)):
            policy.restore(snap)
            metrics["aborted"] = True
            break
    if not metrics["aborted"]:
        policy.obs_rms.update(obs)
    return metrics


# -- checkpoint io: magic, version, count, then length-prefixed named arrays --

def save_checkpoint(path: str, policy: PolicyNet):
    meta = {
        "_meta_obs_dim": np.array([policy.obs_dim], dtype=np.float64),
        "_meta_heads": np.array(
            [policy.n_cont, policy.n_bin, policy.n_modes, policy.hidden], dtype=np.float64
        ),
        "_norm_mean": policy.obs_rms.mean,
        "_norm_var": policy.obs_rms.var,
        "_norm_count": np.array([policy.obs_rms.count], dtype=np.float64),
    }
    arrays = dict(meta)
    arrays.update({k: v.data for k, v in policy.params.items()})
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(arrays)))
        for name in sorted(arrays):
            data = np.ascontiguousarray(arrays[name], dtype=np.float64)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", data.ndim))
            for dim in data.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(data.tobytes())


def load_checkpoint(path: str) -> PolicyNet:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a policy checkpoint")
        version, count = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        arrays = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = tuple(struct.unpack("<I", fh.read(4))[0] for _ in range(ndim))
            size = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(size * 8), dtype="<f8").reshape(shape)
            arrays[name] = data.copy()
    obs_dim = int(arrays.pop("_meta_obs_dim")[0])
    n_cont, n_bin, n_modes, hidden = (int(x) for x in arrays.pop("_meta_heads"))
    policy = PolicyNet(obs_dim, n_cont, n_bin, n_modes, hidden=hidden, seed=0)
    policy.obs_rms.mean = arrays.pop("_norm_mean").copy()
    policy.obs_rms.var = arrays.pop("_norm_var").copy()
    policy.obs_rms.count = float(arrays.pop("_norm_count")[0])
    expected = set(policy.params)
    if set(arrays) != expected:
        raise ValueError("checkpoint parameter names do not match the architecture")
    for name, data in arrays.items():
        if policy.params[name].data.shape != data.shape:
            raise ValueError(f"shape mismatch for {name}")
        policy.params[name].data = data
    return policy
