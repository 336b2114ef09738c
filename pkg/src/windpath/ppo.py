"""Actor-critic PPO: clipped surrogate updates, GAE, decaying learning
rates, and rolling-sigma reward normalization.

Networks and gradients live in nets.py; this module owns the algorithm.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .environment import N_ACTIONS, OBS_SIZE
from .nets import MLP, Adam, log_softmax, softmax

POLICY_MAGIC = b"APOL"
POLICY_VERSION = 1


class PolicyFormatError(ValueError):
    """Malformed policy file."""


@dataclass
class TrainerConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    entropy_coef: float = 0.01
    anneal_entropy: bool = True  # decay entropy_coef on the lr schedule
    actor_lr: float = 1e-4
    critic_lr: float = 3e-4
    rollout_length: int = 4096
    minibatch_size: int = 256
    epochs: int = 10
    total_episodes: int = 20_000
    max_total_steps: int | None = None  # learning-rate decay horizon
    hidden: tuple[int, int] = (128, 128)
    dropout: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be > 0")
        if self.rollout_length % self.minibatch_size != 0:
            raise ValueError("rollout_length must be divisible by minibatch_size")


def lr_at(step: int, total: int, lr0: float) -> float:
    """Linear decay from lr0 at step 0 to 0 at step == total."""
    if not 0 <= step <= total:
        raise ValueError(f"step {step} outside [0, {total}]")
    return lr0 * (1.0 - step / total)


class RolloutBuffer:
    """Fixed-capacity on-policy storage; one update consumes a full buffer."""

    def __init__(self, capacity: int, obs_size: int = OBS_SIZE):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_size), dtype=np.float32)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.logps = np.zeros(capacity, dtype=np.float64)
        self.values = np.zeros(capacity, dtype=np.float64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.dones = np.zeros(capacity, dtype=np.float64)
        self.pos = 0

    def add(self, obs, action, logp, value, reward, done) -> None:
        if self.full:
            raise RuntimeError("buffer full")
        i = self.pos
        self.obs[i] = obs
        self.actions[i] = action
        self.logps[i] = logp
        self.values[i] = value
        self.rewards[i] = reward
        self.dones[i] = float(done)
        self.pos += 1

    @property
    def full(self) -> bool:
        return self.pos >= self.capacity

    def reset(self) -> None:
        self.pos = 0


def gae(rewards, values, dones, bootstrap_value, gamma, lam):
    """Backward GAE recursion. Returns (advantages, returns), unstandardized;
    the update standardizes advantages per batch."""
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    if not (len(rewards) == len(values) == len(dones)):
        raise ValueError("rewards, values, dones must have equal length")
    n = len(rewards)
    adv = np.zeros(n, dtype=np.float64)
    last = 0.0
    next_value = float(bootstrap_value)
    for t in range(n - 1, -1, -1):
        nonterm = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * nonterm - values[t]
        last = delta + gamma * lam * nonterm * last
        adv[t] = last
        next_value = values[t]
    return adv, adv + values


class RewardNormalizer:
    """Rolling discounted return tracker; rewards are divided by the running
    standard deviation of the discounted accumulator."""

    def __init__(self, gamma: float):
        self.gamma = gamma
        self.accumulator = 0.0
        # Welford running variance over accumulator samples
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    @property
    def sigma(self) -> float:
        # the running std starts at 1 so early rewards pass through unscaled
        if self.count < 2:
            return 1.0
        return float(np.sqrt(self.m2 / self.count))

    def normalize(self, r: float) -> float:
        self.accumulator = self.gamma * self.accumulator + r
        self.count += 1
        delta = self.accumulator - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (self.accumulator - self.mean)
        return r / (self.sigma + 1e-8)

    def episode_end(self) -> None:
        # sigma statistics persist across episodes, the accumulator does not
        self.accumulator = 0.0


@dataclass
class LossStats:
    actor_loss: float
    critic_loss: float
    entropy: float
    clip_fraction: float
    approx_kl: float


class PPOAgent:
    """Actor + critic with separate Adam optimizers."""

    def __init__(self, config: TrainerConfig, obs_size: int = OBS_SIZE,
                 n_actions: int = N_ACTIONS):
        self.config = config
        self.obs_size = obs_size
        self.n_actions = n_actions
        self.rng = np.random.default_rng(config.seed)
        dims_a = [obs_size, *config.hidden, n_actions]
        dims_c = [obs_size, *config.hidden, 1]
        self.actor = MLP(dims_a, self.rng, dropout=config.dropout, out_scale=0.01)
        self.critic = MLP(dims_c, self.rng, dropout=config.dropout)
        self.actor_opt = Adam(self.actor.parameters())
        self.critic_opt = Adam(self.critic.parameters())
        self.global_step = 0

    # -- acting ---------------------------------------------------------------

    def act(self, obs, mode: str = "sample"):
        """Returns (action index, log-prob, value). Dropout stays off here so
        rollout log-probs match the distribution the update reconstructs."""
        logits = self.actor.forward_infer(obs)
        if not np.all(np.isfinite(logits)):
            raise FloatingPointError("non-finite actor logits (training diverged?)")
        logp_all = log_softmax(logits)
        if mode == "greedy":
            a = int(np.argmax(logits))
        elif mode == "sample":
            p = np.exp(logp_all)
            cdf = np.cumsum(p)
            a = int(np.searchsorted(cdf, self.rng.random() * cdf[-1]))
            a = min(a, self.n_actions - 1)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        value = self.critic.forward_infer(obs)
        return a, float(logp_all[a]), float(value[0])

    def value(self, obs) -> float:
        v = self.critic.forward_infer(obs)
        return float(v[0])

    # -- losses (shared by update and by the finite-difference checks) --------

    def actor_loss_and_grads(self, obs, actions, logp_old, adv, train=False,
                             entropy_coef: float | None = None):
        """Clipped-surrogate + entropy loss; returns (stats dict, grads)."""
        cfg = self.config
        ent_coef = cfg.entropy_coef if entropy_coef is None else entropy_coef
        rng = self.rng if train else None
        logits, cache = self.actor.forward(obs, train=train, rng=rng)
        logits64 = np.asarray(logits, dtype=np.float64)
        p = softmax(logits64)
        logp_all = log_softmax(logits64)
        n, k = p.shape
        idx = np.arange(n)
        logp = logp_all[idx, actions]
        ratio = np.exp(logp - logp_old)
        clipped = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps)
        surr_un = ratio * adv
        surr_cl = clipped * adv
        take_unclipped = surr_un <= surr_cl
        surrogate = np.where(take_unclipped, surr_un, surr_cl)
        entropy = -(p * logp_all).sum(axis=1)
        loss = -surrogate.mean() - ent_coef * entropy.mean()

        # d loss / d logits
        coef = np.where(take_unclipped, ratio * adv, 0.0) / n  # d(-surr)/dlogp
        onehot = np.zeros_like(p)
        onehot[idx, actions] = 1.0
        dlogits = -coef[:, None] * (onehot - p)
        dlogits += ent_coef / n * p * (logp_all + entropy[:, None])
        grads = self.actor.backward(cache, dlogits)

        stats = {
            "loss": float(loss),
            "entropy": float(entropy.mean()),
            "clip_fraction": float(np.mean(~take_unclipped)),
            "approx_kl": float(np.mean(logp_old - logp)),
        }
        return stats, grads

    def critic_loss_and_grads(self, obs, returns, train=False):
        rng = self.rng if train else None
        values, cache = self.critic.forward(obs, train=train, rng=rng)
        v = np.asarray(values, dtype=np.float64)[:, 0]
        err = v - returns
        loss = float(np.mean(err**2))
        dv = (2.0 * err / len(err))[:, None]
        grads = self.critic.backward(cache, dv)
        return loss, grads

    # -- updates ---------------------------------------------------------------

    def update(self, buffer: RolloutBuffer, bootstrap_value: float) -> LossStats:
        """One PPO update over a full buffer: GAE, then epochs of shuffled
        minibatches with linearly decayed learning rates."""
        cfg = self.config
        if not buffer.full:
            raise ValueError("update requires a full rollout buffer")
        adv, returns = gae(buffer.rewards, buffer.values, buffer.dones,
                           bootstrap_value, cfg.gamma, cfg.gae_lambda)
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)

        if cfg.max_total_steps:
            frac_step = min(self.global_step, cfg.max_total_steps)
            a_lr = lr_at(frac_step, cfg.max_total_steps, cfg.actor_lr)
            c_lr = lr_at(frac_step, cfg.max_total_steps, cfg.critic_lr)
            ent = (lr_at(frac_step, cfg.max_total_steps, cfg.entropy_coef)
                   if cfg.anneal_entropy else cfg.entropy_coef)
        else:  # decay horizon unknown: constant rates
            a_lr, c_lr = cfg.actor_lr, cfg.critic_lr
            ent = cfg.entropy_coef

        n = buffer.capacity
        stats = None
        for _ in range(cfg.epochs):
            order = self.rng.permutation(n)
            for start in range(0, n, cfg.minibatch_size):
                mb = order[start:start + cfg.minibatch_size]
                astats, agrads = self.actor_loss_and_grads(
                    buffer.obs[mb], buffer.actions[mb], buffer.logps[mb],
                    adv[mb], train=True, entropy_coef=ent)
                closs, cgrads = self.critic_loss_and_grads(
                    buffer.obs[mb], returns[mb], train=True)
                if not (np.isfinite(astats["loss"]) and np.isfinite(closs)):
                    raise FloatingPointError("non-finite loss, update aborted")
                self.actor_opt.step(agrads, a_lr)
                self.critic_opt.step(cgrads, c_lr)
                stats = LossStats(actor_loss=astats["loss"], critic_loss=closs,
                                  entropy=astats["entropy"],
                                  clip_fraction=astats["clip_fraction"],
                                  approx_kl=astats["approx_kl"])
        self.global_step += n
        buffer.reset()
        return stats

    # -- serialization ----------------------------------------------------------

    def save_policy(self, path) -> None:
        save_policy(path, self.actor, self.critic)

    def load_policy(self, path) -> None:
        load_policy_into(path, self.actor, self.critic)


def _write_net(f, net: MLP) -> None:
    f.write(struct.pack("<I", len(net.dims)))
    f.write(struct.pack(f"<{len(net.dims)}I", *net.dims))
    for p in net.parameters():
        f.write(np.ascontiguousarray(p, dtype="<f4").tobytes())


def save_policy(path, actor: MLP, critic: MLP) -> None:
    """Binary policy file: magic 'APOL', version, then the actor and critic
    as a dimension list followed by float32 parameters in layer order."""
    with open(path, "wb") as f:
        f.write(POLICY_MAGIC)
        f.write(struct.pack("<I", POLICY_VERSION))
        _write_net(f, actor)
        _write_net(f, critic)


def _read_net(buf, offset, net: MLP):
    (ndims,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    dims = struct.unpack_from(f"<{ndims}I", buf, offset)
    offset += 4 * ndims
    if list(dims) != net.dims:
        raise PolicyFormatError(f"network dims {list(dims)} != expected {net.dims}")
    arrays = []
    for p in net.parameters():
        nbytes = p.size * 4
        if offset + nbytes > len(buf):
            raise PolicyFormatError("truncated parameter payload")
        arr = np.frombuffer(buf, dtype="<f4", count=p.size, offset=offset)
        arrays.append(arr.reshape(p.shape))
        offset += nbytes
    net.set_parameters(arrays)
    return offset


def load_policy_into(path, actor: MLP, critic: MLP) -> None:
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:4] != POLICY_MAGIC:
        raise PolicyFormatError(f"bad magic {buf[:4]!r}")
    (version,) = struct.unpack_from("<I", buf, 4)
    if version != POLICY_VERSION:
        raise PolicyFormatError(f"unsupported policy version {version}")
    offset = _read_net(buf, 8, actor)
    offset = _read_net(buf, offset, critic)
    if offset != len(buf):
        raise PolicyFormatError("trailing bytes in policy file")
