"""Deep deterministic policy gradients: tanh actor, Q critic, soft-updated
target copies, a FIFO replay buffer, and Ornstein-Uhlenbeck exploration.

Actions live in [-1, 1] inside the agent and are scaled to velocity
commands (+-action_scale m/s) only at the boundary to the world.
"""

from dataclasses import dataclass

import numpy as np

from boatland.errors import NumericError
from boatland.neural import (
    AdamState,
    FwdCache,
    Mlp,
    adam_step,
    backward,
    clone,
    forward,
    grads_finite,
    init_mlp,
    read_checkpoint,
    write_checkpoint,
)


@dataclass(frozen=True)
class Hyperparams:
    gamma: float = 0.99
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    tau: float = 1e-3
    buffer_capacity: int = 50000
    batch_size: int = 512
    action_scale: float = 0.25  # m/s
    ou_theta: float = 0.15
    ou_sigma: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0,1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0,1]")
        if self.buffer_capacity < self.batch_size:
            raise ValueError("buffer capacity must be >= batch size")


@dataclass(frozen=True)
class Transition:
    state: np.ndarray  # (4,)
    action: np.ndarray  # (2,) in [-1, 1]
    reward: float
    next_state: np.ndarray  # (4,)
    terminal: bool


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray


class ReplayBuffer:
    """Ring buffer; past capacity the oldest transition is overwritten."""

    def __init__(self, capacity, state_dim=4, action_dim=2):
        self.capacity = int(capacity)
        self._s = np.zeros((capacity, state_dim))
        self._a = np.zeros((capacity, action_dim))
        self._r = np.zeros(capacity)
        self._s2 = np.zeros((capacity, state_dim))
        self._t = np.zeros(capacity, dtype=bool)
        self._next = 0
        self._size = 0

    def __len__(self):
        return self._size

    def store(self, tr: Transition):
        a = np.asarray(tr.action, dtype=np.float64)
        if np.any(np.abs(a) > 1.0 + 1e-12):
            raise ValueError(f"action {a} outside [-1, 1]")
        i = self._next
        self._s[i] = tr.state
        self._a[i] = a
        self._r[i] = tr.reward
        self._s2[i] = tr.next_state
        self._t[i] = tr.terminal
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, rng, n):
        """Uniform with replacement; None while underfull (not ready)."""
        if self._size < n:
            return None
        idx = rng.integers(0, self._size, size=n)
        return Batch(
            states=self._s[idx],
            actions=self._a[idx],
            rewards=self._r[idx],
            next_states=self._s2[idx],
            terminals=self._t[idx],
        )

    def snapshot(self):
        """Transitions oldest-first (test/introspection helper)."""
        order = range(self._size)
        if self._size == self.capacity:
            order = [(self._next + k) % self.capacity for k in order]
        return [
            Transition(
                state=self._s[i].copy(),
                action=self._a[i].copy(),
                reward=float(self._r[i]),
                next_state=self._s2[i].copy(),
                terminal=bool(self._t[i]),
            )
            for i in order
        ]


class OUNoise:
    """Mean-reverting noise, correlated across steps: dx = theta*(mu-x)*dt
    + sigma*sqrt(dt)*N(0,1)."""

    def __init__(self, dim=2, theta=0.15, sigma=0.2, mu=0.0, dt=1.0, x0=None):
        self.dim = dim
        self.theta = theta
        self.sigma = sigma
        self.mu = mu
        self.dt = dt
        self.x0 = np.full(dim, mu) if x0 is None else np.asarray(x0, dtype=float)
        self.x = self.x0.copy()

    def reset(self):
        self.x = self.x0.copy()

    def sample(self, rng):
        self.x = (
            self.x
            + self.theta * (self.mu - self.x) * self.dt
            + self.sigma * np.sqrt(self.dt) * rng.standard_normal(self.dim)
        )
        return self.x.copy()


class Agent:
    def __init__(self, hp: Hyperparams, rng, state_dim=4, action_dim=2,
                 hidden=(300, 200)):
        self.hp = hp
        dims_a = (state_dim,) + tuple(hidden) + (action_dim,)
        dims_c = (state_dim + action_dim,) + tuple(hidden) + (1,)
        acts_hidden = ["relu"] * len(hidden)
        self.actor = init_mlp(dims_a, acts_hidden + ["tanh"], rng)
        self.critic = init_mlp(dims_c, acts_hidden + ["identity"], rng)
        self.actor_target = clone(self.actor)
        self.critic_target = clone(self.critic)
        self.buffer = ReplayBuffer(hp.buffer_capacity, state_dim, action_dim)
        self.noise = OUNoise(dim=action_dim, theta=hp.ou_theta, sigma=hp.ou_sigma)
        self.adam_actor = AdamState.for_net(self.actor)
        self.adam_critic = AdamState.for_net(self.critic)
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.train_steps = 0


def select_action(agent: Agent, state, explore, rng):
    """Returns (raw action in [-1,1], velocity command in +-action_scale).

    Noise is added before the clamp, matching the order 'noise then
    normalization'."""
    raw, _ = forward(agent.actor, np.asarray(state, dtype=np.float64))
    if explore:
        raw = raw + agent.noise.sample(rng)
    raw = np.clip(raw, -1.0, 1.0)
    return raw, agent.hp.action_scale * raw


def soft_update(target: Mlp, main: Mlp, tau) -> Mlp:
    """theta' <- tau*theta + (1-tau)*theta', in place on the target."""
    if len(target.layers) != len(main.layers):
        raise ValueError("network shapes differ")
    for lt, lm in zip(target.layers, main.layers):
        if lt.weights.shape != lm.weights.shape:
            raise ValueError("network shapes differ")
        lt.weights *= 1.0 - tau
        lt.weights += tau * lm.weights
        lt.biases *= 1.0 - tau
        lt.biases += tau * lm.biases
    return target


def td_targets(agent: Agent, batch: Batch):
    """y = r + gamma * (1 - terminal) * Q'(s', mu'(s'))."""
    a2, _ = forward(agent.actor_target, batch.next_states)
    q2, _ = forward(agent.critic_target, np.concatenate([batch.next_states, a2], axis=1))
    mask = 1.0 - batch.terminals.astype(np.float64)
    return batch.rewards[:, None] + agent.hp.gamma * mask[:, None] * q2


def train_step(agent: Agent, rng):
    """One critic + actor update from a uniform batch, then soft updates.

    Both gradient sets are computed against the pre-update parameters and
    validated before anything is applied, so a numeric failure leaves the
    agent untouched. Returns (critic_loss, actor_objective)."""
    batch = agent.buffer.sample(rng, agent.hp.batch_size)
    if batch is None:
        raise ValueError("replay buffer not ready (size below batch size)")
    n = agent.hp.batch_size

    y = td_targets(agent, batch)
    a_pred, cache_a = forward(agent.actor, batch.states)
    # one stacked critic pass covers both the TD error and the actor's Q
    sa = np.concatenate(
        [
            np.concatenate([batch.states, batch.actions], axis=1),
            np.concatenate([batch.states, a_pred], axis=1),
        ],
        axis=0,
    )
    q_both, cache_both = forward(agent.critic, sa)
    q, q_pred = q_both[:n], q_both[n:]
    diff = q - y
    critic_loss = float(np.mean(diff * diff))
    actor_objective = float(np.mean(q_pred))

    cache_c = FwdCache(
        net=agent.critic,
        x=cache_both.x[:n],
        outputs=[a[:n] for a in cache_both.outputs],
        single=False,
    )
    cache_c2 = FwdCache(
        net=agent.critic,
        x=cache_both.x[n:],
        outputs=[a[n:] for a in cache_both.outputs],
        single=False,
    )
    grads_c, _ = backward(agent.critic, cache_c, (2.0 / n) * diff, need_input=False)
    _, dsa = backward(
        agent.critic, cache_c2, np.full((n, 1), 1.0 / n), need_params=False
    )
    da = dsa[:, agent.state_dim :]
    grads_a, _ = backward(agent.actor, cache_a, -da, need_input=False)  # ascend mean Q

    if not (
        np.isfinite(critic_loss)
        and np.isfinite(actor_objective)
        and grads_finite(grads_c)
        and grads_finite(grads_a)
    ):
        raise NumericError("non-finite loss or gradient; step aborted")

    adam_step(agent.critic, grads_c, agent.adam_critic, agent.hp.lr_critic)
    adam_step(agent.actor, grads_a, agent.adam_actor, agent.hp.lr_actor)
    soft_update(agent.actor_target, agent.actor, agent.hp.tau)
    soft_update(agent.critic_target, agent.critic, agent.hp.tau)
    agent.train_steps += 1
    return critic_loss, actor_objective


_NET_NAMES = ("actor", "actor_target", "critic", "critic_target")


def save_agent(path, agent: Agent):
    tensors = {}
    for name in _NET_NAMES:
        net = getattr(agent, name)
        for i, layer in enumerate(net.layers):
            tensors[f"{name}.L{i}.w"] = layer.weights
            tensors[f"{name}.L{i}.b"] = layer.biases
    hp = agent.hp
    tensors["meta"] = np.array(
        [
            agent.train_steps,
            hp.gamma,
            hp.lr_actor,
            hp.lr_critic,
            hp.tau,
            hp.buffer_capacity,
            hp.batch_size,
            hp.action_scale,
            hp.ou_theta,
            hp.ou_sigma,
        ],
        dtype=np.float64,
    )
    write_checkpoint(path, tensors)


def load_agent(path) -> Agent:
    tensors = read_checkpoint(path)
    meta = tensors.get("meta")
    if meta is None or meta.shape != (10,):
        raise ValueError(f"{path}: missing or malformed meta tensor")
    hp = Hyperparams(
        gamma=float(meta[1]),
        lr_actor=float(meta[2]),
        lr_critic=float(meta[3]),
        tau=float(meta[4]),
        buffer_capacity=int(meta[5]),
        batch_size=int(meta[6]),
        action_scale=float(meta[7]),
        ou_theta=float(meta[8]),
        ou_sigma=float(meta[9]),
    )
    # reconstruct layer dims from the stored actor tensors
    dims = []
    i = 0
    while f"actor.L{i}.w" in tensors:
        w = tensors[f"actor.L{i}.w"]
        if i == 0:
            dims.append(w.shape[1])
        dims.append(w.shape[0])
        i += 1
    state_dim = dims[0]
    action_dim = dims[-1]
    agent = Agent(
        hp,
        np.random.default_rng(0),
        state_dim=state_dim,
        action_dim=action_dim,
        hidden=tuple(dims[1:-1]),
    )
    for name in _NET_NAMES:
        net = getattr(agent, name)
        for j, layer in enumerate(net.layers):
            layer.weights[...] = tensors[f"{name}.L{j}.w"]
            layer.biases[...] = tensors[f"{name}.L{j}.b"]
    agent.train_steps = int(meta[0])
    return agent
