"""Desk-scale tabular Q-learning with experience replay on a chain MDP.

The environment is a one-dimensional chain: action 1 moves right, action 0
moves left (staying put at the left wall), the chosen direction is inverted
with a slip probability, and moving right from the last state terminates
with a fixed reward. Everything else pays zero. Small enough that the
optimal action values come from plain value iteration, which serves as the
oracle for the training experiments comparing priority schemes and losses.

Training is a standard replay loop: epsilon-greedy acting fills the buffer,
each step samples a batch, applies per-sample gradient updates on the TD
error, rewrites the sampled priorities from those same errors (the errors
at sampling time, before the update), and periodically copies the online
table into the target table. Runs are fully determined by the seed.
"""

import math
from dataclasses import dataclass

from .losses import LossSpec, DatasetStats, loss_grad, pal_lambda
from .replay import ReplayBuffer, SchemeConfig, Transition, effective_beta
from .rng import Xoshiro256StarStar, derive_seed

LEFT, RIGHT = 0, 1


@dataclass(frozen=True)
class ChainMDP:
    n_states: int
    slip_prob: float = 0.0
    gamma: float = 0.99
    terminal_reward: float = 1.0

    def __post_init__(self):
        if self.n_states < 2:
            raise ValueError("chain needs at least 2 states")
        if not 0.0 <= self.slip_prob < 0.5:
            raise ValueError("slip_prob must lie in [0, 0.5)")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not math.isfinite(self.terminal_reward):
            raise ValueError("terminal_reward must be finite")

    def step(self, state, action, rng):
        """Sample one transition; returns (next_state, reward, terminal)."""
        move = action
        if rng.uniform() < self.slip_prob:
            move = 1 - move
        return self._resolve(state, move)

    def _resolve(self, state, move):
        if move == RIGHT:
            if state == self.n_states - 1:
                return state, self.terminal_reward, True
            return state + 1, 0.0, False
        if state == 0:
            return 0, 0.0, False
        return state - 1, 0.0, False

    def outcomes(self, state, action):
        """Exact transition model: list of (prob, next_state, reward, terminal)."""
        intended = self._resolve(state, action)
        slipped = self._resolve(state, 1 - action)
        return [(1.0 - self.slip_prob,) + intended,
                (self.slip_prob,) + slipped]


def value_iteration(mdp, tolerance=1e-10):
    """Optimal action values; sup-norm Bellman residual <= tolerance."""
    if tolerance <= 0.0:
        raise ValueError("tolerance must be positive")
    n = mdp.n_states
    q = [[0.0, 0.0] for _ in range(n)]
    while True:
        residual = 0.0
        new = [[0.0, 0.0] for _ in range(n)]
        for s in range(n):
            for a in (LEFT, RIGHT):
                value = 0.0
                for prob, ns, r, terminal in mdp.outcomes(s, a):
                    future = 0.0 if terminal else mdp.gamma * max(q[ns])
                    value += prob * (r + future)
                new[s][a] = value
                residual = max(residual, abs(value - q[s][a]))
        q = new
        if residual <= tolerance:
            return q


class QTables:
    """Online and target action-value tables."""

    def __init__(self, n_states):
        self.online = [[0.0, 0.0] for _ in range(n_states)]
        self.target = [[0.0, 0.0] for _ in range(n_states)]

    def copy_to_target(self):
        self.target = [row[:] for row in self.online]


def td_error(q, transition, gamma):
    """Online estimate minus bootstrapped target (gamma = 0 when terminal)."""
    t = transition
    if t.terminal:
        y = t.reward
    else:
        y = t.reward + gamma * max(q.target[t.next_state])
    return q.online[t.state][t.action] - y


def greedy_action(qrow):
    """Argmax with ties broken toward the lowest action id."""
    return LEFT if qrow[LEFT] >= qrow[RIGHT] else RIGHT


def greedy_eval(mdp, qtable, episodes, rng):
    """Mean undiscounted return of the greedy policy over fresh episodes.

    Episodes start at state 0 and are capped at 10 * n_states steps.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    cap = 10 * mdp.n_states
    total = 0.0
    for _ in range(episodes):
        state = 0
        for _ in range(cap):
            action = greedy_action(qtable[state])
            state, reward, terminal = mdp.step(state, action, rng)
            total += reward
            if terminal:
                break
    return total / episodes


@dataclass(frozen=True)
class TrainConfig:
    scheme: SchemeConfig
    loss: LossSpec
    steps: int = 20000
    batch_size: int = 8
    learning_rate: float = 0.1
    target_copy_period: int = 250
    buffer_capacity: int = 2048
    exploration_epsilon: float = 0.3
    seed: int = 0
    eval_period: int = 1000
    eval_episodes: int = 10

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        for name in ("batch_size", "target_copy_period", "buffer_capacity",
                     "eval_period", "eval_episodes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.exploration_epsilon <= 1.0:
            raise ValueError("exploration_epsilon must lie in [0, 1]")
        if not math.isfinite(self.learning_rate):
            raise ValueError("learning_rate must be finite")
        if self.loss.kind == "per_tau":
            raise ValueError("per_tau needs whole-dataset statistics and is "
                             "not supported in minibatch training")


@dataclass(frozen=True)
class EvalRecord:
    step: int
    mean_return: float
    max_q_error: float


@dataclass
class TrainResult:
    records: list
    q: QTables
    buffer: ReplayBuffer
    q_star: list


def max_q_error(qtable, q_star):
    return max(abs(qtable[s][a] - q_star[s][a])
               for s in range(len(q_star)) for a in (LEFT, RIGHT))


def run_training(mdp, config):
    """Full training run; returns tables and buffer along with the records."""
    scheme, loss = config.scheme, config.loss
    rng_env = Xoshiro256StarStar(derive_seed(config.seed, 0))
    rng_sample = Xoshiro256StarStar(derive_seed(config.seed, 1))
    rng_eval = Xoshiro256StarStar(derive_seed(config.seed, 2))

    q = QTables(mdp.n_states)
    q_star = value_iteration(mdp, 1e-10)
    buffer = ReplayBuffer(config.buffer_capacity, scheme)
    warmup = max(config.batch_size, 100)
    is_per = scheme.kind == "per"
    is_pal = loss.kind == "pal"
    lr = config.learning_rate
    gamma = mdp.gamma
    records = []

    state = 0
    for step in range(1, config.steps + 1):
        if rng_env.uniform() < config.exploration_epsilon:
            action = rng_env.randrange(2)
        else:
            action = greedy_action(q.online[state])
        next_state, reward, terminal = mdp.step(state, action, rng_env)
        buffer.add(Transition(state, action, reward, next_state, terminal))
        state = 0 if terminal else next_state

        if len(buffer) >= warmup:
            beta = effective_beta(scheme, step) if is_per else None
            batch = buffer.sample(config.batch_size, rng_sample, beta=beta)
            deltas = [td_error(q, t, gamma) for t in batch.transitions]
            if is_pal:
                stats = DatasetStats(
                    n=len(deltas),
                    lam=pal_lambda(deltas, loss.alpha, loss.kappa))
            else:
                stats = None
            online = q.online
            for t, d, w in zip(batch.transitions, deltas, batch.is_weights):
                online[t.state][t.action] -= lr * w * loss_grad(loss, d, stats)
            buffer.update_priorities(batch.indices, [abs(d) for d in deltas])

        if step % config.target_copy_period == 0:
            q.copy_to_target()
        if step % config.eval_period == 0:
            records.append(EvalRecord(
                step=step,
                mean_return=greedy_eval(mdp, q.online, config.eval_episodes,
                                        rng_eval),
                max_q_error=max_q_error(q.online, q_star)))
    return TrainResult(records, q, buffer, q_star)


def train(mdp, config):
    """Train and return the evaluation records (see :func:`run_training`)."""
    return run_training(mdp, config).records


def records_to_csv(records, fh):
    fh.write("step,mean_return,max_q_error\n")
    for rec in records:
        fh.write(f"{rec.step},{rec.mean_return!r},{rec.max_q_error!r}\n")
