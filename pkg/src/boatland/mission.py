"""Mission layer: observation-to-state assembly, the distance reward,
episode and test loops, and the in-process vision bus connecting the
detection context to the decision context.

An episode ends with outcome "landed" at the first step whose pixel
distance reaches the success threshold (the maximum-reward event). Losing
the target ends an evaluation episode; in training it only restarts the
simulation while the episode's step budget keeps running.
"""

import math
import threading
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from boatland import simworld
from boatland.ddpg import Agent, Transition, select_action, train_step
from boatland.errors import BusClosed
from boatland.simworld import CameraModel, SceneConfig, WorldState
from boatland.vision import FrameDetector, PipelineConfig, TargetObservation

LOST_SENTINEL = 1000000.0


@dataclass(frozen=True)
class RewardConfig:
    success_threshold: float = 10.0  # px
    success_reward: float = 250.0
    approach_reward: float = 0.1
    neutral_reward: float = 0.0
    lost_penalty: float = -10.0
    lost_sentinel: float = LOST_SENTINEL

    def __post_init__(self):
        if self.success_threshold <= 0:
            raise ValueError("success_threshold must be positive")


def distance(obs: TargetObservation, sentinel=LOST_SENTINEL) -> float:
    """Pixel distance to the target; the sentinel when the target is lost."""
    if not obs.found:
        return sentinel
    return math.hypot(obs.dx, obs.dy)


def reward(d_t, d_prev, cfg: RewardConfig) -> float:
    """Distance reward: success first, then the lost sentinel, then the
    closer/farther comparison (the sentinel would otherwise be swallowed
    by the d_t >= d_prev branch)."""
    if d_t < 0 or d_prev < 0:
        raise ValueError("distances must be non-negative")
    if d_t <= cfg.success_threshold:
        return cfg.success_reward
    if d_t == cfg.lost_sentinel:
        return cfg.lost_penalty
    if d_t < d_prev:
        return cfg.approach_reward
    return cfg.neutral_reward


def assemble_state(obs_t: TargetObservation, obs_prev: TargetObservation,
                   cam: CameraModel) -> np.ndarray:
    """4-vector (dx, dy, prev dx, prev dy) normalized to [-1, 1] by the half
    frame size; a lost observation contributes the capped pair (1, 1)."""

    def pair(obs):
        if not obs.found:
            return 1.0, 1.0
        return obs.dx / (cam.width / 2.0), obs.dy / (cam.height / 2.0)

    return np.array([*pair(obs_t), *pair(obs_prev)], dtype=np.float64)


@dataclass(frozen=True)
class EpisodeResult:
    episode_index: int
    steps_taken: int
    total_reward: float
    outcome: str  # landed | target_lost | step_limit
    wall_time: float  # simulation-clock seconds (steps * dt), reproducible
    mean_vx: float  # mean |vx| m/s
    mean_vy: float


class VisionBus:
    """In-process topic with FIFO delivery and strictly increasing sequence
    numbers; subscribers may consume in order or skip to the latest."""

    def __init__(self):
        self._cond = threading.Condition()
        self._seq = 0
        self._queues = []
        self._closed = False

    def publish(self, obs: TargetObservation) -> int:
        with self._cond:
            if self._closed:
                raise BusClosed("publish on a closed bus")
            self._seq += 1
            for q in self._queues:
                q.append((self._seq, obs))
            self._cond.notify_all()
            return self._seq

    def subscribe(self):
        with self._cond:
            q = deque()
            self._queues.append(q)
            return Subscription(self, q)

    def close(self):
        with self._cond:
            self._closed = True
            self._cond.notify_all()


class Subscription:
    def __init__(self, bus, queue):
        self._bus = bus
        self._q = queue

    def recv(self, timeout=None):
        """Next (seq, observation) in FIFO order; None on timeout."""
        cond = self._bus._cond
        with cond:
            if not cond.wait_for(
                lambda: self._q or self._bus._closed, timeout=timeout
            ):
                return None
            if self._q:
                return self._q.popleft()
            raise BusClosed("bus closed with no pending messages")

    def latest(self, timeout=None):
        """Drain the queue and return the newest (seq, observation)."""
        item = self.recv(timeout=timeout)
        if item is None:
            return None
        while self._q:
            item = self._q.popleft()
        return item


class GroundTruthObserver:
    """Fast path: the observation is the camera projection of the boat
    center, bypassing rendering and detection."""

    def __init__(self, cam: CameraModel):
        self.cam = cam

    def observe(self, world: WorldState) -> TargetObservation:
        p = simworld.project(world.boat, world, self.cam)
        if p is None:
            return TargetObservation(found=False)
        return TargetObservation(
            dx=p[0] - self.cam.width / 2.0,
            dy=p[1] - self.cam.height / 2.0,
            found=True,
        )

    def restart(self):
        pass


class VisionObserver:
    """Detection context: render the camera frame, run the pipeline, publish
    on the vision topic; the decision context reads latest-wins."""

    def __init__(self, cam: CameraModel, scene: SceneConfig,
                 pipeline: PipelineConfig, scenario_seed, bus: Optional[VisionBus] = None):
        self.cam = cam
        self.scene = scene
        self.pipeline = pipeline
        self.scenario_seed = scenario_seed
        self.bus = bus if bus is not None else VisionBus()
        self._sub = self.bus.subscribe()
        self._detector = FrameDetector(pipeline)

    def observe(self, world: WorldState) -> TargetObservation:
        frame = simworld.render(world, self.cam, self.scene, self.scenario_seed)
        self.bus.publish(self._detector.update(frame))
        _, obs = self._sub.latest()
        return obs

    def restart(self):
        self._detector = FrameDetector(self.pipeline)


def scripted_pursuit(gain=25.0):
    """Proportional pursuit on the normalized pixel offsets; saturates at
    full speed away from the center. Validates the environment plumbing
    independently of learning."""

    def policy(state):
        return np.clip(gain * state[:2], -1.0, 1.0)

    return policy


def run_episode(world: WorldState, observer, *, mode, max_steps, dt,
                scene: SceneConfig, cam: CameraModel, reward_cfg: RewardConfig,
                agent: Optional[Agent] = None, policy=None, action_rng=None,
                train_rng=None, restart=None, episode_index=0):
    """Observe, act, step, reward, store, train until landing, loss, or step
    exhaustion. Returns (EpisodeResult, final WorldState)."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be train or eval, got {mode!r}")
    train = mode == "train"
    if train and agent is None:
        raise ValueError("training requires an agent")
    action_scale = agent.hp.action_scale if agent else simworld.MAX_COMMAND

    obs_prev = obs = observer.observe(world)
    d_prev = distance(obs, reward_cfg.lost_sentinel)
    state = assemble_state(obs, obs_prev, cam)

    total = 0.0
    sum_vx = 0.0
    sum_vy = 0.0
    steps = 0
    outcome = "step_limit"
    for _ in range(max_steps):
        if policy is not None:
            raw = np.clip(policy(state), -1.0, 1.0)
            cmd = action_scale * raw
        else:
            raw, cmd = select_action(agent, state, explore=train, rng=action_rng)
        world = simworld.step(world, cmd, dt, scene)
        obs_new = observer.observe(world)
        d_t = distance(obs_new, reward_cfg.lost_sentinel)
        r = reward(d_t, d_prev, reward_cfg)
        landed_now = d_t <= reward_cfg.success_threshold
        lost_now = not obs_new.found
        next_state = assemble_state(obs_new, obs, cam)

        steps += 1
        total += r
        sum_vx += abs(cmd[0])
        sum_vy += abs(cmd[1])

        if train:
            agent.buffer.store(
                Transition(
                    state=state,
                    action=raw,
                    reward=r,
                    next_state=next_state,
                    terminal=landed_now or lost_now,
                )
            )
            if len(agent.buffer) >= agent.hp.batch_size:
                train_step(agent, train_rng)

        if landed_now:
            outcome = "landed"
            break
        if lost_now:
            if not train:
                outcome = "target_lost"
                break
            # only the simulation restarts; the step budget keeps running
            world = restart()
            observer.restart()
            obs_prev = obs = observer.observe(world)
            d_prev = distance(obs, reward_cfg.lost_sentinel)
            state = assemble_state(obs, obs_prev, cam)
            continue
        obs_prev, obs = obs, obs_new
        state = next_state
        d_prev = d_t

    result = EpisodeResult(
        episode_index=episode_index,
        steps_taken=steps,
        total_reward=float(total),
        outcome=outcome,
        wall_time=steps * dt,
        mean_vx=float(sum_vx / steps),
        mean_vy=float(sum_vy / steps),
    )
    return result, world


@dataclass(frozen=True)
class TestResult:
    test_index: int
    episodes_used: int  # 0 encodes failure after the episode limit
    success: bool
    elapsed_seconds: float


def run_test(agent: Agent, *, cam, scene, pipeline, reward_cfg, dt, max_steps,
             max_offset, start_altitude, mode, test_rng, test_index=0,
             episode_limit=10) -> TestResult:
    """Up to `episode_limit` evaluation episodes from one seeded reset
    family; reports the first episode index that lands, or 0 for failure."""
    elapsed = 0.0
    for ep in range(1, episode_limit + 1):
        world = simworld.reset(
            test_rng, scene, cam, max_offset=max_offset, start_altitude=start_altitude
        )
        if mode == "vision":
            observer = VisionObserver(
                cam, scene, pipeline, scenario_seed=int(test_rng.integers(2**63))
            )
        else:
            observer = GroundTruthObserver(cam)
        result, _ = run_episode(
            world,
            observer,
            mode="eval",
            max_steps=max_steps,
            dt=dt,
            scene=scene,
            cam=cam,
            reward_cfg=reward_cfg,
            agent=agent,
            action_rng=test_rng,
            episode_index=ep,
        )
        elapsed += result.wall_time
        if result.outcome == "landed":
            return TestResult(test_index, ep, True, elapsed)
    return TestResult(test_index, 0, False, elapsed)


EPISODE_CSV_HEADER = "episode,steps,total_reward,outcome,mean_vx,mean_vy,wall_seconds"
TEST_CSV_HEADER = "test,episodes_used,success,elapsed_seconds"


def episode_csv_row(r: EpisodeResult) -> str:
    return (
        f"{r.episode_index},{r.steps_taken},{r.total_reward!r},{r.outcome},"
        f"{r.mean_vx!r},{r.mean_vy!r},{r.wall_time!r}"
    )


def test_csv_row(r: TestResult) -> str:
    return (
        f"{r.test_index},{r.episodes_used},{int(r.success)},{r.elapsed_seconds!r}"
    )
