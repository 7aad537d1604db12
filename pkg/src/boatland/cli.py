"""Command-line front door: train, eval, detect, render, plot.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric error.
"""

import argparse
import math
import multiprocessing
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from boatland import mission, simworld
from boatland.config import RunConfig, default_config_text, load_config
from boatland.ddpg import Agent, load_agent, save_agent
from boatland.errors import CheckpointError, ConfigError, NumericError
from boatland.imaging import read_pgm, write_pgm
from boatland.mission import (
    EPISODE_CSV_HEADER,
    TEST_CSV_HEADER,
    GroundTruthObserver,
    VisionObserver,
    episode_csv_row,
    run_test,
    test_csv_row,
)
from boatland.svgplot import metrics_chart, moving_average
from boatland.vision import FrameDetector
from boatland.simworld import WorldState


def _rngs(seed):
    """Independent deterministic streams derived from the run seed."""
    root = np.random.SeedSequence(seed)
    init_ss, action_ss, train_ss, world_ss = root.spawn(4)
    return (
        np.random.default_rng(init_ss),
        np.random.default_rng(action_ss),
        np.random.default_rng(train_ss),
        np.random.default_rng(world_ss),
    )


def _fixed_world(cfg: RunConfig) -> WorldState:
    return WorldState(
        uav=(0.0, 0.0, cfg.start_altitude),
        boat=(cfg.phase1_boat_x, cfg.phase1_boat_y),
        boat_yaw=cfg.phase1_boat_yaw,
        t=0.0,
    )


def cmd_train(cfg: RunConfig, out_dir):
    """Two-phase training: fixed boat placement, then randomized placements.
    Writes metrics.csv plus periodic and final checkpoints."""
    os.makedirs(out_dir, exist_ok=True)
    init_rng, action_rng, train_rng, world_rng = _rngs(cfg.seed)
    agent = Agent(cfg.agent, init_rng)
    rows = [EPISODE_CSV_HEADER]
    t_start = time.monotonic()

    for ep in range(cfg.episodes):
        phase1 = ep < cfg.phase1_episodes
        if phase1:
            world = _fixed_world(cfg)
            restart = lambda: _fixed_world(cfg)
        else:
            world = simworld.reset(
                world_rng, cfg.scene, cfg.camera,
                max_offset=cfg.max_offset, start_altitude=cfg.start_altitude,
            )
            restart = lambda: simworld.reset(
                world_rng, cfg.scene, cfg.camera,
                max_offset=cfg.max_offset, start_altitude=cfg.start_altitude,
            )
        if cfg.observation_mode == "vision":
            observer = VisionObserver(
                cfg.camera, cfg.scene, cfg.pipeline,
                scenario_seed=int(world_rng.integers(2**63)),
            )
        else:
            observer = GroundTruthObserver(cfg.camera)
        agent.noise.reset()
        result, _ = mission.run_episode(
            world,
            observer,
            mode="train",
            max_steps=cfg.max_steps_train,
            dt=cfg.dt,
            scene=cfg.scene,
            cam=cfg.camera,
            reward_cfg=cfg.reward,
            agent=agent,
            action_rng=action_rng,
            train_rng=train_rng,
            restart=restart,
            episode_index=ep,
        )
        rows.append(episode_csv_row(result))
        if (ep + 1) % 10 == 0 or ep + 1 == cfg.episodes:
            print(
                f"episode {ep + 1}/{cfg.episodes}: steps={result.steps_taken} "
                f"reward={result.total_reward:.1f} outcome={result.outcome} "
                f"[{time.monotonic() - t_start:.0f}s]",
                file=sys.stderr,
            )
        if cfg.checkpoint_every and (ep + 1) % cfg.checkpoint_every == 0:
            save_agent(os.path.join(out_dir, f"checkpoint_ep{ep + 1:04d}.ckpt"), agent)

    metrics_path = os.path.join(out_dir, "metrics.csv")
    with open(metrics_path, "w") as fh:
        fh.write("\n".join(rows) + "\n")
    ckpt_path = os.path.join(out_dir, "checkpoint.ckpt")
    save_agent(ckpt_path, agent)
    return metrics_path, ckpt_path


@dataclass(frozen=True)
class SuccessRow:
    episodes_used: int
    relative_pct: float  # 100 / episodes_used for successes, 0 for failures
    absolute_pct: float
    count: int


def build_success_table(results):
    """Table rows keyed by episodes-to-land (0 = never landed)."""
    total = len(results)
    counts = {}
    for r in results:
        counts[r.episodes_used] = counts.get(r.episodes_used, 0) + 1
    rows = []
    for n in sorted(counts):
        rows.append(
            SuccessRow(
                episodes_used=n,
                relative_pct=0.0 if n == 0 else 100.0 / n,
                absolute_pct=100.0 * counts[n] / total,
                count=counts[n],
            )
        )
    return rows


def format_pct(v) -> str:
    """Percentages truncated to two decimals, trailing zeros trimmed
    (100/6 prints as 16.66%)."""
    truncated = math.floor(v * 100.0) / 100.0
    s = f"{truncated:.2f}".rstrip("0").rstrip(".")
    return f"{s}%"


def format_success_table(rows) -> str:
    lines = [
        "Episodes Number | Relative Percentage | Absolute Percentage",
        "----------------+---------------------+--------------------",
    ]
    for r in rows:
        lines.append(
            f"{r.episodes_used:>15} | {format_pct(r.relative_pct):>19} "
            f"| {format_pct(r.absolute_pct):>19}"
        )
    return "\n".join(lines)


_EVAL_CTX = {}


def _eval_worker_init(ckpt_path, cfg, mode):
    _EVAL_CTX["agent"] = load_agent(ckpt_path)
    _EVAL_CTX["cfg"] = cfg
    _EVAL_CTX["mode"] = mode


def _eval_one(test_index):
    cfg = _EVAL_CTX["cfg"]
    test_rng = np.random.default_rng(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(1, test_index))
    )
    return run_test(
        _EVAL_CTX["agent"],
        cam=cfg.camera,
        scene=cfg.scene,
        pipeline=cfg.pipeline,
        reward_cfg=cfg.reward,
        dt=cfg.dt,
        max_steps=cfg.max_steps_eval,
        max_offset=cfg.max_offset,
        start_altitude=cfg.start_altitude,
        mode=_EVAL_CTX["mode"],
        test_rng=test_rng,
        test_index=test_index,
        episode_limit=cfg.test_episode_limit,
    )


def cmd_eval(cfg: RunConfig, ckpt_path, out_dir, workers=None):
    """Seeded tests with the 10-episode landing limit; returns the success
    table rows and writes the per-test CSV."""
    os.makedirs(out_dir, exist_ok=True)
    mode = cfg.observation_mode
    n_workers = workers if workers is not None else cfg.eval_workers
    if n_workers <= 0:
        n_workers = min(os.cpu_count() or 1, 8)
    indices = list(range(cfg.tests))
    if n_workers == 1:
        _eval_worker_init(ckpt_path, cfg, mode)
        results = [_eval_one(i) for i in indices]
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(
            n_workers, initializer=_eval_worker_init, initargs=(ckpt_path, cfg, mode)
        ) as pool:
            results = pool.map(_eval_one, indices, chunksize=1)

    csv_path = os.path.join(out_dir, "tests.csv")
    with open(csv_path, "w") as fh:
        fh.write(TEST_CSV_HEADER + "\n")
        for r in results:
            fh.write(test_csv_row(r) + "\n")
    rows = build_success_table(results)
    return rows, results, csv_path


def cmd_detect(frame_dir, out_dir, cfg: RunConfig):
    """Run the detection pipeline over a directory of PGM frames (sorted by
    name); emits one CSV row per frame after the first."""
    os.makedirs(out_dir, exist_ok=True)
    names = sorted(n for n in os.listdir(frame_dir) if n.endswith(".pgm"))
    detector = FrameDetector(cfg.pipeline)
    rows = ["frame,found,dx,dy"]
    started = False
    for idx, name in enumerate(names):
        try:
            frame = read_pgm(os.path.join(frame_dir, name))
        except (OSError, ValueError) as exc:
            print(f"warning: skipping {name}: {exc}", file=sys.stderr)
            continue
        obs = detector.update(frame)
        if started:
            rows.append(f"{idx},{int(obs.found)},{obs.dx!r},{obs.dy!r}")
        started = True
    out_path = os.path.join(out_dir, "detections.csv")
    with open(out_path, "w") as fh:
        fh.write("\n".join(rows) + "\n")
    return out_path


def cmd_render(cfg: RunConfig, n_frames, out_dir):
    """Dump n consecutive frames of a seeded zero-command descent."""
    if n_frames < 1:
        raise ConfigError("need at least one frame")
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    world = simworld.reset(
        rng, cfg.scene, cfg.camera,
        max_offset=cfg.max_offset, start_altitude=cfg.start_altitude,
    )
    scenario_seed = int(rng.integers(2**63))
    paths = []
    for i in range(n_frames):
        frame = simworld.render(world, cfg.camera, cfg.scene, scenario_seed)
        path = os.path.join(out_dir, f"frame_{i:04d}.pgm")
        write_pgm(frame, path)
        paths.append(path)
        world = simworld.step(world, (0.0, 0.0), cfg.dt, cfg.scene)
    return paths


def cmd_plot(metrics_csv, window, out_dir):
    """Moving averages of reward and command speeds as a standalone SVG."""
    with open(metrics_csv) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != EPISODE_CSV_HEADER:
        raise ConfigError(f"{metrics_csv}: not a metrics CSV")
    episodes, rewards, vxs, vys = [], [], [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        episodes.append(float(parts[0]))
        rewards.append(float(parts[2]))
        vxs.append(float(parts[4]))
        vys.append(float(parts[5]))
    if len(rewards) < window:
        raise ConfigError(
            f"metrics CSV has {len(rewards)} rows, need at least window={window}"
        )
    r_sma = moving_average(rewards, window)
    vx_sma = moving_average(vxs, window)
    vy_sma = moving_average(vys, window)
    x = episodes[window - 1 :]
    svg = metrics_chart(x, r_sma, vx_sma, vy_sma, window)
    os.makedirs(out_dir, exist_ok=True)
    out_path = os.path.join(out_dir, "metrics.svg")
    with open(out_path, "w") as fh:
        fh.write(svg)
    return out_path


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="boatland",
        description="Synthetic water-landing stack: simulator, detection, DDPG.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, checkpoint=False):
        p.add_argument("--config", help="config file path")
        p.add_argument("--seed", type=int, help="override [run] seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument(
            "--mode", choices=("vision", "ground_truth"),
            help="override [run] observation_mode",
        )
        if checkpoint:
            p.add_argument("--checkpoint", required=True, help="agent checkpoint")

    p = sub.add_parser("train", help="train the agent, write metrics + checkpoints")
    common(p)
    p = sub.add_parser("eval", help="run the seeded landing tests")
    common(p, checkpoint=True)
    p = sub.add_parser("detect", help="run detection over a PGM frame directory")
    common(p)
    p.add_argument("frames", help="directory of PGM frames, ordered by name")
    p = sub.add_parser("render", help="dump rendered frames as PGM")
    common(p)
    p.add_argument("-n", "--frames", type=int, default=1, dest="n_frames")
    p = sub.add_parser("plot", help="SVG moving-average chart from metrics CSV")
    common(p)
    p.add_argument("metrics", help="metrics.csv from train")
    p.add_argument("--window", type=int, default=20)
    p = sub.add_parser("config", help="print the default config file")
    return parser


def _load(args):
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if getattr(args, "mode", None):
        overrides["run.observation_mode"] = args.mode
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        if args.command == "config":
            print(default_config_text(), end="")
            return 0
        cfg = _load(args)
        if args.command == "train":
            metrics, ckpt = cmd_train(cfg, args.out)
            print(f"metrics: {metrics}\ncheckpoint: {ckpt}")
        elif args.command == "eval":
            rows, results, csv_path = cmd_eval(cfg, args.checkpoint, args.out)
            print(format_success_table(rows))
            succ = sum(1 for r in results if r.success)
            print(f"\n{succ}/{len(results)} tests landed; per-test CSV: {csv_path}")
        elif args.command == "detect":
            print(cmd_detect(args.frames, args.out, cfg))
        elif args.command == "render":
            for path in cmd_render(cfg, args.n_frames, args.out):
                print(path)
        elif args.command == "plot":
            print(cmd_plot(args.metrics, args.window, args.out))
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
