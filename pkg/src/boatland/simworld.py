"""Desk-scale flight world: UAV kinematics under lateral velocity commands
with constant descent, a downward pinhole camera, and a renderer producing
water frames with drifting specular glints and a boat hull.

Everything is a pure function of (state, config, seed): stepping returns a
new immutable state and rendering the same instant twice is bitwise equal.
"""

import math
from dataclasses import dataclass

import numpy as np

from boatland.imaging import GrayImage

MAX_COMMAND = 0.25  # m/s, the scaled action bound


@dataclass(frozen=True)
class WorldState:
    uav: tuple  # (x, y, altitude) meters, altitude above water
    boat: tuple  # (x, y) meters on the water plane
    boat_yaw: float  # radians
    t: float  # simulation clock, seconds

    @property
    def altitude(self):
        return self.uav[2]


@dataclass(frozen=True)
class CameraModel:
    f_px: float = 256.0
    width: int = 256
    height: int = 256

    def __post_init__(self):
        if self.f_px <= 0 or self.width <= 0 or self.height <= 0:
            raise ValueError("camera parameters must be positive")


@dataclass(frozen=True)
class SceneConfig:
    glint_count: int = 12
    glint_speed: float = 1.0  # m/s peak apparent drift
    ripple_amplitude: float = 0.05
    boat_length: float = 2.0
    boat_width: float = 1.0
    water_base_luminance: float = 0.33
    boat_luminance: float = 0.78
    deck_height: float = 0.5
    descent_rate: float = 0.1  # m/s, constant vz

    def __post_init__(self):
        for name in ("water_base_luminance", "boat_luminance"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if abs(self.boat_luminance - self.water_base_luminance) < 0.3:
            raise ValueError("boat/water contrast must be at least 0.3")


def step(state: WorldState, cmd, dt, scene: SceneConfig) -> WorldState:
    """Advance the UAV by (vx, vy) for dt seconds at constant descent.

    The boat is static within an episode; altitude is floored at the deck.
    """
    vx, vy = cmd
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if abs(vx) > MAX_COMMAND + 1e-12 or abs(vy) > MAX_COMMAND + 1e-12:
        raise ValueError(f"command {cmd} exceeds the {MAX_COMMAND} m/s bound")
    x, y, alt = state.uav
    alt = max(scene.deck_height, alt - scene.descent_rate * dt)
    return WorldState(
        uav=(x + vx * dt, y + vy * dt, alt),
        boat=state.boat,
        boat_yaw=state.boat_yaw,
        t=state.t + dt,
    )


def project(world_xy, state: WorldState, cam: CameraModel):
    """Pinhole projection of a water-plane point; None if outside the frame."""
    if state.altitude <= 0:
        raise ValueError("cannot project at zero altitude")
    px = cam.width / 2.0 + cam.f_px * (world_xy[0] - state.uav[0]) / state.altitude
    py = cam.height / 2.0 + cam.f_px * (world_xy[1] - state.uav[1]) / state.altitude
    if 0.0 <= px < cam.width and 0.0 <= py < cam.height:
        return (px, py)
    return None


def boat_pixel_distance(state: WorldState, cam: CameraModel) -> float:
    """Ground-truth pixel distance from image center to the boat center
    (unclipped by the frame)."""
    ex = state.boat[0] - state.uav[0]
    ey = state.boat[1] - state.uav[1]
    return cam.f_px * math.hypot(ex, ey) / state.altitude


def landed(state: WorldState, cam: CameraModel, scene: SceneConfig,
           threshold_px=10.0) -> bool:
    """Touchdown test: on the deck with the boat center within threshold_px."""
    if state.altitude > scene.deck_height + 1e-9:
        return False
    return boat_pixel_distance(state, cam) <= threshold_px


def reset(rng, scene: SceneConfig, cam: CameraModel, max_offset=4.0,
          start_altitude=12.0) -> WorldState:
    """Place the UAV at the origin and the boat at a random offset that is
    inside the camera field of view at the start altitude."""
    if max_offset < 0:
        raise ValueError("max_offset must be non-negative")
    while True:
        bx = rng.uniform(-max_offset, max_offset)
        by = rng.uniform(-max_offset, max_offset)
        yaw = rng.uniform(0.0, 2.0 * math.pi)
        state = WorldState(uav=(0.0, 0.0, start_altitude), boat=(bx, by),
                           boat_yaw=yaw, t=0.0)
        if project((bx, by), state, cam) is not None:
            return state


_GLINT_RADIUS_M = 0.25
_GLINT_LUMINANCE = 0.95
_CABIN_LUM_FACTOR = 0.2


def _scenario_params(seed, scene):
    """Static scenario layout drawn deterministically from the seed."""
    rng = np.random.default_rng(seed)
    waves = []
    for _ in range(3):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        waves.append((
            math.cos(theta),
            math.sin(theta),
            rng.uniform(0.8, 2.5),  # wavelength, m
            rng.uniform(0.0, 2.0 * math.pi),  # phase
            rng.uniform(0.05, 0.15),  # drift, m/s
        ))
    glints = []
    for _ in range(scene.glint_count):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        amp = rng.uniform(0.5, 1.5)
        glints.append((
            rng.uniform(-8.0, 8.0),
            rng.uniform(-8.0, 8.0),
            math.cos(theta),
            math.sin(theta),
            amp,
            scene.glint_speed / amp,  # angular rate so peak speed = glint_speed
            rng.uniform(0.0, 2.0 * math.pi),
        ))
    return waves, glints


def render(state: WorldState, cam: CameraModel, cfg: SceneConfig, seed) -> GrayImage:
    """Render the downward view: rippled water, moving glints, boat hull."""
    if state.altitude <= cfg.deck_height - 1e-9 or state.altitude <= 0:
        raise ValueError("cannot render below the deck plane")
    ux, uy, alt = state.uav
    scale = alt / cam.f_px  # meters per pixel
    xs = ux + (np.arange(cam.width) - cam.width / 2.0) * scale
    ys = uy + (np.arange(cam.height) - cam.height / 2.0) * scale
    X = np.broadcast_to(xs, (cam.height, cam.width))
    Y = ys[:, None]

    waves, glints = _scenario_params(seed, cfg)
    ripple = np.zeros((cam.height, cam.width))
    for cx, cy, lam, phase, drift in waves:
        ripple += np.sin(
            2.0 * math.pi * (X * cx + Y * cy + drift * state.t) / lam + phase
        )
    img = cfg.water_base_luminance + (cfg.ripple_amplitude / 3.0) * ripple

    cy_, sy_ = math.cos(state.boat_yaw), math.sin(state.boat_yaw)
    bx, by = state.boat
    keep_out = _GLINT_RADIUS_M + 0.2  # hull damps reflections alongside
    for gx0, gy0, dx, dy, amp, omega, phase in glints:
        s = amp * math.sin(omega * state.t + phase)
        gx, gy = gx0 + s * dx, gy0 + s * dy
        gu = (gx - bx) * cy_ + (gy - by) * sy_
        gv = -(gx - bx) * sy_ + (gy - by) * cy_
        if (abs(gu) <= cfg.boat_length / 2.0 + keep_out
                and abs(gv) <= cfg.boat_width / 2.0 + keep_out):
            continue
        pc = (gx - ux) / scale + cam.width / 2.0
        pr = (gy - uy) / scale + cam.height / 2.0
        r_px = _GLINT_RADIUS_M / scale
        lo_c = max(0, int(pc - r_px - 2))
        hi_c = min(cam.width, int(pc + r_px + 3))
        lo_r = max(0, int(pr - r_px - 2))
        hi_r = min(cam.height, int(pr + r_px + 3))
        if lo_c >= hi_c or lo_r >= hi_r:
            continue
        cc = np.arange(lo_c, hi_c) - pc
        rr = (np.arange(lo_r, hi_r) - pr)[:, None]
        d = np.hypot(rr, cc)
        blob = _GLINT_LUMINANCE * np.clip(r_px + 0.5 - d, 0.0, 1.0)
        patch = img[lo_r:hi_r, lo_c:hi_c]
        np.maximum(patch, blob, out=patch)

    # boat hull: oriented rectangle with a smaller dark cabin, occludes water
    u = (X - bx) * cy_ + (Y - by) * sy_
    v = -(X - bx) * sy_ + (Y - by) * cy_
    hull = (np.abs(u) <= cfg.boat_length / 2.0) & (np.abs(v) <= cfg.boat_width / 2.0)
    img[hull] = cfg.boat_luminance
    cabin = (
        (np.abs(u - cfg.boat_length / 8.0) <= cfg.boat_length / 4.0)
        & (np.abs(v) <= cfg.boat_width / 4.0)
    )
    img[cabin] = cfg.boat_luminance * _CABIN_LUM_FACTOR

    np.clip(img, 0.0, 1.0, out=img)
    return GrayImage(img)
