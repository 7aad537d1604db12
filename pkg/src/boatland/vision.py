"""Target detection among specular reflections.

Stages: Gaussian-blurred frame pair -> Lucas-Kanade flow on a fixed grid ->
centroid of fast-moving points -> disk mask over the grayscale frame ->
Canny -> morphological closing -> largest contour -> pixel offsets from the
image center. A lost target is a value (found=False), never an error.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from boatland import kernels
from boatland.imaging import BinaryImage, GrayImage, gaussian_blur, gradients


@dataclass(frozen=True)
class FlowVector:
    x: float
    y: float
    u: float  # displacement, px/frame
    v: float


@dataclass(frozen=True)
class ReflectionMask:
    cx: float
    cy: float
    radius: float

    def materialize(self, width, height) -> BinaryImage:
        cc = np.arange(width) - self.cx
        rr = (np.arange(height) - self.cy)[:, None]
        return BinaryImage((np.hypot(rr, cc) <= self.radius).astype(np.uint8))


@dataclass(frozen=True)
class Contour:
    points: list  # ordered boundary pixels [(x, y), ...], closed chain
    area: int  # pixel count of the enclosed region (boundary included)
    enclosed_x: np.ndarray
    enclosed_y: np.ndarray


@dataclass(frozen=True)
class TargetObservation:
    dx: float = 0.0  # target center x - image center x, pixels
    dy: float = 0.0
    found: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    blur_sigma: float = 2.0
    lk_window: int = 15
    lk_stride: int = 8
    lk_min_eig: float = 1e-3  # on the window-mean structure matrix
    flow_threshold: float = 2.5  # px/frame; faster points count as glints
    mask_radius: float = 12.0
    canny_low: float = 0.08
    canny_high: float = 0.20
    close_radius: int = 2


def grid_points(width, height, stride, margin):
    """Regular sample grid, inset so LK windows stay inside the frame."""
    xs = np.arange(margin, width - margin, stride)
    ys = np.arange(margin, height - margin, stride)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def lucas_kanade(prev: GrayImage, curr: GrayImage, points, window):
    """Solve the windowed least-squares flow at each sample point.

    Points whose structure matrix is near-singular (window-mean smaller
    eigenvalue below threshold) are omitted.
    """
    return _lucas_kanade(prev, curr, points, window, PipelineConfig.lk_min_eig)


def _lucas_kanade(prev, curr, points, window, min_eig):
    if prev.px.shape != curr.px.shape:
        raise ValueError("frame dimensions differ")
    window = int(window)
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    r = window // 2
    gx, gy = gradients(prev)
    it = curr.px - prev.px

    sxx = kernels.window_sum(gx * gx, r)
    sxy = kernels.window_sum(gx * gy, r)
    syy = kernels.window_sum(gy * gy, r)
    sxt = kernels.window_sum(gx * it, r)
    syt = kernels.window_sum(gy * it, r)

    pts = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    px, py = pts[:, 0], pts[:, 1]
    a = sxx[py, px]
    b = sxy[py, px]
    c = syy[py, px]
    n = float(window * window)
    half_tr = (a + c) / 2.0
    lam_min = half_tr - np.sqrt(((a - c) / 2.0) ** 2 + b * b)
    ok = lam_min / n >= min_eig

    det = a * c - b * b
    bx = -sxt[py, px]
    by = -syt[py, px]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (c * bx - b * by) / det
        v = (a * by - b * bx) / det
    out = []
    for i in np.nonzero(ok)[0]:
        out.append(FlowVector(float(px[i]), float(py[i]), float(u[i]), float(v[i])))
    return out


def reflection_centroid(flows, magnitude_threshold) -> Optional[tuple]:
    """Mean position of flow points at or above the magnitude threshold."""
    xs = [f.x for f in flows if math.hypot(f.u, f.v) >= magnitude_threshold]
    ys = [f.y for f in flows if math.hypot(f.u, f.v) >= magnitude_threshold]
    if not xs:
        return None
    return (sum(xs) / len(xs), sum(ys) / len(ys))


def apply_mask(img: GrayImage, mask: ReflectionMask) -> GrayImage:
    """Replace pixels inside the mask disk by the mean luminance of the
    rest of the frame, so glint edges (and the disk rim) vanish."""
    if not (0 <= mask.cx < img.width and 0 <= mask.cy < img.height):
        raise ValueError("mask center outside the image")
    cc = np.arange(img.width) - mask.cx
    rr = (np.arange(img.height) - mask.cy)[:, None]
    inside = np.hypot(rr, cc) <= mask.radius
    out = img.px.copy()
    outside = ~inside
    fill = out[outside].mean() if outside.any() else out.mean()
    out[inside] = fill
    return GrayImage(out)


def canny(img: GrayImage, low, high) -> BinaryImage:
    """Gradient magnitude, 4-direction non-maximum suppression, and
    double-threshold hysteresis (8-connected)."""
    if not 0 < low < high:
        raise ValueError(f"need 0 < low < high, got low={low}, high={high}")
    gx, gy = gradients(img)
    mag = np.hypot(gx, gy)
    thin = kernels.nms(mag, gx, gy).astype(bool)
    strong = thin & (mag >= high)
    weak = thin & (mag >= low) & (mag < high)
    return BinaryImage(kernels.hysteresis(strong, weak))


def _trace_boundary(mask):
    """Ordered closed boundary chain of a filled region (Moore tracing with
    Jacob's stopping criterion)."""
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    start = (int(xs[0]), int(ys[0]))  # raster-first pixel: W neighbor is free
    # clockwise ring starting East, in image coordinates (y grows down)
    ring = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))

    def is_set(p):
        return 0 <= p[0] < w and 0 <= p[1] < h and bool(mask[p[1], p[0]])

    points = [start]
    cur = start
    back_idx = 4  # direction from cur toward the known-background pixel (West)
    first_move = None
    for _ in range(4 * int(mask.sum()) + 8):
        move = None
        for k in range(1, 9):
            d = (back_idx + k) % 8
            cand = (cur[0] + ring[d][0], cur[1] + ring[d][1])
            if is_set(cand):
                move = (d, cand)
                break
        if move is None:
            return points  # isolated pixel
        d, cand = move
        if first_move is None:
            first_move = (cur, d)
        elif (cur, d) == first_move:
            break  # about to repeat the initial move: chain is closed
        points.append(cand)
        # new backtrack = last background pixel scanned, one ring slot back
        bg = (cur[0] + ring[(d + 7) % 8][0], cur[1] + ring[(d + 7) % 8][1])
        back_idx = ring.index((bg[0] - cand[0], bg[1] - cand[1]))
        cur = cand
    if len(points) > 1 and points[-1] == points[0]:
        points.pop()
    return points


def largest_contour(edges: BinaryImage, close_radius=2) -> Optional[Contour]:
    """Close the edge map, then return the contour whose enclosed region
    (component plus interior) has the largest pixel area.

    Ties break toward the component whose raster-first pixel comes first,
    which is the component numbering order.
    """
    closed = kernels.erode(kernels.dilate(edges.px, close_radius), close_radius)
    labels, count = kernels.label8(closed)
    if count == 0:
        return None
    best = None
    for lab in range(1, count + 1):
        comp = labels == lab
        ys, xs = np.nonzero(comp)
        y_lo, y_hi = ys.min(), ys.max()
        x_lo, x_hi = xs.min(), xs.max()
        sub = np.zeros((y_hi - y_lo + 3, x_hi - x_lo + 3), dtype=np.uint8)
        sub[1:-1, 1:-1] = comp[y_lo : y_hi + 1, x_lo : x_hi + 1]
        filled = kernels.fill_outside(sub) == 0
        area = int(filled.sum())
        if best is None or area > best[0]:
            best = (area, filled, x_lo - 1, y_lo - 1)
    area, filled, off_x, off_y = best
    fy, fx = np.nonzero(filled)
    points = [(x + off_x, y + off_y) for x, y in _trace_boundary(filled)]
    return Contour(
        points=points,
        area=area,
        enclosed_x=fx + off_x,
        enclosed_y=fy + off_y,
    )


def contour_center(c: Contour):
    """Centroid of the enclosed region (mean of enclosed pixel coordinates)."""
    return (float(c.enclosed_x.mean()), float(c.enclosed_y.mean()))


def detect_target(prev: GrayImage, curr: GrayImage,
                  cfg: PipelineConfig = PipelineConfig()) -> TargetObservation:
    """Run the full pipeline on a consecutive frame pair."""
    if prev.px.shape != curr.px.shape:
        raise ValueError("frame dimensions differ")
    pb = gaussian_blur(prev, cfg.blur_sigma)
    cb = gaussian_blur(curr, cfg.blur_sigma)
    return _detect_from_blurred(pb, cb, curr, cfg)


def _detect_from_blurred(prev_blur, curr_blur, curr_raw, cfg):
    margin = cfg.lk_window // 2 + 1
    pts = grid_points(curr_raw.width, curr_raw.height, cfg.lk_stride, margin)
    flows = _lucas_kanade(prev_blur, curr_blur, pts, cfg.lk_window, cfg.lk_min_eig)
    cen = reflection_centroid(flows, cfg.flow_threshold)
    work = curr_raw
    if cen is not None:
        work = apply_mask(work, ReflectionMask(cen[0], cen[1], cfg.mask_radius))
    edges = canny(work, cfg.canny_low, cfg.canny_high)
    contour = largest_contour(edges, cfg.close_radius)
    if contour is None:
        return TargetObservation(found=False)
    cx, cy = contour_center(contour)
    return TargetObservation(
        dx=cx - curr_raw.width / 2.0, dy=cy - curr_raw.height / 2.0, found=True
    )


class FrameDetector:
    """Streaming wrapper around detect_target that reuses the previous
    frame's blur; the first frame is compared against itself (zero flow)."""

    def __init__(self, cfg: PipelineConfig = PipelineConfig()):
        self.cfg = cfg
        self._prev_blur = None

    def update(self, frame: GrayImage) -> TargetObservation:
        blur = gaussian_blur(frame, self.cfg.blur_sigma)
        prev = self._prev_blur if self._prev_blur is not None else blur
        obs = _detect_from_blurred(prev, blur, frame, self.cfg)
        self._prev_blur = blur
        return obs
