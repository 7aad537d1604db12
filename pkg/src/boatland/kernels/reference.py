"""Vectorized numpy implementations of the per-pixel kernels.

This is the fallback backend used when the compiled extension is not
available; both backends implement the same contracts (same border
policies, same tie-breaks, same label numbering).
"""

from collections import deque

import numpy as np

BACKEND_NAME = "reference"

_TAN_22_5 = 0.4142135623730951
_TAN_67_5 = 2.414213562373095


def convolve2d(img, kernel):
    """Full 2D convolution with clamp-to-edge borders. Returns float64."""
    kh, kw = kernel.shape
    r = kh // 2
    padded = np.pad(img, r, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, (kh, kw))
    # convolution flips the kernel; Gaussian kernels are symmetric but the
    # contract is stated for general kernels
    return np.einsum("ijkl,kl->ij", windows, kernel[::-1, ::-1])


def window_sum(field, radius):
    """Sum over the (2r+1)^2 neighborhood of each pixel, zero padding."""
    h, w = field.shape
    acc = np.zeros((h + 2 * radius + 1, w + 2 * radius + 1))
    acc[radius + 1 : radius + 1 + h, radius + 1 : radius + 1 + w] = field
    np.cumsum(acc, axis=0, out=acc)
    np.cumsum(acc, axis=1, out=acc)
    k = 2 * radius + 1
    return acc[k:, k:] - acc[:-k, k:] - acc[k:, :-k] + acc[:-k, :-k]


def _sliding_reduce(img, radius, op, pad_value):
    k = 2 * radius + 1
    padded = np.pad(img, radius, mode="constant", constant_values=pad_value)
    rows = op.reduce(
        np.stack([padded[i : i + img.shape[0], :] for i in range(k)]), axis=0
    )
    return op.reduce(
        np.stack([rows[:, j : j + img.shape[1]] for j in range(k)]), axis=0
    )


def dilate(img, radius):
    """Binary dilation, square element; out-of-bounds treated as 0."""
    return _sliding_reduce(img, radius, np.maximum, 0).astype(np.uint8)


def erode(img, radius):
    """Binary erosion, square element; out-of-bounds treated as 1 so the
    border does not eat into shapes (keeps closing extensive)."""
    return _sliding_reduce(img, radius, np.minimum, 1).astype(np.uint8)


def nms(mag, gx, gy):
    """Non-maximum suppression along the quantized gradient direction.

    A pixel survives when its magnitude strictly exceeds the forward
    neighbor and is >= the backward neighbor (the asymmetry thins two-pixel
    plateaus to a single pixel).
    """
    h, w = mag.shape
    pm = np.pad(mag, 1, mode="constant")
    ax, ay = np.abs(gx), np.abs(gy)
    horiz = ay <= _TAN_22_5 * ax
    vert = ay >= _TAN_67_5 * ax
    diag = ~horiz & ~vert
    diag_main = diag & (gx * gy > 0)
    diag_anti = diag & ~diag_main

    fwd = np.empty_like(mag)
    bwd = np.empty_like(mag)
    for mask, (fx, fy) in (
        (horiz, (1, 0)),
        (vert, (0, 1)),
        (diag_main, (1, 1)),
        (diag_anti, (-1, 1)),
    ):
        fwd[mask] = pm[1 + fy : 1 + fy + h, 1 + fx : 1 + fx + w][mask]
        bwd[mask] = pm[1 - fy : 1 - fy + h, 1 - fx : 1 - fx + w][mask]
    keep = (mag > 0) & (mag > fwd) & (mag >= bwd)
    return keep.astype(np.uint8)


def hysteresis(strong, weak):
    """Keep strong pixels plus weak pixels 8-connected to them."""
    final = strong.astype(bool)
    weak = weak.astype(bool)
    while True:
        grown = dilate(final.astype(np.uint8), 1).astype(bool) & weak & ~final
        if not grown.any():
            return final.astype(np.uint8)
        final |= grown


_NBRS8 = ((-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1))


def label8(img):
    """8-connected component labels, numbered 1.. in raster discovery order."""
    h, w = img.shape
    labels = np.zeros((h, w), dtype=np.int32)
    count = 0
    ys, xs = np.nonzero(img)
    for y0, x0 in zip(ys.tolist(), xs.tolist()):
        if labels[y0, x0]:
            continue
        count += 1
        queue = deque([(y0, x0)])
        labels[y0, x0] = count
        while queue:
            y, x = queue.popleft()
            for dx, dy in _NBRS8:
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and img[ny, nx] and not labels[ny, nx]:
                    labels[ny, nx] = count
                    queue.append((ny, nx))
    return labels, count


def fill_outside(img):
    """Mark background pixels 4-connected to the image border (1 = outside)."""
    free = img == 0
    outside = np.zeros_like(free)
    outside[0, :] = free[0, :]
    outside[-1, :] = free[-1, :]
    outside[:, 0] = free[:, 0]
    outside[:, -1] = free[:, -1]
    while True:
        grown = np.zeros_like(outside)
        grown[1:, :] |= outside[:-1, :]
        grown[:-1, :] |= outside[1:, :]
        grown[:, 1:] |= outside[:, :-1]
        grown[:, :-1] |= outside[:, 1:]
        grown &= free
        grown &= ~outside
        if not grown.any():
            return outside.astype(np.uint8)
        outside |= grown
