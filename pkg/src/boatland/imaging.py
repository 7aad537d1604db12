"""Image primitives: grayscale frames, Gaussian blur, gradients, binary
morphology, and PGM file I/O.

Luminance is kept as float64 in [0, 1] throughout; 8-bit quantization
happens only at the PGM boundary.
"""

import math
from dataclasses import dataclass

import numpy as np

from boatland import kernels


@dataclass(frozen=True)
class GrayImage:
    """A rectangular grid of luminance samples in [0, 1], row-major."""

    px: np.ndarray  # (height, width) float64

    def __post_init__(self):
        a = self.px
        if a.ndim != 2 or a.size == 0:
            raise ValueError("image must be a non-empty 2-D array")
        if a.dtype != np.float64 or not a.flags.c_contiguous:
            object.__setattr__(self, "px", np.ascontiguousarray(a, dtype=np.float64))
            a = self.px
        lo, hi = float(a.min()), float(a.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"luminance out of [0,1]: min={lo}, max={hi}")

    @property
    def width(self):
        return self.px.shape[1]

    @property
    def height(self):
        return self.px.shape[0]

    @property
    def data(self):
        """Row-major flat view, length width*height."""
        return self.px.reshape(-1)

    @classmethod
    def full(cls, width, height, value):
        return cls(np.full((height, width), float(value)))


@dataclass(frozen=True)
class BinaryImage:
    """A {0,1}-valued grid, same layout as GrayImage."""

    px: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        a = self.px
        if a.ndim != 2 or a.size == 0:
            raise ValueError("image must be a non-empty 2-D array")
        if a.dtype != np.uint8 or not a.flags.c_contiguous:
            object.__setattr__(self, "px", np.ascontiguousarray(a, dtype=np.uint8))
            a = self.px
        if a.max(initial=0) > 1:
            raise ValueError("binary image values must be 0 or 1")

    @property
    def width(self):
        return self.px.shape[1]

    @property
    def height(self):
        return self.px.shape[0]


@dataclass(frozen=True)
class Kernel:
    """Square convolution kernel of side 2*radius+1, weights summing to 1."""

    radius: int
    weights: np.ndarray
    sigma: float


def gaussian_point(x, y, sigma):
    """The 2-D Gaussian density (1 / 2*pi*sigma^2) * exp(-(x^2+y^2) / 2*sigma^2)."""
    s2 = sigma * sigma
    return math.exp(-(x * x + y * y) / (2.0 * s2)) / (2.0 * math.pi * s2)


def gaussian_kernel(sigma, radius):
    """Sample the Gaussian at integer offsets and normalize to sum 1."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = int(radius)
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    xx, yy = np.meshgrid(ax, ax)
    w = np.exp(-(xx * xx + yy * yy) / (2.0 * sigma * sigma)) / (
        2.0 * math.pi * sigma * sigma
    )
    w /= w.sum()
    return Kernel(radius=radius, weights=w, sigma=float(sigma))


def convolve(img: GrayImage, k: Kernel) -> GrayImage:
    """Convolve with clamp-to-edge borders; output clipped back to [0, 1]."""
    out = kernels.convolve2d(img.px, k.weights)
    np.clip(out, 0.0, 1.0, out=out)
    return GrayImage(out)


def gaussian_blur(img: GrayImage, sigma) -> GrayImage:
    """Gaussian blur with kernel radius ceil(3*sigma)."""
    return convolve(img, gaussian_kernel(sigma, math.ceil(3.0 * sigma)))


def gradients(img: GrayImage):
    """Spatial derivatives (gx, gy): central differences in the interior,
    one-sided at the borders. Returned fields are not range-clipped."""
    if img.width < 3 or img.height < 3:
        raise ValueError("image must be at least 3x3 for gradients")
    gy, gx = np.gradient(img.px)
    return gx, gy


def dilate(img: BinaryImage, radius) -> BinaryImage:
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    return BinaryImage(kernels.dilate(img.px, radius))


def erode(img: BinaryImage, radius) -> BinaryImage:
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    return BinaryImage(kernels.erode(img.px, radius))


def write_pgm(img: GrayImage, path):
    """Write binary PGM (P5, maxval 255); luminance v maps to round(v*255)."""
    raw = np.rint(img.px * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(raw.tobytes())


def read_pgm(path) -> GrayImage:
    """Read binary PGM (P5, maxval 255 only)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    # header: magic, width, height, maxval, single whitespace, then raster
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":  # comment line
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # the single whitespace byte after maxval
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError:
        raise ValueError(f"{path}: malformed PGM header") from None
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval} (want 255)")
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ValueError(f"{path}: truncated raster")
    px = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return GrayImage(px.astype(np.float64) / 255.0)
