# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the per-pixel kernels.

Mirrors boatland.kernels.reference exactly: same border policies, same
non-maximum-suppression tie-breaks, same component numbering.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "native"

cdef double TAN_22_5 = 0.4142135623730951
cdef double TAN_67_5 = 2.414213562373095


def convolve2d(double[:, ::1] img, double[:, ::1] kernel):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t kh = kernel.shape[0], kw = kernel.shape[1]
    cdef Py_ssize_t r = kh // 2
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, i, j, sy, sx
    cdef double acc
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(kh):
                sy = y + r - i
                if sy < 0:
                    sy = 0
                elif sy >= h:
                    sy = h - 1
                for j in range(kw):
                    sx = x + r - j
                    if sx < 0:
                        sx = 0
                    elif sx >= w:
                        sx = w - 1
                    acc += kernel[i, j] * img[sy, sx]
            out[y, x] = acc
    return out_arr


def window_sum(double[:, ::1] field, int radius):
    cdef Py_ssize_t h = field.shape[0], w = field.shape[1]
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    # row sums first, then column sums over the row-summed field
    tmp_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] tmp = tmp_arr
    cdef Py_ssize_t y, x, j, lo, hi
    cdef double acc
    for y in range(h):
        for x in range(w):
            lo = x - radius
            hi = x + radius
            if lo < 0:
                lo = 0
            if hi >= w:
                hi = w - 1
            acc = 0.0
            for j in range(lo, hi + 1):
                acc += field[y, j]
            tmp[y, x] = acc
    for y in range(h):
        for x in range(w):
            lo = y - radius
            hi = y + radius
            if lo < 0:
                lo = 0
            if hi >= h:
                hi = h - 1
            acc = 0.0
            for j in range(lo, hi + 1):
                acc += tmp[j, x]
            out[y, x] = acc
    return out_arr


cdef _morph(unsigned char[:, ::1] img, int radius, unsigned char pad,
            bint is_dilate):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    out_arr = np.empty((h, w), dtype=np.uint8)
    tmp_arr = np.empty((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef unsigned char[:, ::1] tmp = tmp_arr
    cdef Py_ssize_t y, x, j
    cdef unsigned char v, s
    # horizontal pass then vertical pass (square element is separable)
    for y in range(h):
        for x in range(w):
            v = 1 if is_dilate == 0 else 0
            for j in range(x - radius, x + radius + 1):
                if j < 0 or j >= w:
                    s = pad
                else:
                    s = img[y, j]
                if is_dilate:
                    if s > v:
                        v = s
                else:
                    if s < v:
                        v = s
            tmp[y, x] = v
    for y in range(h):
        for x in range(w):
            v = 1 if is_dilate == 0 else 0
            for j in range(y - radius, y + radius + 1):
                if j < 0 or j >= h:
                    s = pad
                else:
                    s = tmp[j, x]
                if is_dilate:
                    if s > v:
                        v = s
                else:
                    if s < v:
                        v = s
            out[y, x] = v
    return out_arr


def dilate(unsigned char[:, ::1] img, int radius):
    return _morph(img, radius, 0, True)


def erode(unsigned char[:, ::1] img, int radius):
    return _morph(img, radius, 1, False)


def nms(double[:, ::1] mag, double[:, ::1] gx, double[:, ::1] gy):
    cdef Py_ssize_t h = mag.shape[0], w = mag.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef Py_ssize_t y, x
    cdef int fx, fy
    cdef double m, ax, ay, fwd, bwd
    for y in range(h):
        for x in range(w):
            m = mag[y, x]
            if m <= 0.0:
                continue
            ax = gx[y, x]
            ay = gy[y, x]
            if ax < 0:
                ax = -ax
            if ay < 0:
                ay = -ay
            if ay <= TAN_22_5 * ax:
                fx = 1
                fy = 0
            elif ay >= TAN_67_5 * ax:
                fx = 0
                fy = 1
            elif gx[y, x] * gy[y, x] > 0:
                fx = 1
                fy = 1
            else:
                fx = -1
                fy = 1
            if 0 <= y + fy < h and 0 <= x + fx < w:
                fwd = mag[y + fy, x + fx]
            else:
                fwd = 0.0
            if 0 <= y - fy < h and 0 <= x - fx < w:
                bwd = mag[y - fy, x - fx]
            else:
                bwd = 0.0
            if m > fwd and m >= bwd:
                out[y, x] = 1
    return out_arr


def hysteresis(unsigned char[:, ::1] strong, unsigned char[:, ::1] weak):
    cdef Py_ssize_t h = strong.shape[0], w = strong.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    stack_arr = np.empty(h * w, dtype=np.intp)
    cdef Py_ssize_t[::1] stack = stack_arr
    cdef Py_ssize_t top = 0
    cdef Py_ssize_t y, x, ny, nx, p
    cdef int dy, dx
    for y in range(h):
        for x in range(w):
            if strong[y, x]:
                out[y, x] = 1
                stack[top] = y * w + x
                top += 1
    while top > 0:
        top -= 1
        p = stack[top]
        y = p // w
        x = p % w
        for dy in range(-1, 2):
            for dx in range(-1, 2):
                ny = y + dy
                nx = x + dx
                if 0 <= ny < h and 0 <= nx < w and weak[ny, nx] and not out[ny, nx]:
                    out[ny, nx] = 1
                    stack[top] = ny * w + nx
                    top += 1
    return out_arr


def label8(unsigned char[:, ::1] img):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef int[:, ::1] labels = labels_arr
    stack_arr = np.empty(h * w, dtype=np.intp)
    cdef Py_ssize_t[::1] stack = stack_arr
    cdef Py_ssize_t top, y0, x0, y, x, ny, nx, p
    cdef int dy, dx, count = 0
    for y0 in range(h):
        for x0 in range(w):
            if img[y0, x0] and labels[y0, x0] == 0:
                count += 1
                labels[y0, x0] = count
                stack[0] = y0 * w + x0
                top = 1
                while top > 0:
                    top -= 1
                    p = stack[top]
                    y = p // w
                    x = p % w
                    for dy in range(-1, 2):
                        for dx in range(-1, 2):
                            ny = y + dy
                            nx = x + dx
                            if (0 <= ny < h and 0 <= nx < w and img[ny, nx]
                                    and labels[ny, nx] == 0):
                                labels[ny, nx] = count
                                stack[top] = ny * w + nx
                                top += 1
    return labels_arr, count


def fill_outside(unsigned char[:, ::1] img):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    stack_arr = np.empty(h * w, dtype=np.intp)
    cdef Py_ssize_t[::1] stack = stack_arr
    cdef Py_ssize_t top = 0
    cdef Py_ssize_t y, x, ny, nx, p, i
    for x in range(w):
        if img[0, x] == 0 and not out[0, x]:
            out[0, x] = 1
            stack[top] = x
            top += 1
        if img[h - 1, x] == 0 and not out[h - 1, x]:
            out[h - 1, x] = 1
            stack[top] = (h - 1) * w + x
            top += 1
    for y in range(h):
        if img[y, 0] == 0 and not out[y, 0]:
            out[y, 0] = 1
            stack[top] = y * w
            top += 1
        if img[y, w - 1] == 0 and not out[y, w - 1]:
            out[y, w - 1] = 1
            stack[top] = y * w + w - 1
            top += 1
    while top > 0:
        top -= 1
        p = stack[top]
        y = p // w
        x = p % w
        for i in range(4):
            if i == 0:
                ny = y - 1
                nx = x
            elif i == 1:
                ny = y + 1
                nx = x
            elif i == 2:
                ny = y
                nx = x - 1
            else:
                ny = y
                nx = x + 1
            if 0 <= ny < h and 0 <= nx < w and img[ny, nx] == 0 and not out[ny, nx]:
                out[ny, nx] = 1
                stack[top] = ny * w + nx
                top += 1
    return out_arr
