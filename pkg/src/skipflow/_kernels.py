"""Compiled inner loops for the pyramid and the LK solver.

The numpy versions in :mod:`skipflow.imaging` define the semantics; these
must agree with them to rounding error (see tests/test_kernels.py).
"""

import math

import numpy as np
from numba import njit

_K0 = 1.0 / 16.0
_K1 = 4.0 / 16.0
_K2 = 6.0 / 16.0


@njit(cache=True)
def _clampi(i, n):
    if i < 0:
        return 0
    if i > n - 1:
        return n - 1
    return i


@njit(cache=True)
def pyr_down(img):
    """(1,4,6,4,1)/16 separable blur with clamped borders, then keep even rows/cols."""
    h, w = img.shape
    oh = h // 2
    ow = w // 2
    rows = np.empty((oh, w))
    for r in range(oh):
        y = 2 * r
        a = img[_clampi(y - 2, h)]
        b = img[_clampi(y - 1, h)]
        c = img[y]
        d = img[_clampi(y + 1, h)]
        e = img[_clampi(y + 2, h)]
        for x in range(w):
            rows[r, x] = _K0 * (a[x] + e[x]) + _K1 * (b[x] + d[x]) + _K2 * c[x]
    out = np.empty((oh, ow))
    for r in range(oh):
        for cidx in range(ow):
            x = 2 * cidx
            out[r, cidx] = (
                _K0 * (rows[r, _clampi(x - 2, w)] + rows[r, _clampi(x + 2, w)])
                + _K1 * (rows[r, _clampi(x - 1, w)] + rows[r, _clampi(x + 1, w)])
                + _K2 * rows[r, x]
            )
    return out


@njit(cache=True)
def gradient(img):
    h, w = img.shape
    ix = np.empty((h, w))
    iy = np.empty((h, w))
    # branch-free interiors so the loops vectorise; borders are one-sided
    for y in range(h):
        for x in range(1, w - 1):
            ix[y, x] = 0.5 * (img[y, x + 1] - img[y, x - 1])
        ix[y, 0] = img[y, 1] - img[y, 0]
        ix[y, w - 1] = img[y, w - 1] - img[y, w - 2]
    for y in range(1, h - 1):
        for x in range(w):
            iy[y, x] = 0.5 * (img[y + 1, x] - img[y - 1, x])
    for x in range(w):
        iy[0, x] = img[1, x] - img[0, x]
        iy[h - 1, x] = img[h - 1, x] - img[h - 2, x]
    return ix, iy


@njit(cache=True)
def _bilinear(img, x, y):
    h, w = img.shape
    if x < 0.0:
        x = 0.0
    elif x > w - 1:
        x = w - 1.0
    if y < 0.0:
        y = 0.0
    elif y > h - 1:
        y = h - 1.0
    x0 = int(math.floor(x))
    y0 = int(math.floor(y))
    if x0 > w - 2:
        x0 = max(w - 2, 0)
    if y0 > h - 2:
        y0 = max(h - 2, 0)
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


@njit(cache=True)
def _window_mismatch(img, tmpl, gx, gy, wx, wy, x0, y0, hw, dx, dy):
    """Sum of (tmpl - warped) * gradient over the window shifted by (dx, dy).

    Returns (bx, by, sum |tmpl - warped|). When the shifted window lies fully
    inside the image every tap shares one set of bilinear weights, so they are
    computed once instead of per tap.
    """
    h, w = img.shape
    sx0 = x0 + dx
    sy0 = y0 + dy
    bx = 0.0
    by = 0.0
    acc = 0.0
    side = 2 * hw + 1
    if math.isfinite(sx0) and math.isfinite(sy0) and sx0 >= 0.0 and sy0 >= 0.0 \
            and sx0 + side - 1 < w - 1 and sy0 + side - 1 < h - 1:
        ix0 = int(math.floor(sx0))
        iy0 = int(math.floor(sy0))
        fx = sx0 - ix0
        fy = sy0 - iy0
        w00 = (1.0 - fx) * (1.0 - fy)
        w01 = fx * (1.0 - fy)
        w10 = (1.0 - fx) * fy
        w11 = fx * fy
        k = 0
        for r in range(side):
            yy = iy0 + r
            for c in range(side):
                xx = ix0 + c
                v = img[yy, xx] * w00 + img[yy, xx + 1] * w01 + img[yy + 1, xx] * w10 + img[yy + 1, xx + 1] * w11
                diff = tmpl[k] - v
                bx += diff * gx[k]
                by += diff * gy[k]
                acc += abs(diff)
                k += 1
    else:
        for k in range(side * side):
            diff = tmpl[k] - _bilinear(img, wx[k] + dx, wy[k] + dy)
            bx += diff * gx[k]
            by += diff * gy[k]
            acc += abs(diff)
    return bx, by, acc


@njit(cache=True)
def lk_level(prev, ix, iy, nxt, pts, guess, hw, max_iters, eps, min_eigen, final, out, trackable, residual):
    """One pyramid level of iterative LK for every point.

    ``pts`` and ``guess`` are already in this level's coordinates. Writes the
    refined displacement into ``out`` and whether the structure tensor was
    usable into ``trackable``. On the final level the mean absolute window
    error at the solution goes to ``residual``.
    """
    h, w = prev.shape
    side = 2 * hw + 1
    n_win = side * side
    tmpl = np.empty(n_win)
    gx = np.empty(n_win)
    gy = np.empty(n_win)
    wx = np.empty(n_win)
    wy = np.empty(n_win)
    for p in range(pts.shape[0]):
        cx = pts[p, 0]
        cy = pts[p, 1]
        gxx = 0.0
        gxy = 0.0
        gyy = 0.0
        k = 0
        for oy in range(-hw, hw + 1):
            for ox in range(-hw, hw + 1):
                sx = cx + ox
                sy = cy + oy
                wx[k] = sx
                wy[k] = sy
                tmpl[k] = _bilinear(prev, sx, sy)
                if sx >= 0.0 and sx <= w - 1 and sy >= 0.0 and sy <= h - 1:
                    a = _bilinear(ix, sx, sy)
                    b = _bilinear(iy, sx, sy)
                else:
                    # window overhangs the border at coarse levels
                    a = 0.0
                    b = 0.0
                gx[k] = a
                gy[k] = b
                gxx += a * a
                gxy += a * b
                gyy += b * b
                k += 1
        n_valid = 0
        for k in range(n_win):
            if wx[k] >= 0.0 and wx[k] <= w - 1 and wy[k] >= 0.0 and wy[k] <= h - 1:
                n_valid += 1
        if n_valid == 0:
            n_valid = 1
        det = gxx * gyy - gxy * gxy
        min_eig = 0.5 * (gxx + gyy) - math.sqrt(0.25 * (gxx - gyy) ** 2 + gxy * gxy)
        ok = (min_eig / n_valid >= min_eigen) and det > 1e-12
        trackable[p] = ok
        vx = 0.0
        vy = 0.0
        if ok:
            for _ in range(max_iters):
                dx = guess[p, 0] + vx
                dy = guess[p, 1] + vy
                bx, by, _ = _window_mismatch(nxt, tmpl, gx, gy, wx, wy, cx - hw, cy - hw, hw, dx, dy)
                ex = (gyy * bx - gxy * by) / det
                ey = (gxx * by - gxy * bx) / det
                vx += ex
                vy += ey
                if not (math.isfinite(ex) and math.isfinite(ey)):
                    break
                if ex * ex + ey * ey < eps * eps:
                    break
        out[p, 0] = guess[p, 0] + vx
        out[p, 1] = guess[p, 1] + vy
        if final:
            dx = out[p, 0]
            dy = out[p, 1]
            if math.isfinite(dx) and math.isfinite(dy):
                _, _, acc = _window_mismatch(nxt, tmpl, gx, gy, wx, wy, cx - hw, cy - hw, hw, dx, dy)
                residual[p] = acc / n_win
            else:
                residual[p] = np.inf
