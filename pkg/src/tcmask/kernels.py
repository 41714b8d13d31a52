"""Hot inner loops, in two interchangeable backends.

Each kernel exists as a scalar loop (compiled with numba when the numba
backend is active) and as a vectorized numpy twin. The twins evaluate the
same IEEE-754 expressions in the same association order, so the two backends
produce bit-identical outputs; tests assert this.

Rasterization rule shared by all fill kernels: a pixel belongs to a triangle
when its center (x + 0.5, y + 0.5) satisfies all three edge functions, with
ties on an edge accepted only for top edges (horizontal, interior below) and
left edges (descending in y). Triangles are wound so the signed area is
positive before edge tests. Depth competition happens on inverse camera
depth (larger wins, strict, so the first-drawn surface keeps exact ties).
"""

from __future__ import annotations

import numpy as np

from ._backend import USE_NUMBA, njit_kernel


# --- Monte Carlo containment -------------------------------------------------


def _count_points_in_box_loop(pts, rot, trans, he):
    r00 = rot[0, 0]; r01 = rot[0, 1]; r02 = rot[0, 2]
    r10 = rot[1, 0]; r11 = rot[1, 1]; r12 = rot[1, 2]
    r20 = rot[2, 0]; r21 = rot[2, 1]; r22 = rot[2, 2]
    t0 = trans[0]; t1 = trans[1]; t2 = trans[2]
    h0 = he[0]; h1 = he[1]; h2 = he[2]
    count = 0
    for i in range(pts.shape[0]):
        sx = pts[i, 0]; sy = pts[i, 1]; sz = pts[i, 2]
        x = r00 * sx + r01 * sy + r02 * sz + t0
        y = r10 * sx + r11 * sy + r12 * sz + t1
        z = r20 * sx + r21 * sy + r22 * sz + t2
        if abs(x) <= h0 and abs(y) <= h1 and abs(z) <= h2:
            count += 1
    return count


def _count_points_in_box_numpy(pts, rot, trans, he):
    sx = pts[:, 0]; sy = pts[:, 1]; sz = pts[:, 2]
    x = rot[0, 0] * sx + rot[0, 1] * sy + rot[0, 2] * sz + trans[0]
    y = rot[1, 0] * sx + rot[1, 1] * sy + rot[1, 2] * sz + trans[1]
    z = rot[2, 0] * sx + rot[2, 1] * sy + rot[2, 2] * sz + trans[2]
    inside = (np.abs(x) <= he[0]) & (np.abs(y) <= he[1]) & (np.abs(z) <= he[2])
    return int(np.count_nonzero(inside))


# --- Per-frame occlusion statistics -------------------------------------------


def _occlusion_stats_loop(visible, xray):
    k_count = xray.shape[0]
    height, width = visible.shape
    vis_counts = np.zeros(k_count + 1, dtype=np.int64)
    xray_counts = np.zeros(k_count, dtype=np.int64)
    covering = np.zeros((k_count, k_count + 1), dtype=np.int64)
    for y in range(height):
        for x in range(width):
            v = visible[y, x]
            vis_counts[v] += 1
            for k in range(k_count):
                if xray[k, y, x]:
                    xray_counts[k] += 1
                    covering[k, v] += 1
    return vis_counts, xray_counts, covering


def _occlusion_stats_numpy(visible, xray):
    k_count = xray.shape[0]
    vis_counts = np.bincount(visible.ravel(), minlength=k_count + 1).astype(np.int64)
    xray_counts = xray.sum(axis=(1, 2)).astype(np.int64)
    covering = np.zeros((k_count, k_count + 1), dtype=np.int64)
    for k in range(k_count):
        counts = np.bincount(visible[xray[k]], minlength=k_count + 1)
        covering[k] = counts[: k_count + 1]
    return vis_counts, xray_counts, covering


# --- Triangle fill -----------------------------------------------------------
#
# Triangles arrive as xy (n, 3, 2) screen coordinates and invz (n, 3) inverse
# depths, already near-clipped and projected. Vertex order is reoriented here.


def _fill_visible_loop(xy, invz, ids, zbuf, idbuf):
    height, width = zbuf.shape
    for t in range(xy.shape[0]):
        x0 = xy[t, 0, 0]; y0 = xy[t, 0, 1]
        x1 = xy[t, 1, 0]; y1 = xy[t, 1, 1]
        x2 = xy[t, 2, 0]; y2 = xy[t, 2, 1]
        w0 = invz[t, 0]; w1 = invz[t, 1]; w2 = invz[t, 2]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        if area < 0.0:
            x1, x2 = x2, x1
            y1, y2 = y2, y1
            w1, w2 = w2, w1
            area = -area
        # edge i lies opposite vertex i
        ax0 = x2 - x1; ay0 = y2 - y1
        ax1 = x0 - x2; ay1 = y0 - y2
        ax2 = x1 - x0; ay2 = y1 - y0
        tl0 = (ay0 == 0.0 and ax0 > 0.0) or ay0 < 0.0
        tl1 = (ay1 == 0.0 and ax1 > 0.0) or ay1 < 0.0
        tl2 = (ay2 == 0.0 and ax2 > 0.0) or ay2 < 0.0
        minx = min(x0, min(x1, x2)); maxx = max(x0, max(x1, x2))
        miny = min(y0, min(y1, y2)); maxy = max(y0, max(y1, y2))
        px0 = int(np.ceil(minx - 0.5))
        px1 = int(np.floor(maxx - 0.5))
        py0 = int(np.ceil(miny - 0.5))
        py1 = int(np.floor(maxy - 0.5))
        if px0 < 0:
            px0 = 0
        if py0 < 0:
            py0 = 0
        if px1 > width - 1:
            px1 = width - 1
        if py1 > height - 1:
            py1 = height - 1
        tid = ids[t]
        for py in range(py0, py1 + 1):
            cy = py + 0.5
            for px in range(px0, px1 + 1):
                cx = px + 0.5
                e0 = ax0 * (cy - y1) - ay0 * (cx - x1)
                if not (e0 > 0.0 or (e0 == 0.0 and tl0)):
                    continue
                e1 = ax1 * (cy - y2) - ay1 * (cx - x2)
                if not (e1 > 0.0 or (e1 == 0.0 and tl1)):
                    continue
                e2 = ax2 * (cy - y0) - ay2 * (cx - x0)
                if not (e2 > 0.0 or (e2 == 0.0 and tl2)):
                    continue
                w = (e0 / area) * w0 + (e1 / area) * w1 + (e2 / area) * w2
                if w > zbuf[py, px]:
                    zbuf[py, px] = w
                    idbuf[py, px] = tid
    return 0


def _fill_coverage_loop(xy, plane):
    height, width = plane.shape
    for t in range(xy.shape[0]):
        x0 = xy[t, 0, 0]; y0 = xy[t, 0, 1]
        x1 = xy[t, 1, 0]; y1 = xy[t, 1, 1]
        x2 = xy[t, 2, 0]; y2 = xy[t, 2, 1]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        if area < 0.0:
            x1, x2 = x2, x1
            y1, y2 = y2, y1
        ax0 = x2 - x1; ay0 = y2 - y1
        ax1 = x0 - x2; ay1 = y0 - y2
        ax2 = x1 - x0; ay2 = y1 - y0
        tl0 = (ay0 == 0.0 and ax0 > 0.0) or ay0 < 0.0
        tl1 = (ay1 == 0.0 and ax1 > 0.0) or ay1 < 0.0
        tl2 = (ay2 == 0.0 and ax2 > 0.0) or ay2 < 0.0
        minx = min(x0, min(x1, x2)); maxx = max(x0, max(x1, x2))
        miny = min(y0, min(y1, y2)); maxy = max(y0, max(y1, y2))
        px0 = int(np.ceil(minx - 0.5))
        px1 = int(np.floor(maxx - 0.5))
        py0 = int(np.ceil(miny - 0.5))
        py1 = int(np.floor(maxy - 0.5))
        if px0 < 0:
            px0 = 0
        if py0 < 0:
            py0 = 0
        if px1 > width - 1:
            px1 = width - 1
        if py1 > height - 1:
            py1 = height - 1
        for py in range(py0, py1 + 1):
            cy = py + 0.5
            for px in range(px0, px1 + 1):
                cx = px + 0.5
                e0 = ax0 * (cy - y1) - ay0 * (cx - x1)
                if not (e0 > 0.0 or (e0 == 0.0 and tl0)):
                    continue
                e1 = ax1 * (cy - y2) - ay1 * (cx - x2)
                if not (e1 > 0.0 or (e1 == 0.0 and tl1)):
                    continue
                e2 = ax2 * (cy - y0) - ay2 * (cx - x0)
                if not (e2 > 0.0 or (e2 == 0.0 and tl2)):
                    continue
                plane[py, px] = True
    return 0


def _triangle_setup(xy_t, invz_t):
    """Orientation, edge vectors, tie flags and pixel bbox for one triangle."""
    x0, y0 = xy_t[0]; x1, y1 = xy_t[1]; x2, y2 = xy_t[2]
    w0, w1, w2 = invz_t
    area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
    if area == 0.0:
        return None
    if area < 0.0:
        x1, x2 = x2, x1
        y1, y2 = y2, y1
        w1, w2 = w2, w1
        area = -area
    ax0 = x2 - x1; ay0 = y2 - y1
    ax1 = x0 - x2; ay1 = y0 - y2
    ax2 = x1 - x0; ay2 = y1 - y0
    tl0 = (ay0 == 0.0 and ax0 > 0.0) or ay0 < 0.0
    tl1 = (ay1 == 0.0 and ax1 > 0.0) or ay1 < 0.0
    tl2 = (ay2 == 0.0 and ax2 > 0.0) or ay2 < 0.0
    px0 = int(np.ceil(min(x0, x1, x2) - 0.5))
    px1 = int(np.floor(max(x0, x1, x2) - 0.5))
    py0 = int(np.ceil(min(y0, y1, y2) - 0.5))
    py1 = int(np.floor(max(y0, y1, y2) - 0.5))
    return (
        (x0, y0, x1, y1, x2, y2),
        (w0, w1, w2),
        area,
        (ax0, ay0, ax1, ay1, ax2, ay2),
        (tl0, tl1, tl2),
        (px0, px1, py0, py1),
    )


def _inside_block(setup, px0, px1, py0, py1):
    """Coverage mask and inverse depth over a pixel block."""
    (x0, y0, x1, y1, x2, y2), (w0, w1, w2), area, edges, tls, _ = setup
    ax0, ay0, ax1, ay1, ax2, ay2 = edges
    tl0, tl1, tl2 = tls
    cy = (np.arange(py0, py1 + 1)[:, None] + 0.5)
    cx = (np.arange(px0, px1 + 1)[None, :] + 0.5)
    e0 = ax0 * (cy - y1) - ay0 * (cx - x1)
    e1 = ax1 * (cy - y2) - ay1 * (cx - x2)
    e2 = ax2 * (cy - y0) - ay2 * (cx - x0)
    inside = (
        ((e0 > 0.0) | ((e0 == 0.0) & tl0))
        & ((e1 > 0.0) | ((e1 == 0.0) & tl1))
        & ((e2 > 0.0) | ((e2 == 0.0) & tl2))
    )
    w = (e0 / area) * w0 + (e1 / area) * w1 + (e2 / area) * w2
    return inside, w


def _fill_visible_numpy(xy, invz, ids, zbuf, idbuf):
    height, width = zbuf.shape
    for t in range(xy.shape[0]):
        setup = _triangle_setup(xy[t], invz[t])
        if setup is None:
            continue
        px0, px1, py0, py1 = setup[5]
        px0 = max(px0, 0); py0 = max(py0, 0)
        px1 = min(px1, width - 1); py1 = min(py1, height - 1)
        if px0 > px1 or py0 > py1:
            continue
        inside, w = _inside_block(setup, px0, px1, py0, py1)
        zblk = zbuf[py0 : py1 + 1, px0 : px1 + 1]
        iblk = idbuf[py0 : py1 + 1, px0 : px1 + 1]
        upd = inside & (w > zblk)
        zblk[upd] = w[upd]
        iblk[upd] = ids[t]
    return 0


def _fill_coverage_numpy(xy, plane):
    height, width = plane.shape
    dummy = np.zeros(3)
    for t in range(xy.shape[0]):
        setup = _triangle_setup(xy[t], dummy)
        if setup is None:
            continue
        px0, px1, py0, py1 = setup[5]
        px0 = max(px0, 0); py0 = max(py0, 0)
        px1 = min(px1, width - 1); py1 = min(py1, height - 1)
        if px0 > px1 or py0 > py1:
            continue
        inside, _ = _inside_block(setup, px0, px1, py0, py1)
        blk = plane[py0 : py1 + 1, px0 : px1 + 1]
        blk |= inside
    return 0


if USE_NUMBA:
    _count_points_impl = njit_kernel(_count_points_in_box_loop)
    _fill_visible_impl = njit_kernel(_fill_visible_loop)
    _fill_coverage_impl = njit_kernel(_fill_coverage_loop)
    _occlusion_stats_impl = njit_kernel(_occlusion_stats_loop)
else:
    _count_points_impl = _count_points_in_box_numpy
    _fill_visible_impl = _fill_visible_numpy
    _fill_coverage_impl = _fill_coverage_numpy
    _occlusion_stats_impl = _occlusion_stats_numpy


def count_points_in_box(pts: np.ndarray, rot: np.ndarray, trans: np.ndarray, he: np.ndarray) -> int:
    """Count points (n, 3) landing inside the box after the affine map."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    rot = np.ascontiguousarray(rot, dtype=np.float64)
    trans = np.ascontiguousarray(trans, dtype=np.float64)
    he = np.ascontiguousarray(he, dtype=np.float64)
    return int(_count_points_impl(pts, rot, trans, he))


def occlusion_stats(visible: np.ndarray, xray: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Visible-pixel counts per id, X-ray pixel counts, and per-object covering counts.

    covering[k, v] counts pixels inside object k+1's X-ray footprint whose
    visible id is v; integer accumulation, so both backends agree exactly.
    """
    return _occlusion_stats_impl(
        np.ascontiguousarray(visible), np.ascontiguousarray(xray)
    )


def fill_visible(xy: np.ndarray, invz: np.ndarray, ids: np.ndarray, zbuf: np.ndarray, idbuf: np.ndarray) -> None:
    """Depth-competed id fill over prepared screen triangles, in draw order."""
    if xy.shape[0] == 0:
        return
    _fill_visible_impl(
        np.ascontiguousarray(xy, dtype=np.float64),
        np.ascontiguousarray(invz, dtype=np.float64),
        np.ascontiguousarray(ids, dtype=np.uint16),
        zbuf,
        idbuf,
    )


def fill_coverage(xy: np.ndarray, plane: np.ndarray) -> None:
    """Mark every pixel covered by any of the prepared screen triangles."""
    if xy.shape[0] == 0:
        return
    _fill_coverage_impl(np.ascontiguousarray(xy, dtype=np.float64), plane)
