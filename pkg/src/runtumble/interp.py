"""Periodic cubic interpolation utilities.

Two flavors of the same monotonized-cubic rule: whole-array shifts by a
constant displacement along one axis (the semi-Lagrangian workhorse; a
shift by an integer number of cells is exact), and single-point evaluation
at arbitrary coordinates. Monotonization clamps the cubic value to the
range of the two bracketing nodes, which preserves positivity.
"""

import numpy as np


def _cubic_weights(u):
    """Lagrange cubic weights at local coordinate u in [0, 1] on nodes (-1, 0, 1, 2)."""
    wm1 = -u * (u - 1.0) * (u - 2.0) / 6.0
    w0 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0
    w1 = -u * (u + 1.0) * (u - 2.0) / 2.0
    w2 = u * (u + 1.0) * (u - 1.0) / 6.0
    return wm1, w0, w1, w2


def axis_shift(a, disp, dx, axis=0, limit=True):
    """Values of a periodic field shifted along one axis: out(x) = a(x - disp).

    a is sampled on a uniform periodic grid of spacing dx along `axis`.
    When disp/dx is an integer the result is an exact roll. With
    limit=True the cubic value is clamped to the local bracketing range.
    """
    s = disp / dx
    m = int(np.floor(s))
    u = 1.0 - (s - m)  # local coordinate on the stencil anchored at node i - m - 1

    if s == m:
        return np.roll(a, m, axis=axis)

    # single wrap-padded gather; the four stencil nodes are then slices
    n = a.shape[axis]
    idx = np.mod(np.arange(n + 3) - (m + 2), n)
    P = np.take(a, idx, axis=axis)

    def seg(j):
        sl = [slice(None)] * a.ndim
        sl[axis] = slice(j, j + n)
        return P[tuple(sl)]

    below, base, upper, above = seg(0), seg(1), seg(2), seg(3)
    wm1, w0, w1, w2 = _cubic_weights(u)
    out = wm1 * below + w0 * base + w1 * upper + w2 * above
    if limit:
        lo = np.minimum(base, upper)
        hi = np.maximum(base, upper)
        out = np.clip(out, lo, hi)
    return out


def shift_spatial(values, disp, dx, limit=True):
    """Shift a d-dimensional periodic field by a displacement vector.

    out(x) = values(x - disp), applied axis by axis (the displacement is
    constant so the axis interpolations commute up to the cubic error).
    """
    out = values
    for axis, da in enumerate(np.atleast_1d(disp)):
        if da != 0.0:
            out = axis_shift(out, da, dx, axis=axis, limit=limit)
    return out


def velocity_offset_stack(values, vnodes, factor, dx, limit=True):
    """Per-node shifted copies out[..., j](x) = values(x - factor * v_j).

    values: spatial array x_shape, or x_shape + (K,) for per-node inputs.
    Nodes are processed in a node-first layout and grouped by distinct
    velocity component per axis, so each axis costs one set of rolls per
    distinct component (at most nv) on contiguous blocks.
    """
    K, d = vnodes.shape
    if values.ndim == d:
        arr = np.broadcast_to(values, (K,) + values.shape).copy()
    elif values.ndim == d + 1 and values.shape[-1] == K:
        arr = np.ascontiguousarray(np.moveaxis(values, -1, 0))
    else:
        raise ValueError("values must be x_shape or x_shape + (K,)")
    for a in range(d):
        comps = factor * vnodes[:, a]
        for val in np.unique(comps):
            if val == 0.0:
                continue
            js = np.nonzero(comps == val)[0]
            # nodes are mask-ordered, so groups are contiguous runs on the
            # leading axes; a slice avoids the fancy-index copy where it can
            if js[-1] - js[0] + 1 == len(js):
                sel = slice(js[0], js[-1] + 1)
            else:
                sel = js
            arr[sel] = axis_shift(arr[sel], val, dx, axis=a + 1, limit=limit)
    return np.moveaxis(arr, 0, -1)


def interp_point(values, x0, dx, points, limit=True):
    """Monotonized-cubic evaluation of a periodic field at arbitrary points.

    values: d-dimensional array on the grid x0 + i*dx per axis.
    points: (..., d) coordinates; wrapped periodically.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = values.ndim
    n = np.array(values.shape)
    # fractional index per axis
    fi = (pts - x0) / dx
    base = np.floor(fi).astype(int)
    u = fi - base

    out = np.zeros(pts.shape[0])
    # per-axis cubic weights, indexable by stencil offset
    w_axis = []
    for a in range(d):
        wm1, w0, w1, w2 = _cubic_weights(u[:, a])
        w_axis.append({-1: wm1, 0: w0, 1: w1, 2: w2})
    # accumulate the tensor-product stencil
    offs = np.stack(np.meshgrid(*([np.arange(-1, 3)] * d), indexing="ij"), axis=-1).reshape(-1, d)
    for off in offs:
        w = np.ones(pts.shape[0])
        idx = []
        for a in range(d):
            w = w * w_axis[a][off[a]]
            idx.append(np.mod(base[:, a] + off[a], n[a]))
        out += w * values[tuple(idx)]

    if limit:
        lo = np.full(pts.shape[0], np.inf)
        hi = np.full(pts.shape[0], -np.inf)
        corner_offs = np.stack(np.meshgrid(*([np.array([0, 1])] * d), indexing="ij"), axis=-1).reshape(-1, d)
        for off in corner_offs:
            idx = tuple(np.mod(base[:, a] + off[a], n[a]) for a in range(d))
            vals = values[idx]
            lo = np.minimum(lo, vals)
            hi = np.maximum(hi, vals)
        out = np.clip(out, lo, hi)

    if np.asarray(points).ndim == 1:
        return float(out[0])
    return out
