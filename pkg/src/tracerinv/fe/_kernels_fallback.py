"""Pure-numpy fallbacks for the compiled stencil kernels.

Same contracts as ``_kernels``: apply periodic 9-point stencils on the fine
mesh and the 5x5 two-scale stencils coupling the fine and coarse meshes.
The two-scale kernels accumulate into ``out``.
"""

import numpy as np

_OFFSETS9 = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)]


def stencil9_const_apply(const9, u, out):
    acc = const9[4] * u
    for o, (dx, dy) in enumerate(_OFFSETS9):
        if (dx, dy) == (0, 0):
            continue
        acc = acc + const9[o] * np.roll(u, shift=(-dx, -dy), axis=(0, 1))
    out[:, :] = acc


def stencil9_apply(conv9, const9, u, out):
    acc = (const9[4] + conv9[4]) * u
    for o, (dx, dy) in enumerate(_OFFSETS9):
        if (dx, dy) == (0, 0):
            continue
        rolled = np.roll(u, shift=(-dx, -dy), axis=(0, 1))
        acc = acc + const9[o] * rolled + conv9[o] * rolled
    out[:, :] = acc


_CORNERS = [(0, 0), (1, 0), (0, 1), (1, 1)]


def convection_assemble(tmat, wx, wy, conv9):
    nv = wx.shape[0]
    cols = np.empty((8, nv, nv))
    for c, (cx, cy) in enumerate(_CORNERS):
        cols[c] = np.roll(wx, shift=(-cx, -cy), axis=(0, 1))
        cols[4 + c] = np.roll(wy, shift=(-cx, -cy), axis=(0, 1))
    nloc = cols.reshape(8, nv * nv).T @ np.asarray(tmat)
    conv9[:, :, :] = 0.0
    for i, (ix, iy) in enumerate(_CORNERS):
        for j, (jx, jy) in enumerate(_CORNERS):
            o = _OFFSETS9.index((jx - ix, jy - iy))
            vals = nloc[:, 4 * i + j].reshape(nv, nv)
            conv9[o] += np.roll(vals, shift=(ix, iy), axis=(0, 1))


def twoscale_restrict(d5, u, out):
    for a in range(5):
        for b in range(5):
            c = d5[a, b]
            if c == 0.0:
                continue
            out += c * np.roll(u, shift=(2 - a, 2 - b), axis=(0, 1))[::2, ::2]


def twoscale_prolong(d5, p, out):
    up = np.zeros_like(out)
    up[::2, ::2] = p
    for a in range(5):
        for b in range(5):
            c = d5[a, b]
            if c == 0.0:
                continue
            out += c * np.roll(up, shift=(a - 2, b - 2), axis=(0, 1))
