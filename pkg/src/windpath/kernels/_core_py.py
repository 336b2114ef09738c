"""Pure-Python fallback for the hot kernels.

Mirrors the compiled extension exactly, including the order of floating-point
operations, so both backends agree bit-for-bit on the same inputs.
"""

from __future__ import annotations

import math

BACKEND = "python"


def trilinear_sample(vectors, nx, ny, nz, minx, miny, minz, cx, cy, cz, x, y, z):
    """Trilinear interpolation of a cell-centered (N, 3) float32 field.

    Coordinates in the outer half-cell margin clamp to the boundary cell plane.
    """
    gx = (x - minx) / cx - 0.5
    gy = (y - miny) / cy - 0.5
    gz = (z - minz) / cz - 0.5
    if gx < 0.0:
        gx = 0.0
    if gx > nx - 1:
        gx = nx - 1.0
    if gy < 0.0:
        gy = 0.0
    if gy > ny - 1:
        gy = ny - 1.0
    if gz < 0.0:
        gz = 0.0
    if gz > nz - 1:
        gz = nz - 1.0
    i0 = int(gx)
    j0 = int(gy)
    k0 = int(gz)
    if i0 > nx - 2:
        i0 = nx - 2
    if j0 > ny - 2:
        j0 = ny - 2
    if k0 > nz - 2:
        k0 = nz - 2
    if i0 < 0:
        i0 = 0
    if j0 < 0:
        j0 = 0
    if k0 < 0:
        k0 = 0
    fx = gx - i0
    fy = gy - j0
    fz = gz - k0
    i1 = i0 + 1 if nx > 1 else i0
    j1 = j0 + 1 if ny > 1 else j0
    k1 = k0 + 1 if nz > 1 else k0

    out = [0.0, 0.0, 0.0]
    for a in range(3):
        c000 = float(vectors[i0 + nx * (j0 + ny * k0), a])
        c100 = float(vectors[i1 + nx * (j0 + ny * k0), a])
        c010 = float(vectors[i0 + nx * (j1 + ny * k0), a])
        c110 = float(vectors[i1 + nx * (j1 + ny * k0), a])
        c001 = float(vectors[i0 + nx * (j0 + ny * k1), a])
        c101 = float(vectors[i1 + nx * (j0 + ny * k1), a])
        c011 = float(vectors[i0 + nx * (j1 + ny * k1), a])
        c111 = float(vectors[i1 + nx * (j1 + ny * k1), a])
        c00 = c000 + (c100 - c000) * fx
        c10 = c010 + (c110 - c010) * fx
        c01 = c001 + (c101 - c001) * fx
        c11 = c011 + (c111 - c011) * fx
        c0 = c00 + (c10 - c00) * fy
        c1 = c01 + (c11 - c01) * fy
        out[a] = c0 + (c1 - c0) * fz
    return out[0], out[1], out[2]


def ray_distances(occupied, nx, ny, nz, cx, cy, cz, cellx, celly, cellz):
    """Distances from the center of cell (cx,cy,cz) to the first occupied
    cell's near face or the domain boundary, along +X,-X,+Y,-Y,+Z,-Z."""
    out = [0.0] * 6
    axes = (
        (0, 1, nx, cx, cellx),
        (0, -1, nx, cx, cellx),
        (1, 1, ny, cy, celly),
        (1, -1, ny, cy, celly),
        (2, 1, nz, cz, cellz),
        (2, -1, nz, cz, cellz),
    )
    for slot, (axis, sign, n, c, side) in enumerate(axes):
        k = 1
        hit = 0
        while True:
            j = c + sign * k
            if j < 0 or j >= n:
                break
            if axis == 0:
                idx = j + nx * (cy + ny * cz)
            elif axis == 1:
                idx = cx + nx * (j + ny * cz)
            else:
                idx = cx + nx * (cy + ny * j)
            if occupied[idx]:
                hit = 1
                break
            k += 1
        if hit:
            out[slot] = (k - 0.5) * side
        else:
            # boundary: k now counts cells to the wall inclusive of the last one
            out[slot] = (k - 0.5) * side
    return out


def energy_rate(V, rho, S, cd0, k, M, g, eta):
    """Power-like bracket of the energy equation divided by V*eta: J per meter."""
    return (0.5 * rho * V * V * V * S * cd0 + 2.0 * k * M * M * g * g / (rho * S * V)) / (V * eta)


def move_energy(L, V, rho, S, cd0, k, M, g, eta):
    """Energy (J) to fly distance L (m) at airspeed V (m/s)."""
    return L / (V * eta) * (0.5 * rho * V * V * V * S * cd0 + 2.0 * k * M * M * g * g / (rho * S * V))


def segment_airspeed(dx, dy, dz, T, wu, wv, ww, v_min):
    """Airspeed for a straight segment flown in time T through wind (wu,wv,ww)."""
    ax = dx / T - wu
    ay = dy / T - wv
    az = dz / T - ww
    V = math.sqrt(ax * ax + ay * ay + az * az)
    if V < v_min:
        V = v_min
    return V


def mlp2_forward(x, W1, b1, g1, be1, W2, b2, g2, be2, W3, b3):
    """Inference pass of a 2-hidden-layer tanh/LayerNorm MLP, batch of one.

    Same double-precision arithmetic as the compiled kernel (summation order
    may differ in the last bits).
    """
    import numpy as np

    ln_eps = 1e-5
    h = np.asarray(x, dtype=np.float64)
    for W, b, g, be in ((W1, b1, g1, be1), (W2, b2, g2, be2)):
        z = h @ np.asarray(W, dtype=np.float64) + np.asarray(b, dtype=np.float64)
        mu = z.mean()
        var = z.var()
        zh = (z - mu) / np.sqrt(var + ln_eps)
        h = np.tanh(np.asarray(g, dtype=np.float64) * zh + np.asarray(be, dtype=np.float64))
    out = h @ np.asarray(W3, dtype=np.float64) + np.asarray(b3, dtype=np.float64)
    return out.tolist()
