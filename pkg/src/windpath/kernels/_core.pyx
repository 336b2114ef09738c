# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: field sampling, ray scans, and the energy formula.

Keep the arithmetic order identical to _core_py so both backends agree
bit-for-bit.
"""

from libc.math cimport sqrt, tanh
from libc.stdlib cimport free, malloc

BACKEND = "cython"


def trilinear_sample(const float[:, ::1] vectors, int nx, int ny, int nz,
                     double minx, double miny, double minz,
                     double cx, double cy, double cz,
                     double x, double y, double z):
    cdef double gx = (x - minx) / cx - 0.5
    cdef double gy = (y - miny) / cy - 0.5
    cdef double gz = (z - minz) / cz - 0.5
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
    cdef int i0 = <int>gx
    cdef int j0 = <int>gy
    cdef int k0 = <int>gz
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
    cdef double fx = gx - i0
    cdef double fy = gy - j0
    cdef double fz = gz - k0
    cdef int i1 = i0 + 1 if nx > 1 else i0
    cdef int j1 = j0 + 1 if ny > 1 else j0
    cdef int k1 = k0 + 1 if nz > 1 else k0

    cdef double out0 = 0.0, out1 = 0.0, out2 = 0.0
    cdef double c000, c100, c010, c110, c001, c101, c011, c111
    cdef double c00, c10, c01, c11, c0, c1, val
    cdef int a
    for a in range(3):
        c000 = vectors[i0 + nx * (j0 + ny * k0), a]
        c100 = vectors[i1 + nx * (j0 + ny * k0), a]
        c010 = vectors[i0 + nx * (j1 + ny * k0), a]
        c110 = vectors[i1 + nx * (j1 + ny * k0), a]
        c001 = vectors[i0 + nx * (j0 + ny * k1), a]
        c101 = vectors[i1 + nx * (j0 + ny * k1), a]
        c011 = vectors[i0 + nx * (j1 + ny * k1), a]
        c111 = vectors[i1 + nx * (j1 + ny * k1), a]
        c00 = c000 + (c100 - c000) * fx
        c10 = c010 + (c110 - c010) * fx
        c01 = c001 + (c101 - c001) * fx
        c11 = c011 + (c111 - c011) * fx
        c0 = c00 + (c10 - c00) * fy
        c1 = c01 + (c11 - c01) * fy
        val = c0 + (c1 - c0) * fz
        if a == 0:
            out0 = val
        elif a == 1:
            out1 = val
        else:
            out2 = val
    return out0, out1, out2


def ray_distances(const unsigned char[::1] occupied, int nx, int ny, int nz,
                  int cx, int cy, int cz,
                  double cellx, double celly, double cellz):
    cdef double out[6]
    cdef int slot, axis, sign, n, c, k, j
    cdef Py_ssize_t idx
    cdef double side
    for slot in range(6):
        axis = slot // 2
        sign = 1 if slot % 2 == 0 else -1
        if axis == 0:
            n = nx; c = cx; side = cellx
        elif axis == 1:
            n = ny; c = cy; side = celly
        else:
            n = nz; c = cz; side = cellz
        k = 1
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
                break
            k += 1
        out[slot] = (k - 0.5) * side
    return [out[0], out[1], out[2], out[3], out[4], out[5]]


def energy_rate(double V, double rho, double S, double cd0, double k,
                double M, double g, double eta):
    return (0.5 * rho * V * V * V * S * cd0 + 2.0 * k * M * M * g * g / (rho * S * V)) / (V * eta)


def move_energy(double L, double V, double rho, double S, double cd0, double k,
                double M, double g, double eta):
    return L / (V * eta) * (0.5 * rho * V * V * V * S * cd0 + 2.0 * k * M * M * g * g / (rho * S * V))


def segment_airspeed(double dx, double dy, double dz, double T,
                     double wu, double wv, double ww, double v_min):
    cdef double ax = dx / T - wu
    cdef double ay = dy / T - wv
    cdef double az = dz / T - ww
    cdef double V = sqrt(ax * ax + ay * ay + az * az)
    if V < v_min:
        V = v_min
    return V


def mlp2_forward(const float[::1] x,
                 const float[:, ::1] W1, const float[::1] b1,
                 const float[::1] g1, const float[::1] be1,
                 const float[:, ::1] W2, const float[::1] b2,
                 const float[::1] g2, const float[::1] be2,
                 const float[:, ::1] W3, const float[::1] b3):
    """Inference pass of a 2-hidden-layer tanh/LayerNorm MLP, batch of one.

    Accumulates in double precision; dropout is inference-off by definition.
    Returns a Python list of head outputs.
    """
    cdef int n_in = W1.shape[0]
    cdef int h1 = W1.shape[1]
    cdef int h2 = W2.shape[1]
    cdef int n_out = W3.shape[1]
    cdef double ln_eps = 1e-5
    cdef double *a1 = <double *> malloc(h1 * sizeof(double))
    cdef double *a2 = <double *> malloc(h2 * sizeof(double))
    cdef int i, j
    cdef double acc, mu, var, inv, zh
    out = [0.0] * n_out
    try:
        # layer 1: linear
        for j in range(h1):
            acc = b1[j]
            for i in range(n_in):
                acc += x[i] * W1[i, j]
            a1[j] = acc
        # LayerNorm + tanh
        mu = 0.0
        for j in range(h1):
            mu += a1[j]
        mu /= h1
        var = 0.0
        for j in range(h1):
            var += (a1[j] - mu) * (a1[j] - mu)
        var /= h1
        inv = 1.0 / sqrt(var + ln_eps)
        for j in range(h1):
            zh = (a1[j] - mu) * inv
            a1[j] = tanh(g1[j] * zh + be1[j])
        # layer 2
        for j in range(h2):
            acc = b2[j]
            for i in range(h1):
                acc += a1[i] * W2[i, j]
            a2[j] = acc
        mu = 0.0
        for j in range(h2):
            mu += a2[j]
        mu /= h2
        var = 0.0
        for j in range(h2):
            var += (a2[j] - mu) * (a2[j] - mu)
        var /= h2
        inv = 1.0 / sqrt(var + ln_eps)
        for j in range(h2):
            zh = (a2[j] - mu) * inv
            a2[j] = tanh(g2[j] * zh + be2[j])
        # head
        for j in range(n_out):
            acc = b3[j]
            for i in range(h2):
                acc += a2[i] * W3[i, j]
            out[j] = acc
    finally:
        free(a1)
        free(a2)
    return out
