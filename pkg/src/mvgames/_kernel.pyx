# cython: language_level=3
"""Compiled Euler-Maruyama kernel. Mirrors mvgames._fallback step for step."""
from libc.math cimport sqrt, log, log1p, cos, sin, isfinite
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL
cdef double TWO_PI = 6.283185307179586
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline double uniform(uint64_t key, uint64_t ctr) nogil:
    cdef uint64_t bits = mix64(key + (ctr + 1) * GOLDEN)
    return (<double>(bits >> 11) + 0.5) * INV53


cdef inline uint64_t stream_key(uint64_t seed, uint64_t domain, uint64_t stream) nogil:
    return mix64(mix64(seed ^ domain) + stream * GOLDEN)


cdef inline void fill_normals(uint64_t key, uint64_t base, int count, double* out) nogil:
    # count is even; base is a multiple of two so Box-Muller pairs align with the fallback
    cdef int c
    cdef double u1, u2, rad, ang
    cdef uint64_t pair
    for c in range(0, count, 2):
        pair = (base + c) >> 1
        u1 = uniform(key, 2 * pair)
        u2 = uniform(key, 2 * pair + 1)
        rad = sqrt(-2.0 * log(u1))
        ang = TWO_PI * u2
        out[c] = rad * cos(ang)
        out[c + 1] = rad * sin(ang)


def horizons(uint64_t seed, uint64_t domain, int64_t start, int64_t count, double lam, bint antithetic):
    import numpy as np
    out = np.empty(count)
    cdef double[::1] o = out
    cdef int64_t p, g
    cdef uint64_t stream
    with nogil:
        for p in range(count):
            g = start + p
            stream = <uint64_t>(g // 2) if antithetic else <uint64_t>g
            o[p] = -log1p(-uniform(stream_key(seed, domain, stream), 0)) / lam
    return out


def simulate_block(const double[::1] x0, double r, const double[::1] beta, const double[::1] xi,
                   const double[::1] sigma, const double[::1] d, const double[:, ::1] U, const double[:, ::1] W,
                   const double[::1] m0, const double[::1] taus, int64_t path_start, uint64_t seed, uint64_t domain,
                   double dt, int substeps, int dev_agent, double dev_value, int64_t dev_steps,
                   bint antithetic, double[:, ::1] out, signed char[::1] status):
    cdef int n = x0.shape[0]
    cdef int R = U.shape[1]
    cdef int cp = n + 1 + ((n + 1) & 1)
    cdef int64_t P = taus.shape[0]
    cdef int64_t p, k, g
    cdef int i, j, s
    cdef double t, h, sqh, sign, tau, acc, inv_sqm = 1.0 / sqrt(<double>substeps)
    cdef uint64_t key, stream, base
    cdef double* X = <double*>malloc(n * sizeof(double))
    cdef double* pi = <double*>malloc(n * sizeof(double))
    cdef double* v = <double*>malloc(R * sizeof(double))
    cdef double* z = <double*>malloc(cp * sizeof(double))
    cdef double* zs = <double*>malloc(cp * sizeof(double))
    if X == NULL or pi == NULL or v == NULL or z == NULL or zs == NULL:
        free(X); free(pi); free(v); free(z); free(zs)
        raise MemoryError()
    with nogil:
        for p in range(P):
            g = path_start + p
            if antithetic:
                stream = <uint64_t>(g // 2)
                sign = -1.0 if (g & 1) else 1.0
            else:
                stream = <uint64_t>g
                sign = 1.0
            key = stream_key(seed, domain, stream)
            tau = taus[p]
            for i in range(n):
                X[i] = x0[i]
            k = 0
            while True:
                t = k * dt
                h = tau - t
                if h <= 0.0:
                    break
                if h > dt:
                    h = dt
                for j in range(R):
                    acc = 0.0
                    for i in range(n):
                        acc = acc + W[i, j] * X[i]
                    v[j] = acc
                for i in range(n):
                    acc = d[i] * X[i] + m0[i]
                    for j in range(R):
                        acc = acc + U[i, j] * v[j]
                    pi[i] = acc
                if dev_agent >= 0 and k < dev_steps:
                    pi[dev_agent] = dev_value
                if substeps == 1:
                    fill_normals(key, <uint64_t>k * cp, cp, z)
                else:
                    for i in range(cp):
                        zs[i] = 0.0
                    for s in range(substeps):
                        base = (<uint64_t>k * substeps + s) * cp
                        fill_normals(key, base, cp, z)
                        for i in range(cp):
                            zs[i] = zs[i] + z[i]
                    for i in range(cp):
                        z[i] = zs[i] * inv_sqm
                sqh = sqrt(h) * sign
                for i in range(n):
                    X[i] = X[i] + (r * X[i] + beta[i] * pi[i]) * h + pi[i] * sqh * (xi[i] * z[i + 1] + sigma[i] * z[0])
                k = k + 1
            status[p] = 0
            for i in range(n):
                out[p, i] = X[i]
                if not isfinite(X[i]):
                    status[p] = 1
    free(X); free(pi); free(v); free(z); free(zs)
