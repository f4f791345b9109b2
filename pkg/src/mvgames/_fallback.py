"""Pure numpy version of the Euler-Maruyama kernel, vectorised over paths.

Same random streams and step rule as the compiled kernel; results agree to rounding.
"""
from __future__ import annotations

import numpy as np

from . import rng


def horizons(seed, domain, start, count, lam, antithetic):
    streams, _ = rng.path_streams(np.arange(start, start + count), antithetic)
    keys = rng.stream_keys(seed, domain, streams)
    return rng.horizon_from_uniform(rng.uniforms(keys, np.zeros(count, dtype=np.uint64)), lam)


def simulate_block(x0, r, beta, xi, sigma, d, U, W, m0, taus, path_start, seed, domain,
                   dt, substeps, dev_agent, dev_value, dev_steps, antithetic, out, status):
    n = x0.shape[0]
    P = taus.shape[0]
    cp = n + 1 + ((n + 1) & 1)
    streams, signs = rng.path_streams(np.arange(path_start, path_start + P), antithetic)
    keys = rng.stream_keys(seed, domain, streams)
    X = np.tile(np.asarray(x0, dtype=float), (P, 1))
    chan = np.arange(cp, dtype=np.uint64)
    k = 0
    active = np.arange(P)
    while True:
        t = k * dt
        active = active[taus[active] - t > 0.0]
        if active.size == 0:
            break
        h = np.minimum(taus[active] - t, dt)
        Xa = X[active]
        pi = d * Xa + m0 + (Xa @ W) @ U.T
        if dev_agent >= 0 and k < dev_steps:
            pi[:, dev_agent] = dev_value
        ka = keys[active][:, None]
        if substeps == 1:
            z = rng.normals(ka, np.uint64(k * cp) + chan)
        else:
            z = np.zeros((active.size, cp))
            for s in range(substeps):
                z += rng.normals(ka, np.uint64((k * substeps + s) * cp) + chan)
            z *= 1.0 / np.sqrt(substeps)
        sqh = (np.sqrt(h) * signs[active])[:, None]
        X[active] = Xa + (r * Xa + beta * pi) * h[:, None] + pi * sqh * (xi * z[:, 1:n + 1] + sigma * z[:, :1])
        k += 1
    out[:] = X
    status[:] = (~np.isfinite(X)).any(axis=1)
