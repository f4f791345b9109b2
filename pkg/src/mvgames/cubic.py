"""Real roots of polynomials up to degree three.

Closed forms (trigonometric for three real roots, Cardano otherwise) followed by
Newton polishing on the original coefficients.
"""
from __future__ import annotations

import math

LEADING_EPS = 1e-14


def horner(coeffs, z):
    """Evaluate c3 z^3 + c2 z^2 + c1 z + c0 for coeffs = (c3, c2, c1, c0)."""
    acc = 0.0
    for c in coeffs:
        acc = acc * z + c
    return acc


def _polish(coeffs, z, steps=2):
    c3, c2, c1, _ = coeffs
    for _ in range(steps):
        f = horner(coeffs, z)
        df = (3 * c3 * z + 2 * c2) * z + c1
        if df == 0.0 or not math.isfinite(df):
            break
        z_new = z - f / df
        if abs(horner(coeffs, z_new)) <= abs(f):
            z = z_new
        else:
            break
    return z


def _linear(c1, c0, scale):
    if abs(c1) <= LEADING_EPS * scale:
        return []
    return [-c0 / c1]


def _quadratic(c2, c1, c0, scale):
    if abs(c2) <= LEADING_EPS * scale:
        return _linear(c1, c0, scale)
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        # keep a numerically double root rather than losing it to rounding
        if disc > -1e-14 * max(c1 * c1, abs(4 * c2 * c0)):
            return [-c1 / (2 * c2)]
        return []
    sq = math.sqrt(disc)
    # stable form avoiding cancellation
    qv = -0.5 * (c1 + math.copysign(sq, c1))
    if qv == 0.0:
        return [0.0]
    return [qv / c2, c0 / qv]


def _cubic(c3, c2, c1, c0):
    b, c, d = c2 / c3, c1 / c3, c0 / c3
    shift = b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    disc_scale = (q / 2.0) ** 2 + abs(p / 3.0) ** 3
    roots = []
    if p == 0.0 and q == 0.0:
        roots = [0.0]
    elif disc > 0 or p > 0:  # p > 0 means one real root even if disc underflows
        sq = math.sqrt(disc)
        u = -math.copysign(1.0, q) * (abs(q) / 2.0 + sq) ** (1.0 / 3.0)
        t = u - p / (3.0 * u) if u != 0.0 else 0.0
        roots = [t]
        if disc <= 1e-12 * disc_scale and p != 0.0:
            # near a double root the sign of disc is unreliable; offer both candidates
            roots += [3.0 * q / p, -1.5 * q / p]
    else:
        m = 2.0 * math.sqrt(-p / 3.0)
        den = p * m
        arg = 3.0 * q / den if den != 0.0 else 0.0  # den underflows only for vanishing p
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        roots = [m * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]
    return [t - shift for t in roots]


def real_roots(coeffs, tol=1e-9):
    """Distinct real roots of (c3, c2, c1, c0), sorted ascending.

    Roots whose relative residual exceeds ``tol`` after polishing are dropped; that only
    happens for spurious near-double-root candidates.
    """
    c3, c2, c1, c0 = (float(v) for v in coeffs)
    scale = max(abs(c3), abs(c2), abs(c1), abs(c0))
    if scale == 0.0:
        raise ValueError("all polynomial coefficients are zero")
    if abs(c3) <= LEADING_EPS * scale:
        raw = _quadratic(c2, c1, c0, scale)
    else:
        raw = _cubic(c3, c2, c1, c0)
    coeffs = (c3, c2, c1, c0)
    polished = []
    for z in raw:
        if not math.isfinite(z):
            continue
        z = _polish(coeffs, z)
        if abs(horner(coeffs, z)) <= tol * (1.0 + scale) * max(1.0, abs(z)) ** 3:
            polished.append(z)
    polished.sort()
    out = []
    for z in polished:
        if out and abs(z - out[-1]) <= tol * max(1.0, abs(z)):
            continue
        out.append(z)
    return out
