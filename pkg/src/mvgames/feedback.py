"""Affine feedback maps pi(x) = M x + m0 stored in low-rank form M = diag(d) + U W^T.

The equilibrium couples agents only through a handful of population sums, so the rank
of the off-diagonal part is at most three. Simulations evaluate the map in O(n) per step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinearFeedback:
    d: np.ndarray
    U: np.ndarray
    W: np.ndarray
    m0: np.ndarray

    def __post_init__(self):
        n = self.d.shape[0]
        for name in ("d", "U", "W", "m0"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.U.shape != self.W.shape or self.U.shape[0] != n or self.m0.shape != (n,):
            raise ValueError("inconsistent feedback shapes")

    @property
    def n(self):
        return self.d.shape[0]

    @classmethod
    def constant(cls, values):
        v = np.asarray(values, dtype=float)
        z = np.zeros((v.size, 1))
        return cls(np.zeros(v.size), z, z.copy(), v)

    def matrix(self) -> np.ndarray:
        return np.diag(self.d) + self.U @ self.W.T

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.d * x + (x @ self.W) @ self.U.T + self.m0

    def scale_agent(self, i, factor) -> "LinearFeedback":
        d, U, m0 = self.d.copy(), self.U.copy(), self.m0.copy()
        d[i] *= factor
        U[i] *= factor
        m0[i] *= factor
        return LinearFeedback(d, U, self.W, m0)


def aggregate_matrix(sig_k1, sig_k2, br_k1, br_k2) -> np.ndarray:
    return np.array([[sig_k1 - 1.0, sig_k2], [br_k1, br_k2 - 1.0]])


def build_feedback(e, f, k1, k2, k3, N, sigma, beta, leave_one_out: bool) -> LinearFeedback:
    """Compose the per-agent rule with the self-consistent population averages.

    Agent i plays (e_i x_i + f_i m_i + k1_i S + k2_i B + k3_i) / N_i where m_i is the
    leave-one-out mean (divisor n) or the full mean of wealth, and S, B are the averages of
    sigma_j pi_j and beta_j pi_j. ``e``, ``f`` are rho p and rho q.
    """
    e, f, k1, k2, k3, N, sigma, beta = (np.asarray(v, dtype=float) for v in (e, f, k1, k2, k3, N, sigma, beta))
    n = e.size
    eN, fN = e / N, f / N
    # own-state weight; the mean term contributes f/n on every coordinate, minus self if leave-one-out
    d = eN - fN / n if leave_one_out else eN.copy()
    w = np.array([sigma, beta]) / (n * N)  # 2 x n: weights of sigma_i/(nN_i), beta_i/(nN_i)
    Amat = aggregate_matrix(w[0] @ k1, w[0] @ k2, w[1] @ k1, w[1] @ k2)
    Ainv = np.linalg.inv(Amat)
    R3 = np.array([w[0] @ k3, w[1] @ k3])
    # state part of R: sum_j w_j (d_j N_j x_j + f_j S / n)
    Wsb = (w * (d * N)).T + np.outer(np.ones(n), w @ f) / n  # n x 2
    KN = np.column_stack([k1 / N, k2 / N])  # n x 2
    G = -KN @ Ainv  # n x 2
    U = np.column_stack([fN / n, G])
    W = np.column_stack([np.ones(n), Wsb])
    m0 = k3 / N + G @ R3
    return LinearFeedback(d, U, W, m0)
