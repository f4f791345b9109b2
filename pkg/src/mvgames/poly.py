"""Quadratic polynomials in two variables and the controlled generator acting on them.

Used by the residual checks, which deliberately avoid the closed-form coefficient
equations: every check goes through ``generator`` applied to explicit polynomials.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Quad2:
    """xx*x^2 + yy*y^2 + xy*x*y + x*x + y*y + c."""
    xx: float = 0.0
    yy: float = 0.0
    xy: float = 0.0
    x: float = 0.0
    y: float = 0.0
    c: float = 0.0

    @classmethod
    def linear(cls, ax, ay, c):
        return cls(x=ax, y=ay, c=c)

    def __call__(self, x, y):
        return self.xx * x * x + self.yy * y * y + self.xy * x * y + self.x * x + self.y * y + self.c

    def coeffs(self):
        return (self.xx, self.yy, self.xy, self.x, self.y, self.c)

    def __add__(self, other):
        return Quad2(*(u + v for u, v in zip(self.coeffs(), other.coeffs())))

    def __sub__(self, other):
        return Quad2(*(u - v for u, v in zip(self.coeffs(), other.coeffs())))

    def scale(self, k):
        return Quad2(*(k * u for u in self.coeffs()))

    @property
    def is_linear(self):
        return self.xx == 0.0 and self.yy == 0.0 and self.xy == 0.0

    def times_linear(self, other):
        """Product of two polynomials of degree at most one."""
        if not (self.is_linear and other.is_linear):
            raise ValueError("product only defined for linear factors")
        return Quad2(
            xx=self.x * other.x,
            yy=self.y * other.y,
            xy=self.x * other.y + self.y * other.x,
            x=self.x * other.c + self.c * other.x,
            y=self.y * other.c + self.c * other.y,
            c=self.c * other.c,
        )

    def grad(self, x, y):
        return 2 * self.xx * x + self.xy * y + self.x, 2 * self.yy * y + self.xy * x + self.y


@dataclass(frozen=True)
class Dynamics:
    """Coefficients of the (x, y) dynamics seen by one agent with peers frozen.

    dx = (r x + beta pi) dt + sqrt(s2) pi dW + ...; dy = (r y + drift_y) dt + ...; var_y and
    the cross term sigma * sig_hat come from the peers' (frozen) positions.
    """
    r: float
    beta: float
    s2: float
    sigma: float
    drift_y: float
    var_y: float
    sig_hat: float


def generator_parts(g: Quad2, dyn: Dynamics, x, y):
    """Return (L0, L1, L2) with L^pi g(x, y) = L0 + L1 pi + L2 pi^2."""
    gx, gy = g.grad(x, y)
    L0 = gx * dyn.r * x + gy * (dyn.r * y + dyn.drift_y) + g.yy * dyn.var_y
    L1 = gx * dyn.beta + g.xy * dyn.sigma * dyn.sig_hat
    L2 = g.xx * dyn.s2
    return L0, L1, L2


def generator(g: Quad2, dyn: Dynamics, x, y, pi):
    L0, L1, L2 = generator_parts(g, dyn, x, y)
    return L0 + L1 * pi + L2 * pi * pi
