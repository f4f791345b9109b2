"""n-agent equilibrium: aggregate system, feedback assembly, value functions and residual checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import AgentCoefficients, build_all
from .errors import NotUnique, PoleAtDenominator, SingularSystem
from .feedback import LinearFeedback, aggregate_matrix, build_feedback
from .model import GameConfig, NumericTolerances, leave_one_out_means
from .poly import Dynamics, Quad2, generator, generator_parts

UNIQUE = "Unique"
INFINITE = "InfiniteFamily"
NONEXISTENT = "Nonexistent"


@dataclass(frozen=True)
class AggregateTerms:
    sig_rho_px: float
    sig_rho_qy: float
    br_rho_px: float
    br_rho_qy: float
    sig_k1: float
    sig_k2: float
    sig_k3: float
    br_k1: float
    br_k2: float
    br_k3: float

    @property
    def R_s(self):
        return self.sig_rho_px + self.sig_rho_qy + self.sig_k3

    @property
    def R_b(self):
        return self.br_rho_px + self.br_rho_qy + self.br_k3

    def system_residuals(self, sigma_pi_bar, br_pi_bar):
        r1 = self.R_s + (self.sig_k1 - 1.0) * sigma_pi_bar + self.sig_k2 * br_pi_bar
        r2 = self.R_b + self.br_k1 * sigma_pi_bar + (self.br_k2 - 1.0) * br_pi_bar
        return r1, r2


@dataclass(frozen=True)
class AggregateOutcome:
    kind: str
    sigma_pi_bar: float | None = None
    br_pi_bar: float | None = None
    det: float = float("nan")
    kappa: float | None = None
    family_param_axis: str | None = None
    particular: tuple | None = None
    null_direction: tuple | None = None
    kappa_residual: float | None = None  # how far the state terms miss the kappa relation

    @property
    def unique(self):
        return self.kind == UNIQUE

    def family_point(self, t):
        """Member of an infinite family: particular solution + t * null direction."""
        if self.kind != INFINITE:
            raise NotUnique("family_point only defined for infinite families")
        return tuple(p + t * v for p, v in zip(self.particular, self.null_direction))

    def describe(self):
        if self.kind == UNIQUE:
            return f"Unique: sigma_pi_bar={self.sigma_pi_bar!r}, br_pi_bar={self.br_pi_bar!r}"
        if self.kind == INFINITE:
            k = "none (rank-one system without a proportionality constant)" if self.kappa is None else repr(self.kappa)
            return (f"InfiniteFamily: det={self.det!r}, kappa={k}; {self.family_param_axis}; "
                    f"particular={self.particular!r}, direction={self.null_direction!r}")
        if self.kappa is None:
            return f"Nonexistent: det={self.det!r}, rows inconsistent (no kappa)"
        return (f"Nonexistent: det={self.det!r}, coefficient rows proportional with kappa={self.kappa!r} "
                f"but the state terms miss it by {self.kappa_residual!r}")


def _fsum_dot(u, v):
    return math.fsum(np.asarray(u, dtype=float) * np.asarray(v, dtype=float))


def aggregate_terms(weights, sigma, beta, e, f, mean_state, x, k1, k2, k3) -> AggregateTerms:
    """Weighted population sums; weights are 1/(n N_i) for n agents or atom probabilities."""
    wx_e = np.asarray(weights) * np.asarray(e) * np.asarray(x)
    wx_f = np.asarray(weights) * np.asarray(f) * np.asarray(mean_state)
    return AggregateTerms(
        sig_rho_px=_fsum_dot(sigma, wx_e), sig_rho_qy=_fsum_dot(sigma, wx_f),
        br_rho_px=_fsum_dot(beta, wx_e), br_rho_qy=_fsum_dot(beta, wx_f),
        sig_k1=_fsum_dot(sigma, np.asarray(weights) * k1), sig_k2=_fsum_dot(sigma, np.asarray(weights) * k2),
        sig_k3=_fsum_dot(sigma, np.asarray(weights) * k3),
        br_k1=_fsum_dot(beta, np.asarray(weights) * k1), br_k2=_fsum_dot(beta, np.asarray(weights) * k2),
        br_k3=_fsum_dot(beta, np.asarray(weights) * k3),
    )


def _vectors(coeffs):
    get = lambda name: np.array([getattr(c, name) for c in coeffs])
    sigma = np.array([c.agent.sigma for c in coeffs])
    beta = np.array([c.beta for c in coeffs])
    return sigma, beta, get("rho") * get("p"), get("rho") * get("q"), get("k1"), get("k2"), get("k3"), get("N")


def build_aggregates(coeffs: list[AgentCoefficients], x) -> AggregateTerms:
    x = np.asarray(x, dtype=float)
    n = len(coeffs)
    if x.shape != (n,):
        raise ValueError(f"wealth profile has length {x.size}, expected {n}")
    sigma, beta, e, f, k1, k2, k3, N = _vectors(coeffs)
    return aggregate_terms(1.0 / (n * N), sigma, beta, e, f, leave_one_out_means(x), x, k1, k2, k3)


def solve_aggregates(terms: AggregateTerms, tol: NumericTolerances | None = None) -> AggregateOutcome:
    tol = tol or NumericTolerances()
    s1, s2, b1, b2 = terms.sig_k1, terms.sig_k2, terms.br_k1, terms.br_k2
    Rs, Rb = terms.R_s, terms.R_b
    det = (b2 - 1.0) * (s1 - 1.0) - s2 * b1
    det_scale = max(1.0, abs((b2 - 1.0) * (s1 - 1.0)), abs(s2 * b1))
    if abs(det) > tol.det_tol * det_scale:
        sig = ((1.0 - b2) * Rs + s2 * Rb) / det
        br = ((1.0 - s1) * Rb + b1 * Rs) / det
        return AggregateOutcome(UNIQUE, sig, br, det)

    # singular: consistent iff the augmented rows are (numerically) rank-deficient as well
    row1 = np.array([s1 - 1.0, s2, Rs])
    row2 = np.array([b1, b2 - 1.0, Rb])
    scale = max(1.0, np.abs(row1).max(), np.abs(row2).max())
    thr = tol.kappa_tol * scale
    kappa = miss = None
    c1, c2 = row1[:2], row2[:2]
    if np.abs(c2).max() > thr:
        # kappa from the coefficient columns, then checked on the state terms too
        kappa = float(c1 @ c2 / (c2 @ c2))
        miss = float(np.abs(row1 - kappa * row2).max())
        consistent = miss <= thr
    elif abs(Rb) > thr:
        consistent = False  # second equation reads 0 = -R_b
    else:
        # second equation vacuous; first must be solvable on its own
        consistent = np.abs(c1).max() > thr or abs(Rs) <= thr
    if not consistent:
        return AggregateOutcome(NONEXISTENT, det=det, kappa=kappa, kappa_residual=miss)

    Amat = aggregate_matrix(s1, s2, b1, b2)
    rhs = -np.array([Rs, Rb])
    particular, *_ = np.linalg.lstsq(Amat, rhs, rcond=None)
    _, sv, vt = np.linalg.svd(Amat)
    null = vt[-1]
    if null[0] < 0 or (null[0] == 0 and null[1] < 0):
        null = -null
    if np.abs(Amat).max() <= thr:
        axis = "both sigma_pi_bar and br_pi_bar are free (zero system)"
    else:
        axis = "free scalar t: (sigma_pi_bar, br_pi_bar) = particular + t * direction"
    return AggregateOutcome(INFINITE, det=det, kappa=kappa, family_param_axis=axis,
                            particular=tuple(float(v) for v in particular),
                            null_direction=tuple(float(v) for v in null))


def direct_solve(coeffs: list[AgentCoefficients], x):
    """Dense solve of [diag(N) - k1 sigma^T/n - k2 beta^T/n] pi = k3 + diag(rho p) x + diag(rho q) y.

    Returns (pi, condition_number). Independent of the 2x2 reduction.
    """
    x = np.asarray(x, dtype=float)
    n = len(coeffs)
    sigma, beta, e, f, k1, k2, k3, N = _vectors(coeffs)
    mat = np.diag(N) - np.outer(k1, sigma / n) - np.outer(k2, beta / n)
    rhs = k3 + e * x + f * leave_one_out_means(x)
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularSystem(f"strategy system is singular (condition {cond:.3e})", condition=cond)
    return np.linalg.solve(mat, rhs), float(cond)


@dataclass(frozen=True)
class EquilibriumSolution:
    M: np.ndarray
    m0: np.ndarray
    per_agent: tuple
    outcome: AggregateOutcome
    frozen_profile: np.ndarray
    feedback: LinearFeedback
    terms: AggregateTerms
    config: GameConfig | None = field(default=None, repr=False)

    @property
    def n(self):
        return len(self.per_agent)

    def strategy(self, x):
        return self.feedback(x)

    def pi_at_frozen(self):
        return self.M @ self.frozen_profile + self.m0


def _tilde_den(value, what, eps):
    if abs(value) <= eps:
        raise PoleAtDenominator(f"{what} vanishes")
    return value


def complete_coefficients(c: AgentCoefficients, rho_varrho, sig_hat, br_hat, var_y, tol=None) -> AgentCoefficients:
    """Fill alpha, varrho, E, F, I and the H coefficients with frozen peer terms.

    ``var_y`` is the instantaneous variance of the peer average (xi-hat^2 + sigma-hat^2).
    """
    tol = tol or NumericTolerances()
    m = c.market
    lam, r = m.lam, m.r
    g, mu1, mu2, phi, phn = c.agent.gamma, c.agent.mu1, c.agent.mu2, c.agent.phi, c.phi_n
    rho, beta, sig = c.rho, c.beta, c.agent.sigma
    a, at, p, q, cc, C, D, z = c.a, c.a_tilde, c.p, c.q, c.c, c.C, c.D, c.z
    varrho = rho_varrho / rho
    alpha = (cc * br_hat + a * rho * varrho * beta) / lam
    E = (mu1 * alpha * r - D * br_hat - rho * g * at * varrho * p + 2 * g * lam * alpha * (a - phn)
         - mu2 * lam * phn) / (r - lam)
    F = (2 * lam * g * alpha * (cc + phi) + lam * mu2 * phi - rho * g * at * varrho * q
         - 2 * C * br_hat) / (r - lam)
    I = ((C - g * cc * cc) * var_y - lam * g * alpha ** 2 + 0.5 * rho * g * at * varrho ** 2 + F * br_hat) / lam

    eps = m.eps_excl(tol)
    d_t = (2 * at * rho * q * beta + at * rho * p * q - 2 * lam * phi * phn) / _tilde_den(lam - 2 * r - z, "lambda - 2r - z", eps)
    c_t = (d_t * rho * q * beta + 0.5 * at * rho * q * q + lam * phi * phi) / (lam - 2 * r)
    e_t = (2 * at * rho * varrho * beta + d_t * br_hat + at * rho * p * varrho + d_t * sig * sig_hat * rho * p) / (lam - r - z)
    b_t = (2 * c_t * br_hat + d_t * rho * varrho * beta + e_t * rho * q * beta + at * rho * q * varrho
           + d_t * sig * sig_hat * rho * q) / (lam - r)
    l_t = (e_t * beta * rho * varrho + b_t * br_hat + 0.5 * at * rho * varrho ** 2 + c_t * var_y
           + d_t * sig * rho * varrho * sig_hat) / lam
    hats = {"sig_hat": sig_hat, "br_hat": br_hat, "var_y": var_y}
    return c.with_completion(alpha=alpha, varrho=varrho, E=E, F=F, I=I, c_tilde=c_t, d_tilde=d_t,
                             e_tilde=e_t, beta_tilde=b_t, l_tilde=l_t, hats=hats)


def assemble_equilibrium(cfg: GameConfig | None, coeffs, outcome: AggregateOutcome, x, terms=None) -> EquilibriumSolution:
    if outcome.kind != UNIQUE:
        raise NotUnique(f"aggregate system is {outcome.kind}")
    x = np.asarray(x, dtype=float)
    n = len(coeffs)
    tol = cfg.tolerances if cfg is not None else NumericTolerances()
    sigma, beta, e, f, k1, k2, k3, N = _vectors(coeffs)
    fb = build_feedback(e, f, k1, k2, k3, N, sigma, beta, leave_one_out=True)
    pi = fb(x)
    xi = np.array([c.agent.xi for c in coeffs])
    S, B = math.fsum(sigma * pi), math.fsum(beta * pi)
    XI2 = math.fsum((xi * pi) ** 2)
    done = []
    for i, c in enumerate(coeffs):
        sig_hat = (S - sigma[i] * pi[i]) / n
        br_hat = (B - beta[i] * pi[i]) / n
        var_y = (XI2 - (xi[i] * pi[i]) ** 2) / n ** 2 + sig_hat ** 2
        rv = c.k1 * sig_hat + c.k2 * br_hat + c.k3
        done.append(complete_coefficients(c, rv, sig_hat, br_hat, var_y, tol))
    if terms is None:
        terms = build_aggregates(coeffs, x)
    return EquilibriumSolution(fb.matrix(), fb.m0.copy(), tuple(done), outcome, x.copy(), fb, terms, cfg)


@dataclass(frozen=True)
class NAgentResult:
    coeffs: list
    terms: AggregateTerms
    outcome: AggregateOutcome
    solution: EquilibriumSolution | None


def solve_n_agent(cfg: GameConfig, x=None, root_index=None) -> NAgentResult:
    x = np.array([a.x0 for a in cfg.agents]) if x is None else np.asarray(x, dtype=float)
    coeffs = build_all(cfg.agents, cfg.market, cfg.n, cfg.tolerances, root_index)
    terms = build_aggregates(coeffs, x)
    outcome = solve_aggregates(terms, cfg.tolerances)
    sol = assemble_equilibrium(cfg, coeffs, outcome, x, terms) if outcome.unique else None
    return NAgentResult(coeffs, terms, outcome, sol)


# --- value functions -------------------------------------------------------------------

def value_poly(c: AgentCoefficients) -> Quad2:
    return Quad2(c.A, c.C, c.D, c.E, c.F, c.I)


def g_poly(c: AgentCoefficients) -> Quad2:
    return Quad2.linear(c.a, c.c, c.alpha)


def h_poly(c: AgentCoefficients) -> Quad2:
    return Quad2(c.a_tilde, c.c_tilde, c.d_tilde, c.e_tilde, c.beta_tilde, c.l_tilde)


def evaluate_value(sol: EquilibriumSolution, i, x_i, y_minus_i):
    return value_poly(sol.per_agent[i])(x_i, y_minus_i)


def evaluate_G(sol: EquilibriumSolution, i, x_i, y_minus_i):
    return g_poly(sol.per_agent[i])(x_i, y_minus_i)


def evaluate_H(sol: EquilibriumSolution, i, x_i, y_minus_i):
    return h_poly(sol.per_agent[i])(x_i, y_minus_i)


def _grid(grid):
    if grid is None:
        g = np.linspace(-2.0, 2.0, 5)
        return [(x, y) for x in g for y in g]
    return list(grid)


def vgh_deviation(c: AgentCoefficients, grid=None) -> float:
    """Max over the grid of |V - [(mu1 x + mu2) G - gamma (H - G^2)]|, relative to term size."""
    V, G, H = value_poly(c), g_poly(c), h_poly(c)
    mu1, mu2, g = c.agent.mu1, c.agent.mu2, c.agent.gamma
    worst = 0.0
    for x, y in _grid(grid):
        gv = G(x, y)
        rhs = (mu1 * x + mu2) * gv - g * (H(x, y) - gv * gv)
        scale = max(1.0, abs(V(x, y)), abs((mu1 * x + mu2) * gv), abs(g * H(x, y)), abs(g * gv * gv))
        worst = max(worst, abs(V(x, y) - rhs) / scale)
    return worst


def vgh_check(sol: EquilibriumSolution, i, grid=None) -> float:
    return vgh_deviation(sol.per_agent[i], grid)


@dataclass(frozen=True)
class HJBResiduals:
    ehjb: float
    lg: float
    lh: float
    stationarity: float
    second_order: float
    second_order_mismatch: float
    ehjb3: float

    def max(self):
        return max(self.ehjb, self.lg, self.lh, self.stationarity, self.second_order_mismatch, self.ehjb3)


def agent_dynamics(c: AgentCoefficients) -> Dynamics:
    h = c.hats
    return Dynamics(r=c.market.r, beta=c.beta, s2=c.agent.psi2, sigma=c.agent.sigma,
                    drift_y=h["br_hat"], var_y=h["var_y"], sig_hat=h["sig_hat"])


def target_poly(c: AgentCoefficients) -> Quad2:
    return Quad2.linear(c.phi_n, -c.agent.phi, 0.0)


def ehjb3_coefficients(c: AgentCoefficients) -> tuple:
    """The six coefficient equations (x^2, y^2, xy, x, y, 1) of the expanded value equation."""
    lam, r = c.market.lam, c.market.r
    g, mu1, mu2, phi, phn = c.agent.gamma, c.agent.mu1, c.agent.mu2, c.agent.phi, c.phi_n
    rho, at, p, q, vr = c.rho, c.a_tilde, c.p, c.q, c.varrho
    a, cc, al = c.a, c.c, c.alpha
    A, C, D, E, F, I = c.A, c.C, c.D, c.E, c.F, c.I
    br, vy = c.hats["br_hat"], c.hats["var_y"]
    terms = [
        (2 * A * r, -mu1 * a * r, -lam * (A + g * (a - phn) ** 2 - mu1 * phn), 0.5 * rho * g * at * p * p),
        (2 * C * r, -lam * (C + g * (cc + phi) ** 2), 0.5 * rho * g * at * q * q),
        (2 * D * r, -mu1 * cc * r, -lam * (D + 2 * g * (a - phn) * (cc + phi) + mu1 * phi), rho * g * at * p * q),
        (E * r, D * br, -mu1 * al * r, -lam * (E + 2 * g * al * (a - phn) - mu2 * phn), rho * g * at * vr * p),
        (F * r, 2 * br * C, -lam * (F + 2 * g * al * (cc + phi) + mu2 * phi), rho * g * at * vr * q),
        (br * F, C * vy, -g * cc * cc * vy, -lam * I, -lam * g * al * al, 0.5 * rho * vr * vr * g * at),
    ]
    return tuple(abs(math.fsum(t)) / max(1.0, max(abs(v) for v in t)) for t in terms)


def residuals_for(c: AgentCoefficients, grid=None) -> HJBResiduals:
    lam = c.market.lam
    mu1, mu2, g = c.agent.mu1, c.agent.mu2, c.agent.gamma
    dyn = agent_dynamics(c)
    V, G, H, w = value_poly(c), g_poly(c), h_poly(c), target_poly(c)
    # f(x, G, H) composed with the ansatz, as a polynomial in (x, y)
    Fc = Quad2.linear(mu1, 0.0, mu2).times_linear(G) - (H - G.times_linear(G)).scale(g)
    res_lg = res_lh = res_e = res_stat = 0.0
    so = -np.inf
    for x, y in _grid(grid):
        pi = c.rho * (c.p * x + c.q * y + c.varrho)
        wv = w(x, y)
        lg_l, lg_r = lam * (G(x, y) - wv), generator(G, dyn, x, y, pi)
        lh_l, lh_r = lam * (H(x, y) - wv * wv), generator(H, dyn, x, y, pi)
        res_lg = max(res_lg, abs(lg_l - lg_r) / max(1.0, abs(lg_l), abs(lam * G(x, y))))
        res_lh = max(res_lh, abs(lh_l - lh_r) / max(1.0, abs(lh_l), abs(lam * H(x, y))))

        gv = G(x, y)
        fG, fH = mu1 * x + mu2 + 2 * g * gv, -g
        parts = [generator_parts(V, dyn, x, y), generator_parts(Fc, dyn, x, y),
                 generator_parts(G, dyn, x, y), generator_parts(H, dyn, x, y)]
        phi0, phi1, phi2 = (parts[0][k] - parts[1][k] + fG * parts[2][k] + fH * parts[3][k] for k in range(3))
        lhs = lam * (V(x, y) - (mu1 * x + mu2) * wv + g * (gv - wv) ** 2)
        rhs = phi0 + phi1 * pi + phi2 * pi * pi
        scale = max(1.0, abs(lhs), abs(phi0), abs(phi1 * pi), abs(phi2 * pi * pi), abs(lam * V(x, y)))
        res_e = max(res_e, abs(lhs - rhs) / scale)
        res_stat = max(res_stat, abs(phi1 + 2 * phi2 * pi) / max(1.0, abs(phi1), abs(2 * phi2 * pi)))
        so = max(so, phi2)
    expected_so = (c.A - mu1 * c.a - g * c.a * c.a) * c.agent.psi2
    mismatch = abs(so - expected_so) / max(1.0, abs(expected_so))
    return HJBResiduals(res_e, res_lg, res_lh, res_stat, so, mismatch, max(ehjb3_coefficients(c)))


def hjb_residuals(sol: EquilibriumSolution, i, grid=None) -> HJBResiduals:
    return residuals_for(sol.per_agent[i], grid)


def g_equation_residuals(c: AgentCoefficients) -> tuple:
    """Residuals of the three linear-coefficient equations of the G ansatz and of the a-tilde equation."""
    lam, r = c.market.lam, c.market.r
    rho, beta, phi, phn = c.rho, c.beta, c.agent.phi, c.phi_n
    ra = (c.a * r, -lam * (c.a - phn), c.a * rho * c.p * beta)
    rc = (c.c * r, -lam * (c.c + phi), c.a * rho * c.q * beta)
    out = [ra, rc]
    if c.completed:
        out.append((c.c * c.hats["br_hat"], -lam * c.alpha, c.a * rho * c.varrho * beta))
    at = c.a_tilde
    out.append((2 * at * r, 2 * at * rho * c.p * beta, 0.5 * at * rho * c.p ** 2, -lam * at, lam * phn ** 2))
    return tuple(abs(math.fsum(t)) / max(1.0, max(abs(v) for v in t)) for t in out)
