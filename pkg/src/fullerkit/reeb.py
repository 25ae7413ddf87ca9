"""Contact forms on the round 3-sphere and their Reeb dynamics.

Conformal rescalings g * lambda of the round form with a fiber-invariant
factor g admit a closed-form Reeb field: writing H for the round Reeb
field and (u1, u2) for the global contact frame,

    R_g = H / g + (dg(u2) u1 - dg(u1) u2) / (2 g^2),

valid whenever dg(H) = 0.  All built-in factors are polynomial, so the
formula is analytic and complex-step differentiable.

Also here: the graded family of symmetry-breaking perturbations indexed by
period levels, action integrals, Reeb defect checks, and the exponential
period-growth bound for conformal homotopies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from .config import DEFAULT, ToolConfig
from .errors import MuTooLarge, NotReebOrbit, ParamOutOfRange
from .flow import flow
from .geometry import (S3, ContactFormFamily, VectorFieldFamily, hopf_field,
                       HOPF_JAC, contact_frame)
from .orbits import PeriodicOrbit, analytic_jacobian

TWO_PI = 2.0 * np.pi


# -- round form and conformal rescalings ----------------------------------------


def _round_coeffs(x: np.ndarray) -> np.ndarray:
    return np.array([-x[1], x[0], -x[3], x[2]])


def symmetry_weight(x) -> float:
    """|z1|^2 - |z2|^2, invariant along the round Reeb flow."""
    return x[0] ** 2 + x[1] ** 2 - x[2] ** 2 - x[3] ** 2


def symmetry_weight_grad(x: np.ndarray) -> np.ndarray:
    return np.array([2.0 * x[0], 2.0 * x[1], -2.0 * x[2], -2.0 * x[3]])


_U1 = np.array([[0.0, 0.0, -1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [1.0, 0.0, 0.0, 0.0],
                [0.0, -1.0, 0.0, 0.0]])
_U2 = np.array([[0.0, 0.0, 0.0, -1.0],
                [0.0, 0.0, -1.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [1.0, 0.0, 0.0, 0.0]])


def conformal_round_family(name: str,
                           factor: Callable[[np.ndarray, float], float],
                           factor_grad: Callable[[np.ndarray, float], np.ndarray],
                           dfactor_dt: Optional[Callable[[np.ndarray, float], float]] = None,
                           t_range: tuple[float, float] = (0.0, 1.0),
                           params: Optional[dict] = None,
                           spatially_constant: bool = False,
                           factor_hessian: Optional[Callable[[np.ndarray, float], np.ndarray]] = None) -> ContactFormFamily:
    """Contact family factor(x, t) * round form, with its closed-form Reeb field.

    The factor must be positive and constant along round fibers
    (factor_grad(x) orthogonal to the round Reeb direction).  Flag factors
    with no spatial dependence to get the cheap field h / g and its constant
    Jacobian; give the factor's Hessian to get the closed-form Jacobian of the
    gradient correction, else it falls back to a complex-step derivative.
    """

    if spatially_constant:

        def reeb_func(x, t):
            g = factor(x, t)
            return np.array([-x[1], x[0], -x[3], x[2]]) / g

        def reeb_jac(x, t):
            return HOPF_JAC / factor(x, t)

    else:

        def reeb_func(x, t):
            g = factor(x, t)
            h = np.array([-x[1], x[0], -x[3], x[2]])
            grad = factor_grad(x, t)
            u1 = np.array([-x[2], x[3], x[0], -x[1]])
            u2 = np.array([-x[3], -x[2], x[1], x[0]])
            g1 = grad @ u1
            g2 = grad @ u2
            return h / g + (g2 * u1 - g1 * u2) / (2.0 * g * g)

        if factor_hessian is None:
            reeb_jac = analytic_jacobian(reeb_func)
        else:

            def reeb_jac(x, t):
                g = factor(x, t)
                grad = factor_grad(x, t)
                hess = factor_hessian(x, t)
                hy = HOPF_JAC @ x
                u1 = _U1 @ x
                u2 = _U2 @ x
                g1 = grad @ u1
                g2 = grad @ u2
                grad1 = hess @ u1 + _U1.T @ grad
                grad2 = hess @ u2 + _U2.T @ grad
                J = HOPF_JAC / g - np.outer(hy, grad) / g ** 2
                J += (np.outer(u1, grad2) + g2 * _U1
                      - np.outer(u2, grad1) - g1 * _U2) / (2.0 * g ** 2)
                J -= np.outer(g2 * u1 - g1 * u2, grad) / g ** 3
                return J

    reeb = VectorFieldFamily(name=f"reeb[{name}]", manifold=S3, func=reeb_func,
                             jac=reeb_jac, t_range=t_range,
                             params=dict(params or {}))
    return ContactFormFamily(
        name=name, manifold=S3, base_coeffs=_round_coeffs, factor=factor,
        base_jac=lambda x: HOPF_JAC, factor_grad=factor_grad, dfactor_dt=dfactor_dt,
        reeb=reeb, t_range=t_range, params=dict(params or {}))


def round_contact() -> ContactFormFamily:
    return conformal_round_family(
        "round", factor=lambda x, t: 1.0,
        factor_grad=lambda x, t: np.zeros(4),
        dfactor_dt=lambda x, t: 0.0,
        spatially_constant=True)


def rescale_homotopy(rate: float = 0.1) -> ContactFormFamily:
    """(1 + rate * t) * round form; Reeb field H / (1 + rate * t)."""
    return conformal_round_family(
        f"rescale[{rate}]",
        factor=lambda x, t: 1.0 + rate * t,
        factor_grad=lambda x, t: np.zeros(4),
        dfactor_dt=lambda x, t: rate,
        params={"rate": rate},
        spatially_constant=True)


def broken_symmetry_form(mu: float) -> ContactFormFamily:
    """(1 + mu * w) * round form, w the symmetry weight; t-independent."""
    if not (0.0 < mu < 0.5):
        raise ParamOutOfRange("perturbation size must lie in (0, 0.5)", mu=mu)
    hess = 2.0 * mu * np.diag([1.0, 1.0, -1.0, -1.0])
    return conformal_round_family(
        f"broken[{mu}]",
        factor=lambda x, t: 1.0 + mu * symmetry_weight(x),
        factor_grad=lambda x, t: mu * symmetry_weight_grad(x),
        dfactor_dt=lambda x, t: 0.0,
        params={"mu": mu},
        factor_hessian=lambda x, t: hess)


def breaking_homotopy(mu: float) -> ContactFormFamily:
    """s = 0 is the broken form, s = 1 the round form; conformal throughout."""
    base_hess = 2.0 * mu * np.diag([1.0, 1.0, -1.0, -1.0])
    return conformal_round_family(
        f"breaking[{mu}]",
        factor=lambda x, s: 1.0 + (1.0 - s) * mu * symmetry_weight(x),
        factor_grad=lambda x, s: (1.0 - s) * mu * symmetry_weight_grad(x),
        dfactor_dt=lambda x, s: -mu * symmetry_weight(x),
        params={"mu": mu},
        factor_hessian=lambda x, s: (1.0 - s) * base_hess)


# -- Reeb checks -------------------------------------------------------------------


def reeb_defect(contact: ContactFormFamily, x: np.ndarray, v: np.ndarray,
                t: float) -> float:
    """How far v is from being the Reeb vector of the form at (x, t):
    max of |lambda(v) - 1| and the tangent part of the contraction v -| d(lambda)."""
    man = contact.manifold
    pairing = float(contact.coeffs(x, t) @ v) - 1.0
    A = contact.d_form(x, t)
    contraction = man.project_tangent(x, A.T @ v)
    return max(abs(pairing), float(np.linalg.norm(contraction)))


def verify_reeb_family(contact: ContactFormFamily, fam: VectorFieldFamily,
                       ts: Sequence[float], net: int = 64,
                       cfg: ToolConfig = DEFAULT) -> dict:
    pts = contact.manifold.sample_net(net)
    worst = 0.0
    for t in ts:
        for x in pts:
            worst = max(worst, reeb_defect(contact, x, fam.func(x, float(t)), float(t)))
    return {"max_defect": worst, "net": int(net), "ts": [float(t) for t in ts],
            "ok": worst <= cfg.reeb_defect_tol}


def orbit_action(contact: ContactFormFamily, fam: VectorFieldFamily,
                 orbit: PeriodicOrbit, cfg: ToolConfig = DEFAULT) -> float:
    """Integral of the form along one least period of the orbit."""
    res = flow(fam, orbit.x, orbit.least_period, orbit.t, cfg=cfg, dense=True)
    ss = np.linspace(0.0, orbit.least_period, 257)
    vals = np.empty(len(ss))
    for i, s in enumerate(ss):
        y = contact.manifold.retract(res.dense(s))
        vals[i] = contact.coeffs(y, orbit.t) @ fam.func(y, orbit.t)
    return float(simpson(vals, x=ss))


def check_reeb_orbit(contact: ContactFormFamily, fam: VectorFieldFamily,
                     orbit: PeriodicOrbit, cfg: ToolConfig = DEFAULT) -> dict:
    act = orbit_action(contact, fam, orbit, cfg)
    rel = abs(act - orbit.least_period) / max(orbit.least_period, 1e-12)
    defect = max(reeb_defect(contact, s, fam.func(s, orbit.t), orbit.t)
                 for s in (orbit.samples if orbit.samples is not None else [orbit.x]))
    if rel > cfg.reeb_period_action_tol or defect > cfg.reeb_defect_tol:
        raise NotReebOrbit("orbit fails the action-period identity for the form",
                           action=act, period=orbit.least_period, defect=defect)
    return {"action": act, "period": orbit.least_period, "rel_gap": rel,
            "max_defect": defect}


# -- graded perturbation levels -------------------------------------------------------


def level_cap(n: int) -> float:
    return TWO_PI * (n + 0.5)


@dataclass
class PerturbationLevel:
    n: int
    cap: float
    mu: float
    contact: ContactFormFamily
    halvings: int = 0

    @property
    def field(self) -> VectorFieldFamily:
        return self.contact.reeb


class PerturbationSystem:
    """Graded symmetry-breaking system: level n serves period caps below
    2*pi*(n + 1/2) with perturbation size mu0 / n^2.

    A cap selects the smallest level that dominates it, so systems with
    different depth agree verbatim on shared caps.  Levels whose perturbation
    fails validity checks downstream can be rebuilt halved via `halve_level`.
    """

    def __init__(self, levels: int, mu0: float | None = None, cfg: ToolConfig = DEFAULT):
        if levels < 1:
            raise ParamOutOfRange("system needs at least one level", levels=levels)
        self.cfg = cfg
        self.mu0 = cfg.mu0 if mu0 is None else float(mu0)
        self.levels = [self._build(n, self.mu0 / n ** 2, 0) for n in range(1, levels + 1)]

    @staticmethod
    def _build(n: int, mu: float, halvings: int) -> PerturbationLevel:
        return PerturbationLevel(n=n, cap=level_cap(n), mu=mu,
                                 contact=broken_symmetry_form(mu), halvings=halvings)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level_for_cap(self, a: float) -> PerturbationLevel:
        for lvl in self.levels:
            if lvl.cap > a:
                return lvl
        raise ParamOutOfRange(
            f"cap {a} beyond the deepest level bound {self.levels[-1].cap}",
            cap=a, depth=self.depth)

    def halve_level(self, n: int) -> PerturbationLevel:
        i = n - 1
        lvl = self.levels[i]
        if lvl.halvings + 1 > self.cfg.mu_retries:
            raise MuTooLarge("perturbation level exhausted its halving budget",
                             level=n, mu=lvl.mu)
        self.levels[i] = self._build(n, lvl.mu / 2.0, lvl.halvings + 1)
        return self.levels[i]

    def describe(self) -> dict:
        return {"mu0": self.mu0, "levels": [
            {"n": l.n, "cap": l.cap, "mu": l.mu, "halvings": l.halvings}
            for l in self.levels]}


# -- exponential period-growth bound ---------------------------------------------------


def conformal_rate_bound(contact: ContactFormFamily, t_grid: Optional[Sequence[float]] = None,
                         net: Optional[int] = None, cfg: ToolConfig = DEFAULT) -> float:
    """Product of the sampled sups of |d/dt factor| and factor over a net x t grid."""
    pts = contact.manifold.sample_net(cfg.growth_net if net is None else int(net))
    if t_grid is None:
        t_grid = np.linspace(0.0, 1.0, 21)
    slope = 0.0
    size = 0.0
    for t in t_grid:
        for x in pts:
            slope = max(slope, abs(contact.time_slope(x, float(t))))
            size = max(size, abs(contact.factor(x, float(t))))
    return slope * size


def growth_bound_check(contact: ContactFormFamily, ts: Sequence[float],
                       periods: Sequence[float],
                       k_override: Optional[float] = None, net: Optional[int] = None,
                       cfg: ToolConfig = DEFAULT) -> dict:
    """Check the total period variation along a branch against exp(L * K).

    K is the sampled conformal rate constant (or the override, for control
    experiments); L is the length of the branch's t-projection; the measured
    side accumulates |delta p| so non-monotone branches are charged for every
    swing.  The pass comparison is slack-inflated so a sampled K marginally
    below the true sup cannot flip a true pass.
    """
    ts = np.asarray(ts, dtype=float)
    ps = np.asarray(periods, dtype=float)
    if len(ts) != len(ps) or len(ts) < 2:
        raise ParamOutOfRange("need matching t and period series of length >= 2",
                              nt=len(ts), np=len(ps))
    if np.any(ps <= 0):
        raise ParamOutOfRange("periods must be positive")
    k_est = conformal_rate_bound(contact, net=net, cfg=cfg)
    k_used = float(k_override) if k_override is not None else k_est
    l_path = float(np.sum(np.abs(np.diff(ts))))
    bound = float(np.exp(l_path * k_used))
    measured = float(np.sum(np.abs(np.diff(ps))))
    return {
        "k_estimate": float(k_est), "k_used": k_used, "l_path": l_path,
        "bound": bound, "measured_variation": measured,
        "ratio": measured / bound, "slack": float(cfg.growth_slack),
        "passes": bool(measured <= bound * (1.0 + cfg.growth_slack)),
        "override": k_override is not None,
    }
