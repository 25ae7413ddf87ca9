"""Pseudo-arclength continuation of periodic orbits across a homotopy.

Branch state is (point, period, homotopy parameter); arclength lives in the
metric (x, ln p, t) so period blow-ups consume arclength at a bounded rate
and the stepper slows into them instead of overshooting.  The corrector is a
least-squares Newton on the full tangent space with an explicit phase row,
plus the arclength pin; at the parameter boundaries the pin is swapped for a
frozen-t solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import DEFAULT, ToolConfig
from .errors import NoConvergence, ParamOutOfRange, StepSizeUnderflow
from .flow import flow, flow_with_monodromy
from .geometry import VectorFieldFamily
from .orbits import PeriodicOrbit

# terminal states a branch run can report
REACHED_T1 = "ReachedT1"
REACHED_T0 = "ReachedT0"
PERIOD_CAP_HIT = "PeriodCapHit"
FOLD_EXHAUSTED = "FoldExhausted"
NEWTON_LOST = "NewtonLost"
CLOSED_LOOP = "ClosedLoop"


@dataclass
class BranchNode:
    x: np.ndarray
    period: float
    t: float
    arclength: float
    residual: float
    corrector_iters: int


@dataclass
class Branch:
    nodes: list[BranchNode]
    status: str
    message: str
    stats: dict = field(default_factory=dict)

    @property
    def ts(self) -> np.ndarray:
        return np.array([n.t for n in self.nodes])

    @property
    def periods(self) -> np.ndarray:
        return np.array([n.period for n in self.nodes])

    @property
    def points(self) -> np.ndarray:
        return np.array([n.x for n in self.nodes])


def _theta_diff(man, a: tuple[np.ndarray, float, float],
                b: tuple[np.ndarray, float, float]) -> np.ndarray:
    dx = man.difference(a[0], b[0])
    return np.concatenate([dx, [np.log(a[1]) - np.log(b[1]), a[2] - b[2]]])


def _residual_t_slope(fam: VectorFieldFamily, x: np.ndarray, p: float, t: float,
                      cfg: ToolConfig) -> np.ndarray:
    lo, hi = fam.t_range
    h = min(1e-6, 0.5 * (hi - lo))
    tp, tm = min(t + h, hi), max(t - h, lo)
    yp = flow(fam, x, p, tp, cfg=cfg).y
    ym = flow(fam, x, p, tm, cfg=cfg).y
    return fam.manifold.difference(yp, ym) / (tp - tm)


def _correct(fam: VectorFieldFamily, x0: np.ndarray, p0: float, t0: float,
             tau: Optional[np.ndarray], theta_ref, cfg: ToolConfig,
             fixed_t: Optional[float] = None) -> tuple[np.ndarray, float, float, float, int]:
    """Newton-solve the closure system from the predicted state.

    With `tau`/`theta_ref` given, the arclength hyperplane through theta_ref
    with normal tau is enforced; with `fixed_t`, t is pinned instead.
    """
    man = fam.manifold
    x, p, t = np.asarray(x0, float).copy(), float(p0), float(t0 if fixed_t is None else fixed_t)
    lo, hi = fam.t_range
    for it in range(1, cfg.max_corrector_iters + 1):
        y, V, _ = flow_with_monodromy(fam, x, p, t, cfg=cfg)
        r = man.difference(y, x)
        rn = float(np.linalg.norm(r))
        arc = 0.0
        if fixed_t is None:
            arc = float(_theta_diff(man, (x, p, t), theta_ref) @ tau)
        if rn <= cfg.orbit_residual_tol and abs(arc) <= 1e-10:
            return x, p, t, rn, it
        E = man.tangent_basis(x)
        d = E.shape[1]
        v = fam.func(x, t)
        nv = float(np.linalg.norm(v))
        if nv < 1e-12:
            raise NoConvergence("field vanished under the corrector", t=t)
        vy = fam.func(y, t)
        A_x = (V - np.eye(man.ambient_dim)) @ E
        rows_t = 2 if fixed_t is None else 1
        A = np.zeros((man.ambient_dim + rows_t, d + 2))
        b = np.zeros(man.ambient_dim + rows_t)
        A[:man.ambient_dim, :d] = A_x
        A[:man.ambient_dim, d] = vy
        if fixed_t is None:
            A[:man.ambient_dim, d + 1] = _residual_t_slope(fam, x, p, t, cfg)
        b[:man.ambient_dim] = -r
        # phase row: no drift along the orbit direction
        A[man.ambient_dim, :d] = (v / nv) @ E
        b[man.ambient_dim] = 0.0
        if fixed_t is None:
            # arclength row in the (x, ln p, t) metric
            A[man.ambient_dim + 1, :d] = tau[:man.ambient_dim] @ E
            A[man.ambient_dim + 1, d] = tau[man.ambient_dim] / p
            A[man.ambient_dim + 1, d + 1] = tau[man.ambient_dim + 1]
            b[man.ambient_dim + 1] = -arc
        z, *_ = np.linalg.lstsq(A, b, rcond=None)
        du, dp, dt = z[:d], float(z[d]), (float(z[d + 1]) if fixed_t is None else 0.0)
        # trust region keeps the corrector local to the predictor
        limit = 1.0
        step = float(np.linalg.norm(E @ du))
        if step > 0.2 * man.diameter:
            limit = 0.2 * man.diameter / step
        if abs(dp) > 0.5 * p:
            limit = min(limit, 0.5 * p / abs(dp))
        if fixed_t is None and abs(dt) > 0.2 * (hi - lo):
            limit = min(limit, 0.2 * (hi - lo) / abs(dt))
        x = man.retract(x + limit * (E @ du))
        p += limit * dp
        t = float(np.clip(t + limit * dt, lo, hi))
        if p < cfg.min_period:
            raise NoConvergence("period collapsed during correction", period=p)
    raise NoConvergence("corrector did not converge", residual=rn, t=t)


def _initial_tangent(fam: VectorFieldFamily, x: np.ndarray, p: float, t: float,
                     direction: float, cfg: ToolConfig) -> np.ndarray:
    """Branch tangent at a start node: solve the linearized closure for dt = 1."""
    man = fam.manifold
    y, V, _ = flow_with_monodromy(fam, x, p, t, cfg=cfg)
    E = man.tangent_basis(x)
    d = E.shape[1]
    v = fam.func(x, t)
    r_t = _residual_t_slope(fam, x, p, t, cfg)
    A = np.zeros((man.ambient_dim + 1, d + 1))
    A[:man.ambient_dim, :d] = (V - np.eye(man.ambient_dim)) @ E
    A[:man.ambient_dim, d] = fam.func(y, t)
    A[man.ambient_dim, :d] = (v / np.linalg.norm(v)) @ E
    b = np.concatenate([-r_t, [0.0]])
    z, *_ = np.linalg.lstsq(A, b, rcond=None)
    tau = np.concatenate([E @ z[:d], [z[d] / p, 1.0]])
    tau *= direction / np.linalg.norm(tau)
    return tau


def continue_branch(fam: VectorFieldFamily, start: PeriodicOrbit,
                    direction: float = +1.0, p_max: Optional[float] = None,
                    cfg: ToolConfig = DEFAULT) -> Branch:
    """Continue the orbit across the family parameter until a terminal event.

    direction +1 pushes t upward initially, -1 downward; folds are followed
    wherever the tangent leads afterwards.
    """
    man = fam.manifold
    lo, hi = fam.t_range
    if not (lo <= start.t <= hi):
        raise ParamOutOfRange("start orbit is outside the family parameter range",
                              t=start.t)
    p_cap = p_max if p_max is not None else cfg.p_max_rel * start.least_period
    x, p, t = np.asarray(start.x, float), float(start.least_period), float(start.t)
    nodes = [BranchNode(x=x.copy(), period=p, t=t, arclength=0.0,
                        residual=start.residual, corrector_iters=0)]
    tau = _initial_tangent(fam, x, p, t, direction, cfg)
    h = cfg.step_init
    s_total = 0.0
    attempts = 0
    theta0 = (x.copy(), p, t)
    while True:
        if len(nodes) >= cfg.max_branch_nodes:
            return Branch(nodes, FOLD_EXHAUSTED, "node budget exhausted before any boundary",
                          stats={"attempts": attempts})
        # predict in the branch metric
        x_pred = man.retract(x + h * tau[:man.ambient_dim])
        p_pred = float(np.exp(np.log(p) + h * tau[man.ambient_dim]))
        t_pred = t + h * tau[man.ambient_dim + 1]
        attempts += 1
        try:
            if t_pred > hi + 1e-12 or t_pred < lo - 1e-12:
                t_clamp = hi if t_pred > hi else lo
                xn, pn, tn, rn, its = _correct(fam, x_pred, p_pred, t_clamp,
                                               None, None, cfg, fixed_t=t_clamp)
                s_total += float(np.linalg.norm(_theta_diff(man, (xn, pn, tn), (x, p, t))))
                nodes.append(BranchNode(xn, pn, tn, s_total, rn, its))
                status = REACHED_T1 if t_clamp == hi else REACHED_T0
                return Branch(nodes, status, f"boundary t = {t_clamp} reached",
                              stats={"attempts": attempts})
            theta_ref = (x_pred, p_pred, t_pred)
            xn, pn, tn, rn, its = _correct(fam, x_pred, p_pred, t_pred, tau, theta_ref, cfg)
        except (NoConvergence, StepSizeUnderflow):
            h *= 0.5
            if h < cfg.step_min:
                return Branch(nodes, NEWTON_LOST, "corrector failed at the minimum step",
                              stats={"attempts": attempts})
            continue
        dtheta = _theta_diff(man, (xn, pn, tn), (x, p, t))
        ds = float(np.linalg.norm(dtheta))
        if ds < 1e-14:
            h *= 0.5
            if h < cfg.step_min:
                return Branch(nodes, NEWTON_LOST, "branch stalled",
                              stats={"attempts": attempts})
            continue
        s_total += ds
        nodes.append(BranchNode(xn, pn, tn, s_total, rn, its))
        tau = dtheta / ds
        x, p, t = xn, pn, tn
        if pn > p_cap:
            return Branch(nodes, PERIOD_CAP_HIT,
                          f"period exceeded the cap {p_cap:.6g}",
                          stats={"attempts": attempts, "p_cap": p_cap})
        if len(nodes) > 10:
            gap = float(np.linalg.norm(_theta_diff(man, (x, p, t), theta0)))
            if gap < cfg.reconnect_tol:
                return Branch(nodes, CLOSED_LOOP, "branch reconnected to its start",
                              stats={"attempts": attempts})
        if its <= 3:
            h = min(h * cfg.step_grow, cfg.step_max)


def blowup_fit(ts: np.ndarray, ps: np.ndarray, tail: int = 15) -> dict:
    """Fit p ~ C (t_star - t)^(-q) on the monotone tail of a blowing-up branch."""
    ts = np.asarray(ts, dtype=float)
    ps = np.asarray(ps, dtype=float)
    keep = slice(max(0, len(ts) - tail), None)
    t_tail, p_tail = ts[keep], ps[keep]
    if len(t_tail) < 4 or np.any(np.diff(p_tail) <= 0):
        inc = np.where(np.diff(ps) > 0)[0]
        if len(inc) < 4:
            return {"ok": False, "reason": "no monotone blow-up tail"}
        i0 = inc[max(0, len(inc) - tail)]
        t_tail, p_tail = ts[i0:], ps[i0:]
    t_end = t_tail[-1]
    width = max(t_end - t_tail[0], 1e-6)

    def sse(t_star: float) -> tuple[float, float, float]:
        u = -np.log(t_star - t_tail)
        q, a = np.polyfit(u, np.log(p_tail), 1)
        res = np.log(p_tail) - (q * u + a)
        return float(res @ res), float(q), float(a)

    grid = t_end + np.geomspace(1e-9, 2.0 * width, 400)
    errs = [sse(g)[0] for g in grid]
    best = int(np.argmin(errs))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    for _ in range(60):
        m1 = lo + (hi - lo) * 0.382
        m2 = lo + (hi - lo) * 0.618
        if sse(m1)[0] < sse(m2)[0]:
            hi = m2
        else:
            lo = m1
    t_star = 0.5 * (lo + hi)
    err, q, a = sse(t_star)
    return {"ok": True, "t_star": float(t_star), "exponent": float(q),
            "coefficient": float(np.exp(a)),
            "rms": float(np.sqrt(err / len(t_tail))), "tail_points": int(len(t_tail))}


def sky_report(branch: Branch, p_max: float) -> dict:
    """Catastrophe verdict for a finished branch: flagged when the period cap
    was hit on a rising tail, with the blow-up fit as the witness."""
    ps = branch.periods
    ts = branch.ts
    flagged = branch.status == PERIOD_CAP_HIT
    fit = blowup_fit(ts, ps) if flagged else {"ok": False, "reason": "no cap hit"}
    return {
        "flagged": bool(flagged), "status": branch.status, "p_max": float(p_max),
        "max_period": float(np.max(ps)), "t_last": float(ts[-1]),
        "nodes": int(len(branch.nodes)), "blowup_fit": fit,
    }
