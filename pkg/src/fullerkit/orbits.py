"""Periodic orbit location by Newton shooting on (point, period).

The unknowns are a base point on the manifold and a period.  Updates move in
a section transverse to the field at the current iterate, so the phase
direction stays pinned while the period column absorbs motion along the
orbit.  Least periods are recovered afterwards by a divisor scan of the
converged period.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from .config import DEFAULT, ToolConfig
from .errors import DegenerateSection, MultiplicityTooHigh, NoConvergence, StepSizeUnderflow
from .flow import flow, flow_with_monodromy, sample_trajectory
from .geometry import EmbeddedManifold, VectorFieldFamily


def analytic_jacobian(func):
    """Complex-step ambient Jacobian for analytic (rational) field formulas.

    Exact to machine precision; requires the formula to evaluate on complex
    arrays without branches on magnitudes.
    """
    h = 1e-20

    def jac(x: np.ndarray, t: float) -> np.ndarray:
        n = len(x)
        J = np.empty((n, n))
        for j in range(n):
            z = np.asarray(x, dtype=complex).copy()
            z[j] += 1j * h
            J[:, j] = np.imag(func(z, t)) / h
        return J

    return jac


def section_basis(man: EmbeddedManifold, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the hyperplane in T_x M orthogonal to v."""
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        raise DegenerateSection("field vanishes at section base point", norm=float(nv))
    T = man.tangent_basis(x)
    vt = T.T @ v
    if np.linalg.norm(vt) < 0.5 * nv:
        raise DegenerateSection("field has a large normal component at section base point")
    N = null_space(vt[None, :] / np.linalg.norm(vt))
    if N.shape[1] != man.dim - 1:
        raise DegenerateSection("section complement has unexpected dimension",
                                got=int(N.shape[1]))
    return T @ N


@dataclass
class PeriodicOrbit:
    """A geometric periodic orbit record at frozen family parameter t.

    `least_period` is the minimal period; `multiplicity` records the cover
    the finder converged to (total period = multiplicity * least_period).
    """

    x: np.ndarray
    least_period: float
    t: float
    multiplicity: int = 1
    residual: float = 0.0
    monodromy: Optional[np.ndarray] = None   # ambient, over one least period
    samples: Optional[np.ndarray] = None     # points along one least period
    field_name: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def total_period(self) -> float:
        return self.multiplicity * self.least_period

    def monodromy_power(self, m: int) -> np.ndarray:
        if self.monodromy is None:
            raise NoConvergence("orbit record has no stored monodromy")
        return np.linalg.matrix_power(self.monodromy, m)

    def distance_to(self, man: EmbeddedManifold, y: np.ndarray) -> float:
        if self.samples is None:
            return man.distance(y, self.x)
        return float(np.min(man.pairwise_distance(np.asarray([y]), self.samples)))


def _newton(fam: VectorFieldFamily, x0: np.ndarray, p0: float, t: float,
            cfg: ToolConfig) -> tuple[np.ndarray, float, float, np.ndarray, np.ndarray]:
    """Core shooting loop.  Returns (x, p, residual, y, V) at convergence."""
    man = fam.manifold
    x = man.retract(np.asarray(x0, dtype=float))
    p = float(p0)
    max_du = 0.2 * man.diameter
    hits = 0
    for _ in range(cfg.max_newton_steps):
        v = fam.func(x, t)
        y, V, _ = flow_with_monodromy(fam, x, p, t, cfg=cfg)
        r = man.difference(y, x)
        rn = float(np.linalg.norm(r))
        if rn <= cfg.orbit_residual_tol:
            # one bonus quadratic step tightens the period well past the tolerance
            hits += 1
            if hits >= 2 or rn <= 1e-13:
                return x, p, rn, y, V
        E = section_basis(man, x, v)
        vy = fam.func(y, t)
        nhat = v / np.linalg.norm(v)
        if abs(vy @ nhat) < cfg.section_alignment_tol * np.linalg.norm(vy):
            raise DegenerateSection("return velocity nearly tangent to the section")
        A = np.column_stack([(V - np.eye(man.ambient_dim)) @ E, vy])
        z, *_ = np.linalg.lstsq(A, -r, rcond=None)
        du, dp = z[:-1], float(z[-1])
        step = float(np.linalg.norm(E @ du))
        limit = 1.0
        if step > max_du:
            limit = max_du / step
        if abs(dp) > 0.5 * max(p, cfg.min_period):
            limit = min(limit, 0.5 * max(p, cfg.min_period) / abs(dp))
        x = man.retract(x + limit * (E @ du))
        p = p + limit * dp
        if p < cfg.min_period:
            raise NoConvergence("shooting period collapsed below the minimum",
                                period=p)
    raise NoConvergence("shooting did not converge", residual=rn, period=p)


def find_orbit(fam: VectorFieldFamily, x0: np.ndarray, p0: float, t: float = 0.0,
               cfg: ToolConfig = DEFAULT, with_samples: bool = True) -> PeriodicOrbit:
    """Newton-shoot from the given seed, then reduce to the least period."""
    man = fam.manifold
    x, p, rn, y, V = _newton(fam, x0, p0, t, cfg)
    # divisor scan: largest j with flow time p/j closing up gives the least period
    m_max = min(cfg.max_multiplicity_scan, int(p / cfg.min_period))
    detected = 1
    if m_max >= 2:
        res = flow(fam, x, p, t, cfg=cfg, dense=True)
        for j in range(m_max, 1, -1):
            yj = man.retract(res.dense(p / j))
            if man.distance(yj, x) <= cfg.least_period_tol:
                detected = j
                break
    if detected > 1:
        x, p, rn, y, V = _newton(fam, x, p / detected, t, cfg)
    orbit = PeriodicOrbit(
        x=man.wrap(x), least_period=p, t=float(t), multiplicity=detected,
        residual=rn, monodromy=V, field_name=fam.name)
    if with_samples:
        orbit.samples = sample_trajectory(fam, x, p, t, cfg.orbit_sample_count, cfg=cfg)
        orbit.samples = np.array([man.wrap(s) for s in orbit.samples])
    return orbit


def _curve_distance(fam: VectorFieldFamily, a: PeriodicOrbit, y: np.ndarray,
                    cfg: ToolConfig) -> float:
    """Distance from y to the continuous loop of a, not just to its samples.

    The sample minimum has a floor of half the inter-sample gap, so a coarse
    gate at the gap scale is refined by a golden-section search on the dense
    flow around the nearest sample.
    """
    man = fam.manifold
    if a.samples is None or len(a.samples) < 4:
        return man.distance(a.x, y)
    dists = np.array([man.distance(s, y) for s in a.samples])
    i = int(np.argmin(dists))
    gaps = man.pairwise_distance(a.samples, np.roll(a.samples, -1, axis=0))
    gap = float(np.max(np.diagonal(gaps)))
    if dists[i] > 2.0 * gap:
        return float(dists[i])
    ns = len(a.samples)
    dt = a.least_period / ns
    start = a.samples[(i - 1) % ns]
    res = flow(fam, start, 2.0 * dt, a.t, cfg=cfg, dense=True)

    def g(s: float) -> float:
        return man.distance(man.retract(res.dense(s)), y)

    lo, hi = 0.0, 2.0 * dt
    inv = (np.sqrt(5.0) - 1.0) / 2.0
    s1, s2 = hi - inv * (hi - lo), lo + inv * (hi - lo)
    g1, g2 = g(s1), g(s2)
    for _ in range(60):
        if g1 <= g2:
            hi, s2, g2 = s2, s1, g1
            s1 = hi - inv * (hi - lo)
            g1 = g(s1)
        else:
            lo, s1, g1 = s1, s2, g2
            s2 = lo + inv * (hi - lo)
            g2 = g(s2)
    return float(min(g1, g2, dists[i]))


def _same_orbit(fam: VectorFieldFamily, a: PeriodicOrbit, b: PeriodicOrbit,
                cfg: ToolConfig) -> bool:
    pref = max(a.least_period, b.least_period)
    if abs(a.least_period - b.least_period) > cfg.period_dedup_rel * pref:
        return False
    return _curve_distance(fam, a, b.x, cfg) <= cfg.dedup_eps_rel * fam.manifold.diameter


def deduplicate(fam: VectorFieldFamily, orbits: Sequence[PeriodicOrbit],
                cfg: ToolConfig = DEFAULT) -> list[PeriodicOrbit]:
    ranked = sorted(orbits, key=lambda o: (o.least_period, tuple(np.round(o.x, 9))))
    kept: list[PeriodicOrbit] = []
    for o in ranked:
        if not any(_same_orbit(fam, k, o, cfg) for k in kept):
            kept.append(o)
    return kept


def default_period_hints(cap: float, cfg: ToolConfig) -> list[float]:
    lo = max(100.0 * cfg.min_period, cap / 64.0)
    return [float(v) for v in np.geomspace(lo, cap, 6)]


def search_orbits(fam: VectorFieldFamily, t: float, period_cap: float,
                  cfg: ToolConfig = DEFAULT,
                  seeds: int | np.ndarray | None = None,
                  period_hints: Optional[Sequence[float]] = None,
                  dedup: bool = True) -> tuple[list[PeriodicOrbit], dict]:
    """Geometric orbits with least period <= period_cap, plus search statistics."""
    man = fam.manifold
    if seeds is None:
        pts = man.sample_net(cfg.seeds)
    elif isinstance(seeds, (int, np.integer)):
        pts = man.sample_net(int(seeds))
    else:
        pts = np.asarray(seeds, dtype=float)
    hints = list(period_hints) if period_hints else default_period_hints(period_cap, cfg)
    found: list[PeriodicOrbit] = []
    attempts = 0
    failures = {"no_convergence": 0, "degenerate_section": 0, "step_underflow": 0}
    for x0 in pts:
        for p0 in hints:
            attempts += 1
            try:
                orbit = find_orbit(fam, x0, p0, t, cfg=cfg)
            except NoConvergence:
                failures["no_convergence"] += 1
                continue
            except DegenerateSection:
                failures["degenerate_section"] += 1
                continue
            except StepSizeUnderflow:
                failures["step_underflow"] += 1
                continue
            if orbit.least_period <= period_cap * (1.0 + 1e-12):
                found.append(orbit)
    if dedup:
        found = deduplicate(fam, found, cfg)
    else:
        found = sorted(found, key=lambda o: (o.least_period, tuple(np.round(o.x, 9))))
    stats = {"seeds": int(len(pts)), "hints": [float(h) for h in hints],
             "attempts": attempts, "hits": len(found), **failures}
    return found, stats


def covers_below(orbits: Sequence[PeriodicOrbit], cap: float,
                 cfg: ToolConfig = DEFAULT) -> list[tuple[PeriodicOrbit, int]]:
    """All (orbit, m) with m * least_period <= cap, m >= 1."""
    pairs: list[tuple[PeriodicOrbit, int]] = []
    for o in orbits:
        m_top = int(np.floor(cap / o.least_period + 1e-12))
        if m_top > 10 * cfg.max_multiplicity_scan:
            raise MultiplicityTooHigh(
                "period cap admits an implausible cover count; check the cap",
                cap=cap, least_period=o.least_period)
        for m in range(1, m_top + 1):
            pairs.append((o, m))
    pairs.sort(key=lambda om: (om[0].least_period * om[1], om[0].least_period,
                               tuple(np.round(om[0].x, 9))))
    return pairs
