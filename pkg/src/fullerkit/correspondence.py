"""The k-tuple correspondence for periodic orbits.

An m-th cover of an orbit with least period p, total period P = m p, lifts
to a k-tuple (x_0, .., x_{k-1}) with x_{j+1} reached from x_j by flowing
q = P / k: a fixed point of (shift^-1 after time-q flow) on the k-fold
product manifold.  The lift must preserve the restricted fixed point index,
realize the unit shift, and carry multiplicity m / gcd(m, k); those three
checks are what this module computes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Optional

import numpy as np

from .config import DEFAULT, ToolConfig
from .errors import DegenerateLift, DegenerateUnresolved, NoConvergence, ShiftMismatch
from .flow import flow, flow_with_monodromy, sample_trajectory
from .geometry import VectorFieldFamily
from .index import fixed_point_index
from .orbits import PeriodicOrbit


@dataclass
class TupleLift:
    points: np.ndarray          # (k, ambient)
    q: float                    # segment time between consecutive components
    k: int
    m: int
    residual: float
    monodromies: np.ndarray     # (k, n, n) segment linearizations
    meta: dict = field(default_factory=dict)

    @property
    def lifted_period(self) -> float:
        return self.k * self.q


def _canonical_rotation(points: np.ndarray) -> np.ndarray:
    keys = [tuple(np.round(p, 9)) for p in points]
    r = min(range(len(points)), key=lambda i: keys[i:] + keys[:i])
    return np.roll(points, -r, axis=0)


def build_tuple(fam: VectorFieldFamily, orbit: PeriodicOrbit, m: int, k: int,
                cfg: ToolConfig = DEFAULT) -> np.ndarray:
    """Seed tuple: equal time-q samples of the m-th cover, canonically rotated."""
    P = m * orbit.least_period
    pts = sample_trajectory(fam, orbit.x, P, orbit.t, k, cfg=cfg)
    pts = np.array([fam.manifold.wrap(p) for p in pts])
    return _canonical_rotation(pts)


def refine_tuple(fam: VectorFieldFamily, points: np.ndarray, q0: float, t: float,
                 m: int, k: int, cfg: ToolConfig = DEFAULT) -> TupleLift:
    """Newton-polish the cyclic closure x_{j+1} = F_q(x_j) in all components and q."""
    man = fam.manifold
    n = man.ambient_dim
    d = man.dim
    X = np.array([man.retract(p) for p in np.asarray(points, dtype=float)])
    q = float(q0)
    for _ in range(cfg.max_newton_steps):
        ys = np.empty_like(X)
        Vs = np.empty((k, n, n))
        for j in range(k):
            ys[j], Vs[j], _ = flow_with_monodromy(fam, X[j], q, t, cfg=cfg)
        r = np.concatenate([man.difference(ys[j], X[(j + 1) % k]) for j in range(k)])
        rn = float(np.linalg.norm(r))
        if rn <= cfg.lift_residual_tol:
            return TupleLift(points=X, q=q, k=k, m=m, residual=rn, monodromies=Vs)
        Es = [man.tangent_basis(X[j]) for j in range(k)]
        A = np.zeros((n * k + 1, d * k + 1))
        for j in range(k):
            rows = slice(j * n, (j + 1) * n)
            A[rows, j * d:(j + 1) * d] = Vs[j] @ Es[j]
            jn = (j + 1) % k
            A[rows, jn * d:(jn + 1) * d] -= Es[jn]
            A[rows, -1] = fam.func(ys[j], t)
        v0 = fam.func(X[0], t)
        A[-1, :d] = (v0 / np.linalg.norm(v0)) @ Es[0]
        b = np.concatenate([-r, [0.0]])
        z, *_ = np.linalg.lstsq(A, b, rcond=None)
        for j in range(k):
            X[j] = man.retract(X[j] + Es[j] @ z[j * d:(j + 1) * d])
        q += float(z[-1])
        if q < cfg.min_period / max(k, 1):
            raise NoConvergence("tuple segment time collapsed", q=q)
    raise NoConvergence("tuple refinement did not converge", residual=rn)


def detect_shift(fam: VectorFieldFamily, lift: TupleLift, t: float,
                 cfg: ToolConfig = DEFAULT) -> int:
    """Smallest positive shift s with F_q(x_j) = x_{j+s} for all j."""
    man = fam.manifold
    ys = np.array([flow(fam, x, lift.q, t, cfg=cfg).y for x in lift.points])
    tol = max(10.0 * cfg.lift_residual_tol, 10.0 * lift.residual)
    for s in range(1, lift.k + 1):
        worst = max(man.distance(ys[j], lift.points[(j + s) % lift.k])
                    for j in range(lift.k))
        if worst <= tol:
            return s
    raise ShiftMismatch("no cyclic shift closes the refined tuple", k=lift.k)


def lifted_monodromy(lift: TupleLift) -> np.ndarray:
    """Block matrix of (shift^-1 after time-q flow) linearized at the tuple."""
    k = lift.k
    n = lift.monodromies.shape[1]
    C = np.zeros((k * n, k * n))
    for j in range(k):
        src = (j - 1) % k
        C[j * n:(j + 1) * n, src * n:(src + 1) * n] = lift.monodromies[src]
    return C


def lifted_index(fam: VectorFieldFamily, lift: TupleLift, t: float,
                 cfg: ToolConfig = DEFAULT) -> tuple[int, float]:
    """Fixed point index of the shifted return on the product section
    orthogonal to the diagonal field direction."""
    man = fam.manifold
    n = man.ambient_dim
    k = lift.k
    XX = np.concatenate([fam.func(x, t) for x in lift.points])
    nx = float(np.linalg.norm(XX))
    if nx < 1e-12:
        raise DegenerateLift("diagonal field vanishes on the tuple")
    T_blocks = np.zeros((k * n, k * man.dim))
    for j in range(k):
        T_blocks[j * n:(j + 1) * n, j * man.dim:(j + 1) * man.dim] = man.tangent_basis(lift.points[j])
    xi = T_blocks.T @ XX
    xi /= np.linalg.norm(xi)
    # orthonormal complement of the flow direction inside the product tangent space
    Q = np.eye(len(xi)) - np.outer(xi, xi)
    w, vecs = np.linalg.eigh(Q)
    E = T_blocks @ vecs[:, w > 0.5]
    C = lifted_monodromy(lift)
    P_time = np.eye(k * n) - np.outer(XX, XX) / (nx * nx)
    A = E.T @ P_time @ C @ E
    det = float(np.linalg.det(np.eye(A.shape[0]) - A))
    if abs(det) <= cfg.degenerate_det_tol:
        raise DegenerateUnresolved("lifted return map is degenerate", det=det)
    return int(np.sign(det)), det


def lifted_least_shift_period(fam: VectorFieldFamily, lift: TupleLift, t: float,
                              cfg: ToolConfig = DEFAULT) -> tuple[float, int]:
    """Smallest tau = q / j realizing F_tau(tuple) = some shift of the tuple;
    returns (tau, multiplicity = q / tau)."""
    man = fam.manifold
    tol = max(10.0 * cfg.lift_residual_tol, 10.0 * lift.residual)
    j_max = min(cfg.max_multiplicity_scan, int(lift.q / cfg.min_period) or 1)
    for j in range(j_max, 1, -1):
        tau = lift.q / j
        ys = np.array([flow(fam, x, tau, t, cfg=cfg).y for x in lift.points])
        for s in range(0, lift.k):
            worst = max(man.distance(ys[i], lift.points[(i + s) % lift.k])
                        for i in range(lift.k))
            if worst <= tol:
                return tau, j
    return lift.q, 1


@dataclass
class CorrespondenceReport:
    k: int
    m: int
    q: float
    lifted_period: float
    original_period: float
    period_ratio: float
    index_original: int
    index_lifted: int
    index_match: bool
    shift: int
    lifted_multiplicity: int
    expected_multiplicity: int
    multiplicity_match: bool
    tuple_separation: float
    collapsed: bool
    residual: float

    def as_dict(self) -> dict:
        return {
            "k": self.k, "m": self.m, "q": self.q,
            "lifted_period": self.lifted_period,
            "original_period": self.original_period,
            "period_ratio": self.period_ratio,
            "index_original": self.index_original,
            "index_lifted": self.index_lifted,
            "index_match": self.index_match,
            "shift": self.shift,
            "lifted_multiplicity": self.lifted_multiplicity,
            "expected_multiplicity": self.expected_multiplicity,
            "multiplicity_match": self.multiplicity_match,
            "tuple_separation": self.tuple_separation,
            "collapsed": self.collapsed,
            "residual": self.residual,
        }


def correspond(fam: VectorFieldFamily, orbit: PeriodicOrbit, m: int, k: int,
               cfg: ToolConfig = DEFAULT) -> CorrespondenceReport:
    """Run the full k-tuple correspondence for the m-th cover of an orbit."""
    man = fam.manifold
    P = m * orbit.least_period
    seed = build_tuple(fam, orbit, m, k, cfg)
    lift = refine_tuple(fam, seed, P / k, orbit.t, m, k, cfg)
    shift = detect_shift(fam, lift, orbit.t, cfg)
    if shift != 1:
        raise ShiftMismatch("tuple realizes a non-unit shift", shift=shift, k=k)
    idx_orig = fixed_point_index(fam, orbit, m, cfg)
    idx_lift, _ = lifted_index(fam, lift, orbit.t, cfg)
    tau, mult = lifted_least_shift_period(fam, lift, orbit.t, cfg)
    expected_mult = m // gcd(m, k)
    sep = np.inf
    if k > 1:
        D = man.pairwise_distance(lift.points, lift.points)
        sep = float(np.min(D[np.triu_indices(k, 1)]))
    collapsed = bool(k > 1 and sep < cfg.tuple_sep_rel * man.diameter)
    return CorrespondenceReport(
        k=k, m=m, q=lift.q, lifted_period=lift.lifted_period, original_period=P,
        period_ratio=lift.lifted_period / P,
        index_original=idx_orig.value, index_lifted=idx_lift,
        index_match=idx_orig.value == idx_lift,
        shift=shift, lifted_multiplicity=mult, expected_multiplicity=expected_mult,
        multiplicity_match=mult == expected_mult,
        tuple_separation=sep, collapsed=collapsed, residual=lift.residual)
