"""Embedded manifolds, vector-field families, contact-form families.

Manifolds are given by ambient coordinates plus a constraint/retraction pair,
never by atlases.  Periodic coordinates are handled on the universal cover:
flows integrate unwrapped, `wrap`/`difference` reduce to the fundamental
domain when points are compared or reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .config import DEFAULT, ToolConfig
from .errors import EmptyNet, OffManifold, ParamOutOfRange

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class EmbeddedManifold:
    name: str
    ambient_dim: int
    dim: int
    diameter: float
    # c(x) = 0 on M; None means the ambient region itself (flat factors)
    constraint: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # indices of coordinates that live on R mod 2*pi
    periodic_axes: tuple[int, ...] = ()
    # extra membership predicate (e.g. solid-torus radial bound); returns max excess
    region_excess: Optional[Callable[[np.ndarray], float]] = None
    _retract: Optional[Callable[[np.ndarray], np.ndarray]] = None
    _projector: Optional[Callable[[np.ndarray], np.ndarray]] = None

    # -- membership ---------------------------------------------------------

    def constraint_defect(self, x: np.ndarray) -> float:
        if self.constraint is None:
            return 0.0
        return float(np.max(np.abs(self.constraint(np.asarray(x, dtype=float)))))

    def check_point(self, x: np.ndarray, tol: float | None = None) -> None:
        tol = DEFAULT.metric_tol if tol is None else tol
        d = self.constraint_defect(x)
        if d > tol:
            raise OffManifold(f"point violates {self.name} constraint by {d:.3e}",
                              defect=d, tol=tol)
        if self.region_excess is not None:
            e = self.region_excess(np.asarray(x, dtype=float))
            if e > tol:
                raise OffManifold(f"point outside {self.name} region by {e:.3e}",
                                  defect=e, tol=tol)

    # -- charts-free differential structure ----------------------------------

    def retract(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._retract is not None:
            return self._retract(x)
        return x

    def projector(self, x: np.ndarray) -> np.ndarray:
        if self._projector is not None:
            return self._projector(np.asarray(x, dtype=float))
        return np.eye(self.ambient_dim)

    def project_tangent(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self._projector is None:
            return np.asarray(v, dtype=float)
        return self.projector(x) @ np.asarray(v, dtype=float)

    def tangent_basis(self, x: np.ndarray) -> np.ndarray:
        """Orthonormal basis of T_x M as columns, (ambient_dim, dim)."""
        if self._projector is None:
            return np.eye(self.ambient_dim)
        P = self.projector(x)
        w, v = np.linalg.eigh(P)
        cols = v[:, w > 0.5]
        if cols.shape[1] != self.dim:
            raise OffManifold(f"tangent projector rank {cols.shape[1]} != dim {self.dim}")
        return cols

    # -- periodic bookkeeping -------------------------------------------------

    def wrap(self, x: np.ndarray) -> np.ndarray:
        x = np.array(x, dtype=float)
        for i in self.periodic_axes:
            x[i] = np.mod(x[i], TWO_PI)
        return x

    def difference(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """a - b with periodic coordinates reduced to (-pi, pi]."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        for i in self.periodic_axes:
            d[i] = np.mod(d[i] + np.pi, TWO_PI) - np.pi
        return d

    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.linalg.norm(self.difference(a, b)))

    def pairwise_distance(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Wrapped distances between rows of A and rows of B, (len(A), len(B))."""
        D = A[:, None, :] - B[None, :, :]
        for i in self.periodic_axes:
            D[..., i] = np.mod(D[..., i] + np.pi, TWO_PI) - np.pi
        return np.linalg.norm(D, axis=-1)

    # -- deterministic seeding -------------------------------------------------

    def sample_net(self, count: int) -> np.ndarray:
        """Low-discrepancy net on M, (count, ambient_dim). Deterministic."""
        if count <= 0:
            raise EmptyNet("sample net size must be positive", count=count)
        return _NETS[self.name](self, count)

    # -- self-diagnostics --------------------------------------------------------

    def self_check(self, count: int = 64, cfg: ToolConfig = DEFAULT) -> dict:
        """Projector idempotence/symmetry and retraction fixed points on a net."""
        pts = self.sample_net(count)
        proj_defect = 0.0
        retr_defect = 0.0
        for x in pts:
            P = self.projector(x)
            proj_defect = max(proj_defect,
                              float(np.max(np.abs(P @ P - P))),
                              float(np.max(np.abs(P - P.T))))
            retr_defect = max(retr_defect, float(np.linalg.norm(self.difference(self.retract(x), x))))
            self.check_point(x, tol=cfg.metric_tol)
        return {"projector_defect": proj_defect, "retraction_defect": retr_defect,
                "net": count, "ok": proj_defect <= cfg.projector_tol and retr_defect <= cfg.metric_tol}


# -- built-in manifolds ------------------------------------------------------------


def _s3_constraint(x: np.ndarray) -> np.ndarray:
    return np.array([x @ x - 1.0])


def _s3_retract(x: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(x)
    if n < 1e-12:
        raise OffManifold("cannot retract the origin to the unit sphere")
    return x / n


def _s3_projector(x: np.ndarray) -> np.ndarray:
    x = x / np.linalg.norm(x)
    return np.eye(4) - np.outer(x, x)


def _solid_torus_excess(x: np.ndarray) -> float:
    return float(np.hypot(x[0], x[1]) - 1.0)


def _net_s3(man: EmbeddedManifold, count: int) -> np.ndarray:
    sampler = qmc.Halton(d=4, scramble=False)
    raw = sampler.random(4 * count + 8) * 2.0 - 1.0
    norms = np.linalg.norm(raw, axis=1)
    good = raw[norms > 0.2]
    if len(good) < count:
        raise EmptyNet("halton net rejection left too few points", count=count)
    good = good[:count]
    return good / np.linalg.norm(good, axis=1, keepdims=True)


def _net_t2(man: EmbeddedManifold, count: int) -> np.ndarray:
    sampler = qmc.Halton(d=2, scramble=False)
    return sampler.random(count) * TWO_PI


def _net_solid_torus(man: EmbeddedManifold, count: int) -> np.ndarray:
    sampler = qmc.Halton(d=3, scramble=False)
    u = sampler.random(count)
    r = 0.85 * np.sqrt(u[:, 0])
    th = TWO_PI * u[:, 1]
    return np.column_stack([r * np.cos(th), r * np.sin(th), TWO_PI * u[:, 2]])


_NETS = {"s3": _net_s3, "t2": _net_t2, "solid-torus": _net_solid_torus}

S3 = EmbeddedManifold(
    name="s3", ambient_dim=4, dim=3, diameter=2.0,
    constraint=_s3_constraint, _retract=_s3_retract, _projector=_s3_projector)

T2 = EmbeddedManifold(
    name="t2", ambient_dim=2, dim=2, diameter=float(np.pi * np.sqrt(2.0)),
    periodic_axes=(0, 1))

SOLID_TORUS = EmbeddedManifold(
    name="solid-torus", ambient_dim=3, dim=3,
    diameter=float(np.sqrt(4.0 + np.pi ** 2)),
    periodic_axes=(2,), region_excess=_solid_torus_excess,
    _retract=lambda x: x)

_BUILTIN_MANIFOLDS = {"s3": S3, "t2": T2, "solid-torus": SOLID_TORUS}


def builtin_manifold(name: str) -> EmbeddedManifold:
    try:
        return _BUILTIN_MANIFOLDS[name]
    except KeyError:
        raise ParamOutOfRange(f"unknown manifold {name!r}", known=sorted(_BUILTIN_MANIFOLDS))


# -- vector-field families -----------------------------------------------------------


@dataclass(frozen=True)
class VectorFieldFamily:
    """Time-dependent tangent field X_t on an embedded manifold.

    `func(x, t)` returns the ambient representation of X_t(x); `jac(x, t)`,
    when given, is the closed-form ambient Jacobian dX_t/dx used by the
    variational equation (finite differences otherwise).
    """

    name: str
    manifold: EmbeddedManifold
    func: Callable[[np.ndarray, float], np.ndarray]
    jac: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    t_range: tuple[float, float] = (0.0, 1.0)
    params: dict = field(default_factory=dict)

    def __call__(self, x: np.ndarray, t: float) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float), float(t))

    def jacobian(self, x: np.ndarray, t: float,
                 fd_step: float = DEFAULT.jac_fd_step) -> np.ndarray:
        if self.jac is not None:
            return self.jac(np.asarray(x, dtype=float), float(t))
        man = self.manifold
        n = man.ambient_dim
        J = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = fd_step
            xp = man.retract(x + e)
            xm = man.retract(x - e)
            J[:, j] = (self.func(xp, t) - self.func(xm, t)) / (2.0 * fd_step)
        return J


def eval_field(fam: VectorFieldFamily, x: np.ndarray, t: float,
               cfg: ToolConfig = DEFAULT, check: bool = True) -> np.ndarray:
    """Evaluate X_t(x) with membership and tangency checks."""
    x = np.asarray(x, dtype=float)
    lo, hi = fam.t_range
    if not (lo - 1e-12 <= t <= hi + 1e-12):
        raise ParamOutOfRange(f"t={t} outside family range [{lo}, {hi}]", t=t)
    if check:
        fam.manifold.check_point(x, tol=cfg.metric_tol)
    v = fam.func(x, float(t))
    if check and fam.manifold.constraint is not None:
        normal = v - fam.manifold.project_tangent(x, v)
        defect = float(np.linalg.norm(normal))
        scale = max(1.0, float(np.linalg.norm(v)))
        if defect > cfg.tangency_tol * scale:
            raise OffManifold(
                f"field {fam.name} not tangent at given point (defect {defect:.3e})",
                defect=defect)
    return v


def check_nonsingular(fam: VectorFieldFamily, ts: Sequence[float],
                      net: int | np.ndarray = DEFAULT.nonsingular_net,
                      cfg: ToolConfig = DEFAULT) -> dict:
    """Minimum field norm over a sample net and t-grid.  Advisory sweep."""
    if isinstance(net, (int, np.integer)):
        pts = fam.manifold.sample_net(int(net))
    else:
        pts = np.asarray(net, dtype=float)
        if pts.size == 0:
            raise EmptyNet("empty non-singularity net")
    ts = list(ts)
    if not ts:
        raise EmptyNet("empty t grid for non-singularity sweep")
    worst = np.inf
    argmin = None
    for t in ts:
        norms = np.array([np.linalg.norm(fam.func(x, float(t))) for x in pts])
        i = int(np.argmin(norms))
        if norms[i] < worst:
            worst = float(norms[i])
            argmin = {"t": float(t), "x": [float(c) for c in pts[i]]}
    return {"min_norm": worst, "argmin": argmin, "net": int(len(pts)), "ts": [float(t) for t in ts],
            "nonsingular": worst > 0.0}


# -- the round S^3 frame used by contact computations ---------------------------------


def hopf_field(x: np.ndarray) -> np.ndarray:
    return np.array([-x[1], x[0], -x[3], x[2]])


HOPF_JAC = np.array([
    [0.0, -1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, 0.0]])


def hopf_map(x: np.ndarray) -> np.ndarray:
    """S^3 -> S^2, (2 Re z1 conj(z2), 2 Im z1 conj(z2), |z1|^2 - |z2|^2)."""
    return np.array([
        2.0 * (x[0] * x[2] + x[1] * x[3]),
        2.0 * (x[1] * x[2] - x[0] * x[3]),
        x[0] ** 2 + x[1] ** 2 - x[2] ** 2 - x[3] ** 2])


def contact_frame(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Global orthonormal frame of the round contact plane at y in S^3.

    u1 = j(y), u2 = i*j(y) for the quaternionic structure j(z1, z2) =
    (-conj(z2), conj(z1)).  Restricting this frame over any capping disk of a
    Hopf-like orbit yields the disk-induced trivialization class, and the
    symplectic area form satisfies d(lambda)(u1, u2) = 2 > 0.
    """
    u1 = np.array([-y[2], y[3], y[0], -y[1]])
    u2 = np.array([-y[3], -y[2], y[1], y[0]])
    return u1, u2


# -- contact-form families --------------------------------------------------------------


@dataclass(frozen=True)
class ContactFormFamily:
    """Conformal family lambda_t = factor(x, t) * base, base a fixed contact form.

    `base_coeffs(x)` are ambient covector coefficients of the base form;
    `base_jac(x)` their closed-form x-Jacobian (finite differences otherwise).
    `factor`, `factor_grad` (ambient gradient), `dfactor_dt` describe the
    conformal factor; the latter two fall back to finite differences.
    """

    name: str
    manifold: EmbeddedManifold
    base_coeffs: Callable[[np.ndarray], np.ndarray]
    factor: Callable[[np.ndarray, float], float]
    base_jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    factor_grad: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    dfactor_dt: Optional[Callable[[np.ndarray, float], float]] = None
    reeb: Optional[VectorFieldFamily] = None   # registered closed-form Reeb family
    t_range: tuple[float, float] = (0.0, 1.0)
    params: dict = field(default_factory=dict)

    def coeffs(self, x: np.ndarray, t: float) -> np.ndarray:
        return self.factor(x, t) * self.base_coeffs(x)

    def coeffs_jac(self, x: np.ndarray, t: float,
                   fd_step: float = DEFAULT.jac_fd_step) -> np.ndarray:
        """d/dx of the coefficient map, (ambient, ambient); rows index coefficients."""
        x = np.asarray(x, dtype=float)
        f = self.factor(x, t)
        lam = self.base_coeffs(x)
        if self.base_jac is not None:
            Jb = self.base_jac(x)
        else:
            Jb = _fd_jac(self.base_coeffs, x, fd_step)
        if self.factor_grad is not None:
            g = self.factor_grad(x, t)
        else:
            g = _fd_grad(lambda y: self.factor(y, t), x, fd_step)
        return f * Jb + np.outer(lam, g)

    def d_form(self, x: np.ndarray, t: float) -> np.ndarray:
        """Exterior derivative as an antisymmetric matrix A, d(lambda)(u, v) = u @ A @ v."""
        J = self.coeffs_jac(x, t)
        return J.T - J

    def pairing(self, x: np.ndarray, t: float, v: np.ndarray) -> float:
        return float(self.coeffs(x, t) @ np.asarray(v, dtype=float))

    def time_slope(self, x: np.ndarray, t: float, fd_step: float = 1e-6) -> float:
        if self.dfactor_dt is not None:
            return float(self.dfactor_dt(x, t))
        lo, hi = self.t_range
        tp, tm = min(t + fd_step, hi), max(t - fd_step, lo)
        return float((self.factor(x, tp) - self.factor(x, tm)) / (tp - tm))


def _fd_jac(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    n = len(x)
    out = np.empty((len(fn(x)), n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        out[:, j] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return out


def _fd_grad(fn: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    n = len(x)
    g = np.empty(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        g[j] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g
