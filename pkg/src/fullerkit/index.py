"""Topological indices of periodic orbits and their Fuller-weighted sums.

Fixed point index: sign of det(I - A) on a transverse section when that
determinant is safely nonzero, otherwise the boundary degree of the return
displacement on a small ring (resolves isolated degenerate returns, reports
honest failure for genuinely non-isolated families).

Rotation index of a symplectic path: a continuous angle lift along the
linearized flow restricted to the contact planes, with endpoint rules for
elliptic and hyperbolic returns and averaged nudges at degenerate endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .config import DEFAULT, ToolConfig
from .errors import (DegenerateLift, DegenerateSection, DegenerateUnresolved,
                     ParamOutOfRange)
from .flow import flow, flow_with_monodromy
from .geometry import VectorFieldFamily, contact_frame
from .orbits import PeriodicOrbit, section_basis


# -- restricted return map -----------------------------------------------------


def restricted_return_map(fam: VectorFieldFamily, orbit: PeriodicOrbit, m: int = 1,
                          cfg: ToolConfig = DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    """Differential of the section return map for the m-th cover, ((d-1)x(d-1), E)."""
    man = fam.manifold
    x = np.asarray(orbit.x, dtype=float)
    v = fam.func(x, orbit.t)
    E = section_basis(man, x, v)
    V = orbit.monodromy_power(m)
    P_time = np.eye(man.ambient_dim) - np.outer(v, v) / float(v @ v)
    A = E.T @ P_time @ V @ E
    return A, E


# -- fixed point index ------------------------------------------------------------


@dataclass
class IndexResult:
    value: int
    method: str            # "determinant" | "winding"
    det: float
    degenerate_return: bool
    windings: Optional[float] = None


def _poincare_return(fam: VectorFieldFamily, x_ref: np.ndarray, nhat: np.ndarray,
                     z: np.ndarray, p_guess: float, t: float, cfg: ToolConfig) -> np.ndarray:
    """Flow z for about one period, then Newton the return time onto the section
    plane through x_ref."""
    man = fam.manifold
    y = flow(fam, z, p_guess, t, cfg=cfg).y
    for _ in range(12):
        g = float(nhat @ man.difference(y, x_ref))
        if abs(g) <= cfg.section_membership_tol:
            return y
        dg = float(nhat @ fam.func(y, t))
        if abs(dg) < 1e-12:
            raise DegenerateSection("return trajectory grazes the section")
        dt = float(np.clip(-g / dg, -0.2 * p_guess, 0.2 * p_guess))
        y = flow(fam, y, dt, t, cfg=cfg).y
    raise DegenerateSection("could not refine the section return time")


def _ring_displacements(fam: VectorFieldFamily, orbit: PeriodicOrbit, m: int,
                        E: np.ndarray, angles: np.ndarray, cfg: ToolConfig,
                        abort_below: float = 0.0) -> np.ndarray:
    man = fam.manifold
    x = np.asarray(orbit.x, dtype=float)
    v = fam.func(x, orbit.t)
    nhat = v / np.linalg.norm(v)
    p = m * orbit.least_period
    rho = cfg.degree_ring_radius
    out = np.empty((len(angles), 2))
    for i, a in enumerate(angles):
        u = rho * np.array([np.cos(a), np.sin(a)])
        z = man.retract(x + E @ u)
        y = _poincare_return(fam, x, nhat, z, p, orbit.t, cfg)
        ret = E.T @ man.difference(y, x)
        out[i] = u - ret      # u - P(u): degree of this map is the index
        if np.linalg.norm(out[i]) < abort_below:
            raise DegenerateUnresolved("return displacement vanishes on the probe ring")
    return out


def winding_index(fam: VectorFieldFamily, orbit: PeriodicOrbit, m: int,
                  E: np.ndarray, cfg: ToolConfig = DEFAULT) -> tuple[int, float]:
    """Boundary degree of (id - return map) on a small section ring."""
    if E.shape[1] == 1:
        W = _ring_displacements(fam, orbit, m, np.column_stack([E[:, 0], np.zeros_like(E[:, 0])]),
                                np.array([0.0, np.pi]), cfg,
                                abort_below=cfg.degree_min_displacement)[:, 0]
        return int(round((np.sign(W[0]) - np.sign(W[1])) / 2)), 0.0
    if E.shape[1] != 2:
        raise ParamOutOfRange("winding fallback implemented for 1- and 2-dimensional sections",
                              got=int(E.shape[1]))
    probes = np.linspace(0.0, 2.0 * np.pi, 9)[:-1]
    Wp = _ring_displacements(fam, orbit, m, E, probes, cfg,
                             abort_below=cfg.degree_min_displacement)
    angles = np.linspace(0.0, 2.0 * np.pi, cfg.degree_ring_samples + 1)
    W = _ring_displacements(fam, orbit, m, E, angles, cfg)
    norms = np.linalg.norm(W, axis=1)
    if np.min(norms) < cfg.degree_min_displacement:
        raise DegenerateUnresolved("return displacement vanishes on the degree ring")
    th = np.unwrap(np.arctan2(W[:, 1], W[:, 0]))
    wind = (th[-1] - th[0]) / (2.0 * np.pi)
    deg = int(round(wind))
    if abs(wind - deg) > 0.05:
        raise DegenerateUnresolved("boundary degree did not settle to an integer",
                                   winding=float(wind))
    return deg, float(wind)


def fixed_point_index(fam: VectorFieldFamily, orbit: PeriodicOrbit, m: int = 1,
                      cfg: ToolConfig = DEFAULT) -> IndexResult:
    A, E = restricted_return_map(fam, orbit, m, cfg)
    d = float(np.linalg.det(np.eye(A.shape[0]) - A))
    if abs(d) > cfg.degenerate_det_tol:
        return IndexResult(value=int(np.sign(d)), method="determinant", det=d,
                           degenerate_return=False)
    deg, wind = winding_index(fam, orbit, m, E, cfg)
    return IndexResult(value=deg, method="winding", det=d, degenerate_return=True,
                       windings=wind)


# -- rotation angle lift for 2x2 symplectic paths -----------------------------------


def _angle_of(M: np.ndarray) -> float:
    """Continuous-on-Sp(2) angle mod 2*pi; rotation part of the polar splitting."""
    tr = M[0, 0] + M[1, 1]
    if abs(tr) < 2.0:
        th = float(np.arccos(np.clip(tr / 2.0, -1.0, 1.0)))
        return th if (M[1, 0] - M[0, 1]) >= 0.0 else -th
    return 0.0 if tr >= 2.0 else np.pi


def angle_lift(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Unwrapped angle along a matrix path starting at the identity."""
    raw = np.array([_angle_of(M) for M in mats])
    out = np.empty_like(raw)
    out[0] = raw[0]
    for i in range(1, len(raw)):
        d = raw[i] - raw[i - 1]
        d = np.mod(d + np.pi, 2.0 * np.pi) - np.pi
        out[i] = out[i - 1] + d
    return out


def _rotation(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s], [s, c]])


def _endpoint_mu(phi_end: float, M_end: np.ndarray) -> Fraction:
    tr = M_end[0, 0] + M_end[1, 1]
    if abs(tr) < 2.0:
        return Fraction(2 * int(np.floor(phi_end / (2.0 * np.pi))) + 1)
    return Fraction(int(round(phi_end / np.pi)))


@dataclass
class RotationIndexResult:
    mu: Fraction
    phi_end: float
    endpoint: str          # "elliptic" | "hyperbolic" | "degenerate"
    degenerate: bool
    nudge: Optional[float] = None

    @property
    def mu_int(self) -> Optional[int]:
        return int(self.mu) if self.mu.denominator == 1 else None


def rotation_index_of_path(mats: Sequence[np.ndarray], cfg: ToolConfig = DEFAULT) -> RotationIndexResult:
    """Index of a symplectic path from the identity, from its angle lift.

    Degenerate endpoints (eigenvalue one) are settled by extending the path
    with small rotations both ways and averaging the two endpoint readings.
    """
    mats = [np.asarray(M, dtype=float) for M in mats]
    phi = angle_lift(mats)
    M_end = mats[-1]
    gap = abs(float(np.linalg.det(np.eye(2) - M_end)))
    if gap > cfg.cz_degeneracy_tol:
        tr = M_end[0, 0] + M_end[1, 1]
        kind = "elliptic" if abs(tr) < 2.0 else "hyperbolic"
        return RotationIndexResult(mu=_endpoint_mu(phi[-1], M_end), phi_end=float(phi[-1]),
                                   endpoint=kind, degenerate=False)
    delta = 1e-4
    for _ in range(cfg.mu_retries):
        readings = []
        ok = True
        for sgn in (+1.0, -1.0):
            ext = [_rotation(sgn * delta * u) @ M_end for u in np.linspace(0.0, 1.0, 17)[1:]]
            phi_ext = angle_lift(list(mats) + ext)
            M_reg = ext[-1]
            if abs(float(np.linalg.det(np.eye(2) - M_reg))) <= cfg.cz_degeneracy_tol:
                ok = False
                break
            readings.append(_endpoint_mu(phi_ext[-1], M_reg))
        if ok:
            mu = (readings[0] + readings[1]) / 2
            return RotationIndexResult(mu=mu, phi_end=float(phi[-1]), endpoint="degenerate",
                                       degenerate=True, nudge=delta)
        delta *= 3.0
    raise DegenerateLift("could not regularize a degenerate path endpoint", delta=delta)


def orbit_rotation_index(fam: VectorFieldFamily, orbit: PeriodicOrbit, m: int = 1,
                         frame_fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] = contact_frame,
                         cfg: ToolConfig = DEFAULT) -> RotationIndexResult:
    """Rotation index of the m-th cover in the global contact frame.

    The linearized flow is restricted to the contact planes via the frame,
    normalized to unit determinant (conformal factors drop out), and sampled
    densely over one least period; covers extend the path by right products
    with the period map.
    """
    man = fam.manifold
    n = man.ambient_dim
    x0 = np.asarray(orbit.x, dtype=float)
    p = orbit.least_period
    _, _, res = flow_with_monodromy(fam, x0, p, orbit.t, cfg=cfg, dense=True)
    N = cfg.cz_path_samples
    ss = np.linspace(0.0, p, N + 1)
    E0 = np.column_stack(frame_fn(x0))
    base: list[np.ndarray] = []
    for s in ss:
        y = res.dense(s)
        xs = man.retract(y[:n])
        V = y[n:].reshape(n, n)
        Es = np.column_stack(frame_fn(xs))
        Phi = Es.T @ V @ E0
        det = float(np.linalg.det(Phi))
        if det <= 0.0:
            raise DegenerateLift("contact-plane transfer lost orientation", det=det, s=float(s))
        base.append(Phi / np.sqrt(det))
    mats = list(base)
    P1 = base[-1]
    Pj = np.eye(2)
    for _ in range(1, m):
        Pj = Pj @ P1
        mats.extend(Phi @ Pj for Phi in base[1:])
    return rotation_index_of_path(mats, cfg)


def parity_consistent(fp_index: int, mu: Fraction, manifold_dim: int) -> bool:
    """Sign rule linking the two indices for a nondegenerate orbit."""
    if manifold_dim != 3 or mu.denominator != 1:
        return False
    return fp_index == (-1) ** (int(mu) - 1)


# -- Fuller sums and definite-type classification ----------------------------------------


@dataclass
class FullerTerm:
    orbit: PeriodicOrbit
    m: int
    fp_index: int
    weight: Fraction
    term: Fraction


def fuller_terms(fam: VectorFieldFamily, covers: Sequence[tuple[PeriodicOrbit, int]],
                 cfg: ToolConfig = DEFAULT) -> list[FullerTerm]:
    terms = []
    for orbit, m in covers:
        r = fixed_point_index(fam, orbit, m, cfg)
        w = Fraction(1, m)
        terms.append(FullerTerm(orbit=orbit, m=m, fp_index=r.value, weight=w,
                                term=w * r.value))
    return terms


def fuller_sum(terms: Sequence[FullerTerm]) -> Fraction:
    total = Fraction(0)
    for t in sorted(terms, key=lambda t: (t.m * t.orbit.least_period, t.m,
                                          tuple(np.round(t.orbit.x, 9)))):
        total += t.term
    return total


@dataclass
class Classification:
    kind: str                       # "Finite" | "PlusInfinity" | "MinusInfinity" | "Indeterminate"
    caps: list[float]
    partial_sums: list[Fraction]
    batches: list[Fraction]
    value: Optional[Fraction] = None   # set for Finite
    note: str = ""


def classify_partial_sums(caps: Sequence[float], sums: Sequence[Fraction],
                          cfg: ToolConfig = DEFAULT) -> Classification:
    """Definite-type verdict from Fuller partial sums over increasing period caps."""
    caps = [float(c) for c in caps]
    sums = [Fraction(s) for s in sums]
    if len(caps) != len(sums) or len(caps) < cfg.infinite_type_min_caps:
        raise ParamOutOfRange(
            f"need at least {cfg.infinite_type_min_caps} increasing caps",
            got=len(caps))
    if any(b >= a for a, b in zip(caps[1:], caps[:-1])):
        raise ParamOutOfRange("caps must be strictly increasing", caps=caps)
    prev = Fraction(0)
    batches = []
    for s in sums:
        batches.append(s - prev)
        prev = s
    w = cfg.infinite_type_min_caps
    tail = batches[-w:]
    if all(b == 0 for b in batches[-2:]):
        return Classification(kind="Finite", caps=caps, partial_sums=sums, batches=batches,
                              value=sums[-1], note="partial sums stabilized")
    if all(b > 0 for b in tail):
        return Classification(kind="PlusInfinity", caps=caps, partial_sums=sums,
                              batches=batches, note="uniformly positive growth across caps")
    if all(b < 0 for b in tail):
        return Classification(kind="MinusInfinity", caps=caps, partial_sums=sums,
                              batches=batches, note="uniformly negative growth across caps")
    return Classification(kind="Indeterminate", caps=caps, partial_sums=sums,
                          batches=batches, note="mixed-sign growth; no definite type")
