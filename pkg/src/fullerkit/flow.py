"""Adaptive Dormand-Prince 5(4) flow with manifold retraction.

A hand-rolled stepper rather than scipy.integrate because every accepted step
must retract the position back onto the constraint set while leaving the
variational block untouched, and because dense output over the exact same
trajectory feeds the section scans and index path samplers.  Tableau and the
quartic dense-output matrix match the classical Dormand-Prince pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .config import DEFAULT, ToolConfig
from .errors import NoConvergence, StepSizeUnderflow
from .geometry import VectorFieldFamily

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0]])
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423]])


@dataclass
class _Segment:
    s0: float
    h: float
    y0: np.ndarray
    Q: np.ndarray  # (n, 4)

    def eval(self, s: float) -> np.ndarray:
        u = (s - self.s0) / self.h
        p = np.array([u, u * u, u ** 3, u ** 4])
        return self.y0 + self.h * (self.Q @ p)


class DenseFlow:
    """Piecewise-quartic interpolant of one integration run, on [0, duration]."""

    def __init__(self, segments: list[_Segment], duration: float):
        self.segments = segments
        self.duration = duration
        self._ends = np.array([seg.s0 + seg.h for seg in segments])

    def __call__(self, s: float) -> np.ndarray:
        s = float(np.clip(s, 0.0, self.duration))
        i = int(np.searchsorted(self._ends, s, side="left"))
        i = min(i, len(self.segments) - 1)
        return self.segments[i].eval(s)

    def sample(self, ss: np.ndarray) -> np.ndarray:
        return np.array([self(s) for s in np.asarray(ss, dtype=float)])


@dataclass
class FlowResult:
    y: np.ndarray
    steps: int
    nfev: int
    dense: Optional[DenseFlow] = None


def _integrate(rhs: Callable[[np.ndarray], np.ndarray], y0: np.ndarray, duration: float,
               retract: Optional[Callable[[np.ndarray], np.ndarray]],
               cfg: ToolConfig, dense: bool) -> FlowResult:
    if duration == 0.0:
        return FlowResult(y=np.array(y0, dtype=float), steps=0, nfev=0,
                          dense=DenseFlow([_Segment(0.0, 1.0, np.array(y0, float),
                                                    np.zeros((len(y0), 4)))], 0.0) if dense else None)
    y = np.array(y0, dtype=float)
    n = len(y)
    s = 0.0
    T = float(duration)
    direction = 1.0 if T > 0 else -1.0
    f0 = rhs(y)
    nfev = 1
    scale0 = cfg.atol + cfg.rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale0) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale0) ** 2))
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    h = direction * min(abs(h), abs(T))
    h_min = 1e-14 * max(1.0, abs(T))
    K = np.empty((7, n))
    segments: list[_Segment] = [] if dense else None
    steps = 0
    while direction * (T - s) > 0:
        if abs(h) < h_min:
            raise StepSizeUnderflow("flow step size underflow", s=s, h=h)
        if steps >= cfg.max_flow_steps:
            raise NoConvergence("flow exceeded step budget", steps=steps)
        if direction * (s + h) > direction * T:
            h = T - s
        K[0] = f0
        for i in range(1, 7):
            yi = y + h * (_A[i, :i] @ K[:i]) if i < 6 else y + h * (_B[:6] @ K[:6])
            K[i] = rhs(yi)
        nfev += 6
        y_new = y + h * (_B[:6] @ K[:6])
        # K[6] is the derivative at y_new (first-same-as-last property)
        err_vec = h * (_E @ K)
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean((err_vec / scale) ** 2))
        if err <= 1.0:
            if dense:
                segments.append(_Segment(s, h, y.copy(), K.T @ _P))
            s += h
            y = y_new
            if retract is not None:
                y = retract(y)
                f0 = rhs(y)
                nfev += 1
            else:
                f0 = K[6]
            steps += 1
            factor = 10.0 if err == 0.0 else min(10.0, 0.9 * err ** -0.2)
            h *= factor
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
    return FlowResult(y=y, steps=steps, nfev=nfev,
                      dense=DenseFlow(segments, T) if dense else None)


def flow(fam: VectorFieldFamily, x0: np.ndarray, duration: float, t: float,
         cfg: ToolConfig = DEFAULT, dense: bool = False) -> FlowResult:
    """Integrate x' = X_t(x) for the given duration at frozen family parameter t."""
    man = fam.manifold
    t = float(t)

    def rhs(x: np.ndarray) -> np.ndarray:
        return fam.func(x, t)

    retract = man.retract if man.constraint is not None else None
    return _integrate(rhs, np.asarray(x0, dtype=float), duration, retract, cfg, dense)


def flow_with_monodromy(fam: VectorFieldFamily, x0: np.ndarray, duration: float, t: float,
                        cfg: ToolConfig = DEFAULT, dense: bool = False,
                        V0: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray, FlowResult]:
    """Integrate the flow together with its ambient linearization.

    Returns (x(T), V(T), result) where V solves V' = dX_t(x(s)) V, V(0) = V0
    (ambient identity by default).  Only the position block is retracted after
    accepted steps; the variational block is left to the integrator.
    """
    man = fam.manifold
    n = man.ambient_dim
    t = float(t)
    V0 = np.eye(n) if V0 is None else np.asarray(V0, dtype=float)
    y0 = np.concatenate([np.asarray(x0, dtype=float), V0.ravel()])

    def rhs(y: np.ndarray) -> np.ndarray:
        x = y[:n]
        V = y[n:].reshape(n, n)
        J = fam.jacobian(x, t, fd_step=cfg.jac_fd_step)
        return np.concatenate([fam.func(x, t), (J @ V).ravel()])

    if man.constraint is not None:
        def retract(y: np.ndarray) -> np.ndarray:
            out = y.copy()
            out[:n] = man.retract(y[:n])
            return out
    else:
        retract = None

    res = _integrate(rhs, y0, duration, retract, cfg, dense)
    return res.y[:n], res.y[n:].reshape(n, n), res


def sample_trajectory(fam: VectorFieldFamily, x0: np.ndarray, duration: float, t: float,
                      count: int, cfg: ToolConfig = DEFAULT) -> np.ndarray:
    """`count` points along the trajectory at equal time spacing, start included,
    endpoint excluded: x(j * duration / count), j = 0..count-1."""
    res = flow(fam, x0, duration, t, cfg=cfg, dense=True)
    ss = np.arange(count) * (duration / count)
    pts = res.dense.sample(ss)
    if fam.manifold.constraint is not None:
        pts = np.array([fam.manifold.retract(p) for p in pts])
    return pts
