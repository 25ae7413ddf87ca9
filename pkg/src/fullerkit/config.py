"""Numeric defaults.

Every tolerance and knob the toolkit uses lives here, in one block, so a
report can echo the exact numbers a run was performed with.  Values are
artifact defaults, not theorems; override via ToolConfig.replace / the
--config flag / per-request config dicts.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

from .errors import ParseError, UsageError


@dataclass(frozen=True)
class ToolConfig:
    # geometry
    metric_tol: float = 1e-9          # |constraint| bound for membership
    tangency_tol: float = 1e-10       # |normal component| bound for field values
    projector_tol: float = 1e-12      # projector idempotence / symmetry bound
    nonsingular_net: int = 512        # default sample-net size for non-singularity sweeps

    # flow
    rtol: float = 1e-10
    atol: float = 1e-12
    max_flow_steps: int = 2_000_000
    jac_fd_step: float = 1e-6         # central-difference step for field Jacobians

    # orbits
    orbit_residual_tol: float = 1e-8  # Newton shooting convergence, |F_p(x) - x|
    least_period_tol: float = 1e-7    # return residual accepted in the divisor scan
    max_newton_steps: int = 50
    section_alignment_tol: float = 1e-6   # DegenerateSection if |v.n| < tol*|v|
    section_membership_tol: float = 1e-10
    seeds: int = 256                  # default low-discrepancy seed count
    max_multiplicity_scan: int = 16   # divisor scan upper bound
    dedup_eps_rel: float = 1e-4       # orbit dedup, relative to manifold diameter
    period_dedup_rel: float = 1e-6
    degenerate_det_tol: float = 1e-6  # |det(I - A)| below this -> degenerate monodromy
    orbit_sample_count: int = 64      # points per orbit for image comparisons
    min_period: float = 1e-3          # shooting rejects periods below this

    # index
    degree_ring_radius: float = 1e-3
    degree_ring_samples: int = 720
    degree_min_displacement: float = 1e-9
    cz_path_samples: int = 256        # per revolution floor; adaptively refined
    cz_degeneracy_tol: float = 1e-8   # eigenvalue-1 distance flagging a degenerate path
    infinite_type_min_caps: int = 3   # uniform sign needed over at least this many caps

    # continuation
    step_init: float = 0.05           # pseudo-arclength step in (x, log p, t)
    step_max: float = 0.25
    step_min: float = 1e-8
    step_grow: float = 1.3
    max_corrector_iters: int = 12
    max_branch_nodes: int = 4000
    reconnect_tol: float = 1e-4       # endpoint matching in (x, p, t)
    p_max_rel: float = 1e3            # default period cap = p_max_rel * minimal period
    check_t1: bool = True             # sample the t=1 end for the Admissible verdict

    # correspondence
    tuple_sep_rel: float = 1e-6       # tuple coordinates pairwise distinct, rel. diameter
    lift_residual_tol: float = 1e-7

    # reeb
    reeb_residual_tol: float = 1e-9
    reeb_defect_tol: float = 1e-8
    action_rel_tol: float = 1e-8
    reeb_period_action_tol: float = 1e-7
    mu0: float = 0.05
    mu_retries: int = 8
    growth_net: int = 10_000          # sample-net size for the conformal rate constant
    growth_slack: float = 0.05        # pass margin: measured <= bound * (1 + slack)

    # execution
    threads: int = 0                  # 0 = serial; CLI maps --threads / FULLERKIT_THREADS

    def replace(self, **kw) -> "ToolConfig":
        bad = set(kw) - {f.name for f in dataclasses.fields(self)}
        if bad:
            raise UsageError(f"unknown config keys: {sorted(bad)}", keys=sorted(bad))
        return dataclasses.replace(self, **kw)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ToolConfig":
        return cls().replace(**d)

    @classmethod
    def from_file(cls, path: str) -> "ToolConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ParseError("config file must contain a JSON object")
        return cls.from_dict(data)


def resolve_threads(explicit: int | None) -> int:
    """--threads beats FULLERKIT_THREADS beats serial."""
    if explicit is not None:
        return max(0, explicit)
    env = os.environ.get("FULLERKIT_THREADS")
    if env:
        try:
            return max(0, int(env))
        except ValueError:
            raise UsageError(f"FULLERKIT_THREADS is not an integer: {env!r}")
    return 0


DEFAULT = ToolConfig()
