"""Command implementations shared by the HTTP service and the CLI.

Each run_* function takes a Scenario, an options dict of overrides (None
values fall back to the scenario's per-command defaults), and a ToolConfig,
and returns a plain JSON-serializable result dict.  Exact rational values are
serialized as fraction strings so they survive round-trips bit for bit.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .config import DEFAULT, ToolConfig
from .continuation import Branch, continue_branch, sky_report
from .correspondence import correspond
from .errors import (DegenerateLift, DegenerateUnresolved, NotReebBranch,
                     UsageError)
from .flow import sample_trajectory
from .geometry import ContactFormFamily, VectorFieldFamily
from .index import (classify_partial_sums, fixed_point_index, fuller_sum,
                    fuller_terms, orbit_rotation_index, parity_consistent)
from .orbits import PeriodicOrbit, covers_below, find_orbit, search_orbits
from .reeb import (PerturbationSystem, growth_bound_check, level_cap,
                   reeb_defect)
from .scenarios import FIELD_BUILDERS, Scenario


# -- helpers -----------------------------------------------------------------------


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(items))) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


_OPTION_KEYS = {
    "find-orbits": {"t", "period_cap", "period_hints", "seeds", "rotation"},
    "index": {"t", "period_cap", "period_hints", "seeds"},
    "classify-type": {"t", "caps", "use_levels", "levels", "seeds"},
    "continue": {"starts", "direction", "p_max", "t0"},
    "detect-sky": {"starts", "direction", "p_max"},
    "correspond": {"k", "covers", "t", "period_cap", "period_hints", "seeds"},
    "build-psys": {"levels", "cap", "t"},
    "reeb-bound": {"start", "hint", "k_override", "ts", "periods"},
    "c0probe": {"deltas", "base_point", "hint"},
}


def _check_options(command: str, options: Optional[dict]) -> dict:
    opts = {k: v for k, v in (options or {}).items() if v is not None}
    bad = set(opts) - _OPTION_KEYS[command]
    if bad:
        raise UsageError(f"unknown options for {command}: {sorted(bad)}",
                         command=command, keys=sorted(bad))
    return opts


def _merged(scenario: Scenario, command: str, options: Optional[dict]) -> dict:
    out = scenario.command_defaults(command)
    out.update(_check_options(command, options))
    return out


def _seed_array(scenario: Scenario, fam: VectorFieldFamily,
                options: Optional[dict], cfg: ToolConfig) -> np.ndarray:
    man = fam.manifold
    opts = options or {}
    count = opts.get("seeds")
    if count is None:
        count = scenario.search.get("seeds_count", cfg.seeds)
    explicit = [man.retract(np.asarray(p, dtype=float))
                for p in scenario.search.get("seed_points", [])]
    parts = []
    if explicit:
        parts.append(np.array(explicit))
    if int(count) > 0:
        parts.append(man.sample_net(int(count)))
    if not parts:
        raise UsageError("no seeds: give seeds_count or seed_points")
    return np.vstack(parts)


def _search_settings(scenario: Scenario, options: Optional[dict],
                     cfg: ToolConfig) -> tuple[float, float, Optional[list]]:
    opts = options or {}
    cap = opts.get("period_cap")
    if cap is None:
        cap = scenario.search.get("period_cap")
    if cap is None:
        raise UsageError("no period cap: give period_cap in the scenario or options")
    hints = opts.get("period_hints") or scenario.search.get("period_hints")
    t = opts.get("t")
    return float(cap), (None if t is None else float(t)), hints


def orbit_record(fam: VectorFieldFamily, orbit: PeriodicOrbit,
                 cfg: ToolConfig, contact: Optional[ContactFormFamily] = None,
                 rotation: bool = False) -> dict:
    rec = {
        "point": [float(v) for v in orbit.x],
        "t": float(orbit.t),
        "least_period": float(orbit.least_period),
        "multiplicity": int(orbit.multiplicity),
        "residual": float(orbit.residual),
    }
    try:
        r = fixed_point_index(fam, orbit, 1, cfg)
        rec.update(fp_index=int(r.value), fp_method=r.method, fp_det=float(r.det),
                   fp_status="ok")
    except DegenerateUnresolved as e:
        rec.update(fp_index=None, fp_method="winding", fp_det=None,
                   fp_status="unresolved", fp_note=str(e))
    if contact is not None:
        v = fam(orbit.x, orbit.t)
        rec["reeb_defect"] = float(reeb_defect(contact, orbit.x, v, orbit.t))
    if rotation:
        try:
            rot = orbit_rotation_index(fam, orbit, 1, cfg=cfg)
            rec.update(rotation_index=str(rot.mu), rotation_float=float(rot.mu),
                       rotation_degenerate=bool(rot.degenerate))
        except DegenerateLift as e:
            rec.update(rotation_index=None, rotation_float=None,
                       rotation_degenerate=True, rotation_note=str(e))
    return rec


def _branch_record(name: str, br: Branch) -> dict:
    nodes = br.nodes
    return {
        "name": name,
        "status": br.status,
        "message": br.message,
        "node_count": len(nodes),
        "start": {"t": float(nodes[0].t), "period": float(nodes[0].period),
                  "point": [float(v) for v in nodes[0].x]},
        "end": {"t": float(nodes[-1].t), "period": float(nodes[-1].period),
                "point": [float(v) for v in nodes[-1].x]},
        "max_period": float(max(n.period for n in nodes)),
        "ts": [float(n.t) for n in nodes],
        "periods": [float(n.period) for n in nodes],
        "arclengths": [float(n.arclength) for n in nodes],
        "stats": br.stats,
    }


# -- commands ----------------------------------------------------------------------


def run_find_orbits(scenario: Scenario, options: Optional[dict] = None,
                    cfg: ToolConfig = DEFAULT) -> dict:
    fam, contact = scenario.build()
    cfg = scenario.config(cfg)
    opts = _check_options("find-orbits", options)
    cap, t, hints = _search_settings(scenario, opts, cfg)
    t = fam.t_range[0] if t is None else t
    seeds = _seed_array(scenario, fam, opts, cfg)
    orbits, stats = search_orbits(fam, t, cap, cfg, seeds=seeds, period_hints=hints)
    want_rot = bool(opts.get("rotation", False)) and contact is not None
    recs = [orbit_record(fam, o, cfg, contact=contact, rotation=want_rot)
            for o in orbits]
    return {"t": t, "period_cap": cap, "orbit_count": len(orbits),
            "orbits": recs, "search": stats}


def run_index(scenario: Scenario, options: Optional[dict] = None,
              cfg: ToolConfig = DEFAULT) -> dict:
    fam, contact = scenario.build()
    cfg = scenario.config(cfg)
    opts = _check_options("index", options)
    cap, t, hints = _search_settings(scenario, opts, cfg)
    t = fam.t_range[0] if t is None else t
    seeds = _seed_array(scenario, fam, opts, cfg)
    orbits, stats = search_orbits(fam, t, cap, cfg, seeds=seeds, period_hints=hints)

    def one(orbit: PeriodicOrbit) -> dict:
        rec = orbit_record(fam, orbit, cfg, contact=contact,
                           rotation=contact is not None)
        rec["nondegenerate"] = (rec.get("fp_status") == "ok"
                                and rec.get("fp_method") == "determinant")
        if contact is not None:
            mu_str = rec.get("rotation_index")
            if mu_str is not None:
                mu = Fraction(mu_str)
                rec["cz_index"] = int(mu) if mu.denominator == 1 else None
                if rec.get("fp_index") is not None and rec["cz_index"] is not None:
                    rec["parity_ok"] = parity_consistent(rec["fp_index"], mu,
                                                         fam.manifold.dim)
        return rec

    reports = _pmap(one, orbits, cfg.threads)
    return {"t": t, "period_cap": cap, "orbit_count": len(orbits),
            "fp_indices": [r.get("fp_index") for r in reports],
            "reports": reports, "search": stats}


_AXIS_SEEDS = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])


def _cover_record(fam: VectorFieldFamily, cover, term) -> dict:
    orbit, m = cover
    return {
        "least_period": float(orbit.least_period),
        "m": int(m),
        "total_period": float(m * orbit.least_period),
        "point": [float(v) for v in orbit.x],
        "fp_index": int(term.fp_index),
        "weight": str(term.weight),
        "term": str(term.term),
    }


def run_classify(scenario: Scenario, options: Optional[dict] = None,
                 cfg: ToolConfig = DEFAULT) -> dict:
    fam, contact = scenario.build()
    cfg = scenario.config(cfg)
    opts = _merged(scenario, "classify-type", options)
    caps = sorted(float(c) for c in (opts.get("caps") or []))
    if not caps:
        raise UsageError("classify needs an increasing list of period caps")
    t = float(opts.get("t", fam.t_range[0]))
    hints = scenario.search.get("period_hints")
    use_levels = bool(opts.get("use_levels", False))
    per_cap = []
    sums = []
    if use_levels:
        depth = int(opts.get("levels") or 0)
        need = 1
        while level_cap(need) <= max(caps):
            need += 1
        system = PerturbationSystem(max(depth, need), cfg=cfg)

        def one_cap(cap: float) -> dict:
            lvl = system.level_for_cap(cap)
            orbits, _ = search_orbits(lvl.field, t, cap, cfg, seeds=_AXIS_SEEDS,
                                      period_hints=hints)
            covers = covers_below(orbits, cap, cfg)
            terms = fuller_terms(lvl.field, covers, cfg)
            s = fuller_sum(terms)
            return {"cap": cap, "level": lvl.n, "mu": lvl.mu,
                    "orbit_count": len(orbits),
                    "covers": [_cover_record(lvl.field, c, tm)
                               for c, tm in zip(covers, terms)],
                    "sum": s}

        per_cap = _pmap(one_cap, caps, cfg.threads)
    else:
        seeds = _seed_array(scenario, fam, opts, cfg)
        orbits, _ = search_orbits(fam, t, max(caps), cfg, seeds=seeds,
                                  period_hints=hints)

        def one_cap(cap: float) -> dict:
            covers = covers_below(orbits, cap, cfg)
            terms = fuller_terms(fam, covers, cfg)
            s = fuller_sum(terms)
            return {"cap": cap, "level": None, "mu": None,
                    "orbit_count": sum(1 for o in orbits if o.least_period <= cap),
                    "covers": [_cover_record(fam, c, tm)
                               for c, tm in zip(covers, terms)],
                    "sum": s}

        per_cap = _pmap(one_cap, caps, cfg.threads)
    sums = [pc["sum"] for pc in per_cap]
    for pc in per_cap:
        pc["sum"] = str(pc["sum"])
    cls = classify_partial_sums(caps, sums, cfg)
    return {
        "mode": "levels" if use_levels else "direct",
        "t": t,
        "caps": [float(c) for c in caps],
        "partial_sums": [str(s) for s in cls.partial_sums],
        "batches": [str(b) for b in cls.batches],
        "kind": cls.kind,
        "value": None if cls.value is None else str(cls.value),
        "note": cls.note,
        "per_cap": per_cap,
    }


def _starts_for(scenario: Scenario, command: str,
                options: Optional[dict]) -> tuple[list[dict], dict]:
    base = scenario.command_defaults("continue")
    base.update(scenario.command_defaults(command))
    base.update(_check_options(command, options))
    starts = base.get("starts")
    if not starts:
        raise UsageError(f"{command} needs start points: give defaults.{command}.starts "
                         "in the scenario or a start option")
    return starts, base


def run_continue(scenario: Scenario, options: Optional[dict] = None,
                 cfg: ToolConfig = DEFAULT) -> dict:
    fam, _ = scenario.build()
    cfg = scenario.config(cfg)
    starts, opts = _starts_for(scenario, "continue", options)
    direction = float(opts.get("direction", 1))
    t0 = float(opts.get("t0", fam.t_range[0])) if "t0" in opts else fam.t_range[0]

    def one(st: dict) -> dict:
        x0 = fam.manifold.retract(np.asarray(st["point"], dtype=float))
        orbit = find_orbit(fam, x0, float(st["hint"]), t0, cfg=cfg)
        pm = opts.get("p_max")
        pm = cfg.p_max_rel * orbit.least_period if pm is None else float(pm)
        br = continue_branch(fam, orbit, direction, pm, cfg)
        rec = _branch_record(st.get("name", "branch"), br)
        rec["p_max"] = pm
        return rec

    branches = _pmap(one, starts, cfg.threads)
    return {"t0": t0, "direction": direction,
            "statuses": {b["name"]: b["status"] for b in branches},
            "branches": branches}


def run_sky(scenario: Scenario, options: Optional[dict] = None,
            cfg: ToolConfig = DEFAULT) -> dict:
    fam, _ = scenario.build()
    cfg = scenario.config(cfg)
    starts, opts = _starts_for(scenario, "detect-sky", options)
    direction = float(opts.get("direction", 1))
    t0 = fam.t_range[0]

    def one(st: dict) -> dict:
        x0 = fam.manifold.retract(np.asarray(st["point"], dtype=float))
        orbit = find_orbit(fam, x0, float(st["hint"]), t0, cfg=cfg)
        pm = opts.get("p_max")
        pm = cfg.p_max_rel * orbit.least_period if pm is None else float(pm)
        br = continue_branch(fam, orbit, direction, pm, cfg)
        rec = _branch_record(st.get("name", "branch"), br)
        rec["p_max"] = pm
        rec["sky"] = sky_report(br, pm)
        return rec

    branches = _pmap(one, starts, cfg.threads)
    return {"t0": t0, "direction": direction,
            "flagged": {b["name"]: b["sky"]["flagged"] for b in branches},
            "flagged_any": any(b["sky"]["flagged"] for b in branches),
            "branches": branches}


def run_correspond(scenario: Scenario, options: Optional[dict] = None,
                   cfg: ToolConfig = DEFAULT) -> dict:
    fam, _ = scenario.build()
    cfg = scenario.config(cfg)
    opts = _merged(scenario, "correspond", options)
    k = int(opts.get("k", 3))
    covers = opts.get("covers") or [[0, 1]]
    cap, t, hints = _search_settings(scenario, opts, cfg)
    t = fam.t_range[0] if t is None else t
    seeds = _seed_array(scenario, fam, opts, cfg)
    orbits, _ = search_orbits(fam, t, cap, cfg, seeds=seeds, period_hints=hints)
    if not orbits:
        raise UsageError("no orbits below the period cap to lift", period_cap=cap)

    def one(im) -> dict:
        i, m = int(im[0]), int(im[1])
        if not (0 <= i < len(orbits)):
            raise UsageError("cover references a missing orbit",
                             orbit_index=i, orbit_count=len(orbits))
        rep = correspond(fam, orbits[i], m, k, cfg)
        out = {"orbit_index": i, "least_period": float(orbits[i].least_period)}
        out.update(rep.as_dict())
        return out

    cases = _pmap(one, covers, cfg.threads)
    all_ok = all(c["index_match"] and c["multiplicity_match"] and c["shift"] == 1
                 for c in cases)
    return {"k": k, "t": t, "orbit_count": len(orbits),
            "orbits": [orbit_record(fam, o, cfg) for o in orbits],
            "cases": cases, "all_consistent": all_ok}


def run_growth(scenario: Scenario, options: Optional[dict] = None,
               cfg: ToolConfig = DEFAULT) -> dict:
    fam, contact = scenario.build()
    if contact is None:
        raise NotReebBranch("the growth bound needs a contact scenario")
    cfg = scenario.config(cfg)
    opts = _merged(scenario, "reeb-bound", options)
    if opts.get("ts") is not None and opts.get("periods") is not None:
        ts = [float(v) for v in opts["ts"]]
        periods = [float(v) for v in opts["periods"]]
        branch_rec = None
    else:
        start = opts.get("start")
        hint = opts.get("hint")
        if start is None or hint is None:
            cd = scenario.command_defaults("continue").get("starts") or []
            if not cd:
                raise UsageError("the bound check needs a start point and period "
                                 "hint, or an explicit ts/periods series")
            start = cd[0]["point"] if start is None else start
            hint = cd[0]["hint"] if hint is None else hint
        t0 = fam.t_range[0]
        x0 = fam.manifold.retract(np.asarray(start, dtype=float))
        orbit = find_orbit(fam, x0, float(hint), t0, cfg=cfg)
        br = continue_branch(fam, orbit, +1.0, None, cfg)
        ts, periods = br.ts, br.periods
        branch_rec = _branch_record("growth", br)
    check = growth_bound_check(contact, ts, periods,
                               k_override=opts.get("k_override"), cfg=cfg)
    control = growth_bound_check(contact, ts, periods, k_override=-1.0, cfg=cfg)
    return {"branch": branch_rec,
            "bound_check": check,
            "control": control,
            "control_fails": not control["passes"]}


def run_persys(scenario: Scenario, options: Optional[dict] = None,
               cfg: ToolConfig = DEFAULT) -> dict:
    fam, _ = scenario.build()
    cfg = scenario.config(cfg)
    opts = _merged(scenario, "build-psys", options)
    cap = opts.get("cap")
    if cap is None:
        raise UsageError("persys needs a period cap")
    cap = float(cap)
    depth = int(opts.get("levels", 0))
    need = 1
    while level_cap(need) <= cap:
        need += 1
    system = PerturbationSystem(max(depth, need), cfg=cfg)
    t = float(opts.get("t", 0.0))
    hints = scenario.search.get("period_hints")
    attempts = 0
    while True:
        attempts += 1
        lvl = system.level_for_cap(cap)
        orbits, _ = search_orbits(lvl.field, t, cap, cfg, seeds=_AXIS_SEEDS,
                                  period_hints=hints)
        covers = covers_below(orbits, cap, cfg)
        try:
            cover_records = []
            for orbit, m in covers:
                r = fixed_point_index(lvl.field, orbit, m, cfg)
                rot = orbit_rotation_index(lvl.field, orbit, m, cfg=cfg)
                if rot.mu_int is None:
                    raise DegenerateLift(
                        "cover rotation index is not an integer at this level",
                        mu=str(rot.mu), m=m)
                cover_records.append({
                    "orbit_index": next(i for i, o in enumerate(orbits) if o is orbit),
                    "m": int(m),
                    "least_period": float(orbit.least_period),
                    "total_period": float(m * orbit.least_period),
                    "fp_index": int(r.value),
                    "rotation_index": str(rot.mu),
                    "rotation_float": float(rot.mu),
                    "parity_ok": parity_consistent(r.value, rot.mu, fam.manifold.dim),
                })
            break
        except (DegenerateUnresolved, DegenerateLift):
            system.halve_level(lvl.n)
    terms = fuller_terms(lvl.field, covers, cfg)
    recs = [orbit_record(lvl.field, o, cfg, contact=lvl.contact) for o in orbits]
    return {
        "system": system.describe(),
        "requested_cap": cap,
        "level": {"n": lvl.n, "cap": lvl.cap, "mu": lvl.mu, "halvings": lvl.halvings},
        "attempts": attempts,
        "orbit_count": len(orbits),
        "orbits": recs,
        "covers": cover_records,
        "parity_all": all(c["parity_ok"] for c in cover_records),
        "fuller_sum": str(fuller_sum(terms)),
    }


_ROUND_FIBER_ROTATION = np.array([[0.0, -1.0, 0.0, 0.0],
                                  [1.0, 0.0, 0.0, 0.0],
                                  [0.0, 0.0, 0.0, -1.0],
                                  [0.0, 0.0, 1.0, 0.0]])


def round_fiber_distance(y: np.ndarray, x0: np.ndarray) -> float:
    """Exact chordal distance from y to the round-field orbit circle through x0."""
    c = float(y @ x0)
    s = float(y @ (_ROUND_FIBER_ROTATION @ x0))
    return float(np.sqrt(max(2.0 - 2.0 * np.hypot(c, s), 0.0)))


def run_c0probe(scenario: Scenario, options: Optional[dict] = None,
                cfg: ToolConfig = DEFAULT) -> dict:
    base, _ = scenario.build()
    cfg = scenario.config(cfg)
    opts = _merged(scenario, "c0probe", options)
    deltas = opts.get("deltas")
    if not deltas:
        raise UsageError("c0probe needs a list of forcing sizes")
    point = opts.get("base_point")
    if point is None:
        raise UsageError("c0probe needs a base point on a round orbit")
    hint = float(opts.get("hint", 2 * np.pi))
    x0 = base.manifold.retract(np.asarray(point, dtype=float))

    def one(d: float) -> dict:
        fam_d, _ = FIELD_BUILDERS["near-round-s3"]({"delta": float(d)})
        orbit = find_orbit(fam_d, x0, hint, 0.0, cfg=cfg)
        pts = sample_trajectory(fam_d, orbit.x, orbit.least_period, 0.0, 256, cfg=cfg)
        # reference fiber through the converged loop point: the loop's unknown
        # transverse offset cancels there, so the reading is intrinsic to the loop
        dev = max(round_fiber_distance(p, orbit.x) for p in pts)
        return {"delta": float(d), "least_period": float(orbit.least_period),
                "residual": float(orbit.residual),
                "loop_point": [float(v) for v in orbit.x],
                "deviation": float(dev), "deviation_over_delta": float(dev / d)}

    rows = _pmap(one, [float(d) for d in deltas], cfg.threads)
    rows.sort(key=lambda r: -r["delta"])
    devs = [r["deviation"] for r in rows]
    return {"base_point": [float(v) for v in x0],
            "rows": rows,
            "monotone": all(a > b for a, b in zip(devs, devs[1:]))}


def validate_scenario(scenario: Scenario) -> dict:
    fam, contact = scenario.build()
    prov: dict[str, int] = {}
    for e in scenario.expected:
        prov[e["provenance"]] = prov.get(e["provenance"], 0) + 1
    return {"ok": True, "name": scenario.name, "title": scenario.title,
            "field": fam.name, "manifold": fam.manifold.name,
            "contact": contact is not None,
            "expected_count": len(scenario.expected),
            "provenance_counts": prov}


RUNNERS: dict[str, Callable[[Scenario, Optional[dict], ToolConfig], dict]] = {
    "find-orbits": run_find_orbits,
    "index": run_index,
    "classify-type": run_classify,
    "continue": run_continue,
    "detect-sky": run_sky,
    "correspond": run_correspond,
    "build-psys": run_persys,
    "reeb-bound": run_growth,
    "c0probe": run_c0probe,
}


def make_report(command: str, scenario_name: str, cfg: ToolConfig, result: dict,
                started: float, meta: bool = True) -> dict:
    rep = {"v": 1, "command": command, "scenario": scenario_name,
           "config": cfg.as_dict(), "result": result}
    if meta:
        import scipy
        rep["meta"] = {
            "duration_s": round(time.perf_counter() - started, 6),
            "versions": {"fullerkit": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__},
        }
    return rep


# -- CSV dumps ---------------------------------------------------------------------


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _orbit_rows(orbits: Sequence[dict]) -> tuple[list[str], list[list]]:
    dim = len(orbits[0]["point"]) if orbits else 0
    header = ["t", "least_period", "multiplicity", "residual", "fp_index",
              "fp_status"] + [f"x{i}" for i in range(dim)]
    rows = [[o["t"], o["least_period"], o["multiplicity"], o["residual"],
             o.get("fp_index"), o.get("fp_status")] + list(o["point"])
            for o in orbits]
    return header, rows


def dump_csv(command: str, result: dict, outdir: str) -> list[str]:
    os.makedirs(outdir, exist_ok=True)
    written = []

    def put(name: str, header, rows):
        path = os.path.join(outdir, name)
        _write_csv(path, header, rows)
        written.append(path)

    if command in ("find-orbits", "correspond", "build-psys") and result.get("orbits"):
        put("orbits.csv", *_orbit_rows(result["orbits"]))
    if command == "index" and result.get("reports"):
        put("index.csv",
            ["least_period", "multiplicity", "fp_index", "fp_method",
             "nondegenerate", "cz_index", "parity_ok"],
            [[r["least_period"], r["multiplicity"], r.get("fp_index"),
              r.get("fp_method"), r.get("nondegenerate"), r.get("cz_index"),
              r.get("parity_ok")] for r in result["reports"]])
    if command == "classify-type":
        put("classify.csv", ["cap", "level", "mu", "orbit_count", "sum"],
            [[pc["cap"], pc["level"], pc["mu"], pc["orbit_count"], pc["sum"]]
             for pc in result["per_cap"]])
        put("covers.csv",
            ["cap", "least_period", "m", "total_period", "fp_index", "term"],
            [[pc["cap"], c["least_period"], c["m"], c["total_period"],
              c["fp_index"], c["term"]] for pc in result["per_cap"]
             for c in pc["covers"]])
    if command in ("continue", "detect-sky"):
        for b in result["branches"]:
            put(f"branch_{b['name']}.csv", ["t", "period", "arclength"],
                list(zip(b["ts"], b["periods"], b["arclengths"])))
        if command == "detect-sky":
            put("sky.csv",
                ["name", "flagged", "status", "max_period", "t_star", "exponent"],
                [[b["name"], b["sky"]["flagged"], b["status"], b["max_period"],
                  (b["sky"]["blowup_fit"] or {}).get("t_star"),
                  (b["sky"]["blowup_fit"] or {}).get("exponent")]
                 for b in result["branches"]])
    if command == "correspond":
        put("correspond.csv",
            ["orbit_index", "m", "k", "q", "lifted_period", "index_original",
             "index_lifted", "shift", "lifted_multiplicity", "tuple_separation",
             "collapsed"],
            [[c["orbit_index"], c["m"], c["k"], c["q"], c["lifted_period"],
              c["index_original"], c["index_lifted"], c["shift"],
              c["lifted_multiplicity"], c["tuple_separation"], c["collapsed"]]
             for c in result["cases"]])
    if command == "reeb-bound":
        put("growth.csv",
            ["which", "k_used", "l_path", "bound", "measured_variation",
             "ratio", "passes"],
            [[which, g["k_used"], g["l_path"], g["bound"],
              g["measured_variation"], g["ratio"], g["passes"]]
             for which, g in (("main", result["bound_check"]),
                              ("control", result["control"]))])
        b = result["branch"]
        if b is not None:
            put("branch_growth.csv", ["t", "period", "arclength"],
                list(zip(b["ts"], b["periods"], b["arclengths"])))
    if command == "build-psys":
        put("persys_covers.csv",
            ["orbit_index", "m", "least_period", "total_period", "fp_index",
             "rotation_index", "parity_ok"],
            [[c["orbit_index"], c["m"], c["least_period"], c["total_period"],
              c["fp_index"], c["rotation_index"], c["parity_ok"]]
             for c in result["covers"]])
    if command == "c0probe":
        put("c0.csv", ["delta", "least_period", "deviation", "deviation_over_delta"],
            [[r["delta"], r["least_period"], r["deviation"],
              r["deviation_over_delta"]] for r in result["rows"]])
    return written
