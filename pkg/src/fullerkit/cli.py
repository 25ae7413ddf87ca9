"""Command-line front end.

A thin client over the HTTP service: by default every request is answered
in-process through an ASGI transport, so no server process is needed; pass
--server to talk to a running instance instead.  Run subcommands print a
RunReport as JSON to stdout (or --out) and can dump plot-ready CSV views
with --csv-dir.  Exit codes: 0 success, 2 domain error, 3 usage error.
"""

from __future__ import annotations

import asyncio
import json
import os
from typing import Optional

import click
import httpx

from .config import ToolConfig, resolve_threads
from .errors import DomainError, UsageError
from .ops import dump_csv
from .scenarios import load_scenario_file

_EXIT_BY_STATUS = {400: 3, 422: 2}


def _scenario_ref(value: str):
    """File paths load client-side and travel inline; names go through as-is."""
    if value.endswith(".json") or os.sep in value:
        return load_scenario_file(value).raw
    return value


def _request(obj: dict, method: str, path: str,
             payload: Optional[dict] = None) -> tuple[int, object]:
    server = obj.get("server")
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            r = client.request(method, path, json=payload)
            return r.status_code, r.json()

    async def go() -> tuple[int, object]:
        from .service import create_app
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, timeout=None,
                                     base_url="http://fullerkit") as client:
            r = await client.request(method, path, json=payload)
            return r.status_code, r.json()

    return asyncio.run(go())


def _print_json(body: object, err: bool = False) -> None:
    click.echo(json.dumps(body, indent=2, sort_keys=True), err=err)


def _emit(obj: dict, command: Optional[str], status: int, body: object) -> int:
    if status != 200:
        _print_json(body, err=True)
        return _EXIT_BY_STATUS.get(status, 1)
    text = json.dumps(body, indent=2, sort_keys=True)
    if obj["out"] == "-":
        click.echo(text)
    else:
        with open(obj["out"], "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if command and obj.get("csv_dir") and isinstance(body, dict):
        for path in dump_csv(command, body["result"], obj["csv_dir"]):
            click.echo(f"wrote {path}", err=True)
    return 0


def _run(obj: dict, command: str, scenario: str, options: dict) -> int:
    opts = {k: v for k, v in options.items() if v is not None}
    try:
        payload: dict = {"scenario": _scenario_ref(scenario), "meta": obj["meta"]}
        if opts:
            payload["options"] = opts
        if obj["config"]:
            payload["config"] = obj["config"]
        status, body = _request(obj, "POST", f"/v1/{command}", payload)
    except httpx.HTTPError as exc:
        click.echo(f"transport error: {exc}", err=True)
        return 1
    except UsageError as exc:
        _print_json({"error": exc.payload()}, err=True)
        return 3
    return _emit(obj, command, status, body)


def _csv_floats(ctx, param, value):
    if value is None:
        return None
    try:
        out = [float(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter("expected comma-separated numbers")
    if not out:
        raise click.BadParameter("expected at least one number")
    return out


def _covers_arg(ctx, param, value):
    if value is None:
        return None
    pairs = []
    try:
        for part in value.split(","):
            if not part.strip():
                continue
            i, m = part.split(":")
            pairs.append([int(i), int(m)])
    except ValueError:
        raise click.BadParameter("expected ORBIT:MULT pairs like 0:1,1:2")
    if not pairs:
        raise click.BadParameter("expected at least one ORBIT:MULT pair")
    return pairs


def _start_options(point, hint, extra: Optional[dict] = None) -> dict:
    opts = dict(extra or {})
    if point is not None:
        if hint is None:
            raise click.UsageError("--point needs --hint")
        opts["starts"] = [{"name": "cli", "point": point, "hint": hint}]
    return opts


@click.group()
@click.option("--server", metavar="URL", default=None,
              help="Send requests to a running service instead of in-process.")
@click.option("--config", "config_path", metavar="PATH", default=None,
              help="JSON file of numeric-config overrides.")
@click.option("--threads", type=int, default=None,
              help="Worker threads; falls back to FULLERKIT_THREADS, 0 = serial.")
@click.option("--no-meta", is_flag=True,
              help="Omit timings and versions so output is byte-stable.")
@click.option("--out", default="-", metavar="PATH",
              help="Write the report here instead of stdout.")
@click.option("--csv-dir", default=None, metavar="DIR",
              help="Also dump plot-ready CSV views of the result.")
@click.pass_context
def cli(ctx, server, config_path, threads, no_meta, out, csv_dir):
    """Fuller-index toolkit for flows on compact embedded manifolds."""
    config: dict = {}
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise click.UsageError(f"cannot read config file {config_path}: {exc}")
        if not isinstance(raw, dict):
            raise click.UsageError("config file must contain a JSON object")
        ToolConfig().replace(**raw)
        config.update(raw)
    if threads is not None or os.environ.get("FULLERKIT_THREADS"):
        config["threads"] = resolve_threads(threads)
    ctx.obj = {"server": server, "config": config, "meta": not no_meta,
               "out": out, "csv_dir": csv_dir}


def _scenario_opt(f):
    return click.option("--scenario", required=True, metavar="NAME|PATH",
                        help="Built-in scenario name or scenario JSON file.")(f)


def _t_opt(f):
    return click.option("--t", type=float, default=None,
                        help="Homotopy parameter (default: family start).")(f)


def _cap_opt(f):
    return click.option("--cap", "period_cap", type=float, default=None,
                        help="Period cap (default: scenario search settings).")(f)


def _seeds_opt(f):
    return click.option("--seeds", type=int, default=None,
                        help="Low-discrepancy seed count for the search.")(f)


@cli.command("list-scenarios")
@click.pass_obj
def list_scenarios(obj):
    """List built-in scenarios."""
    try:
        status, body = _request(obj, "GET", "/v1/scenarios")
    except httpx.HTTPError as exc:
        click.echo(f"transport error: {exc}", err=True)
        return 1
    return _emit(obj, None, status, body)


@cli.command("validate-scenario")
@_scenario_opt
@click.pass_obj
def validate_scenario_cmd(obj, scenario):
    """Check a scenario document without running anything."""
    try:
        payload = {"scenario": _scenario_ref(scenario)}
        status, body = _request(obj, "POST", "/v1/scenarios/validate", payload)
    except httpx.HTTPError as exc:
        click.echo(f"transport error: {exc}", err=True)
        return 1
    except UsageError as exc:
        _print_json({"error": exc.payload()}, err=True)
        return 3
    return _emit(obj, None, status, body)


@cli.command("find-orbits")
@_scenario_opt
@_t_opt
@_cap_opt
@_seeds_opt
@click.option("--rotation", is_flag=True, default=False,
              help="Attach rotation indices (contact scenarios only).")
@click.pass_obj
def find_orbits(obj, scenario, t, period_cap, seeds, rotation):
    """Locate the distinct periodic orbits below a period cap."""
    return _run(obj, "find-orbits", scenario,
                {"t": t, "period_cap": period_cap, "seeds": seeds,
                 "rotation": True if rotation else None})


@cli.command("index")
@_scenario_opt
@_t_opt
@_cap_opt
@_seeds_opt
@click.pass_obj
def index_cmd(obj, scenario, t, period_cap, seeds):
    """Fixed-point and rotation index reports for orbits below a cap."""
    return _run(obj, "index", scenario,
                {"t": t, "period_cap": period_cap, "seeds": seeds})


@cli.command("classify-type")
@_scenario_opt
@_t_opt
@click.option("--caps", callback=_csv_floats, default=None, metavar="C1,C2,...",
              help="Increasing period caps for the partial sums.")
@click.option("--use-levels/--direct", "use_levels", default=None,
              help="Sum over perturbation-system levels or over raw covers.")
@click.option("--levels", type=int, default=None,
              help="Perturbation-system depth when using levels.")
@click.pass_obj
def classify_type(obj, scenario, t, caps, use_levels, levels):
    """Classify the capped index sums as finite, infinite, or indeterminate."""
    return _run(obj, "classify-type", scenario,
                {"t": t, "caps": caps, "use_levels": use_levels,
                 "levels": levels})


@cli.command("continue")
@_scenario_opt
@click.option("--direction", type=float, default=None,
              help="+1 continues toward t=1, -1 toward t=0.")
@click.option("--pmax", "p_max", type=float, default=None,
              help="Stop the branch when the period exceeds this.")
@click.option("--point", callback=_csv_floats, default=None, metavar="X1,X2,...",
              help="Start point override (needs --hint).")
@click.option("--hint", type=float, default=None,
              help="Period hint for the start orbit.")
@click.pass_obj
def continue_cmd(obj, scenario, direction, p_max, point, hint):
    """Continue periodic-orbit branches across the homotopy."""
    opts = _start_options(point, hint,
                          {"direction": direction, "p_max": p_max})
    return _run(obj, "continue", scenario, opts)


@cli.command("detect-sky")
@_scenario_opt
@click.option("--direction", type=float, default=None,
              help="+1 continues toward t=1, -1 toward t=0.")
@click.option("--pmax", "p_max", type=float, default=None,
              help="Period ceiling for the blow-up test.")
@click.option("--point", callback=_csv_floats, default=None, metavar="X1,X2,...",
              help="Start point override (needs --hint).")
@click.option("--hint", type=float, default=None,
              help="Period hint for the start orbit.")
@click.pass_obj
def detect_sky(obj, scenario, direction, p_max, point, hint):
    """Continue branches and flag period blow-up before t=1."""
    opts = _start_options(point, hint,
                          {"direction": direction, "p_max": p_max})
    return _run(obj, "detect-sky", scenario, opts)


@cli.command("correspond")
@_scenario_opt
@_t_opt
@_cap_opt
@_seeds_opt
@click.option("--k", type=int, default=None,
              help="Number of configuration points in the lift.")
@click.option("--covers", callback=_covers_arg, default=None,
              metavar="I:M,I:M,...",
              help="Orbit-index:multiplicity pairs to lift.")
@click.pass_obj
def correspond_cmd(obj, scenario, t, period_cap, seeds, k, covers):
    """Lift orbit covers to the cyclic configuration space and compare indices."""
    return _run(obj, "correspond", scenario,
                {"t": t, "period_cap": period_cap, "seeds": seeds, "k": k,
                 "covers": covers})


@cli.command("build-psys")
@_scenario_opt
@_t_opt
@click.option("--levels", type=int, default=None,
              help="Perturbation-system depth to build.")
@click.option("--cap", type=float, default=None,
              help="Period cap the system must cover.")
@click.pass_obj
def build_psys(obj, scenario, t, levels, cap):
    """Build a perturbation system and sum indices below a cap."""
    return _run(obj, "build-psys", scenario,
                {"t": t, "levels": levels, "cap": cap})


def _branch_series(path: str) -> tuple[list, list]:
    """Pull (ts, periods) out of a continue/detect-sky report file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read branch file {path}: {exc}")
    branches = doc.get("result", doc).get("branches")
    if not branches or "ts" not in branches[0]:
        raise click.UsageError("branch file has no branches with a ts series")
    return branches[0]["ts"], branches[0]["periods"]


@cli.command("reeb-bound")
@_scenario_opt
@click.option("--branch-file", default=None, metavar="PATH",
              help="Reuse the first branch of a saved continue/detect-sky report.")
@click.option("--k-override", type=float, default=None,
              help="Replace the sampled conformal-factor constant.")
@click.option("--point", callback=_csv_floats, default=None, metavar="X1,X2,...",
              help="Start point override (needs --hint).")
@click.option("--hint", type=float, default=None,
              help="Period hint for the start orbit.")
@click.pass_obj
def reeb_bound(obj, scenario, branch_file, k_override, point, hint):
    """Check measured period variation against the a-priori exponential bound."""
    opts = {"k_override": k_override}
    if branch_file is not None:
        opts["ts"], opts["periods"] = _branch_series(branch_file)
    if point is not None:
        if hint is None:
            raise click.UsageError("--point needs --hint")
        opts["start"] = point
        opts["hint"] = hint
    elif hint is not None:
        opts["hint"] = hint
    return _run(obj, "reeb-bound", scenario, opts)


@cli.command("c0probe")
@_scenario_opt
@click.option("--deltas", callback=_csv_floats, default=None, metavar="D1,D2,...",
              help="Forcing sizes for the deviation ladder.")
@click.option("--point", "base_point", callback=_csv_floats, default=None,
              metavar="X1,X2,...", help="Base point on a reference orbit.")
@click.option("--hint", type=float, default=None,
              help="Period hint for the perturbed orbits.")
@click.pass_obj
def c0probe(obj, scenario, deltas, base_point, hint):
    """Measure orbit drift under small uniform perturbations of the field."""
    return _run(obj, "c0probe", scenario,
                {"deltas": deltas, "base_point": base_point, "hint": hint})


def main(argv: Optional[list] = None) -> int:
    try:
        rv = cli.main(args=argv, standalone_mode=False)
        return rv if isinstance(rv, int) else 0
    except click.ClickException as exc:
        exc.show()
        return 3
    except click.Abort:
        click.echo("aborted", err=True)
        return 130
    except UsageError as exc:
        _print_json({"error": exc.payload()}, err=True)
        return 3
    except DomainError as exc:
        _print_json({"error": exc.payload()}, err=True)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
