"""Shared fixtures: a memoizing command runner and the acceptance summary.

Expensive command runs (orbit searches, continuations) are cached for the
whole session so unit tests and acceptance tests can share results.  Tests
marked ``criterion(<id>, <text>)`` feed one PASS/FAIL line per criterion
into the terminal summary.
"""

from __future__ import annotations

import json
import time

import pytest

from fullerkit.config import ToolConfig
from fullerkit.ops import RUNNERS
from fullerkit.scenarios import load_builtin, resolve_scenario


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(cid, text): ties a test to an acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    cid, text = mark.args
    store = item.config._criteria
    prev_text, prev_ok = store.get(cid, (text, True))
    ok = prev_ok
    if rep.when == "call":
        ok = prev_ok and rep.passed
    elif rep.failed or rep.skipped:
        ok = False
    store[cid] = (prev_text, ok)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_criteria", None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(store):
        text, ok = store[cid]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{cid} {verdict}  {text}")


def _key(command, scenario, options, overrides):
    sc = scenario if isinstance(scenario, str) else json.dumps(scenario,
                                                               sort_keys=True)
    return (command, sc, json.dumps(options, sort_keys=True),
            json.dumps(overrides, sort_keys=True))


@pytest.fixture(scope="session")
def run():
    """run(command, scenario, options=None, **cfg) -> (result, seconds)."""
    cache = {}

    def _run(command, scenario, options=None, **overrides):
        key = _key(command, scenario, options, overrides)
        if key not in cache:
            sc = resolve_scenario(scenario)
            cfg = ToolConfig().replace(**overrides) if overrides else ToolConfig()
            t0 = time.perf_counter()
            result = RUNNERS[command](sc, options, cfg)
            cache[key] = (result, time.perf_counter() - t0)
        return cache[key]

    return _run


@pytest.fixture(scope="session")
def expect():
    """expect(scenario)[quantity] -> dict with value and optional tol."""
    cache = {}

    def _expect(name):
        if name not in cache:
            sc = load_builtin(name)
            cache[name] = {e["quantity"]: e for e in sc.expected}
        return cache[name]

    return _expect
