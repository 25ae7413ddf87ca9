"""Branch continuation, blow-up fitting, and the catastrophe verdict."""

import numpy as np
import pytest

from fullerkit.config import ToolConfig
from fullerkit.continuation import (Branch, BranchNode, PERIOD_CAP_HIT,
                                    REACHED_T0, REACHED_T1, blowup_fit,
                                    continue_branch, sky_report)
from fullerkit.errors import ParamOutOfRange
from fullerkit.orbits import PeriodicOrbit, find_orbit
from fullerkit.scenarios import load_builtin

import oracles

CFG = ToolConfig()


class TestBlowupFit:
    @staticmethod
    def pole_data(p0, t_star, q, n=40, t_end=0.93):
        ts = np.linspace(0.0, t_end, n)
        return ts, p0 / (t_star - ts) ** q

    def test_simple_pole_recovered(self):
        ts, ps = self.pole_data(oracles.TWO_PI, 1.0, 1.0)
        fit = blowup_fit(ts, ps)
        assert fit["ok"]
        assert fit["t_star"] == pytest.approx(1.0, abs=1e-4)
        assert fit["exponent"] == pytest.approx(1.0, abs=1e-3)
        assert fit["coefficient"] == pytest.approx(oracles.TWO_PI, rel=1e-3)
        assert fit["rms"] < 1e-6

    def test_second_order_pole_recovered(self):
        ts, ps = self.pole_data(3.0, 1.0, 2.0)
        fit = blowup_fit(ts, ps)
        assert fit["ok"]
        assert fit["exponent"] == pytest.approx(2.0, abs=1e-3)

    def test_shifted_pole_location(self):
        ts, ps = self.pole_data(1.0, 0.7, 1.0, t_end=0.65)
        fit = blowup_fit(ts, ps)
        assert fit["t_star"] == pytest.approx(0.7, abs=1e-4)

    def test_flat_series_has_no_blowup_tail(self):
        ts = np.linspace(0.0, 1.0, 30)
        fit = blowup_fit(ts, np.full(30, 2.0))
        assert not fit["ok"]

    def test_decreasing_series_has_no_blowup_tail(self):
        ts = np.linspace(0.0, 1.0, 30)
        fit = blowup_fit(ts, 5.0 - ts)
        assert not fit["ok"]


def synthetic_branch(ts, ps, status):
    nodes = [BranchNode(x=np.zeros(2), period=float(p), t=float(t),
                        arclength=float(i), residual=1e-12, corrector_iters=2)
             for i, (t, p) in enumerate(zip(ts, ps))]
    return Branch(nodes, status, "synthetic")


class TestSkyReport:
    def test_cap_hit_on_rising_tail_is_flagged(self):
        ts = np.linspace(0.0, 0.95, 50)
        ps = oracles.TWO_PI / (1.0 - ts)
        rep = sky_report(synthetic_branch(ts, ps, PERIOD_CAP_HIT), p_max=100.0)
        assert rep["flagged"]
        assert rep["status"] == PERIOD_CAP_HIT
        assert rep["blowup_fit"]["ok"]
        assert rep["blowup_fit"]["t_star"] == pytest.approx(1.0, abs=0.01)
        assert rep["max_period"] == pytest.approx(ps[-1])
        assert rep["nodes"] == 50

    def test_boundary_reach_is_not_flagged(self):
        ts = np.linspace(0.0, 1.0, 30)
        ps = oracles.TWO_PI * (1.0 + 0.1 * ts)
        rep = sky_report(synthetic_branch(ts, ps, REACHED_T1), p_max=100.0)
        assert not rep["flagged"]
        assert rep["status"] == REACHED_T1
        assert not rep["blowup_fit"]["ok"]
        assert rep["t_last"] == pytest.approx(1.0)


@pytest.fixture(scope="module")
def rescale_branch():
    fam, _ = load_builtin("hopf-rescale").build()
    start = find_orbit(fam, np.array([1.0, 0.0, 0.0, 0.0]), 6.3, 0.0, cfg=CFG)
    return fam, continue_branch(fam, start, +1.0, p_max=100.0, cfg=CFG)


class TestContinueBranch:

    def test_rescale_branch_reaches_t_one(self, rescale_branch):
        _, br = rescale_branch
        assert br.status == REACHED_T1
        assert br.ts[-1] == pytest.approx(1.0, abs=1e-12)

    def test_rescale_branch_tracks_conformal_period_law(self, rescale_branch):
        _, br = rescale_branch
        for t, p in zip(br.ts, br.periods):
            assert p == pytest.approx(oracles.rescale_period(0.1, t), rel=1e-6)
        assert br.periods[-1] == pytest.approx(oracles.rescale_period(0.1, 1.0),
                                               abs=1e-6)

    def test_branch_nodes_carry_converged_residuals(self, rescale_branch):
        _, br = rescale_branch
        assert all(n.residual < 1e-7 for n in br.nodes)
        arcs = np.array([n.arclength for n in br.nodes])
        assert np.all(np.diff(arcs) > 0.0)

    def test_branch_points_stay_on_sphere(self, rescale_branch):
        _, br = rescale_branch
        assert np.allclose(np.linalg.norm(br.points, axis=1), 1.0, atol=1e-9)

    def test_downward_direction_reaches_t_zero(self):
        fam, _ = load_builtin("hopf-rescale").build()
        start = find_orbit(fam, np.array([1.0, 0.0, 0.0, 0.0]), 6.6, 0.5, cfg=CFG)
        br = continue_branch(fam, start, -1.0, p_max=100.0, cfg=CFG)
        assert br.status == REACHED_T0
        assert br.ts[-1] == pytest.approx(0.0, abs=1e-12)
        assert br.periods[-1] == pytest.approx(oracles.TWO_PI, abs=1e-6)

    def test_start_outside_range_rejected(self):
        fam, _ = load_builtin("hopf-rescale").build()
        orbit = PeriodicOrbit(x=np.array([1.0, 0.0, 0.0, 0.0]),
                              least_period=6.3, t=2.0)
        with pytest.raises(ParamOutOfRange):
            continue_branch(fam, orbit, +1.0, cfg=CFG)
