"""Tuple lifts: period, shift, index, and multiplicity bookkeeping."""

from math import gcd

import numpy as np
import pytest

from fullerkit.config import ToolConfig
from fullerkit.correspondence import correspond
from fullerkit.orbits import find_orbit
from fullerkit.scenarios import load_builtin

import oracles

CFG = ToolConfig()


@pytest.fixture(scope="module")
def shear():
    fam, _ = load_builtin("t2-shear").build()
    a = fam.params["a"]
    fast = find_orbit(fam, np.array([0.3, 0.02]), 5.0, 0.0, cfg=CFG)
    slow = find_orbit(fam, np.array([0.3, np.pi - 0.02]), 9.0, 0.0, cfg=CFG)
    return fam, a, fast, slow


@pytest.fixture(scope="module")
def broken():
    fam, _ = load_builtin("hopf-perturbed").build()
    south = find_orbit(fam, np.array([0.0, 0.0, 1.0, 0.0]), 6.0, 0.0, cfg=CFG)
    return fam, south


class TestSimpleLifts:
    def test_repelling_circle_two_tuple(self, shear):
        fam, a, fast, _ = shear
        rep = correspond(fam, fast, 1, 2, CFG)
        assert rep.shift == 1
        assert rep.period_ratio == pytest.approx(1.0, abs=1e-9)
        assert rep.index_original == -1 and rep.index_match
        assert rep.lifted_multiplicity == rep.expected_multiplicity == 1
        assert not rep.collapsed
        assert rep.tuple_separation > 0.1
        assert rep.residual < CFG.lift_residual_tol

    def test_attracting_circle_three_tuple(self, shear):
        fam, a, _, slow = shear
        rep = correspond(fam, slow, 1, 3, CFG)
        assert rep.index_original == 1 and rep.index_match
        assert rep.lifted_period == pytest.approx(oracles.shear_periods(a)[1],
                                                  rel=1e-9)
        assert rep.multiplicity_match

    def test_elliptic_orbit_four_tuple(self, broken):
        fam, south = broken
        rep = correspond(fam, south, 1, 4, CFG)
        assert rep.index_original == 1 and rep.index_match
        assert rep.shift == 1 and rep.multiplicity_match
        assert rep.original_period == pytest.approx(
            oracles.broken_periods(CFG.mu0)[0], abs=1e-8)


class TestCoverLifts:
    @pytest.mark.parametrize("m,k", [(2, 3), (3, 2), (2, 2), (3, 3)])
    def test_cover_multiplicity_rule(self, shear, m, k):
        fam, a, fast, _ = shear
        rep = correspond(fam, fast, m, k, CFG)
        assert rep.expected_multiplicity == m // gcd(m, k)
        assert rep.multiplicity_match
        assert rep.period_ratio == pytest.approx(1.0, abs=1e-9)
        assert rep.original_period == pytest.approx(
            m * oracles.shear_periods(a)[0], rel=1e-9)

    def test_cover_keeps_hyperbolic_index(self, shear):
        # positive multiplier e^(m eps T) > 1 for every cover, so each one is
        # a saddle fixed point of the return map
        fam, a, fast, _ = shear
        eps, T = fam.params["eps"], oracles.shear_periods(a)[0]
        rep = correspond(fam, fast, 2, 3, CFG)
        assert rep.index_original == oracles.hyperbolic_fp_index(
            np.exp(2.0 * eps * T))
        assert rep.index_original == rep.index_lifted == -1

    def test_diagonal_tuple_collapses_but_stays_consistent(self, shear):
        fam, a, fast, _ = shear
        rep = correspond(fam, fast, 2, 2, CFG)
        assert rep.collapsed
        assert rep.tuple_separation < 1e-9
        assert rep.index_match and rep.multiplicity_match and rep.shift == 1
        assert rep.expected_multiplicity == 1

    def test_lifted_period_is_m_times_base(self, shear):
        fam, a, fast, _ = shear
        rep = correspond(fam, fast, 3, 2, CFG)
        assert rep.lifted_period == pytest.approx(
            3.0 * oracles.shear_periods(a)[0], rel=1e-9)
        assert rep.q == pytest.approx(rep.lifted_period / 2.0, rel=1e-12)
