"""Shooting, least-period reduction, deduplication, and cover enumeration."""

import numpy as np
import pytest

from fullerkit.config import ToolConfig
from fullerkit.errors import NoConvergence
from fullerkit.geometry import (VectorFieldFamily, builtin_manifold,
                                hopf_field)
from fullerkit.orbits import (PeriodicOrbit, covers_below,
                              default_period_hints, deduplicate, find_orbit,
                              search_orbits, section_basis)
from fullerkit.scenarios import load_builtin

import oracles

CFG = ToolConfig()
S3 = builtin_manifold("s3")
ROUND = VectorFieldFamily(name="fiber", manifold=S3,
                          func=lambda x, t: hopf_field(x),
                          jac=lambda x, t: oracles.ROUND_J)


class TestFindOrbit:
    def test_round_fiber_from_nearby_seed(self):
        x0 = S3.retract(np.array([1.0, 0.05, -0.02, 0.01]))
        orbit = find_orbit(ROUND, x0, 6.0, 0.0, cfg=CFG)
        assert orbit.least_period == pytest.approx(oracles.TWO_PI, abs=1e-9)
        assert orbit.multiplicity == 1
        assert orbit.residual < CFG.orbit_residual_tol
        assert np.linalg.norm(orbit.x) == pytest.approx(1.0, abs=1e-10)

    def test_double_period_seed_reduces_to_least_period(self):
        x0 = np.array([0.0, 0.0, 1.0, 0.0])
        orbit = find_orbit(ROUND, x0, 2.0 * oracles.TWO_PI, 0.0, cfg=CFG)
        assert orbit.least_period == pytest.approx(oracles.TWO_PI, abs=1e-8)
        assert orbit.multiplicity >= 2

    def test_monodromy_of_found_orbit_is_identity(self):
        orbit = find_orbit(ROUND, np.array([1.0, 0.0, 0.0, 0.0]), 6.3, 0.0, cfg=CFG)
        assert np.allclose(orbit.monodromy, np.eye(4), atol=1e-7)

    def test_samples_lie_on_the_orbit(self):
        orbit = find_orbit(ROUND, np.array([0.6, 0.0, 0.8, 0.0]), 6.3, 0.0, cfg=CFG)
        assert orbit.samples is not None
        for s in orbit.samples:
            assert np.linalg.norm(s) == pytest.approx(1.0, abs=1e-9)
        assert orbit.distance_to(S3, orbit.samples[3]) < 1e-8

    def test_shear_orbits_match_closed_form_periods(self):
        fam, _ = load_builtin("t2-shear").build()
        a = fam.params["a"]
        fast, slow = oracles.shear_periods(a)
        o_fast = find_orbit(fam, np.array([0.3, 0.03]), 5.0, 0.0, cfg=CFG)
        o_slow = find_orbit(fam, np.array([0.3, np.pi - 0.03]), 9.0, 0.0, cfg=CFG)
        assert o_fast.least_period == pytest.approx(fast, abs=1e-9)
        assert o_slow.least_period == pytest.approx(slow, abs=1e-9)
        assert o_fast.x[1] == pytest.approx(0.0, abs=1e-9)
        assert o_slow.x[1] == pytest.approx(np.pi, abs=1e-9)

    def test_hopeless_seed_raises_no_convergence(self):
        fam, _ = load_builtin("t2-shear").build()
        with pytest.raises(NoConvergence):
            find_orbit(fam, np.array([0.3, 1.0]), 0.8, 0.0, cfg=CFG)


class TestSearch:
    def test_shear_search_finds_exactly_two_circles(self):
        fam, _ = load_builtin("t2-shear").build()
        orbits, stats = search_orbits(fam, 0.0, 10.0, cfg=CFG, seeds=25)
        assert len(orbits) == 2
        a = fam.params["a"]
        fast, slow = oracles.shear_periods(a)
        assert orbits[0].least_period == pytest.approx(fast, abs=1e-8)
        assert orbits[1].least_period == pytest.approx(slow, abs=1e-8)
        assert stats["seeds"] == 25
        assert stats["attempts"] >= 25
        assert stats["hits"] == 2

    def test_period_cap_excludes_long_orbit(self):
        fam, _ = load_builtin("t2-shear").build()
        a = fam.params["a"]
        fast, slow = oracles.shear_periods(a)
        cap = 0.5 * (fast + slow)
        orbits, _ = search_orbits(fam, 0.0, cap, cfg=CFG, seeds=25)
        assert len(orbits) == 1
        assert orbits[0].least_period == pytest.approx(fast, abs=1e-8)

    def test_explicit_seed_array_is_used_verbatim(self):
        seeds = np.array([[0.1, 0.02], [0.2, np.pi]])
        fam, _ = load_builtin("t2-shear").build()
        orbits, stats = search_orbits(fam, 0.0, 10.0, cfg=CFG, seeds=seeds)
        assert stats["seeds"] == 2
        assert len(orbits) == 2


class TestDedupAndCovers:
    def test_deduplicate_collapses_same_fiber(self):
        o = find_orbit(ROUND, np.array([1.0, 0.0, 0.0, 0.0]), 6.3, 0.0, cfg=CFG)
        shifted = find_orbit(ROUND, oracles.round_flow(o.x, 1.0), 6.3, 0.0, cfg=CFG)
        other = find_orbit(ROUND, np.array([0.0, 0.0, 1.0, 0.0]), 6.3, 0.0, cfg=CFG)
        kept = deduplicate(ROUND, [o, shifted, other], CFG)
        assert len(kept) == 2

    def test_covers_below_enumerates_multiples(self):
        o = PeriodicOrbit(x=np.array([1.0, 0.0, 0.0, 0.0]),
                          least_period=2.0, t=0.0)
        covers = covers_below([o], 7.0, CFG)
        assert [(c[1]) for c in covers] == [1, 2, 3]
        assert all(c[0] is o for c in covers)

    def test_covers_below_orders_by_total_period(self):
        a = PeriodicOrbit(x=np.array([1.0, 0.0]), least_period=2.0, t=0.0)
        b = PeriodicOrbit(x=np.array([0.0, 1.0]), least_period=3.0, t=0.0)
        covers = covers_below([a, b], 6.5, CFG)
        totals = [m * o.least_period for o, m in covers]
        assert totals == sorted(totals)

    def test_default_period_hints_stay_below_cap(self):
        hints = default_period_hints(10.0, CFG)
        assert hints
        assert all(h <= 10.0 for h in hints)
        assert max(hints) > 5.0


def test_section_basis_orthogonal_to_flow_direction():
    x = np.array([1.0, 0.0, 0.0, 0.0])
    v = hopf_field(x)
    E = section_basis(S3, x, v)
    assert E.shape == (4, 2)
    assert np.allclose(E.T @ E, np.eye(2), atol=1e-12)
    assert np.allclose(E.T @ v, 0.0, atol=1e-12)
    assert np.allclose(E.T @ x, 0.0, atol=1e-12)
