"""Fixed point index, rotation index of symplectic paths, and Fuller sums.

Synthetic fields on the solid torus with a core circle of known return map
pin every code path: determinant sign, winding fallback on degenerate
returns, and the unresolved-degenerate failure.
"""

from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm

from fullerkit.config import ToolConfig
from fullerkit.errors import DegenerateUnresolved, ParamOutOfRange
from fullerkit.geometry import VectorFieldFamily, builtin_manifold
from fullerkit.index import (Classification, angle_lift, classify_partial_sums,
                             fixed_point_index, fuller_sum, fuller_terms,
                             parity_consistent, restricted_return_map,
                             rotation_index_of_path)
from fullerkit.orbits import PeriodicOrbit

import oracles

CFG = ToolConfig()
ST = builtin_manifold("solid-torus")
TWO_PI = oracles.TWO_PI


def disc_family(name, disc_func, disc_jac=None):
    """Unit angular drift along the core circle, given dynamics on the disc."""

    def func(x, t):
        return np.array([*disc_func(x[:2]), 1.0])

    jac = None
    if disc_jac is not None:
        def jac(x, t):
            J = np.zeros((3, 3))
            J[:2, :2] = disc_jac(x[:2])
            return J

    return VectorFieldFamily(name=name, manifold=ST, func=func, jac=jac)


def core_orbit(disc_monodromy):
    V = np.eye(3)
    V[:2, :2] = disc_monodromy
    return PeriodicOrbit(x=np.zeros(3), least_period=TWO_PI, t=0.0,
                         monodromy=V, field_name="synthetic")


def linear_case(A):
    fam = disc_family("linear-core", lambda w: A @ w, lambda w: A)
    return fam, core_orbit(expm(TWO_PI * A))


class TestDeterminantIndex:
    def test_attracting_core_has_index_plus_one(self):
        fam, orbit = linear_case(-0.1 * np.eye(2))
        r = fixed_point_index(fam, orbit, 1, CFG)
        assert (r.value, r.method) == (1, "determinant")
        assert r.det > 0.0 and not r.degenerate_return

    def test_saddle_core_has_index_minus_one(self):
        a = np.log(2.0) / TWO_PI
        fam, orbit = linear_case(np.diag([a, -a]))
        r = fixed_point_index(fam, orbit, 1, CFG)
        assert (r.value, r.method) == (-1, "determinant")
        assert r.det < 0.0
        assert r.value == oracles.hyperbolic_fp_index(2.0)

    def test_elliptic_core_has_index_plus_one(self):
        fam, orbit = linear_case(0.5 * np.array([[0.0, -1.0], [1.0, 0.0]]))
        r = fixed_point_index(fam, orbit, 1, CFG)
        assert (r.value, r.method) == (1, "determinant")
        assert r.value == oracles.elliptic_fp_index(np.pi)

    def test_saddle_covers_keep_the_sign(self):
        a = np.log(2.0) / TWO_PI
        fam, orbit = linear_case(np.diag([a, -a]))
        for m in (1, 2, 3):
            r = fixed_point_index(fam, orbit, m, CFG)
            assert r.value == oracles.hyperbolic_fp_index(2.0 ** m) == -1

    def test_restricted_return_map_recovers_disc_monodromy(self):
        A = np.array([[0.05, 0.2], [-0.3, -0.05]])
        fam, orbit = linear_case(A)
        M, E = restricted_return_map(fam, orbit, 1, CFG)
        W = expm(TWO_PI * A)
        assert np.allclose(E.T[:, :2] @ W @ E[:2, :], M, atol=1e-12)
        assert np.linalg.det(M) == pytest.approx(np.linalg.det(W), abs=1e-12)
        assert np.trace(M) == pytest.approx(np.trace(W), abs=1e-12)


class TestWindingFallback:
    def test_slow_rotation_resolved_by_winding(self):
        eps = 1e-4
        fam, orbit = linear_case(eps * np.array([[0.0, -1.0], [1.0, 0.0]]))
        r = fixed_point_index(fam, orbit, 1, CFG.replace(degree_ring_radius=0.01))
        assert (r.value, r.method) == (1, "winding")
        assert r.degenerate_return
        assert abs(r.det) <= CFG.degenerate_det_tol
        assert r.windings == pytest.approx(1.0, abs=0.05)

    def test_cubic_contraction_winds_plus_one(self):
        fam = disc_family("cubic-sink", lambda w: -w * float(w @ w))
        r = fixed_point_index(fam, core_orbit(np.eye(2)), 1,
                              CFG.replace(degree_ring_radius=0.02))
        assert (r.value, r.method) == (1, "winding")

    def test_mixed_cubic_winds_minus_one(self):
        fam = disc_family("cubic-saddle",
                          lambda w: np.array([-w[0] ** 3, w[1] ** 3]))
        r = fixed_point_index(fam, core_orbit(np.eye(2)), 1,
                              CFG.replace(degree_ring_radius=0.02))
        assert (r.value, r.method) == (-1, "winding")
        assert r.windings == pytest.approx(-1.0, abs=0.05)

    def test_pure_drift_is_unresolvable(self):
        fam = disc_family("pure-drift", lambda w: np.zeros(2))
        with pytest.raises(DegenerateUnresolved):
            fixed_point_index(fam, core_orbit(np.eye(2)), 1, CFG)


class TestRotationIndex:
    @staticmethod
    def rotation_path(theta_end, n=64):
        return [oracles_rotation(a) for a in np.linspace(0.0, theta_end, n)]

    def test_elliptic_endpoint_below_full_turn(self):
        res = rotation_index_of_path(self.rotation_path(1.5 * np.pi), CFG)
        assert res.mu == Fraction(1)
        assert res.endpoint == "elliptic" and not res.degenerate

    def test_elliptic_endpoint_past_full_turn(self):
        res = rotation_index_of_path(self.rotation_path(2.5 * np.pi), CFG)
        assert res.mu == Fraction(3)
        assert res.phi_end == pytest.approx(2.5 * np.pi, abs=1e-9)

    def test_full_loop_regularizes_to_even_index(self):
        res = rotation_index_of_path(self.rotation_path(2.0 * np.pi), CFG)
        assert res.degenerate and res.endpoint == "degenerate"
        assert res.mu == Fraction(2)

    def test_identity_path_regularizes_to_zero(self):
        res = rotation_index_of_path([np.eye(2)] * 32, CFG)
        assert res.degenerate
        assert res.mu == Fraction(0)

    def test_hyperbolic_endpoint_rounds_half_turns(self):
        path = self.rotation_path(np.pi)
        stretch = [path[-1] @ np.diag([np.exp(u), np.exp(-u)])
                   for u in np.linspace(0.0, 1.0, 33)[1:]]
        res = rotation_index_of_path(path + stretch, CFG)
        assert res.endpoint == "hyperbolic"
        assert res.mu == Fraction(1)
        assert res.mu_int == 1

    def test_angle_lift_is_continuous_and_additive(self):
        phis = np.linspace(0.0, 4.0 * np.pi, 257)
        lift = angle_lift([oracles_rotation(a) for a in phis])
        assert np.allclose(lift, phis, atol=1e-9)


def oracles_rotation(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s], [s, c]])


class TestParity:
    @pytest.mark.parametrize("fp,mu,ok", [
        (1, 3, True), (1, 5, True), (-1, 4, True), (-1, 2, True),
        (1, 4, False), (-1, 3, False),
    ])
    def test_sign_rule_on_three_manifolds(self, fp, mu, ok):
        assert parity_consistent(fp, Fraction(mu), 3) is ok
        assert oracles.parity(fp, mu) is ok

    def test_rule_refuses_fractional_or_wrong_dimension(self):
        assert not parity_consistent(1, Fraction(7, 2), 3)
        assert not parity_consistent(1, Fraction(3), 2)


class TestFullerSums:
    def saddle(self):
        a = np.log(2.0) / TWO_PI
        return linear_case(np.diag([a, -a]))

    def test_terms_carry_exact_rational_weights(self):
        fam, orbit = self.saddle()
        terms = fuller_terms(fam, [(orbit, 1), (orbit, 2)], CFG)
        assert [t.weight for t in terms] == [Fraction(1), Fraction(1, 2)]
        assert [t.fp_index for t in terms] == [-1, -1]
        assert [t.term for t in terms] == [Fraction(-1), Fraction(-1, 2)]

    def test_sum_is_exact_and_order_independent(self):
        fam, orbit = self.saddle()
        terms = fuller_terms(fam, [(orbit, m) for m in (1, 2, 3)], CFG)
        total = fuller_sum(terms)
        assert total == Fraction(-11, 6)
        assert fuller_sum(list(reversed(terms))) == total
        assert fuller_sum([terms[1], terms[2], terms[0]]) == total
        assert total == oracles.fuller_sum_oracle([(-1, 1), (-1, 2), (-1, 3)])


class TestClassification:
    CAPS = [7.0, 13.0, 19.0]

    def test_growing_sums_are_plus_infinity(self):
        c = classify_partial_sums(self.CAPS, [Fraction(2), Fraction(3),
                                              Fraction(11, 3)], CFG)
        assert isinstance(c, Classification)
        assert c.kind == "PlusInfinity"
        assert c.batches == [Fraction(2), Fraction(1), Fraction(2, 3)]

    def test_shrinking_sums_are_minus_infinity(self):
        c = classify_partial_sums(self.CAPS, [Fraction(-1), Fraction(-3, 2),
                                              Fraction(-11, 6)], CFG)
        assert c.kind == "MinusInfinity"

    def test_stabilized_sums_are_finite_with_value(self):
        c = classify_partial_sums(self.CAPS, [Fraction(1)] * 3, CFG)
        assert c.kind == "Finite"
        assert c.value == Fraction(1)

    def test_mixed_signs_are_indeterminate(self):
        c = classify_partial_sums(self.CAPS, [Fraction(1), Fraction(0),
                                              Fraction(1)], CFG)
        assert c.kind == "Indeterminate"
        assert c.value is None

    def test_caps_must_increase(self):
        with pytest.raises(ParamOutOfRange):
            classify_partial_sums([7.0, 7.0, 19.0], [Fraction(1)] * 3, CFG)

    def test_needs_enough_caps(self):
        with pytest.raises(ParamOutOfRange):
            classify_partial_sums([7.0, 13.0], [Fraction(1)] * 2, CFG)
