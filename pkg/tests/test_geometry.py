"""Manifold primitives, field evaluation checks, and the round-fiber frame."""

import numpy as np
import pytest

from fullerkit.config import ToolConfig
from fullerkit.errors import OffManifold, ParamOutOfRange
from fullerkit.geometry import (ContactFormFamily, VectorFieldFamily,
                                builtin_manifold, check_nonsingular,
                                contact_frame, eval_field, hopf_field,
                                hopf_map)

import oracles

CFG = ToolConfig()
S3 = builtin_manifold("s3")
T2 = builtin_manifold("t2")
ST = builtin_manifold("solid-torus")
RNG = np.random.default_rng(7)


def random_s3(n=8):
    pts = RNG.normal(size=(n, 4))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


class TestS3:
    def test_retract_normalizes(self):
        x = np.array([3.0, 0.0, 4.0, 0.0])
        y = S3.retract(x)
        assert np.linalg.norm(y) == pytest.approx(1.0, abs=1e-14)
        assert np.allclose(y, x / 5.0)

    def test_check_point_rejects_off_sphere(self):
        with pytest.raises(OffManifold):
            S3.check_point(np.array([1.0, 0.0, 0.0, 1e-3]))

    def test_projector_is_tangent_projection(self):
        for x in random_s3():
            P = S3.projector(x)
            assert np.allclose(P, P.T, atol=1e-13)
            assert np.allclose(P @ P, P, atol=1e-13)
            assert np.allclose(P @ x, 0.0, atol=1e-13)
            assert np.linalg.matrix_rank(P) == 3

    def test_tangent_basis_orthonormal(self):
        for x in random_s3():
            E = S3.tangent_basis(x)
            assert E.shape == (4, 3)
            assert np.allclose(E.T @ E, np.eye(3), atol=1e-12)
            assert np.allclose(E.T @ x, 0.0, atol=1e-12)

    def test_sample_net_on_sphere(self):
        pts = S3.sample_net(50)
        assert pts.shape == (50, 4)
        assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)

    def test_distance_matches_chord(self):
        a = np.array([1.0, 0.0, 0.0, 0.0])
        b = np.array([0.0, 1.0, 0.0, 0.0])
        assert S3.distance(a, b) == pytest.approx(np.sqrt(2.0), abs=1e-14)

    def test_self_check_passes(self):
        rep = S3.self_check(count=32, cfg=CFG)
        assert rep["ok"]


class TestT2:
    def test_wrap_into_fundamental_domain(self):
        x = T2.wrap(np.array([7.0, -1.0]))
        assert np.all(x >= 0.0) and np.all(x < oracles.TWO_PI)
        assert x[0] == pytest.approx(7.0 - oracles.TWO_PI, abs=1e-14)
        assert x[1] == pytest.approx(oracles.TWO_PI - 1.0, abs=1e-14)

    def test_difference_takes_shortest_representative(self):
        a = np.array([0.1, 0.0])
        b = np.array([oracles.TWO_PI - 0.1, 0.0])
        d = T2.difference(a, b)
        assert d[0] == pytest.approx(0.2, abs=1e-12)

    def test_distance_symmetric_under_wrap(self):
        a = np.array([0.05, 3.0])
        b = np.array([6.2, 3.1])
        assert T2.distance(a, b) == pytest.approx(T2.distance(b, a), abs=1e-14)
        assert T2.distance(a, a + oracles.TWO_PI) == pytest.approx(0.0, abs=1e-12)

    def test_pairwise_distance_matches_scalar(self):
        A = RNG.uniform(0.0, oracles.TWO_PI, size=(4, 2))
        B = RNG.uniform(0.0, oracles.TWO_PI, size=(3, 2))
        D = T2.pairwise_distance(A, B)
        assert D.shape == (4, 3)
        for i in range(4):
            for j in range(3):
                assert D[i, j] == pytest.approx(T2.distance(A[i], B[j]), abs=1e-12)

    def test_self_check_passes(self):
        assert T2.self_check(count=32, cfg=CFG)["ok"]


class TestSolidTorus:
    def test_region_membership(self):
        ST.check_point(np.array([0.0, 0.0, 1.0]))
        ST.check_point(np.array([0.5, 0.3, 4.0]))
        with pytest.raises(OffManifold):
            ST.check_point(np.array([1.2, 0.0, 0.0]))

    def test_wrap_only_touches_angle_axis(self):
        x = ST.wrap(np.array([0.5, -0.25, 7.0]))
        assert x[0] == 0.5 and x[1] == -0.25
        assert x[2] == pytest.approx(7.0 - oracles.TWO_PI, abs=1e-14)

    def test_sample_net_inside_region(self):
        pts = ST.sample_net(40)
        assert pts.shape == (40, 3)
        assert np.all(np.hypot(pts[:, 0], pts[:, 1]) <= 1.0 + 1e-12)

    def test_self_check_passes(self):
        assert ST.self_check(count=32, cfg=CFG)["ok"]


def test_builtin_manifold_unknown_name():
    with pytest.raises(ParamOutOfRange):
        builtin_manifold("klein-bottle")


class TestFields:
    def test_hopf_field_matches_rotation_generator(self):
        for x in random_s3():
            assert np.allclose(hopf_field(x), oracles.ROUND_J @ x, atol=1e-14)

    def test_eval_field_checks_tangency(self):
        fam = VectorFieldFamily(name="radial", manifold=S3,
                                func=lambda x, t: x.copy())
        with pytest.raises(OffManifold):
            eval_field(fam, np.array([1.0, 0.0, 0.0, 0.0]), 0.0, cfg=CFG)

    def test_eval_field_rejects_t_outside_range(self):
        fam = VectorFieldFamily(name="fiber", manifold=S3,
                                func=lambda x, t: hopf_field(x))
        with pytest.raises(ParamOutOfRange):
            eval_field(fam, np.array([1.0, 0.0, 0.0, 0.0]), 2.0, cfg=CFG)

    def test_fd_jacobian_matches_linear_field(self):
        fam = VectorFieldFamily(name="fiber", manifold=S3,
                                func=lambda x, t: hopf_field(x))
        x = random_s3(1)[0]
        J = fam.jacobian(x, 0.0)
        # tangentially projected FD of a linear field reproduces it up to the
        # curvature correction, which the retraction keeps at step scale
        assert np.allclose(S3.projector(x) @ (J - oracles.ROUND_J) @ S3.projector(x),
                           0.0, atol=1e-6)

    def test_check_nonsingular_accepts_round_field(self):
        fam = VectorFieldFamily(name="fiber", manifold=S3,
                                func=lambda x, t: hopf_field(x))
        rep = check_nonsingular(fam, ts=[0.0, 0.5, 1.0], net=64, cfg=CFG)
        assert rep["nonsingular"]
        assert rep["min_norm"] > 0.9


class TestFibration:
    def test_hopf_map_lands_on_unit_sphere(self):
        for x in random_s3():
            assert np.linalg.norm(hopf_map(x)) == pytest.approx(1.0, abs=1e-12)

    def test_hopf_map_constant_along_fiber(self):
        x = random_s3(1)[0]
        base = hopf_map(x)
        for s in np.linspace(0.0, oracles.TWO_PI, 7):
            assert np.allclose(hopf_map(oracles.round_flow(x, s)), base, atol=1e-12)

    def test_contact_frame_orthonormal_and_transverse(self):
        for x in random_s3():
            e1, e2 = contact_frame(x)
            v = hopf_field(x)
            for e in (e1, e2):
                assert np.linalg.norm(e) == pytest.approx(1.0, abs=1e-10)
                assert abs(e @ x) < 1e-10
                assert abs(e @ v) < 1e-10
            assert abs(e1 @ e2) < 1e-10


def test_contact_family_round_form_pairing():
    from fullerkit.reeb import round_contact
    contact = round_contact()
    assert isinstance(contact, ContactFormFamily)
    for x in random_s3():
        v = contact.reeb.func(x, 0.0)
        assert contact.pairing(x, 0.0, v) == pytest.approx(1.0, abs=1e-12)
