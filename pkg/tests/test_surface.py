import numpy as np
import pytest

from torsionkit import library
from torsionkit.exceptions import (CurveNotOnSurface, SeamMismatch, ValidationError,
                                   WNotParallel)
from torsionkit.frames import NormalField, parallel_frame_in_H, principal_normal, rotate_normal
from torsionkit.manifold import euclidean, sphere
from torsionkit.surface import (construct_ribbon, cylinder, ellipsoid, from_spec,
                                hyperplane, is_convex_along, is_line_of_curvature,
                                is_well_positioned, round_sphere, torus,
                                trace_line_of_curvature)
from torsionkit.torsion import total_geodesic_torsion

from conftest import unit_speed


def cylinder_helix(n=512, a=1.0, b=0.5):
    R3 = euclidean(3)
    c = unit_speed(R3, lambda t: np.c_[a * np.cos(t), a * np.sin(t), b * t], 0.0, 2 * np.pi, n)
    return R3, c


def equator(n=256):
    return library.circle(1.0, n=n)


@pytest.fixture(scope="module")
def ellipsoid_line():
    R3 = euclidean(3)
    S = ellipsoid(R3, (2.0, 1.5, 1.0)).flipped()
    x0 = S.param(np.array([1.1, 0.5]))
    return R3, S, trace_line_of_curvature(S, x0, family=0, n_steps=1024)


class TestNormals:
    def test_sphere_equator_is_radial(self):
        c = equator()
        N = round_sphere(euclidean(3)).normal_along(c).values
        assert np.abs(N - c.points).max() <= 1e-12

    def test_cylinder_helix(self):
        R3, c = cylinder_helix()
        N = cylinder(R3).normal_along(c).values
        want = c.points.copy()
        want[:, 2] = 0.0
        assert np.abs(N - want).max() <= 1e-8

    def test_off_surface_rejected(self):
        c = library.circle(1.2, n=64)
        with pytest.raises(CurveNotOnSurface) as info:
            round_sphere(euclidean(3)).normal_along(c)
        # first-order distance |F| / |grad F| with F = |x|^2 - 1
        assert info.value.deviation == pytest.approx(0.44 / 2.4, rel=1e-12)

    def test_flip_reverses_normal_and_form(self):
        c = equator()
        S = round_sphere(euclidean(3))
        a, b = S.shape_along(c), S.flipped().shape_along(c)
        assert np.allclose(S.flipped().normal_along(c).values, -S.normal_along(c).values)
        assert np.allclose(a.second_fundamental_form, -b.second_fundamental_form)

    def test_geodesic_sphere_in_curved_chart(self):
        M = sphere(3)
        S = round_sphere(M, 0.5)
        c = unit_speed(M, lambda t: 0.5 * np.c_[np.cos(t) * np.cos(0.3 * np.sin(3 * t)),
                                                np.sin(t) * np.cos(0.3 * np.sin(3 * t)),
                                                np.sin(0.3 * np.sin(3 * t))],
                       0.0, 2 * np.pi, 1024, closed=True)
        pv = S.shape_along(c).principal_values
        # geodesic spheres are totally umbilic
        assert np.ptp(pv) <= 1e-8
        assert is_line_of_curvature(M, c, S).verdict

    def test_specs(self):
        R3 = euclidean(3)
        assert from_spec(R3, {"kind": "torus", "R": 3.0, "r": 1.0}).name
        with pytest.raises(ValidationError):
            from_spec(R3, {"kind": "klein"})
        with pytest.raises(ValidationError):
            from_spec(R3, {"kind": "ellipsoid", "semiaxes": [1, 2]})


class TestLineOfCurvature:
    def test_every_curve_on_a_sphere(self):
        R3 = euclidean(3)

        def f(t):
            phi = np.pi / 3 + 0.1 * np.sin(3 * t) + 0.05 * np.cos(5 * t)
            return np.c_[np.sin(phi) * np.cos(t), np.sin(phi) * np.sin(t), np.cos(phi)]

        c = unit_speed(R3, f, 0.0, 2 * np.pi, 1024, closed=True)
        rep = is_line_of_curvature(R3, c, round_sphere(R3))
        assert rep.verdict and rep.residual <= 1e-6

    def test_cylinder_helix_is_not(self):
        R3, c = cylinder_helix()
        rep = is_line_of_curvature(R3, c, cylinder(R3))
        assert not rep.verdict
        assert rep.residual == pytest.approx(0.4, abs=1e-6)

    def test_traced_ellipsoid_line(self, ellipsoid_line):
        R3, S, c = ellipsoid_line
        assert is_line_of_curvature(R3, c, S, tol=1e-4).verdict

    @pytest.mark.parametrize("family", [0, 1])
    def test_torus_traces_are_circles(self, family):
        R3 = euclidean(3)
        S = torus(R3)
        c = trace_line_of_curvature(S, S.param(np.array([0.7, 0.3])), family=family, n_steps=1024)
        meridian = 2 * np.pi * 0.5
        rho = np.hypot(c.points[0, 0], c.points[0, 1])
        parallel = 2 * np.pi * rho
        assert min(abs(c.length - meridian), abs(c.length - parallel)) <= 1e-6
        assert is_line_of_curvature(R3, c, S).verdict

    def test_orientation_does_not_change_verdict(self, ellipsoid_line):
        R3, S, c = ellipsoid_line
        assert is_line_of_curvature(R3, c, S.flipped()).verdict


class TestConvexity:
    def test_ellipsoid_with_inward_normal(self, ellipsoid_line):
        _, S, c = ellipsoid_line
        assert is_convex_along(S, c)
        assert not is_convex_along(S.flipped(), c)

    def test_cylinder_is_not_strictly_convex(self):
        R3, c = cylinder_helix()
        assert not is_convex_along(cylinder(R3).flipped(), c)

    def test_torus_inner_region(self):
        R3 = euclidean(3)
        S = torus(R3)
        # inner equator: phi = pi on the tube
        c = library.circle(1.5, n=256)
        assert not is_convex_along(S, c)
        assert not is_convex_along(S.flipped(), c)


class TestWellPositioned:
    def test_three_dimensional_always(self):
        R3, c = cylinder_helix()
        ok, res = is_well_positioned(R3, c, cylinder(R3))
        assert ok and res <= 1e-10

    def test_circle_in_hyperplane_of_R4(self, R4):
        c = library.circle(1.0, n=256, dim=4)
        S = hyperplane(R4, np.array([0.0, 0.0, 0.0, 1.0]))
        ref = np.tile([0.0, 0.0, 1.0, 0.0], (len(c.grid), 1))
        ok, res = is_well_positioned(R4, c, S, reference=ref)
        assert not ok
        assert res == pytest.approx(1.0, abs=1e-8)

    def test_ribbon_of_principal_normal(self, R4):
        c = unit_speed(R4, lambda t: np.c_[np.cos(t), np.sin(t), 0.5 * t, 0 * t], 0.0, 5.0, 512)
        ribbon = construct_ribbon(R4, c, principal_normal(R4, c).P)
        ok, res = is_well_positioned(R4, c, ribbon)
        assert ok and res <= 1e-6


class TestConstructRibbon:
    def test_straight_line_flat_strip(self, R3):
        c = library.line(n=128, length=2.0)
        N = NormalField(np.tile([0.0, 0.0, 1.0], (len(c.grid), 1)))
        rib = construct_ribbon(R3, c, N, u_max=0.3)
        lat = rib.lattice
        assert np.abs(lat[..., 2]).max() <= 1e-12
        e = np.array([1.0, 0.5, 0.0]) / np.sqrt(1.25)
        off = lat - np.einsum("...i,i->...", lat, e)[..., None] * e
        assert np.linalg.norm(off, axis=-1).max() == pytest.approx(0.3, abs=1e-12)

    def test_circle_with_in_plane_normal(self, R3):
        c = library.circle(1.0, n=512)
        rib = construct_ribbon(R3, c, NormalField(-c.points))
        assert rib.nearest_n == 0
        assert rib.verification["line_of_curvature_residual"] <= 1e-6
        # the strip is a piece of the cylinder over the circle
        lat = rib.lattice
        assert np.abs(np.hypot(lat[..., 0], lat[..., 1]) - 1.0).max() <= 1e-10

    def test_coil_closes_with_one_turn(self, R3):
        c = library.prescribed_total_torsion(2 * np.pi, n=1024)
        rib = construct_ribbon(R3, c, principal_normal(R3, c).P)
        assert rib.nearest_n == 1
        assert rib.seam["lattice_distance"] <= 1e-5
        assert rib.verification["line_of_curvature"]
        assert rib.verification["normal_mismatch"] <= 1e-5

    def test_round_trip_theta(self, R3):
        c = library.prescribed_total_torsion(2 * np.pi, n=1024)
        rib = construct_ribbon(R3, c, principal_normal(R3, c).P)
        assert rib.verification["theta_prime_mismatch"] <= 1e-5

    def test_seam_mismatch(self, R3):
        c = library.prescribed_total_torsion(np.pi, n=1024)
        with pytest.raises(SeamMismatch) as info:
            construct_ribbon(R3, c, principal_normal(R3, c).P)
        assert info.value.total == pytest.approx(np.pi, abs=1e-6)

    def test_non_parallel_direction_field(self, R4):
        c = unit_speed(R4, lambda t: np.c_[t, t ** 2, t ** 3, t ** 4], 0.2, 1.0, 512)
        with pytest.raises(WNotParallel) as info:
            construct_ribbon(R4, c, principal_normal(R4, c).P)
        assert info.value.residual > 1e-3


def test_parallel_rotation_of_surface_normal_is_quantized(ellipsoid_line):
    """Rotating N_S by a closed angle gives a total near 2 pi k."""
    R3, S, c = ellipsoid_line
    frame = parallel_frame_in_H(R3, c, S.normal_along(c).values)
    s = c.grid / c.length
    for k in (0, 1, 2):
        theta = 2 * np.pi * k * s + 0.3 * np.sin(2 * np.pi * s)
        Z, _ = rotate_normal(frame, theta)
        total = total_geodesic_torsion(R3, c, Z)
        assert abs(total - 2 * np.pi * k) <= 1e-3 or abs(total + 2 * np.pi * k) <= 1e-3
