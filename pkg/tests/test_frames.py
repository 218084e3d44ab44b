import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionkit import library
from torsionkit.curve import SampledCurve
from torsionkit.exceptions import (FrenetViolation, NonOrientableDirection, NotTorsionDefining,
                                   ValidationError)
from torsionkit.frames import (DarbouxData, NormalField, OrthonormalFrameField, darboux_data,
                               detect_direction_field, frenet_data, is_parallel_rotation,
                               is_three_dimensional, parallel_frame_in_H, principal_normal,
                               project, rotate_normal, rotated_darboux_via_lemma,
                               rotation_angle_between)
from torsionkit.manifold import covariant_derivative_along, euclidean, sphere
from torsionkit.surface import cylinder, ellipsoid, trace_line_of_curvature
from torsionkit.torsion import integrate, random_smooth_angle

from conftest import unit_speed


def straight_line(m, n=256, length=2 * np.pi):
    s = np.linspace(0.0, length, n + 1)
    pts = np.zeros((n + 1, m))
    pts[:, 0] = s
    return SampledCurve(s, pts)


def constant(curve, v):
    return np.tile(np.asarray(v, dtype=float), (len(curve.grid), 1))


def synthetic(curve, H, N, tg):
    """Darboux data with prescribed geodesic-torsion coefficients."""
    E = curve.velocity()
    frame = OrthonormalFrameField(curve, E, H, N)
    z = np.zeros_like(tg)
    Tg = np.einsum("nk,nki->ni", tg, H)
    return DarbouxData(frame, z, np.zeros(len(E)), tg, 0 * Tg, 0 * Tg, Tg)


def gram_identity_error(M, frame):
    return np.abs(frame.gram(M) - np.eye(M.dim)).max()


class TestProject:
    def setup_method(self):
        self.M = euclidean(3)
        self.c = library.helix(n=256)
        self.frame = parallel_frame_in_H(self.M, self.c, principal_normal(self.M, self.c).P)

    def test_normal_projects_to_itself(self):
        xh, xn, xe = project(self.M, self.frame, self.frame.N)
        assert np.abs(xh).max() < 1e-14 and np.abs(xe).max() < 1e-14
        assert np.abs(xn - self.frame.N).max() < 1e-14

    def test_linearity(self):
        xh, xn, xe = project(self.M, self.frame, self.frame.E + self.frame.N)
        assert np.abs(xh).max() < 1e-14
        assert np.abs(xn - self.frame.N).max() < 1e-14 and np.abs(xe - self.frame.E).max() < 1e-14

    def test_random_vectors_in_R4_against_qr(self):
        M = euclidean(4)
        c = unit_speed(M, lambda t: np.c_[np.cos(t), np.sin(t), 0.3 * t, 0.2 * np.sin(2 * t)], 0, 4, 512)
        frame = parallel_frame_in_H(M, c, principal_normal(M, c).P)
        X = np.random.default_rng(3).normal(size=c.points.shape)
        xh, xn, xe = project(M, frame, X)
        # oracle: solve X = F^T a for the frame coefficients
        F = frame.stacked()
        a = np.linalg.solve(np.swapaxes(F, 1, 2), X[..., None])[..., 0]
        assert np.abs(xe - a[:, :1] * frame.E).max() <= 1e-10
        assert np.abs(xn - a[:, -1:] * frame.N).max() <= 1e-10
        assert np.abs(xh - np.einsum("nk,nki->ni", a[:, 1:-1], frame.H)).max() <= 1e-10
        assert np.abs(xh + xn + xe - X).max() <= 1e-10

    def test_grid_mismatch(self):
        with pytest.raises(ValidationError):
            project(self.M, self.frame, np.zeros((3, 3)))


class TestDarbouxData:
    def test_straight_line_constant_normal(self, R3):
        c = straight_line(3)
        d = darboux_data(R3, c, parallel_frame_in_H(R3, c, constant(c, [0, 0, 1])))
        for arr in (d.kg, d.kn, d.tg):
            assert np.abs(arr).max() < 1e-12

    def test_unit_circle_outward_normal(self, R3):
        c = library.circle(1.0, n=512)
        d = darboux_data(R3, c, parallel_frame_in_H(R3, c, c.points.copy()))
        assert np.abs(d.kn + 1).max() < 1e-9
        assert np.abs(d.kg).max() < 1e-9 and np.abs(d.tg).max() < 1e-9

    def test_helix_on_cylinder(self, R3):
        a, b = 1.0, 0.5
        c = library.helix(a, b, n=2048)
        N = cylinder(R3, 1.0).normal_along(c)
        d = darboux_data(R3, c, parallel_frame_in_H(R3, c, N))
        assert np.abs(d.kn + a / (a * a + b * b)).max() <= 1e-6
        assert np.abs(np.abs(d.tg[:, 0]) - a * b / (a * a + b * b)).max() <= 1e-6
        assert np.abs(d.kg).max() <= 1e-6

    def test_reassembly_and_frame_odes(self, R4):
        c = unit_speed(R4, lambda t: np.c_[np.cos(t), np.sin(t), 0.3 * t, 0.2 * np.sin(2 * t)], 0, 5, 1024)
        P = principal_normal(R4, c).P
        frame = parallel_frame_in_H(R4, c, P)
        d = darboux_data(R4, c, frame)
        assert np.abs(d.Kg_vec - np.einsum("nk,nki->ni", d.kg, frame.H)).max() <= 1e-8
        assert np.abs(d.Tg_vec - np.einsum("nk,nki->ni", d.tg, frame.H)).max() <= 1e-8
        assert max(d.residuals.values()) <= 1e-5


class TestPrincipalNormal:
    def test_planar_circle(self):
        M = euclidean(2)
        c = unit_speed(M, lambda t: np.c_[np.cos(t), np.sin(t)], 0, 2 * np.pi, 512, closed=True)
        pd = principal_normal(M, c)
        assert np.abs(pd.kappa - 1).max() < 1e-9
        assert np.abs(pd.P.values + c.points).max() < 1e-9

    def test_helix_curvature(self, R3):
        pd = principal_normal(R3, library.helix(1.0, 0.5, n=2048))
        assert np.abs(pd.kappa - 0.8).max() <= 1e-7

    def test_straight_line_fails(self, R3):
        with pytest.raises(FrenetViolation) as info:
            principal_normal(R3, straight_line(3))
        assert info.value.intervals and info.value.intervals[0][0] == 0.0


class TestDirectionField:
    def test_sign_continues_through_zero(self, R3):
        c = straight_line(3, 512)
        H = constant(c, [0, 1, 0])[:, None, :]
        d = synthetic(c, H, constant(c, [0, 0, 1]), np.sin(c.grid)[:, None])
        W = detect_direction_field(R3, d)
        assert np.abs(W.values - [0, 1, 0]).max() < 1e-15
        assert np.abs(W.scalar - np.sin(c.grid)).max() < 1e-15

    def test_vanishing_field_gives_parallel_direction(self, R3):
        c = straight_line(3)
        d = synthetic(c, constant(c, [0, 1, 0])[:, None, :], constant(c, [0, 0, 1]),
                      np.zeros((len(c.grid), 1)))
        W = detect_direction_field(R3, d)
        assert np.all(W.scalar == 0) and W.zero_mask.all()
        assert np.abs(covariant_derivative_along(R3, c, W.values)).max() < 1e-12

    def test_rotating_field_in_R4(self, R4):
        c = straight_line(4, 512)
        H = np.stack([constant(c, [0, 0, 1, 0]), constant(c, [0, 0, 0, 1])], axis=1)
        tg = np.c_[np.cos(c.grid), np.sin(c.grid)]
        W = detect_direction_field(R4, synthetic(c, H, constant(c, [0, 1, 0, 0]), tg))
        oracle = tg / np.linalg.norm(tg, axis=1)[:, None]
        assert np.abs(W.coeffs - oracle).max() < 1e-14
        assert np.abs(W.scalar - 1).max() < 1e-14

    def test_jump_is_not_torsion_defining(self, R4):
        c = straight_line(4, 512)
        H = np.stack([constant(c, [0, 0, 1, 0]), constant(c, [0, 0, 0, 1])], axis=1)
        tg = np.where((c.grid < np.pi)[:, None], [1.0, 0.0], [0.0, 1.0])
        with pytest.raises(NotTorsionDefining) as info:
            detect_direction_field(R4, synthetic(c, H, constant(c, [0, 1, 0, 0]), tg))
        assert info.value.location == pytest.approx(np.pi, abs=0.02)

    def test_seam_antiflip(self, R4):
        c = library.circle(1.0, n=512, dim=4)
        frame = parallel_frame_in_H(R4, c, constant(c, [0, 0, 1, 0]))
        half = 0.5 * c.grid
        d = synthetic(c, frame.H, frame.N, np.c_[np.cos(half), np.sin(half)])
        W = detect_direction_field(R4, d)
        assert W.seam_flip
        with pytest.raises(NonOrientableDirection):
            detect_direction_field(R4, d, strict_seam=True)

    def test_sign_covariance(self, R3):
        c = library.helix(n=512)
        _, frame, data, W = frenet_data(R3, c)
        Wm = detect_direction_field(R3, data, reference=-W.values)
        assert np.abs(Wm.scalar + W.scalar).max() < 1e-15
        assert integrate(Wm.scalar, c.grid) == pytest.approx(-integrate(W.scalar, c.grid))

    def test_curvature_direction(self, R3):
        c = library.helix(n=256)
        frame = parallel_frame_in_H(R3, c, cylinder(R3).normal_along(c))
        V = detect_direction_field(R3, darboux_data(R3, c, frame), which="curvature")
        assert V.zero_mask.all()  # helix is a cylinder geodesic: K_g = 0


class TestParallelFrame:
    def test_line_in_R3(self, R3):
        c = straight_line(3)
        f = parallel_frame_in_H(R3, c, constant(c, [0, 0, 1]))
        assert np.abs(f.H - f.H[0]).max() < 1e-14

    def test_line_in_R4_and_rotating_frame(self, R4):
        c = straight_line(4, 512)
        f = parallel_frame_in_H(R4, c, constant(c, [0, 1, 0, 0]))
        assert np.abs(f.H - f.H[0]).max() < 1e-12
        rot = np.c_[0 * c.grid, 0 * c.grid, np.cos(c.grid), np.sin(c.grid)]
        assert np.abs(covariant_derivative_along(R4, c, rot)).max() == pytest.approx(1.0, abs=1e-6)

    def test_great_circle_in_S3_chart(self):
        M = sphere(3)
        # great circle through the centre: the x1-axis, with N along x3 (parallel)
        c = unit_speed(M, lambda t: np.c_[t, 0 * t, 0 * t], -2.0, 2.0, 1024)
        lam = 1.0 / M.norm(c.points, constant(c, [0, 0, 1.0]))
        N = constant(c, [0, 0, 1.0]) * lam[:, None]
        f = parallel_frame_in_H(M, c, N)
        assert gram_identity_error(M, f) <= 1e-7
        g = M.metric_at(c.points)
        DH = covariant_derivative_along(M, c, f.H[:, 0])
        piH = np.einsum("ni,nij,nj->n", DH, g, f.H[:, 0])
        assert np.abs(piH).max() <= 1e-6

    def test_general_curve_in_S4_chart_is_parallel(self):
        from torsionkit.torsion import _chart_curve_4d

        M, c = _chart_curve_4d(1024)
        f = parallel_frame_in_H(M, c, principal_normal(M, c).P)
        assert gram_identity_error(M, f) <= 1e-7
        d = darboux_data(M, c, f)
        assert np.abs(d.connection).max() <= 1e-6


class TestRotation:
    def setup_method(self):
        self.M = euclidean(3)
        self.c = library.helix(n=1024)
        N = cylinder(self.M).normal_along(self.c)
        self.frame = parallel_frame_in_H(self.M, self.c, N)
        self.data = darboux_data(self.M, self.c, self.frame)

    def test_identity_rotation(self):
        Nt, ft = rotate_normal(self.frame, 0.0)
        assert np.array_equal(Nt.values, self.frame.N) and np.array_equal(ft.H, self.frame.H)

    def test_quarter_turn(self):
        Nt, ft = rotate_normal(self.frame, np.pi / 2)
        assert np.abs(Nt.values + self.frame.H[:, 0]).max() < 1e-15
        assert np.abs(ft.H[:, 0] - self.frame.N).max() < 1e-15

    def test_random_rotation_is_orthonormal(self):
        theta = random_smooth_angle(np.random.default_rng(0), self.c.grid)
        _, ft = rotate_normal(self.frame, theta)
        assert gram_identity_error(self.M, ft) <= 1e-10

    def test_lemma_identity(self):
        lem = rotated_darboux_via_lemma(self.data, np.zeros_like(self.c.grid))
        for a, b in ((lem.kg, self.data.kg), (lem.kn, self.data.kn), (lem.tg, self.data.tg)):
            assert np.abs(a - b).max() < 1e-15

    def test_lemma_quarter_turn(self):
        lem = rotated_darboux_via_lemma(self.data, np.full_like(self.c.grid, np.pi / 2), mu=0.0)
        assert np.abs(lem.kg[:, 0] - self.data.kn).max() < 1e-15
        assert np.abs(lem.kn + self.data.kg[:, 0]).max() < 1e-15
        assert np.abs(lem.tg - self.data.tg).max() < 1e-12

    def test_lemma_matches_direct_recomputation(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            theta = random_smooth_angle(rng, self.c.grid)
            lem = rotated_darboux_via_lemma(self.data, theta)
            _, ft = rotate_normal(self.frame, theta)
            direct = darboux_data(self.M, self.c, ft)
            gap = max(np.abs(lem.kg - direct.kg).max(), np.abs(lem.kn - direct.kn).max(),
                      np.abs(lem.tg - direct.tg).max())
            assert gap <= 1e-6

    def test_lemma_strict_mode_needs_parallel_frame(self, R4):
        c = straight_line(4, 256)
        H = np.stack([np.c_[0 * c.grid, 0 * c.grid, np.cos(c.grid), np.sin(c.grid)],
                      np.c_[0 * c.grid, 0 * c.grid, -np.sin(c.grid), np.cos(c.grid)]], axis=1)
        frame = OrthonormalFrameField(c, c.velocity(), H, constant(c, [0, 1, 0, 0]))
        d = darboux_data(R4, c, frame)
        with pytest.raises(ValidationError):
            rotated_darboux_via_lemma(d, 0.3 * c.grid, strict=True)
        # general-frame lemma with measured mu still matches direct recomputation
        theta = 0.3 * c.grid
        lem = rotated_darboux_via_lemma(d, theta)
        direct = darboux_data(R4, c, rotate_normal(frame, theta)[1])
        assert np.abs(lem.tg - direct.tg).max() <= 1e-8

    def test_rotation_angle_of_self(self):
        rot = rotation_angle_between(self.M, self.frame.N, self.frame.N, self.frame)
        assert np.abs(rot.theta).max() < 1e-15 and rot.winding == 0

    def test_rotation_angle_by_construction(self):
        c = library.circle(1.0, n=1024)
        frame = parallel_frame_in_H(self.M, c, c.points.copy())
        t = 2 * np.pi * c.grid / c.length
        Z, _ = rotate_normal(frame, t)
        rot = rotation_angle_between(self.M, frame.N, Z, frame)
        assert np.abs(rot.theta - t).max() < 1e-12
        assert rot.nearest_n == 1 and rot.residual < 1e-12
        assert np.all(np.abs(np.diff(rot.theta)) < np.pi)

    def test_principal_normal_vs_ellipsoid_normal(self):
        S = ellipsoid(self.M, (2.0, 1.5, 1.0)).flipped()
        c = trace_line_of_curvature(S, S.param(np.array([[1.1, 0.5]]))[0], family=1, n_steps=1024)
        NS = S.normal_along(c)
        frame = parallel_frame_in_H(self.M, c, NS)
        pd, _, _, W = frenet_data(self.M, c)
        rot = rotation_angle_between(self.M, NS, pd.P, frame)
        assert rot.residual <= 1e-3
        assert abs(integrate(W.scalar, c.grid) - rot.delta) <= 1e-4

    def test_parallel_rotation_in_dim_3(self):
        Z, _ = rotate_normal(self.frame, 0.5 * np.sin(self.c.grid))
        ok, _ = is_parallel_rotation(self.M, self.c, self.frame.N, Z.values, self.frame)
        assert ok

    def test_parallel_rotation_in_R4(self, R4):
        c = straight_line(4, 512)
        N = constant(c, [0, 1, 0, 0])
        s, co = np.sin(np.pi / 4), np.cos(np.pi / 4)
        ok, res = is_parallel_rotation(R4, c, N, -s * constant(c, [0, 0, 1, 0]) + co * N)
        assert ok and res <= 1e-10
        H = np.c_[0 * c.grid, 0 * c.grid, np.cos(c.grid), np.sin(c.grid)]
        ok, res = is_parallel_rotation(R4, c, N, -s * H + co * N)
        assert not ok and res == pytest.approx(1.0, abs=1e-4)


class TestThreeDimensional:
    def test_any_frenet_curve_in_dim_3(self, R3):
        c = library.coil(1.3, n=1024)
        assert is_three_dimensional(R3, c).verdict

    def test_helix_torsion(self, R3):
        rep = is_three_dimensional(R3, library.helix(1.0, 0.5, n=2048))
        assert rep.verdict and np.abs(rep.tau - 0.4).max() <= 1e-6

    def test_quartic_in_R4_is_not(self, R4):
        c = unit_speed(R4, lambda t: np.c_[t, t ** 2, t ** 3, t ** 4], -1.0, 1.0, 1024)
        rep = is_three_dimensional(R4, c)
        assert not rep.verdict and max(rep.residuals.values()) > 1e-2

    def test_helix_in_R4_subspace(self, R4):
        c = unit_speed(R4, lambda t: np.c_[np.cos(t), np.sin(t), 0.5 * t, 0 * t], 0, 2 * np.pi, 1024)
        rep = is_three_dimensional(R4, c)
        assert rep.verdict and np.abs(np.abs(rep.tau) - 0.4).max() <= 1e-6

    def test_residuals_converge(self, R3):
        res = [max(is_three_dimensional(R3, library.helix(n=n)).residuals.values())
               for n in (128, 256, 512)]
        assert res[0] / res[1] >= 4 and res[1] / res[2] >= 4


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, 3), st.floats(-2, 2), st.floats(0, 2 * np.pi))
def test_rotation_identity_property(slope, amp, phase):
    """``int tau_g(theta) - int tau_g = theta(l) - theta(0)`` for parallel rotations in 3D."""
    M = euclidean(3)
    c = library.coil(1.2, n=1024)
    frame = parallel_frame_in_H(M, c, principal_normal(M, c).P)
    u = c.grid / c.length
    theta = slope * u + amp * np.sin(2 * np.pi * u + phase)
    data = darboux_data(M, c, frame)
    lem = rotated_darboux_via_lemma(data, theta)
    lhs = integrate(lem.tg[:, 0], c.grid) - integrate(data.tg[:, 0], c.grid)
    assert abs(lhs - (theta[-1] - theta[0])) <= 1e-6
