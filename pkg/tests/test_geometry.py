import numpy as np
import pytest

from mvbev.errors import (
    DepthNonPositive,
    IntersectionBehindCamera,
    RayParallelToPlane,
)
from mvbev.geometry import (
    CameraModel,
    PixelHomogeneous,
    WorldPoint,
    backproject_to_plane,
    intrinsics,
    look_at_camera,
    project_point,
    validate_camera,
)

# Direct matrix-arithmetic oracle for the worked example:
#   K = [[100,0,160],[0,100,120],[0,0,1]], R = I, T = 0, p = (1, 0.5, 2)
#   K @ p = (100*1 + 160*2, 100*0.5 + 120*2, 2) = (420, 290, 2) -> (210, 145)
K_EXAMPLE = np.array([[100.0, 0.0, 160.0], [0.0, 100.0, 120.0], [0.0, 0.0, 1.0]])


def identity_cam(K=None, image_size=(320, 240)):
    return CameraModel(K=K_EXAMPLE if K is None else K, R=np.eye(3),
                       T=np.zeros(3), image_size=image_size)


def random_camera(rng, focal_range=(200.0, 1200.0)):
    """Random valid camera looking at the origin region from above."""
    pos = rng.uniform([-6, -6, 2.0], [6, 6, 8.0])
    target = rng.uniform([-2, -2, 0.0], [2, 2, 0.0])
    f = rng.uniform(*focal_range)
    return look_at_camera(pos, target, intrinsics(f, (640, 480)), (640, 480))


class TestProjectPoint:
    def test_worked_example(self):
        px = project_point(identity_cam(), WorldPoint(1.0, 0.5, 2.0))
        assert px.u == pytest.approx(210.0, abs=1e-12)
        assert px.v == pytest.approx(145.0, abs=1e-12)
        assert px.w == 1.0

    def test_principal_axis(self):
        cam = identity_cam(K=np.eye(3), image_size=(2, 2))
        px = project_point(cam, WorldPoint(0.0, 0.0, 1.0))
        assert (px.u, px.v) == (0.0, 0.0)

    def test_behind_camera_raises(self):
        with pytest.raises(DepthNonPositive):
            project_point(identity_cam(), WorldPoint(0.0, 0.0, -1.0))

    def test_zero_depth_raises(self):
        with pytest.raises(DepthNonPositive):
            project_point(identity_cam(), WorldPoint(1.0, 1.0, 0.0))

    def test_homogeneous_scale_is_one(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            cam = random_camera(rng)
            px = project_point(cam, WorldPoint(*rng.uniform([-2, -2, 0], [2, 2, 0.5])))
            assert px.w == 1.0


class TestBackprojectToPlane:
    def test_inverse_of_worked_example(self):
        p = backproject_to_plane(identity_cam(), PixelHomogeneous(210.0, 145.0), 2.0)
        assert np.allclose([p.x, p.y, p.z], [1.0, 0.5, 2.0], atol=1e-12)

    def test_round_trip_on_plane(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            cam = random_camera(rng)
            plane_z = rng.uniform(0.0, 0.5)
            p = WorldPoint(rng.uniform(-2, 2), rng.uniform(-2, 2), plane_z)
            back = backproject_to_plane(cam, project_point(cam, p), plane_z)
            assert np.allclose([back.x, back.y, back.z],
                               [p.x, p.y, p.z], atol=1e-7)

    def test_plane_altitude_exact(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            cam = random_camera(rng)
            plane_z = rng.uniform(-1.0, 1.0)
            p = backproject_to_plane(
                cam, PixelHomogeneous(rng.uniform(100, 540), rng.uniform(100, 380)),
                plane_z)
            assert abs(p.z - plane_z) < 1e-9

    def test_horizon_pixel_parallel(self):
        # Camera at z=1 looking along +x: rows at the principal height view
        # parallel to the ground plane.
        cam = look_at_camera([0, 0, 1.0], [10.0, 0, 1.0],
                             intrinsics(100.0, (200, 200)), (200, 200))
        u0 = cam.K[0, 2]
        v_horizon = cam.K[1, 2]
        with pytest.raises(RayParallelToPlane):
            backproject_to_plane(cam, PixelHomogeneous(u0, v_horizon), 0.0)

    def test_intersection_behind_camera(self):
        # Same camera, pixel above the horizon: the downward plane is behind.
        cam = look_at_camera([0, 0, 1.0], [10.0, 0, 1.0],
                             intrinsics(100.0, (200, 200)), (200, 200))
        with pytest.raises(IntersectionBehindCamera):
            backproject_to_plane(cam, PixelHomogeneous(cam.K[0, 2], cam.K[1, 2] - 30), 0.0)


class TestValidateCamera:
    def test_valid_camera_empty(self):
        assert validate_camera(identity_cam()) == []

    def test_reflection_flagged(self):
        R = np.diag([1.0, 1.0, -1.0])
        cam = CameraModel(K=K_EXAMPLE, R=R, T=np.zeros(3), image_size=(320, 240))
        msgs = validate_camera(cam)
        assert any("rotation determinant" in m for m in msgs)

    def test_zero_focal_flagged(self):
        K = K_EXAMPLE.copy()
        K[0, 0] = 0.0
        cam = CameraModel(K=K, R=np.eye(3), T=np.zeros(3), image_size=(320, 240))
        assert any("focal length" in m for m in validate_camera(cam))

    def test_non_orthonormal_flagged(self):
        R = np.eye(3)
        R[0, 1] = 1e-3
        cam = CameraModel(K=K_EXAMPLE, R=R, T=np.zeros(3), image_size=(320, 240))
        assert any("orthonormal" in m for m in validate_camera(cam))

    def test_bad_image_size_flagged(self):
        cam = CameraModel(K=K_EXAMPLE, R=np.eye(3), T=np.zeros(3), image_size=(0, 240))
        assert any("image size" in m for m in validate_camera(cam))

    def test_lower_triangular_flagged(self):
        K = K_EXAMPLE.copy()
        K[2, 0] = 0.5
        cam = CameraModel(K=K, R=np.eye(3), T=np.zeros(3), image_size=(320, 240))
        assert any("upper triangular" in m for m in validate_camera(cam))


class TestRigHelpers:
    def test_look_at_rotation_is_valid(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            cam = random_camera(rng)
            assert validate_camera(cam) == []

    def test_look_at_faces_target(self):
        cam = look_at_camera([0, 0, 3.0], [4.0, 2.0, 0.0],
                             intrinsics(400.0, (640, 480)), (640, 480))
        px = project_point(cam, WorldPoint(4.0, 2.0, 0.0))
        assert px.u == pytest.approx(cam.K[0, 2], abs=1e-9)
        assert px.v == pytest.approx(cam.K[1, 2], abs=1e-9)

    def test_camera_center_inverts_translation(self):
        rng = np.random.default_rng(8)
        cam = random_camera(rng)
        assert np.allclose(cam.R @ cam.center + cam.T, 0.0, atol=1e-12)
