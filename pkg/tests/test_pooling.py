import math

import numpy as np
import pytest

from mvbev.bev import FeatureGrid
from mvbev.errors import AllVerticesBehindCamera, EmptyROI, NonPositiveSize
from mvbev.geometry import WorldPoint, intrinsics, look_at_camera, project_point
from mvbev.pooling import OrientedBox3D, ROI, box3d_vertices, project_roi, roi_pool


def site_camera(view_id=0):
    return look_at_camera([-1.2, -1.2, 2.5], [4.0, 2.25, 0.0],
                          intrinsics(400.0, (800, 600)), (800, 600),
                          view_id=view_id)


class TestVertices:
    def test_unit_cube(self):
        box = OrientedBox3D(WorldPoint(0, 0, 0), (1.0, 1.0, 1.0), 0.0)
        verts = np.array([v.as_array() for v in box3d_vertices(box)])
        expected = {(sx * 0.5, sy * 0.5, sz * 0.5)
                    for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)}
        got = {tuple(np.round(v, 12)) for v in verts}
        assert got == expected

    def test_quarter_turn_swaps_axes(self):
        straight = OrientedBox3D(WorldPoint(0, 0, 0), (2.0, 1.0, 1.0), 0.0)
        turned = OrientedBox3D(WorldPoint(0, 0, 0), (2.0, 1.0, 1.0), math.pi / 2)
        vs = np.array([v.as_array() for v in box3d_vertices(straight)])
        vt = np.array([v.as_array() for v in box3d_vertices(turned)])
        assert vs[:, 0].max() == pytest.approx(0.5)
        assert vs[:, 1].max() == pytest.approx(1.0)
        assert vt[:, 0].max() == pytest.approx(1.0)
        assert vt[:, 1].max() == pytest.approx(0.5)

    def test_rotation_oracle_45_degrees(self):
        # hand 2x2 rotation of the footprint corners, l=2 w=1 yaw=pi/4
        box = OrientedBox3D(WorldPoint(1.0, 2.0, 0.5), (2.0, 1.0, 1.0), math.pi / 4)
        c = s = math.sqrt(0.5)
        corners_local = [(0.5, 1.0), (-0.5, 1.0), (-0.5, -1.0), (0.5, -1.0)]
        expected = sorted((1.0 + c * fx - s * fy, 2.0 + s * fx + c * fy)
                          for fx, fy in corners_local)
        verts = box3d_vertices(box)
        bottom = sorted((v.x, v.y) for v in verts[:4])
        np.testing.assert_allclose(bottom, expected, atol=1e-12)

    def test_faces_at_half_height(self):
        box = OrientedBox3D(WorldPoint(0, 0, 1.0), (1.0, 1.0, 0.6), 0.3)
        zs = sorted({round(v.z, 12) for v in box3d_vertices(box)})
        assert zs == [0.7, 1.3]

    def test_bad_size(self):
        with pytest.raises(NonPositiveSize):
            OrientedBox3D(WorldPoint(0, 0, 0), (1.0, 0.0, 1.0), 0.0)


class TestProjectROI:
    def test_centered_box_roi_centered_on_principal_point(self):
        cam = look_at_camera([0.0, 0.0, 3.0], [4.0, 0.0, 0.0],
                             intrinsics(500.0, (801, 601)), (801, 601))
        # box straight ahead on the optical axis
        t = 0.6
        center = np.array([0.0, 0.0, 3.0]) + t * (np.array([4.0, 0.0, 0.0]) - np.array([0.0, 0.0, 3.0]))
        box = OrientedBox3D(WorldPoint(*center), (0.4, 0.4, 0.4), 0.0)
        roi = project_roi(box, cam)
        assert (roi.x_min + roi.x_max) / 2 == pytest.approx(cam.K[0, 2], abs=1.0)
        assert (roi.y_min + roi.y_max) / 2 == pytest.approx(cam.K[1, 2], abs=1.0)

    def test_roi_contains_center_projection(self):
        cam = site_camera()
        rng = np.random.default_rng(11)
        for _ in range(50):
            box = OrientedBox3D(WorldPoint(rng.uniform(0.5, 7.5), rng.uniform(0.5, 4.0), 0.2),
                                (0.45, 0.6, 0.4), rng.uniform(-math.pi, math.pi))
            roi = project_roi(box, cam)
            px = project_point(cam, box.center)
            assert roi.x_min - 1e-9 <= px.u <= roi.x_max + 1e-9
            assert roi.y_min - 1e-9 <= px.v <= roi.y_max + 1e-9

    def test_bounds_match_vertex_projection_oracle(self):
        cam = site_camera()
        box = OrientedBox3D(WorldPoint(3.0, 2.0, 0.2), (0.45, 0.6, 0.4), 0.7)
        us, vs = [], []
        for vert in box3d_vertices(box):
            px = project_point(cam, vert)
            us.append(px.u)
            vs.append(px.v)
        roi = project_roi(box, cam)
        assert roi.x_min == pytest.approx(min(us), abs=1e-12)
        assert roi.x_max == pytest.approx(max(us), abs=1e-12)
        assert roi.y_min == pytest.approx(min(vs), abs=1e-12)
        assert roi.y_max == pytest.approx(max(vs), abs=1e-12)
        assert not roi.partial and not roi.empty

    def test_containment_under_shrink(self):
        cam = site_camera()
        rng = np.random.default_rng(12)
        for _ in range(30):
            center = WorldPoint(rng.uniform(1, 7), rng.uniform(1, 4), 0.2)
            yaw = rng.uniform(-math.pi, math.pi)
            big = OrientedBox3D(center, (0.8, 0.9, 0.5), yaw)
            small = OrientedBox3D(center, (0.4, 0.45, 0.25), yaw)
            rb = project_roi(big, cam)
            rs = project_roi(small, cam)
            assert rb.x_min <= rs.x_min + 1e-9 and rs.x_max <= rb.x_max + 1e-9
            assert rb.y_min <= rs.y_min + 1e-9 and rs.y_max <= rb.y_max + 1e-9

    def test_all_vertices_behind(self):
        cam = site_camera()
        # box behind the camera (opposite the viewing direction)
        box = OrientedBox3D(WorldPoint(-5.0, -5.0, 0.2), (0.45, 0.6, 0.4), 0.0)
        with pytest.raises(AllVerticesBehindCamera):
            project_roi(box, cam)

    def test_off_image_roi_flagged_empty(self):
        cam = look_at_camera([0.0, 0.0, 2.0], [4.0, 0.0, 0.0],
                             intrinsics(800.0, (400, 300)), (400, 300))
        box = OrientedBox3D(WorldPoint(4.0, 6.0, 0.2), (0.45, 0.6, 0.4), 0.0)
        roi = project_roi(box, cam)
        assert roi.empty


class TestROIPool:
    def grid(self, data, view_id=0):
        return FeatureGrid(np.asarray(data, dtype=float), "image", view_id)

    def test_constant(self):
        feat = self.grid(np.full((10, 12, 2), 3.5))
        roi = ROI(0, 1.0, 2.0, 9.0, 7.0)
        out = roi_pool(feat, roi, (3, 3))
        assert np.all(out.data == 3.5)

    def test_whole_grid_identity(self):
        rng = np.random.default_rng(13)
        data = rng.random((6, 9, 2))
        feat = self.grid(data)
        roi = ROI(0, 0.0, 0.0, 8.0, 5.0)
        out = roi_pool(feat, roi, (6, 9))
        np.testing.assert_array_equal(out.data, data)

    def test_ramp_quadrants(self):
        # 4x4 ramp pooled 2x2: quadrant maxima 5, 7, 13, 15 by hand
        data = np.arange(16, dtype=float).reshape(4, 4)
        out = roi_pool(self.grid(data), ROI(0, 0, 0, 3, 3), (2, 2))
        np.testing.assert_array_equal(out.data[:, :, 0], [[5, 7], [13, 15]])

    def test_monotone_scaling(self):
        rng = np.random.default_rng(14)
        data = rng.random((8, 8, 1))
        roi = ROI(0, 1, 1, 6, 6)
        base = roi_pool(self.grid(data), roi, (3, 3)).data
        scaled = roi_pool(self.grid(4.0 * data), roi, (3, 3)).data
        np.testing.assert_allclose(scaled, 4.0 * base, atol=1e-12)

    def test_output_larger_than_window(self):
        data = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = roi_pool(self.grid(data), ROI(0, 0, 0, 1, 1), (4, 4))
        assert out.data.shape == (4, 4, 1)
        assert out.data.max() == 4.0

    def test_empty_roi(self):
        with pytest.raises(EmptyROI):
            roi_pool(self.grid(np.ones((4, 4))), ROI(0, 0, 0, 3, 3, empty=True), (2, 2))

    def test_view_mismatch(self):
        with pytest.raises(EmptyROI):
            roi_pool(self.grid(np.ones((4, 4)), view_id=1), ROI(0, 0, 0, 3, 3), (2, 2))
