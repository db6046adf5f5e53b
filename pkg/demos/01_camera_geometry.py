"""Pinhole projection and ground-plane back-projection.

Walks through the geometric core: a calibrated camera maps world points
to pixels, and pixels back to the known-altitude ground plane. The two
directions invert each other, which is the property everything else in
the toolkit leans on.
"""

import numpy as np

from mvbev import (
    CameraModel,
    PixelHomogeneous,
    WorldPoint,
    backproject_to_plane,
    intrinsics,
    look_at_camera,
    project_point,
    validate_camera,
)

# A camera 2.5 m above the corner of an 8 m x 4.5 m site, looking at its
# center. Intrinsics: 400 px focal length on a 800x600 sensor.
cam = look_at_camera(position=[-1.2, -1.2, 2.5], target=[4.0, 2.25, 0.0],
                     K=intrinsics(400.0, (800, 600)), image_size=(800, 600))
print("camera center (world):", cam.center)
print("validation violations:", validate_camera(cam) or "none")

# Forward: a robot standing at (3.0, 2.0) on the ground.
ground_point = WorldPoint(3.0, 2.0, 0.0)
pixel = project_point(cam, ground_point)
print(f"\n({ground_point.x}, {ground_point.y}, {ground_point.z}) projects to "
      f"pixel ({pixel.u:.2f}, {pixel.v:.2f})")

# Inverse: that pixel, intersected with the plane z = 0, recovers the point.
recovered = backproject_to_plane(cam, pixel, plane_altitude=0.0)
print(f"back-projected: ({recovered.x:.9f}, {recovered.y:.9f}, {recovered.z})")

# The round trip is tight across the whole image.
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(1000):
    p = WorldPoint(rng.uniform(0, 8), rng.uniform(0, 4.5), 0.0)
    px = project_point(cam, p)
    back = backproject_to_plane(cam, px, 0.0)
    worst = max(worst, np.hypot(back.x - p.x, back.y - p.y))
print(f"\nworst round-trip error over 1000 ground points: {worst:.3e} m")

# Degenerate rays are rejected, not silently mangled.
horizon_cam = look_at_camera([0, 0, 1.0], [10.0, 0, 1.0],
                             intrinsics(100.0, (200, 200)), (200, 200))
try:
    backproject_to_plane(horizon_cam, PixelHomogeneous(100.0, 100.0), 0.0)
except Exception as exc:
    print(f"horizon pixel -> {type(exc).__name__}: {exc}")
