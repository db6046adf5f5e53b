"""Feature orthogonal transformation onto a metric bird's-eye-view raster.

Each per-view feature grid is warped onto a shared ground-plane raster by
inverse warping: every BEV cell center (x, y, plane_altitude) is projected
into the view and the feature grid is sampled bilinearly at that pixel.
Cells that project behind the camera or outside the image are zero, so
additive fusion stays neutral. Warped views are stacked with two
coordinate-map channels (cell-center x and y in meters) to form one
consistent global feature tensor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .geometry import CameraModel


@dataclass(frozen=True)
class BEVGridSpec:
    """Metric raster over the ground plane.

    origin: (x, y) meters of the CENTER of cell (0, 0).
    extent: (width_m, height_m); width spans columns (x), height rows (y).
    shape: (rows, cols).
    plane_altitude: z of the raster plane in meters.
    """

    origin: tuple[float, float]
    extent: tuple[float, float]
    shape: tuple[int, int]
    plane_altitude: float = 0.0

    def __post_init__(self):
        rows, cols = self.shape
        if rows <= 0 or cols <= 0:
            raise ValueError(f"grid shape must be positive, got {self.shape}")
        if self.extent[0] <= 0 or self.extent[1] <= 0:
            raise ValueError(f"grid extent must be positive, got {self.extent}")

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    @property
    def cell_size(self) -> tuple[float, float]:
        """(cell_width, cell_height) in meters; uniform per axis."""
        return (self.extent[0] / self.cols, self.extent[1] / self.rows)

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        cw, ch = self.cell_size
        return (self.origin[0] + col * cw, self.origin[1] + row * ch)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid arrays (rows, cols) of cell-center x and y."""
        cw, ch = self.cell_size
        xs = self.origin[0] + np.arange(self.cols) * cw
        ys = self.origin[1] + np.arange(self.rows) * ch
        return np.meshgrid(xs, ys)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) of the cell containing the point; no bounds clamp."""
        cw, ch = self.cell_size
        return (int(np.floor((y - self.origin[1]) / ch + 0.5)),
                int(np.floor((x - self.origin[0]) / cw + 0.5)))

    @staticmethod
    def for_site(extent=(8.0, 4.5), shape=(120, 160), plane_altitude=0.0):
        """Grid tiling [0, width] x [0, height] with cell (0,0) at a half-cell."""
        cw = extent[0] / shape[1]
        ch = extent[1] / shape[0]
        return BEVGridSpec(origin=(cw / 2.0, ch / 2.0), extent=extent,
                           shape=shape, plane_altitude=plane_altitude)


@dataclass
class FeatureGrid:
    """Dense numeric raster, (rows, cols, channels) float64.

    frame is "image" (view_id identifies the camera; rows = image height,
    cols = image width) or "bev". Warped grids keep the source view_id as
    provenance so fusion can order views deterministically.
    """

    data: np.ndarray
    frame: str
    view_id: int | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim == 2:
            self.data = self.data[:, :, None]
        if self.data.ndim != 3:
            raise ShapeMismatch(f"grid data must be rank 3, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("grid data must be finite")
        if self.frame not in ("image", "bev"):
            raise ValueError(f"unknown frame {self.frame!r}")
        if self.frame == "image" and self.view_id is None:
            raise ValueError("image-frame grids need a view_id")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def _bilinear_sample(data: np.ndarray, u: np.ndarray, v: np.ndarray,
                     valid: np.ndarray) -> np.ndarray:
    """Sample (H, W, C) data at float pixels; invalid entries come out 0."""
    h, w = data.shape[:2]
    uc = np.clip(u, 0.0, w - 1.0)
    vc = np.clip(v, 0.0, h - 1.0)
    u0 = np.clip(np.floor(uc).astype(int), 0, max(w - 2, 0))
    v0 = np.clip(np.floor(vc).astype(int), 0, max(h - 2, 0))
    du = (uc - u0)[:, None]
    dv = (vc - v0)[:, None]
    u1 = np.minimum(u0 + 1, w - 1)
    v1 = np.minimum(v0 + 1, h - 1)
    out = ((1 - du) * (1 - dv) * data[v0, u0]
           + du * (1 - dv) * data[v0, u1]
           + (1 - du) * dv * data[v1, u0]
           + du * dv * data[v1, u1])
    out[~valid] = 0.0
    return out


def warp_view_to_bev(feat: FeatureGrid, cam: CameraModel,
                     grid: BEVGridSpec) -> FeatureGrid:
    """Warp an image-frame feature grid onto the BEV raster.

    For every BEV cell center the world point (x, y, plane_altitude) is
    projected into the view; the output is the bilinear sample of ``feat``
    at that pixel, or 0 for cells behind the camera / outside the image.
    """
    if feat.frame != "image":
        raise ShapeMismatch(f"expected an image-frame grid, got {feat.frame!r}")
    if feat.view_id != cam.view_id:
        raise ShapeMismatch(
            f"feature grid is for view {feat.view_id}, camera is view {cam.view_id}")
    w_img, h_img = cam.image_size
    if (feat.rows, feat.cols) != (h_img, w_img):
        raise ShapeMismatch(
            f"grid {feat.rows}x{feat.cols} does not match image size {h_img}x{w_img}")

    xs, ys = grid.cell_centers()
    pts = np.stack([xs.ravel(), ys.ravel(),
                    np.full(xs.size, grid.plane_altitude)])
    cam_pts = cam.R @ pts + cam.T[:, None]
    depth = cam_pts[2]
    front = depth > 1e-12
    # behind-camera cells are masked out, guard their division anyway
    safe_depth = np.where(front, depth, 1.0)
    uvw = cam.K @ cam_pts
    # K has last row (0,0,1), so uvw[2] equals the camera depth
    u = uvw[0] / safe_depth
    v = uvw[1] / safe_depth
    valid = front & (u >= 0) & (u <= w_img - 1) & (v >= 0) & (v <= h_img - 1)
    sampled = _bilinear_sample(feat.data, u, v, valid)
    out = sampled.reshape(grid.rows, grid.cols, feat.channels)
    return FeatureGrid(data=out, frame="bev", view_id=feat.view_id)


def coordinate_maps(grid: BEVGridSpec) -> FeatureGrid:
    """Two-channel BEV grid: channel 0 = cell-center x, channel 1 = y (meters)."""
    xs, ys = grid.cell_centers()
    return FeatureGrid(data=np.stack([xs, ys], axis=-1), frame="bev")


def fuse_views(warped: list[FeatureGrid], coords: FeatureGrid,
               mode: str = "concat") -> FeatureGrid:
    """Fuse warped views with the coordinate maps into one global grid.

    mode "concat" stacks every view's channels (view_id ascending) and
    appends the two coordinate channels. "sum"/"max" reduce element-wise
    across views (all views must share a channel count) before appending
    coordinates.
    """
    if not warped:
        raise ShapeMismatch("fuse_views needs at least one warped view")
    shape = (warped[0].rows, warped[0].cols)
    for g in list(warped) + [coords]:
        if (g.rows, g.cols) != shape:
            raise ShapeMismatch(
                f"grid shape {(g.rows, g.cols)} differs from {shape}")
        if g.frame != "bev":
            raise ShapeMismatch("fuse_views expects bev-frame grids")
    order = sorted(range(len(warped)),
                   key=lambda i: (warped[i].view_id is None,
                                  warped[i].view_id, i))
    stacked = [warped[i].data for i in order]
    if mode == "concat":
        fused = np.concatenate(stacked + [coords.data], axis=-1)
    elif mode in ("sum", "max"):
        channels = {g.shape[-1] for g in stacked}
        if len(channels) != 1:
            raise ShapeMismatch("sum/max fusion needs equal channel counts")
        reduced = (np.sum(stacked, axis=0) if mode == "sum"
                   else np.max(stacked, axis=0))
        fused = np.concatenate([reduced, coords.data], axis=-1)
    else:
        raise ValueError(f"unknown fusion mode {mode!r}")
    return FeatureGrid(data=fused, frame="bev")
