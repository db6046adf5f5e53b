"""Multi-view monocular 3D detection toolkit.

Library for fusing per-view feature grids on a metric bird's-eye-view
raster, estimating object position and multi-bin orientation, scoring
detections with MODA/MODP/AP/AOS metrics, and generating deterministic
synthetic multi-camera scenes for end-to-end verification.
"""

__version__ = "0.1.0"

from .bev import BEVGridSpec, FeatureGrid, coordinate_maps, fuse_views, warp_view_to_bev
from .boxes import (
    Anchor,
    BoxBEV,
    OffsetBEV,
    RotatedBoxBEV,
    decode_offsets,
    encode_offsets,
    generate_anchors,
    iou_axis_aligned,
    iou_rotated_bev,
    label_anchors,
    nms,
    select_training_samples,
    wrap_angle,
)
from .geometry import (
    CameraModel,
    PixelHomogeneous,
    WorldPoint,
    backproject_to_plane,
    intrinsics,
    look_at_camera,
    project_point,
    validate_camera,
)
from .losses import (
    MBONBatch,
    MBONViewBatch,
    PPNBatch,
    gradient_check_suite,
    mbon_loss,
    mbon_loss_grads,
    orientation_cosine_loss,
    ppn_loss,
    ppn_loss_grads,
    smooth_l1,
    softmax_ce,
)
from .metrics import (
    AnnotatedObject,
    Detection,
    DetectionSet,
    FrameAnnotations,
    MetricsReport,
    aos,
    average_precision_3d,
    evaluate,
    match_detections,
    moda_modp,
    orientation_score,
    precision_recall,
)
from .orientation import (
    LocalYaw,
    OrientationBins,
    decode_multibin,
    encode_multibin,
    fuse_multiview_orientations,
    global_to_local_yaw,
    local_to_global_yaw,
)
from .pooling import ROI, OrientedBox3D, box3d_vertices, project_roi, roi_pool
from .sim import (
    Obstacle,
    PipelineParams,
    Scene,
    SceneConfig,
    default_obstacles,
    default_rig,
    generate_scene,
    run_geometric_pipeline,
    simulate_frames,
)

__all__ = [
    "__version__",
    # geometry
    "CameraModel", "PixelHomogeneous", "WorldPoint", "project_point",
    "backproject_to_plane", "validate_camera", "look_at_camera", "intrinsics",
    # bev
    "BEVGridSpec", "FeatureGrid", "warp_view_to_bev", "coordinate_maps",
    "fuse_views",
    # boxes
    "BoxBEV", "Anchor", "OffsetBEV", "RotatedBoxBEV", "generate_anchors",
    "encode_offsets", "decode_offsets", "iou_axis_aligned", "iou_rotated_bev",
    "nms", "label_anchors", "select_training_samples", "wrap_angle",
    # orientation
    "LocalYaw", "OrientationBins", "global_to_local_yaw", "local_to_global_yaw",
    "encode_multibin", "decode_multibin", "fuse_multiview_orientations",
    # pooling
    "OrientedBox3D", "ROI", "box3d_vertices", "project_roi", "roi_pool",
    # losses
    "PPNBatch", "MBONBatch", "MBONViewBatch", "smooth_l1", "softmax_ce",
    "orientation_cosine_loss", "ppn_loss", "ppn_loss_grads", "mbon_loss",
    "mbon_loss_grads", "gradient_check_suite",
    # metrics
    "AnnotatedObject", "FrameAnnotations", "Detection", "DetectionSet",
    "MetricsReport", "match_detections", "moda_modp", "precision_recall",
    "average_precision_3d", "aos", "orientation_score", "evaluate",
    # sim
    "SceneConfig", "Scene", "Obstacle", "PipelineParams", "default_rig",
    "default_obstacles", "generate_scene", "simulate_frames",
    "run_geometric_pipeline",
]
