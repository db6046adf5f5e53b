"""On-disk schemas: calibration, annotations, detections, feature grids.

All text artifacts are JSON (diff-able, language-neutral); feature grids
are a flat little-endian float64 raster plus a JSON header. Loaders reject
invariant-violating files instead of repairing them; writers emit floats
with Python's shortest lossless representation (<= 17 significant digits),
so a write/load round trip reproduces values exactly.

calibration.json
    {"site": {"extent": [w_m, h_m], "plane_altitude": z},
     "cameras": [{"view_id": i, "image_size": [W, H],
                  "K": [9 row-major], "R": [9 row-major], "T": [3]}, ...]}

annotations.json / detections.json
    {"frames": [{"frame_id": i, "objects": [
        {"x":, "y":, "yaw":, "l":, "w":, "h":, ("confidence":)}, ...]}]}
    frame_ids strictly increasing; yaw in (-pi, pi]; confidence in [0, 1].

grid header <stem>.json (raster bytes in <stem>.bin)
    {"shape": [rows, cols, channels], "frame": "bev"|"image",
     "view_id": i|null, "dtype": "float64", "order": "row-major",
     "data": "<stem>.bin"}
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .bev import BEVGridSpec, FeatureGrid
from .errors import ParseError, ValidationError
from .geometry import CameraModel, validate_camera
from .metrics import AnnotatedObject, Detection, DetectionSet, FrameAnnotations


def _read_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def _get(doc: dict, path: str, key: str, expected=None):
    if key.split("[")[0] not in doc:
        raise ParseError(f"missing field {path}.{key}")
    value = doc[key.split("[")[0]]
    if expected is not None and not isinstance(value, expected):
        raise ParseError(f"field {path}.{key} has wrong type")
    return value


def _floats(doc: dict, path: str, key: str, length: int) -> list[float]:
    value = _get(doc, path, key, list)
    if len(value) != length:
        raise ParseError(f"field {path}.{key} must have {length} numbers, "
                         f"got {len(value)}")
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field {path}.{key} must be numeric") from exc


@dataclass
class Calibration:
    """Parsed calibration file: cameras plus site geometry."""

    cameras: list[CameraModel]
    site_extent: tuple[float, float]
    plane_altitude: float

    def grid_spec(self, shape=(120, 160)) -> BEVGridSpec:
        return BEVGridSpec.for_site(extent=self.site_extent, shape=shape,
                                    plane_altitude=self.plane_altitude)


def load_calibration_file(path) -> Calibration:
    """Parse and validate a calibration file (cameras ordered by view_id)."""
    doc = _read_json(path)
    site = _get(doc, "$", "site", dict)
    extent = _floats(site, "$.site", "extent", 2)
    plane_altitude = float(_get(site, "$.site", "plane_altitude", (int, float)))
    entries = _get(doc, "$", "cameras", list)
    cameras = []
    seen = set()
    for idx, entry in enumerate(entries):
        where = f"$.cameras[{idx}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{where} must be an object")
        view_id = _get(entry, where, "view_id", int)
        if view_id in seen:
            raise ParseError(f"{where}.view_id duplicates view {view_id}")
        seen.add(view_id)
        size = _floats(entry, where, "image_size", 2)
        cam = CameraModel(
            K=np.array(_floats(entry, where, "K", 9)).reshape(3, 3),
            R=np.array(_floats(entry, where, "R", 9)).reshape(3, 3),
            T=np.array(_floats(entry, where, "T", 3)),
            image_size=(int(size[0]), int(size[1])),
            view_id=view_id)
        violations = validate_camera(cam)
        if violations:
            raise ValidationError(
                f"camera view_id={view_id} invalid: " + "; ".join(violations))
        cameras.append(cam)
    cameras.sort(key=lambda c: c.view_id)
    return Calibration(cameras=cameras, site_extent=(extent[0], extent[1]),
                       plane_altitude=plane_altitude)


def load_calibration(path) -> list[CameraModel]:
    """Validated camera models, deterministic ordering by view_id."""
    return load_calibration_file(path).cameras


def write_calibration(path, calibration: Calibration) -> None:
    doc = {
        "site": {"extent": list(calibration.site_extent),
                 "plane_altitude": calibration.plane_altitude},
        "cameras": [{
            "view_id": cam.view_id,
            "image_size": list(cam.image_size),
            "K": [float(v) for v in cam.K.ravel()],
            "R": [float(v) for v in cam.R.ravel()],
            "T": [float(v) for v in cam.T],
        } for cam in sorted(calibration.cameras, key=lambda c: c.view_id)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _load_frames(path, with_confidence: bool):
    doc = _read_json(path)
    frames = _get(doc, "$", "frames", list)
    out = []
    last_id = None
    for fi, frame in enumerate(frames):
        where = f"$.frames[{fi}]"
        if not isinstance(frame, dict):
            raise ParseError(f"{where} must be an object")
        frame_id = _get(frame, where, "frame_id", int)
        if last_id is not None and frame_id <= last_id:
            raise ParseError(
                f"{where}.frame_id {frame_id} not strictly increasing")
        last_id = frame_id
        objects = _get(frame, where, "objects", list)
        parsed = []
        for oi, obj in enumerate(objects):
            owhere = f"{where}.objects[{oi}]"
            if not isinstance(obj, dict):
                raise ParseError(f"{owhere} must be an object")
            fields = {}
            for key in ("x", "y", "l", "w", "h"):
                fields[key] = float(_get(obj, owhere, key, (int, float)))
            yaw = obj.get("yaw")
            if yaw is None and not with_confidence:
                raise ParseError(f"missing field {owhere}.yaw")
            if yaw is not None:
                yaw = float(yaw)
                if not -math.pi - 1e-12 < yaw <= math.pi + 1e-12:
                    raise ValidationError(
                        f"{owhere}.yaw {yaw} is not wrapped to (-pi, pi]")
            if fields["l"] <= 0 or fields["w"] <= 0 or fields["h"] <= 0:
                raise ValidationError(f"{owhere} has non-positive size")
            if with_confidence:
                conf = float(_get(obj, owhere, "confidence", (int, float)))
                if not 0.0 <= conf <= 1.0:
                    raise ValidationError(
                        f"{owhere}.confidence {conf} outside [0, 1]")
                parsed.append(Detection(
                    x=fields["x"], y=fields["y"], confidence=conf, yaw=yaw,
                    size=(fields["l"], fields["w"], fields["h"])))
            else:
                parsed.append(AnnotatedObject(
                    x=fields["x"], y=fields["y"], yaw=yaw,
                    size=(fields["l"], fields["w"], fields["h"])))
        out.append((frame_id, parsed))
    return out


def load_annotations(path) -> list[FrameAnnotations]:
    return [FrameAnnotations(frame_id=fid, objects=objs)
            for fid, objs in _load_frames(path, with_confidence=False)]


def load_detections(path) -> list[DetectionSet]:
    return [DetectionSet(frame_id=fid, detections=objs)
            for fid, objs in _load_frames(path, with_confidence=True)]


def write_annotations(path, frames: list[FrameAnnotations]) -> None:
    doc = {"frames": [{
        "frame_id": f.frame_id,
        "objects": [{"x": o.x, "y": o.y, "yaw": o.yaw,
                     "l": o.size[0], "w": o.size[1], "h": o.size[2]}
                    for o in f.objects],
    } for f in sorted(frames, key=lambda f: f.frame_id)]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_detections(path, sets: list[DetectionSet]) -> None:
    doc = {"frames": [{
        "frame_id": s.frame_id,
        "objects": [{"x": d.x, "y": d.y, "yaw": d.yaw,
                     "l": d.size[0], "w": d.size[1], "h": d.size[2],
                     "confidence": d.confidence}
                    for d in s.detections],
    } for s in sorted(sets, key=lambda s: s.frame_id)]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def save_grid(stem, grid: FeatureGrid) -> None:
    """Write <stem>.json header + <stem>.bin row-major little-endian raster."""
    stem = os.fspath(stem)
    if stem.endswith(".json"):
        stem = stem[:-5]
    bin_name = os.path.basename(stem) + ".bin"
    header = {
        "shape": list(grid.data.shape),
        "frame": grid.frame,
        "view_id": grid.view_id,
        "dtype": "float64",
        "order": "row-major",
        "data": bin_name,
    }
    with open(stem + ".json", "w", encoding="utf-8") as fh:
        json.dump(header, fh, indent=2)
        fh.write("\n")
    with open(stem + ".bin", "wb") as fh:
        fh.write(np.ascontiguousarray(grid.data, dtype="<f8").tobytes())


def load_grid(stem) -> FeatureGrid:
    """Inverse of :func:`save_grid`; accepts the stem or the header path."""
    stem = os.fspath(stem)
    header_path = stem if stem.endswith(".json") else stem + ".json"
    header = _read_json(header_path)
    shape = _get(header, "$", "shape", list)
    if len(shape) != 3:
        raise ParseError("$.shape must have 3 entries (rows, cols, channels)")
    if _get(header, "$", "dtype", str) != "float64":
        raise ParseError("$.dtype must be float64")
    if _get(header, "$", "order", str) != "row-major":
        raise ParseError("$.order must be row-major")
    frame = _get(header, "$", "frame", str)
    bin_path = os.path.join(os.path.dirname(header_path) or ".",
                            _get(header, "$", "data", str))
    raw = np.fromfile(bin_path, dtype="<f8")
    expected = shape[0] * shape[1] * shape[2]
    if raw.size != expected:
        raise ParseError(
            f"raster {bin_path} holds {raw.size} values, header says {expected}")
    return FeatureGrid(data=raw.reshape(shape), frame=frame,
                       view_id=header.get("view_id"))
