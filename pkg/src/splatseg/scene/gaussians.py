"""Gaussian scene container and PLY persistence.

Scenes are stored struct-of-arrays for speed; `GaussianPrimitive` is a
per-index view for callers that want one record. Covariance is kept
factored as (scale, rotation) and reconstructed on demand, which keeps it
positive-definite by construction and matches splat file layouts.

PLY conventions follow the common splat export format: `opacity` holds a
logit, `scale_*` hold logs; both are converted to linear values at load and
back at save. Instance labels live in an integer `inst_label` property
(0 = background). A file carrying only `scale_0`/`scale_1` (planar
primitives) gets a third scale of 1e-6 world units.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from splatseg.errors import EmptySceneError, SceneSchemaError

PLANAR_THIRD_SCALE = 1e-6
SH_C0 = 0.28209479177387814  # band-0 spherical-harmonic basis constant


@dataclass
class GaussianPrimitive:
    """One Gaussian: position, per-axis scale, unit-quaternion rotation
    (w, x, y, z), opacity in [0, 1], base RGB in [0, 1], instance label."""

    position: np.ndarray
    scale: np.ndarray
    rotation: np.ndarray
    opacity: float
    color: np.ndarray
    instance_label: int

    def validate(self):
        if not (0.0 <= self.opacity <= 1.0):
            raise ValueError(f"opacity {self.opacity} outside [0, 1]")
        if abs(float(np.linalg.norm(self.rotation)) - 1.0) > 1e-6:
            raise ValueError("rotation quaternion is not unit-norm")
        if not np.all(self.scale > 0):
            raise ValueError("scale components must be positive")
        if self.instance_label < 0:
            raise ValueError("instance_label must be non-negative")

    def covariance(self) -> np.ndarray:
        """3x3 covariance R diag(scale^2) R^T."""
        r = quat_to_rotmat(self.rotation)
        return r @ np.diag(self.scale.astype(np.float64) ** 2) @ r.T


def quat_to_rotmat(q) -> np.ndarray:
    """Rotation matrix from a (w, x, y, z) quaternion (normalized first)."""
    w, x, y, z = np.asarray(q, dtype=np.float64) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


@dataclass
class GaussianScene:
    """All primitives of one splat reconstruction, struct-of-arrays.

    `unit_scale` converts world units to meters so metric constants
    (sigma, crop radius/height, growth radius) apply to arbitrarily scaled
    reconstructions. Only `labels` is mutable after load, and only through
    the single writer in the segmenter.
    """

    positions: np.ndarray  # (N, 3) float32
    scales: np.ndarray  # (N, 3) float32, linear
    rotations: np.ndarray  # (N, 4) float32, unit (w, x, y, z)
    opacities: np.ndarray  # (N,) float32, linear [0, 1]
    colors: np.ndarray  # (N, 3) float32 [0, 1]
    labels: np.ndarray  # (N,) int32, 0 = background
    unit_scale: float = 1.0
    source_path: str = ""

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float32).reshape(-1, 3)
        n = self.positions.shape[0]
        self.scales = np.ascontiguousarray(self.scales, dtype=np.float32).reshape(n, 3)
        self.rotations = np.ascontiguousarray(self.rotations, dtype=np.float32).reshape(n, 4)
        self.opacities = np.ascontiguousarray(self.opacities, dtype=np.float32).reshape(n)
        self.colors = np.ascontiguousarray(self.colors, dtype=np.float32).reshape(n, 3)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int32).reshape(n)

    def __len__(self):
        return self.positions.shape[0]

    def validate(self):
        if len(self) < 1:
            raise EmptySceneError("scene has no primitives")
        if self.unit_scale <= 0:
            raise ValueError("unit_scale must be positive")
        if np.any(self.opacities < 0) or np.any(self.opacities > 1):
            raise ValueError("opacity outside [0, 1]")
        norms = np.linalg.norm(self.rotations.astype(np.float64), axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("non-unit rotation quaternion")
        if np.any(self.scales <= 0):
            raise ValueError("non-positive scale component")
        if np.any(self.labels < 0):
            raise ValueError("negative instance label")

    def primitive(self, i: int) -> GaussianPrimitive:
        return GaussianPrimitive(
            position=self.positions[i].copy(),
            scale=self.scales[i].copy(),
            rotation=self.rotations[i].copy(),
            opacity=float(self.opacities[i]),
            color=self.colors[i].copy(),
            instance_label=int(self.labels[i]),
        )

    @property
    def primitives(self):
        return [self.primitive(i) for i in range(len(self))]

    def instance_ids(self) -> np.ndarray:
        ids = np.unique(self.labels)
        return ids[ids > 0]


# --- PLY parsing -----------------------------------------------------------

_PLY_DTYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def _read_ply_vertices(path):
    """Parse the vertex element of an ASCII or binary-little-endian PLY into
    a dict of 1-D numpy arrays keyed by property name."""
    raw = Path(path).read_bytes()
    end = raw.find(b"end_header")
    if not raw.startswith(b"ply") or end < 0:
        raise SceneSchemaError("header", f"{path}: not a PLY file")
    header_len = raw.find(b"\n", end) + 1
    header = raw[:header_len].decode("ascii", errors="replace")

    fmt = None
    count = None
    props = []  # (name, numpy dtype char) of the vertex element
    in_vertex = False
    for line in header.splitlines():
        parts = line.strip().split()
        if not parts:
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            in_vertex = parts[1] == "vertex"
            if in_vertex:
                count = int(parts[2])
        elif parts[0] == "property" and in_vertex:
            if parts[1] == "list":
                raise SceneSchemaError(parts[-1], "list properties are not supported on vertices")
            if parts[1] not in _PLY_DTYPES:
                raise SceneSchemaError(parts[-1], f"unknown PLY type {parts[1]}")
            props.append((parts[-1], _PLY_DTYPES[parts[1]]))

    if count is None:
        raise SceneSchemaError("vertex", f"{path}: no vertex element")
    if fmt == "binary_big_endian":
        raise SceneSchemaError("format", "big-endian PLY is not supported")

    names = [name for name, _ in props]
    if fmt == "ascii":
        body = raw[header_len:].decode("ascii")
        flat = np.array(body.split(), dtype=np.float64)
        ncol = len(props)
        if flat.size < count * ncol:
            raise SceneSchemaError("vertex", "truncated ASCII vertex data")
        table = flat[: count * ncol].reshape(count, ncol)
        return {name: table[:, j] for j, (name, _) in enumerate(props)}, count

    dtype = np.dtype([(name, "<" + code) for name, code in props])
    body = raw[header_len:header_len + dtype.itemsize * count]
    if len(body) < dtype.itemsize * count:
        raise SceneSchemaError("vertex", "truncated binary vertex data")
    table = np.frombuffer(body, dtype=dtype, count=count)
    return {name: np.asarray(table[name]) for name in names}, count


def _sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def load_gaussian_ply(path, format_hint: str = "auto") -> GaussianScene:
    """Load a splat PLY into a scene.

    format_hint: 'auto' detects planar files by the absence of `scale_2`;
    '3dgs' requires three scale fields; '2dgs' reads two and injects the
    degenerate third.
    """
    if format_hint not in ("auto", "3dgs", "2dgs"):
        raise ValueError(f"format_hint must be auto|3dgs|2dgs, got {format_hint!r}")
    fields, count = _read_ply_vertices(path)
    if count == 0:
        raise EmptySceneError(f"{path}: PLY has zero vertices")

    for name in ("x", "y", "z"):
        if name not in fields:
            raise SceneSchemaError(name)
    if "opacity" not in fields:
        raise SceneSchemaError("opacity")
    for name in ("rot_0", "rot_1", "rot_2", "rot_3"):
        if name not in fields:
            raise SceneSchemaError(name)
    if "scale_0" not in fields or "scale_1" not in fields:
        raise SceneSchemaError("scale_0" if "scale_0" not in fields else "scale_1")

    planar = format_hint == "2dgs" or (format_hint == "auto" and "scale_2" not in fields)
    if format_hint == "3dgs" and "scale_2" not in fields:
        raise SceneSchemaError("scale_2")

    positions = np.stack([fields["x"], fields["y"], fields["z"]], axis=1).astype(np.float32)

    log_scales = [fields["scale_0"], fields["scale_1"]]
    scales = np.exp(np.stack(log_scales, axis=1).astype(np.float64))
    if planar:
        third = np.full((count, 1), PLANAR_THIRD_SCALE)
    else:
        third = np.exp(fields["scale_2"].astype(np.float64))[:, None]
    scales = np.concatenate([scales, third], axis=1).astype(np.float32)

    rotations = np.stack([fields[f"rot_{i}"] for i in range(4)], axis=1).astype(np.float64)
    norms = np.linalg.norm(rotations, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    rotations = (rotations / norms).astype(np.float32)

    opacities = _sigmoid(fields["opacity"].astype(np.float64)).astype(np.float32)

    if all(f"f_dc_{i}" in fields for i in range(3)):
        dc = np.stack([fields[f"f_dc_{i}"] for i in range(3)], axis=1).astype(np.float64)
        colors = np.clip(SH_C0 * dc + 0.5, 0.0, 1.0).astype(np.float32)
    elif all(name in fields for name in ("red", "green", "blue")):
        rgb = np.stack([fields["red"], fields["green"], fields["blue"]], axis=1).astype(np.float64)
        colors = np.clip(rgb / 255.0, 0.0, 1.0).astype(np.float32)
    else:
        colors = np.full((count, 3), 0.5, dtype=np.float32)

    if "inst_label" in fields:
        labels = np.asarray(fields["inst_label"]).astype(np.int32)
    else:
        labels = np.zeros(count, dtype=np.int32)

    scene = GaussianScene(
        positions=positions,
        scales=scales,
        rotations=rotations,
        opacities=np.clip(opacities, 0.0, 1.0),
        colors=colors,
        labels=labels,
        source_path=str(path),
    )
    scene.validate()
    return scene


def save_labeled_ply(scene: GaussianScene, path) -> None:
    """Write a binary-little-endian splat PLY with an int32 `inst_label`
    property per vertex. Positions and labels round-trip exactly; opacity
    and scale round-trip through logit/log within float32 ulp."""
    n = len(scene)
    with np.errstate(divide="ignore"):  # opacity 0/1 -> -inf/+inf logits
        op64 = scene.opacities.astype(np.float64)
        logits = (np.log(op64) - np.log1p(-op64)).astype(np.float32)
        log_scales = np.log(scene.scales.astype(np.float64)).astype(np.float32)
    dc = ((scene.colors.astype(np.float64) - 0.5) / SH_C0).astype(np.float32)

    dtype = np.dtype(
        [(name, "<f4") for name in (
            "x", "y", "z",
            "f_dc_0", "f_dc_1", "f_dc_2",
            "opacity",
            "scale_0", "scale_1", "scale_2",
            "rot_0", "rot_1", "rot_2", "rot_3",
        )]
        + [("inst_label", "<i4")]
    )
    table = np.empty(n, dtype=dtype)
    table["x"], table["y"], table["z"] = scene.positions.T
    table["f_dc_0"], table["f_dc_1"], table["f_dc_2"] = dc.T
    table["opacity"] = logits
    table["scale_0"], table["scale_1"], table["scale_2"] = log_scales.T
    for i in range(4):
        table[f"rot_{i}"] = scene.rotations[:, i]
    table["inst_label"] = scene.labels

    header_props = "\n".join(
        f"property {'int' if name == 'inst_label' else 'float'} {name}"
        for name in dtype.names
    )
    header = (
        "ply\nformat binary_little_endian 1.0\n"
        f"element vertex {n}\n{header_props}\nend_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(table.tobytes())
