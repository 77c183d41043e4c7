"""Per-point segmentation backends.

A backend classifies each augmented point (x, y, z, r, g, b, weight) as
foreground or background. The contract is a single method::

    segment(points: AugmentedPoints) -> SegmentationLogits   # batch <= 8192

It must be deterministic for fixed input and preserve point order. The
geometric baseline stands in for a trained point network; an external
process speaking a line protocol can seat a neural model without relinking.
Backends may optionally expose ``set_anchor(anchor)``; the pipeline calls it
before batching so seeds can track the click.
"""

from __future__ import annotations

import shlex
import subprocess
from typing import Protocol

import numpy as np

from splatseg import _kernels
from splatseg.errors import SplatsegError
from splatseg.prompts import AnchorPoint, AugmentedPoints
from splatseg.segmenter import SegmentationLogits

GROWTH_RADIUS_M = 0.03
SEED_WEIGHT_MIN = 0.01
FG_SCORE = 0.99
BG_SCORE = 0.01


class SegmentationBackend(Protocol):
    def segment(self, points: AugmentedPoints) -> SegmentationLogits: ...


def baseline_geometric_segment(
    points: AugmentedPoints,
    anchor: AnchorPoint | None,
    growth_radius_m: float = GROWTH_RADIUS_M,
    unit_scale: float = 1.0,
    seed_weight_min: float = SEED_WEIGHT_MIN,
) -> SegmentationLogits:
    """Region growing from the point nearest the anchor: repeatedly absorb
    any point within the growth radius of the grown set (breadth-first over
    a uniform grid of that cell size). Absorbed points score fg=0.99, the
    rest fg=0.01. Only points with click weight >= `seed_weight_min` may
    seed; without a qualifying seed everything is background. When no anchor
    is supplied the highest-weight point seeds."""
    if growth_radius_m <= 0:
        raise ValueError("growth radius must be positive")
    n = len(points)
    if n == 0:
        raise SplatsegError("cannot segment an empty batch")

    weights = points.weights
    eligible = np.nonzero(weights >= seed_weight_min)[0]
    if eligible.size == 0:
        fg = np.full(n, BG_SCORE)
        return SegmentationLogits(fg, 1.0 - fg)

    pos_m = points.positions * unit_scale
    if anchor is None:
        seed = int(eligible[np.argmax(weights[eligible])])
    else:
        anchor_m = np.asarray(anchor.position, dtype=np.float64) * unit_scale
        d2 = np.einsum("ni,ni->n", pos_m[eligible] - anchor_m, pos_m[eligible] - anchor_m)
        seed = int(eligible[np.argmin(d2)])

    member = _kernels.region_grow(pos_m, seed, growth_radius_m).astype(bool)
    fg = np.where(member, FG_SCORE, BG_SCORE)
    return SegmentationLogits(fg, 1.0 - fg)


class BaselineGeometricBackend:
    """Geometric stand-in for a trained per-point network."""

    def __init__(
        self,
        growth_radius_m: float = GROWTH_RADIUS_M,
        unit_scale: float = 1.0,
        seed_weight_min: float = SEED_WEIGHT_MIN,
    ):
        self.growth_radius_m = growth_radius_m
        self.unit_scale = unit_scale
        self.seed_weight_min = seed_weight_min
        self._anchor: AnchorPoint | None = None

    def set_anchor(self, anchor: AnchorPoint | None):
        self._anchor = anchor

    def segment(self, points: AugmentedPoints) -> SegmentationLogits:
        return baseline_geometric_segment(
            points,
            self._anchor,
            self.growth_radius_m,
            self.unit_scale,
            self.seed_weight_min,
        )


class ExternalProcessBackend:
    """Adapter for an external classifier process.

    Protocol, line-delimited over stdin/stdout: for each batch the adapter
    writes one header line with the point count, then one record per point
    ("x y z r g b weight"); the process answers one "fg bg" line per point,
    in order. The process stays alive across batches.
    """

    def __init__(self, command: str):
        self.command = command
        self._proc: subprocess.Popen | None = None

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                shlex.split(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def segment(self, points: AugmentedPoints) -> SegmentationLogits:
        proc = self._ensure()
        n = len(points)
        lines = [f"{n}"]
        for row in points.features:
            lines.append(" ".join(repr(float(v)) for v in row))
        assert proc.stdin is not None and proc.stdout is not None
        proc.stdin.write("\n".join(lines) + "\n")
        proc.stdin.flush()
        fg = np.empty(n)
        bg = np.empty(n)
        for i in range(n):
            reply = proc.stdout.readline()
            if not reply:
                raise SplatsegError(f"backend process {self.command!r} closed its stream")
            a, b = reply.split()
            fg[i] = float(a)
            bg[i] = float(b)
        logits = SegmentationLogits(fg, bg)
        logits.validate()
        return logits

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            assert self._proc.stdin is not None
            self._proc.stdin.close()
            self._proc.wait(timeout=5)
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make_backend(spec: str, unit_scale: float = 1.0, growth_radius_m: float = GROWTH_RADIUS_M):
    """Build a backend from a CLI spec: 'baseline' or 'external:<command>'."""
    if spec == "baseline":
        return BaselineGeometricBackend(growth_radius_m=growth_radius_m, unit_scale=unit_scale)
    if spec.startswith("external:"):
        return ExternalProcessBackend(spec.split(":", 1)[1])
    raise ValueError(f"unknown backend spec {spec!r} (use 'baseline' or 'external:<cmd>')")
