"""splatseg: interactive instance segmentation for Gaussian-splat scenes.

Click prompts are anchored in 3D by ray-opacity accumulation, segmented
directly on the Gaussian primitives through a pluggable per-point backend,
projected to view-consistent 2D instance masks by a tile rasterizer, and
cleaned up by a three-stage morphological refinement. A metric suite
(3D IoU, 2D mIoU/OA, Hungarian-matched P/R/F1, PQ, AP@50) plus an HTTP
session API and a batch CLI round out the package.
"""

from splatseg._kernels import KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
