"""Exception types shared across the package."""


class SplatsegError(Exception):
    """Base class for package errors."""


class SceneSchemaError(SplatsegError):
    """A required per-vertex field is missing or malformed."""

    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"missing or invalid PLY field: {field}")


class EmptySceneError(SplatsegError):
    """The loaded scene contains no primitives."""


class UnsupportedCameraModelError(SplatsegError):
    def __init__(self, model):
        self.model = model
        super().__init__(f"unsupported COLMAP camera model: {model}")


class DatasetConsistencyError(SplatsegError):
    """Image/mask pairing is broken; carries the orphaned names."""

    def __init__(self, orphans, message=None):
        self.orphans = list(orphans)
        super().__init__(message or f"unpaired dataset files: {self.orphans}")


class PixelBoundsError(SplatsegError, ValueError):
    """A pixel coordinate lies outside the view."""


class NoHitError(SplatsegError):
    """The click ray never accumulated enough opacity (empty-space click)."""


class EmptyRoiError(SplatsegError):
    """The crop volume around the anchor selected no primitives."""


class AlignmentError(SplatsegError, ValueError):
    """Array lengths that must agree do not."""


class CoverageError(SplatsegError):
    """A point of the region of interest appears in no batch."""


class UndefinedMetricError(SplatsegError):
    """The metric has no value for these inputs (e.g. no ground-truth instances)."""


class MissingViewError(SplatsegError):
    """Predictions do not cover every test view."""

    def __init__(self, view_ids):
        self.view_ids = list(view_ids)
        super().__init__(f"predictions missing for views: {self.view_ids}")
