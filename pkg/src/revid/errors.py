"""Exception hierarchy shared across the package."""


class RevidError(Exception):
    """Base class for all revid errors."""


class CorpusFormatError(RevidError):
    """Malformed corpus or annotation file; message names file, line and rule."""

    def __init__(self, path, line_no, rule):
        self.path = str(path)
        self.line_no = line_no
        self.rule = rule
        super().__init__(f"{self.path}:{line_no}: {rule}")


class AnnotationError(RevidError):
    """Annotation set violates coverage or index constraints."""


class TransformError(RevidError):
    """Revision list <-> EditSequence transformation failed (crossing,
    coverage or cursor-closure violation)."""


class TrainingError(RevidError):
    """Numerical failure during model training (NaN/Inf, degenerate data)."""


class ModelFormatError(RevidError):
    """Model file corrupt, wrong version, or config-hash mismatch."""
