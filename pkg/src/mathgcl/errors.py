"""Exception types shared across the pipeline."""


class MathGclError(Exception):
    """Base class for every error this package raises on purpose."""


# --- parsing ---------------------------------------------------------------

class ParseError(MathGclError):
    """Base for LaTeX parse failures; carries a character offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class EmptyInput(ParseError):
    def __init__(self):
        super().__init__("empty input", 0)


class UnbalancedDelimiter(ParseError):
    pass


class UnsupportedCommand(ParseError):
    pass


class MalformedRecord(MathGclError):
    """A serialized graph record failed validation."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field {field!r}")
        super().__init__(message + (f" ({', '.join(loc)})" if loc else ""))
        self.field = field
        self.line = line


# --- embeddings ------------------------------------------------------------

class EmptyCorpus(MathGclError):
    pass


# --- encoder / training ----------------------------------------------------

class DimensionMismatch(MathGclError):
    pass


class ShapeMismatch(MathGclError):
    pass


class BatchTooSmall(MathGclError):
    pass


class NoSharedNodes(MathGclError):
    pass


class NonFiniteLoss(MathGclError):
    pass


class EmptyGraph(MathGclError):
    pass


# --- index / retrieval -----------------------------------------------------

class DuplicateId(MathGclError):
    pass


class ZeroVector(MathGclError):
    pass


class ZeroQueryVector(MathGclError):
    pass


class ArtifactMismatch(MathGclError):
    pass


class PipelineStageError(MathGclError):
    """Wraps an error from one pipeline stage with a stage label."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


# --- evaluation ------------------------------------------------------------

class NoRelevantJudged(MathGclError):
    pass


class NoPositiveJudgments(MathGclError):
    pass


class ZeroInput(MathGclError):
    pass


class EmptyIntersection(MathGclError):
    pass


# --- configuration ---------------------------------------------------------

class ConfigError(MathGclError):
    pass
