"""Exception types raised across the package."""


class DynEmbedError(Exception):
    """Base class for all package errors."""


class NodeNotFound(DynEmbedError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class StepMismatch(DynEmbedError, ValueError):
    pass


class EmptyGraph(DynEmbedError, ValueError):
    pass


class TooManyParts(DynEmbedError, ValueError):
    pass


class IncompleteAssignment(DynEmbedError, ValueError):
    pass


class EmptyPart(DynEmbedError, ValueError):
    pass


class EmptyCorpus(DynEmbedError, ValueError):
    pass


class EmptyTestSet(DynEmbedError, ValueError):
    pass


class EmptyFirstSnapshot(DynEmbedError, ValueError):
    pass


class ParseError(DynEmbedError, ValueError):
    """Malformed input line; message carries ``file:line``."""

    def __init__(self, path, lineno, msg):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


class FormatError(DynEmbedError, ValueError):
    pass


class MissingArtifact(DynEmbedError, FileNotFoundError):
    pass


class TrainingDiverged(DynEmbedError, FloatingPointError):
    pass
