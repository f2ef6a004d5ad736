"""Exception hierarchy shared across the package."""


class ShrimpmorphError(Exception):
    """Base class for all package-specific errors."""


class MissingKeypoint(ShrimpmorphError):
    pass


class ParseError(ShrimpmorphError):
    pass


class SchemaError(ShrimpmorphError):
    pass


class UnknownVariable(ShrimpmorphError):
    pass


class FormatError(ShrimpmorphError):
    pass


class IoError(ShrimpmorphError):
    pass


class EmptyCorpus(ShrimpmorphError):
    pass


class DegenerateData(ShrimpmorphError):
    pass


class KindMismatch(ShrimpmorphError):
    pass


class MissingLabel(ShrimpmorphError):
    pass


class ShapeMismatch(ShrimpmorphError):
    pass


class OutOfBounds(ShrimpmorphError):
    pass


class VariantMismatch(ShrimpmorphError):
    pass


class MissingVariant(ShrimpmorphError):
    pass


class UnitMismatch(ShrimpmorphError):
    pass


class MissingModel(ShrimpmorphError):
    pass


class MissingVariable(ShrimpmorphError):
    pass


class DegenerateArea(ShrimpmorphError):
    pass


class NotFound(ShrimpmorphError):
    pass


class AlreadyResolved(ShrimpmorphError):
    pass


class CorruptRecord(ShrimpmorphError):
    pass


class ModelLoadError(ShrimpmorphError):
    pass
