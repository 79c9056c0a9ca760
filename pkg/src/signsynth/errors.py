"""Exception hierarchy shared across the package."""


class SignSynthError(Exception):
    """Base class for all package errors."""


class ImagingError(SignSynthError):
    pass


class IoError(ImagingError, OSError):
    """Missing, unreadable, or unwritable file."""


class DecodeError(ImagingError):
    """Malformed or unsupported PNG."""


class InvalidDimension(ImagingError, ValueError):
    pass


class InvalidParameter(SignSynthError, ValueError):
    """A transform parameter lies outside its legal domain."""


class ConfigError(SignSynthError):
    """Invalid configuration file or value."""


class EmptyBackgroundPool(SignSynthError):
    pass


class MaskMismatch(SignSynthError, ValueError):
    pass


class GenerationError(SignSynthError):
    pass


class InsufficientCanonicals(GenerationError):
    pass


class RetryExhausted(GenerationError):
    def __init__(self, class_id, index, reasons):
        self.class_id = class_id
        self.index = index
        self.reasons = list(reasons)
        super().__init__(
            f"class {class_id!r} slot {index}: every attempt rejected by the quality filter "
            f"({', '.join(sorted(set(self.reasons)))})"
        )


class CatalogError(SignSynthError):
    pass


class ParseError(CatalogError):
    pass


class UnmappedLabel(CatalogError):
    def __init__(self, dataset_id, labels):
        self.dataset_id = dataset_id
        self.labels = sorted(set(labels))
        super().__init__(f"dataset {dataset_id!r}: unmapped labels {self.labels}")


class MissingImage(CatalogError):
    def __init__(self, paths):
        self.paths = [str(p) for p in paths]
        shown = ", ".join(self.paths[:5])
        more = f" (+{len(self.paths) - 5} more)" if len(self.paths) > 5 else ""
        super().__init__(f"missing image files: {shown}{more}")


class ClassifierError(SignSynthError):
    pass


class UnknownSample(ClassifierError, KeyError):
    def __init__(self, model_id, sample_id):
        self.model_id = model_id
        self.sample_id = sample_id
        super().__init__(f"model {model_id!r} has no prediction for sample {sample_id!r}")

    def __str__(self):
        return self.args[0]


class EmptyClass(ClassifierError):
    def __init__(self, classes):
        self.classes = sorted(classes)
        super().__init__(f"no training samples for classes {self.classes}")


class ClosedSetViolation(ClassifierError):
    pass


class EvaluationError(SignSynthError):
    pass


class EmptyGlobalIntersection(EvaluationError):
    pass


class MissingTestSplit(EvaluationError):
    pass
