"""Exception hierarchy shared by every module."""


class PcmrecError(Exception):
    """Base class for all errors raised by pcmrec."""


class EmptyMatrix(PcmrecError, ValueError):
    pass


class NotSquare(PcmrecError, ValueError):
    pass


class NotSymmetric(PcmrecError, ValueError):
    pass


class DimensionMismatch(PcmrecError, ValueError):
    pass


class InvalidArgument(PcmrecError, ValueError):
    pass


class IndexOutOfRange(PcmrecError, IndexError):
    pass


class RankCollapse(PcmrecError, ArithmeticError):
    """No singular value of the sketch survived the floor; retry with another seed."""


class EmptyObservedSet(PcmrecError, ValueError):
    pass


class NumericalDivergence(PcmrecError, ArithmeticError):
    pass


class EmptyDataset(PcmrecError, ValueError):
    pass


class DuplicateCell(PcmrecError, ValueError):
    pass


class CellSetMismatch(PcmrecError, ValueError):
    pass


class EmptySequence(PcmrecError, ValueError):
    pass


class DatasetError(PcmrecError):
    """Raised while reading a ratings file."""


class MissingHeader(DatasetError, ValueError):
    pass


class MalformedRow(DatasetError, ValueError):
    def __init__(self, line, detail=""):
        self.line = line
        super().__init__(f"malformed row at line {line}" + (f": {detail}" if detail else ""))


class InvalidRating(DatasetError, ValueError):
    def __init__(self, value, line=None):
        self.value = value
        self.line = line
        where = f" at line {line}" if line is not None else ""
        super().__init__(f"rating {value!r} is not on the 0.5..5.0 half-star grid{where}")


class DuplicatePair(DatasetError, ValueError):
    pass


class InvalidRatio(PcmrecError, ValueError):
    pass


class ConfigError(PcmrecError, ValueError):
    pass
