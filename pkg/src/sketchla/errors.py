"""Exception types raised by sketchla."""


class SketchError(Exception):
    """Base class for all library errors."""


class ShapeError(SketchError, ValueError):
    def __init__(self, msg="shape mismatch"):
        super().__init__(f"shape: {msg}")


class RankDeficientError(SketchError, ValueError):
    def __init__(self, msg="matrix is rank-deficient"):
        super().__init__(f"rank-deficient: {msg}")


class SparsityError(SketchError, ValueError):
    def __init__(self, msg="nonzeros per column exceed row count"):
        super().__init__(f"sparsity: {msg}")


class LengthError(SketchError, ValueError):
    def __init__(self, msg="length must be a power of two"):
        super().__init__(f"length: {msg}")


class BasisError(SketchError, ValueError):
    def __init__(self, msg="basis columns are not orthonormal"):
        super().__init__(f"basis: {msg}")


class MatrixMarketError(SketchError, ValueError):
    """Malformed Matrix Market input; carries the 1-based line number."""

    def __init__(self, msg, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{msg}")
