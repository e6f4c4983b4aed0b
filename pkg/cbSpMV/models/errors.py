from typing import Optional


class MatrixMarketError(ValueError):
    """Raised when a Matrix Market file cannot be read into a TripletMatrix."""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        location = ""
        if source is not None:
            location += f"{source}"
        if line is not None:
            location += f"{':' if location else 'line '}{line}"
        super().__init__(f"{location}: {message}" if location else message)


class ContainerFormatError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class DegenerateMatrixError(ValueError):
    pass


class PackingError(ValueError):
    pass
