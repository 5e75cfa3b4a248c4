"""Exception hierarchy shared by all modules."""


class GraphHeatError(Exception):
    """Base class for every error raised by graphheat."""


class NonFinite(GraphHeatError, ArithmeticError):
    """A computation produced or received NaN/Inf, or would overflow."""


class InvalidFloor(GraphHeatError, ValueError):
    pass


class EmptyCluster(GraphHeatError):
    """One or more mixture components lost (almost) all responsibility mass."""

    def __init__(self, components, message=None):
        self.components = tuple(int(k) for k in components)
        super().__init__(message or f"empty cluster(s): {list(self.components)}")


class AllRestartsFailed(GraphHeatError):
    def __init__(self, failures):
        self.failures = list(failures)
        detail = "; ".join(f"restart {i}: {err}" for i, err in self.failures)
        super().__init__(f"all {len(self.failures)} restarts failed ({detail})")


class MaxResamples(GraphHeatError):
    pass


# io errors
class FormatError(GraphHeatError, ValueError):
    pass


class ParseError(FormatError):
    def __init__(self, message, row=None, col=None):
        self.row = row
        self.col = col
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", col {col})" if col is not None else ")")
        super().__init__(message + where)


class RaggedRows(ParseError):
    pass


class DuplicateEdge(FormatError):
    pass


class IndexOutOfRange(FormatError):
    pass


class SchemaVersionMismatch(FormatError):
    pass


class MissingFile(SchemaVersionMismatch):
    """A file required by a bundle is absent."""
