"""Exception hierarchy.

Every exception carries an ``exit_code`` used by the command line tool.
"""


class StmeshError(Exception):
    exit_code = 1


class MeshFormatError(StmeshError):
    """Malformed mesh or config file."""

    exit_code = 2

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MeshError(StmeshError):
    """Structurally broken mesh (e.g. a facet shared by three elements)."""

    exit_code = 4


class InconsistentNumberingError(StmeshError):
    exit_code = 3

    def __init__(self, message, pairs=()):
        super().__init__(message)
        self.pairs = list(pairs)


class NonAdmissibleError(StmeshError):
    exit_code = 4

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DegenerateElementError(StmeshError):
    exit_code = 5

    def __init__(self, message, elements=()):
        super().__init__(message)
        self.elements = list(elements)


class SolverError(StmeshError):
    exit_code = 6

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)
