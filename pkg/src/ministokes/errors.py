"""Exception hierarchy."""


class MiniStokesError(Exception):
    pass


class DegenerateTriangleError(MiniStokesError, ValueError):
    pass


class UnsupportedDegreeError(MiniStokesError, ValueError):
    pass


class MeshGenerationError(MiniStokesError):
    """Force-equilibrium iteration did not settle."""

    def __init__(self, message, iterations=None, last_move=None):
        super().__init__(message)
        self.iterations = iterations
        self.last_move = last_move


class MeshRepairError(MiniStokesError):
    def __init__(self, message, triangle=None):
        super().__init__(message)
        self.triangle = triangle


class PivotError(MiniStokesError, ArithmeticError):
    def __init__(self, row):
        super().__init__(f"zero pivot in incomplete factorization at row {row}")
        self.row = row


class SingularMatrixError(MiniStokesError, ArithmeticError):
    pass


class DegenerateReportError(MiniStokesError, ZeroDivisionError):
    pass
