"""Exception types raised across the package."""


class AxoError(Exception):
    """Base class for all package errors."""


class DataError(AxoError, ValueError):
    """Input data (files, configs, operands) is malformed or out of range."""


class UnsupportedWidth(DataError):
    pass


class WidthMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class OperandOutOfRange(DataError):
    pass


class IndexOutOfRange(DataError, IndexError):
    pass


class SpaceTooLarge(DataError):
    pass


class CountExceedsFamily(DataError):
    pass


class EmptyPlan(DataError):
    pass


class MalformedRecord(DataError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class DuplicateConfig(DataError):
    def __init__(self, config: str):
        super().__init__(f"duplicate config id {config!r}")
        self.config = config


class SchemaMismatch(DataError):
    pass


class InsufficientData(DataError):
    pass


class DegenerateTarget(DataError):
    pass


class RankDeficient(DataError):
    pass


class WrongDimension(DataError):
    pass


class RefDominated(DataError):
    pass


class AllInfeasible(DataError):
    pass


class OverflowPolicyViolation(DataError):
    pass


class InvalidNetlist(AxoError):
    def __init__(self, violations):
        self.violations = list(violations)
        shown = "; ".join(str(v) for v in self.violations[:5])
        super().__init__(f"netlist has {len(self.violations)} violation(s): {shown}")


class CycleDetected(InvalidNetlist):
    def __init__(self, cells):
        self.cells = list(cells)
        AxoError.__init__(self, f"combinational cycle through cells {self.cells}")
        self.violations = []
