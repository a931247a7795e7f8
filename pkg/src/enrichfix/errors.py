"""Exception hierarchy shared by every module."""


class InputError(ValueError):
    """Malformed or out-of-range input (bad shape, non-finite value, bad parameter)."""


class DomainError(InputError):
    """A point lies outside the domain of a mapping or region."""


class SchemaError(InputError):
    """Constants do not match the schema of a contraction class, or are infeasible."""


class CertificateError(RuntimeError):
    """An operation that needs a passing certificate was handed a failed or missing one."""


class DivergenceError(RuntimeError):
    """An iteration left its domain, produced non-finite values or kept growing.

    The partial trace is attached as ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
