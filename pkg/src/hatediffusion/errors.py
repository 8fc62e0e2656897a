"""Exception types shared across the pipeline.

Each carries the CLI exit code it maps to.
"""


class HateDiffusionError(Exception):
    exit_code = 2


class UsageError(HateDiffusionError):
    exit_code = 1


class DataError(HateDiffusionError):
    exit_code = 2


class ConvergenceError(HateDiffusionError):
    exit_code = 3

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
