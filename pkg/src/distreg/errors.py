"""Package-specific exception types.

Plain precondition violations (wrong shapes, bad enum values, nonpositive
parameters) raise ``ValueError``; the classes below mark failures that carry
extra structure or that callers may want to handle specially.
"""


class DistRegError(Exception):
    """Base class for distreg-specific failures."""


class NumericalInconsistencyError(DistRegError):
    """A computed quantity violated a bound that holds in exact arithmetic."""


class DegenerateCorpusError(DistRegError):
    """An estimation routine was handed data with no usable variation."""


class SingularSystemError(DistRegError):
    """The representer linear system is numerically singular.

    :ivar condition_estimate: 1-norm condition estimate of the system matrix.
    :ivar suggested_jitter: additive bump to lambda1 that should restore
        solvability without visibly changing the estimator.
    """

    def __init__(self, condition_estimate, suggested_jitter):
        self.condition_estimate = condition_estimate
        self.suggested_jitter = suggested_jitter
        super().__init__(
            f"linear system numerically singular (condition estimate "
            f"{condition_estimate:.3e} > 1e14); retry with lambda1 increased "
            f"by about {suggested_jitter:.3e}"
        )


class LocalFitError(DistRegError):
    """A per-machine fit inside a distributed run failed.

    :ivar subset: index of the partition subset whose fit raised.
    """

    def __init__(self, subset, message):
        self.subset = subset
        super().__init__(f"fit failed on subset {subset}: {message}")
