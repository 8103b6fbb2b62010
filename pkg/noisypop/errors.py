"""
Exceptions raised by the recovery library
"""

from typing import Optional


class NoisyPopError(Exception):
    """Base class for every error the library raises on purpose."""


class DimensionMismatchError(NoisyPopError, ValueError):
    """Two bit vectors (or a vector and a distribution) disagree on n."""

    def __init__(self, left: int, right: int):
        super().__init__(f"dimension mismatch: {left} != {right}")
        self.left = left
        self.right = right


class OracleSizeError(NoisyPopError, ValueError):
    """A brute-force routine was asked for a cube larger than its guard."""

    def __init__(self, n: int, limit: int):
        super().__init__(f"n={n} exceeds the brute-force guard n<={limit}")
        self.n = n
        self.limit = limit


class SubsetCapError(NoisyPopError, ValueError):
    """Attenuated kernel requested for a subset above the configured cap."""


class LPSolveError(NoisyPopError):
    """The simplex solver could not certify an optimum."""


class InfeasibleError(LPSolveError):
    """Raised when the linear program has no feasible point."""


class UnboundedError(LPSolveError):
    """Raised when the objective is unbounded below."""


class LocalInverseError(NoisyPopError):
    """Normalization of a local inverse failed (alpha_0 == 0)."""


class EllBoundError(NoisyPopError):
    """A built test function violates its interpolation guarantee."""


class FarSetGuaranteeError(NoisyPopError):
    """The Upsilon estimate fell below the floor the pipeline divides by."""

    def __init__(self, upsilon: float, floor: float):
        super().__init__(
            f"Upsilon estimate {upsilon:.6f} is below {floor}; "
            "the far-set guarantee does not hold for this instance"
        )
        self.upsilon = upsilon
        self.floor = floor


class InsufficientSamplesError(NoisyPopError):
    """A fixed sample source holds fewer samples than the budget needs."""

    def __init__(self, required: int, available: int):
        super().__init__(f"need {required} samples, only {available} available")
        self.required = required
        self.available = available


class InputFileError(NoisyPopError, ValueError):
    """A population, sample or support file could not be read."""

    def __init__(self, message: str, path: Optional[str] = None):
        prefix = f"{path}: " if path else ""
        super().__init__(prefix + message)
        self.path = path


class SampleBudgetError(NoisyPopError):
    """A sample budget exceeds the configured limit on samples per estimate."""

    def __init__(self, required: int, limit: int):
        super().__init__(
            f"the estimate needs M = {required} samples, above the limit of {limit}; "
            "pass --sample-cap (or raise NOISYPOP_MAX_SAMPLES) to draw fewer"
        )
        self.required = required
        self.limit = limit


class UncoveredSupportError(NoisyPopError):
    """Support points lie between r and the far threshold and the gap policy is "fail"."""
