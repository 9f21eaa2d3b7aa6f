"""Exception types shared across the package."""


class MixsynError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(MixsynError, ValueError):
    """Incompatible matrix shapes."""


class UnstableSystemError(MixsynError):
    """An operation required a Hurwitz matrix and got an unstable one."""


class NoStabilizingSolution(MixsynError):
    """The Riccati equation has no stabilizing (or minimal) solution."""


class InfeasiblePolicyError(MixsynError):
    """The policy is outside the H-infinity constrained feasible set."""


class SingleChannelError(MixsynError):
    """An operation requiring identical performance channels got distinct ones."""


class AssumptionError(MixsynError):
    """A model assumption failed at load or check time.

    ``assumption`` names the violated assumption ("Assumption 1" covers
    stabilizability and the robustness margin beta > beta*, "Assumption 2"
    covers definiteness of the weights and W).
    """

    def __init__(self, assumption: str, detail: str):
        self.assumption = assumption
        self.detail = detail
        super().__init__(f"{assumption}: {detail}")


class SamplerError(MixsynError):
    """Feasible-policy sampling failed."""


class ParseError(MixsynError, ValueError):
    """An instance file could not be parsed or validated."""
