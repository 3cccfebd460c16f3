"""Exception taxonomy shared across the package."""
from __future__ import annotations


class DiscoveryError(Exception):
    """Base class for all package-specific failures."""


class InvalidGraphError(DiscoveryError):
    """A graph definition violates the data model (bad ids, names, edges)."""


class InvalidPairError(DiscoveryError):
    """An ordered-pair query used a self-edge or an out-of-range id."""


class CoverageError(DiscoveryError):
    """A prediction map does not cover exactly the candidate pair set."""


class PromptContractError(DiscoveryError):
    """A prompt render was requested for an ineligible edge or context."""


class ResponseParseError(DiscoveryError):
    """A model response could not be parsed into a decision + confidence."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class AggregationError(DiscoveryError):
    """Sample aggregation was attempted over an empty sample list."""


class TransportError(DiscoveryError):
    """The completion endpoint stayed unreachable after retries."""

    def __init__(self, message: str, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


class GatewayConfigError(DiscoveryError):
    """The completion endpoint rejected the request as malformed (4xx)."""


class PolicyUnavailableError(DiscoveryError):
    """A selection policy cannot run under the current configuration."""


class GridAlignmentError(DiscoveryError):
    """Run logs with mismatched graphs or budget grids were aggregated."""


class LogIntegrityError(DiscoveryError):
    """Recomputed per-round statistics disagree with the logged values."""


class InconsistentOracleError(DiscoveryError):
    """The experiment oracle answered the same pair with different labels."""


class SessionError(DiscoveryError):
    """A session API call hit an invalid state transition."""
