"""Exception hierarchy shared by all linkpulse modules."""


class LinkpulseError(Exception):
    """Base class; ``code`` is the short machine-readable name used on the wire."""

    code = "internal"


class InvalidId(LinkpulseError, ValueError):
    code = "invalid_id"


class TimestampRegression(LinkpulseError):
    code = "timestamp_regression"


class UnknownSite(LinkpulseError, KeyError):
    code = "unknown_site"

    def __str__(self) -> str:
        return Exception.__str__(self)


class UnknownLink(LinkpulseError, KeyError):
    code = "unknown_link"

    def __str__(self) -> str:
        return Exception.__str__(self)


class DegenerateDenominator(LinkpulseError, ArithmeticError):
    """The sum over the other links of a site is zero."""

    code = "degenerate_denominator"


class EmptyGraph(LinkpulseError):
    code = "empty_graph"


class InvalidConfig(LinkpulseError, ValueError):
    code = "invalid_config"


class EmptyQuery(LinkpulseError, ValueError):
    code = "empty_query"


class NoContent(LinkpulseError):
    """Popularity pruning or query filtering left nothing to summarize."""

    code = "no_content"


class BindFailure(LinkpulseError, OSError):
    code = "bind_failure"


class RemoteError(LinkpulseError):
    """Failure talking to a remote site; ``endpoint`` names the culprit."""

    def __init__(self, endpoint: str, message: str):
        super().__init__(f"{endpoint}: {message}")
        self.endpoint = endpoint


class FetchTimeout(RemoteError):
    code = "timeout"


class MalformedResponse(RemoteError):
    code = "malformed_response"
