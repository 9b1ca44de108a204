"""Exception hierarchy shared by every frameicl module."""


class FrameICLError(Exception):
    """Base class for all frameicl errors."""


# -- store -----------------------------------------------------------------

class StoreError(FrameICLError):
    pass


class MissingFrameFile(StoreError):
    """A lexical unit references a frame that was not loaded."""


class OffsetOutOfBounds(StoreError, ValueError):
    """An annotation offset falls outside its sentence."""


class EmptyStore(StoreError):
    """No valid frame could be loaded."""


class SchemaVersionMismatch(StoreError):
    pass


class ValidationFailure(StoreError):
    def __init__(self, message, line=None, record_id=None):
        self.line = line
        self.record_id = record_id
        where = []
        if line is not None:
            where.append(f"line {line}")
        if record_id is not None:
            where.append(f"record {record_id!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class UnknownFrame(StoreError, KeyError):
    def __str__(self):
        return f"unknown frame: {self.args[0]!r}"


class UnknownExample(StoreError, KeyError):
    def __str__(self):
        return f"unknown example id: {self.args[0]!r}"


# -- dataset ---------------------------------------------------------------

class InsufficientExamples(FrameICLError):
    def __init__(self, requested, availability):
        self.requested = requested
        self.availability = dict(availability)
        avail = ", ".join(f"{k}={v}" for k, v in self.availability.items())
        super().__init__(
            f"requested {requested} examples but only "
            f"{sum(self.availability.values())} are available ({avail})"
        )


class NOutOfRange(FrameICLError, ValueError):
    pass


# -- prompts ---------------------------------------------------------------

class ShotFrameMismatch(FrameICLError, ValueError):
    pass


# -- llm -------------------------------------------------------------------

class ProviderError(FrameICLError):
    pass


class AuthError(ProviderError):
    pass


class RateLimited(ProviderError):
    pass


class TransportError(ProviderError):
    pass


class ProviderRefusal(ProviderError):
    """Non-retryable content-policy refusal."""


class UnknownSentence(ProviderError, KeyError):
    pass


# -- output parsing --------------------------------------------------------

class NoPayload(FrameICLError, ValueError):
    pass


class NotFound(FrameICLError, ValueError):
    pass


# -- runner ----------------------------------------------------------------

class ConfigError(FrameICLError, ValueError):
    pass


class BudgetExceeded(FrameICLError):
    def __init__(self, shots, length, limit, model_id=None):
        self.shots = shots
        self.length = length
        self.limit = limit
        self.model_id = model_id
        super().__init__(
            f"prompt with {shots} shots is {length} chars, "
            f"exceeding the budget of {limit} by {length - limit}"
        )


class ProviderExhausted(FrameICLError):
    pass
