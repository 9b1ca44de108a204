from .client import (
    DEFAULT_MAX_ATTEMPTS,
    DEFAULT_MAX_OUTPUT,
    DEFAULT_TEMPERATURE,
    SHAPES,
    CompletionRequest,
    CompletionResponse,
    HTTPProvider,
    LLMClient,
    Provider,
    RateLimiter,
    ResponseCache,
    cache_key,
    complete,
)
from .mock import Corrupt, EchoGold, FixedText, MockProvider, mock_provider

__all__ = [
    "DEFAULT_MAX_ATTEMPTS",
    "DEFAULT_MAX_OUTPUT",
    "DEFAULT_TEMPERATURE",
    "SHAPES",
    "CompletionRequest",
    "CompletionResponse",
    "Corrupt",
    "EchoGold",
    "FixedText",
    "HTTPProvider",
    "LLMClient",
    "MockProvider",
    "Provider",
    "RateLimiter",
    "ResponseCache",
    "cache_key",
    "complete",
    "mock_provider",
]
