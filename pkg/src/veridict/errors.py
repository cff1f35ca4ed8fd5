"""Shared exception types."""


class VeridictError(Exception):
    """Base class for all package errors; the CLI maps these to exit code 1."""


class MissingPairError(VeridictError):
    """A judgement file without its summary counterpart, or vice versa."""


class UnreadableFileError(VeridictError):
    """A corpus file that could not be read; message carries the path."""


class BackendError(VeridictError):
    """Base class for model/LLM backend failures."""


class BackendUnavailableError(BackendError):
    """The backend endpoint could not be reached at all."""


class TransientBackendError(BackendError):
    """A retryable backend failure (rate limit, 5xx, timeout, empty output)."""


class ChunkGenerationError(BackendError):
    """Some chunks failed after retries; carries the failed chunk indices."""

    def __init__(self, pair_id: str, failed_chunks: list[int]):
        self.pair_id = pair_id
        self.failed_chunks = list(failed_chunks)
        super().__init__(
            f"generation failed for pair {pair_id!r} on chunks {self.failed_chunks}"
        )
