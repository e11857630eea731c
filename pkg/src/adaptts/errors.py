"""Shared exception types.

Validation problems (bad configuration, bad input data) raise
``ConfigError`` so the CLI can map them to exit code 1; unexpected runtime
failures map to exit code 2.
"""


class ConfigError(ValueError):
    """Invalid configuration or user-supplied data."""


class TrainingAborted(RuntimeError):
    """Training stopped on a non-finite loss; carries step and batch ids."""

    def __init__(self, step: int, batch_ids, value: float):
        super().__init__(
            f"non-finite loss {value!r} at step {step} on batch {list(batch_ids)}"
        )
        self.step = step
        self.batch_ids = list(batch_ids)
