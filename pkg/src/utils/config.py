"""Runtime settings read from the environment.

Environment Variables:
    CONTEST_SEED: Base seed for randomized checks (default: 42)
    CONTEST_JOBS: Worker processes for suites and sweeps (default: 1)
    CONTEST_LOG_LEVEL: Log level for the CLI (default: WARNING)
    CONTEST_ENUMERATION_CAP: Largest battle count enumerated exactly (default: 25)
    CONTEST_SLOW_SECONDS: Elapsed time that triggers a slow-run warning (default: 2.0)

``app.py`` calls ``load_dotenv()`` first, so these may also come from a local
``.env`` file.

Example:
    >>> settings = load_settings({"CONTEST_JOBS": "4"})
    >>> settings.jobs
    4
"""

import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass

if hasattr(logging, "getLevelNamesMapping"):
    _level_names_mapping = logging.getLevelNamesMapping
else:  # Python < 3.11

    def _level_names_mapping() -> dict[str, int]:
        return dict(logging._nameToLevel)


LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class ConfigError(Exception):
    """Exception raised for an invalid environment setting.

    Attributes:
        message: Explanation of the error
        variable: Name of the offending environment variable
    """

    def __init__(self, message: str, variable: str | None = None) -> None:
        self.message = message
        self.variable = variable
        super().__init__(self.message)


@dataclass(frozen=True)
class Settings:
    """Resolved runtime settings."""

    seed: int = 42
    jobs: int = 1
    log_level: str = "WARNING"
    enumeration_cap: int = 25
    slow_seconds: float = 2.0

    @property
    def log_level_number(self) -> int:
        return _level_names_mapping()[self.log_level]


def _read_int(environ: Mapping[str, str], name: str, default: int) -> int:
    raw = environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError as e:
        msg = f"{name} must be an integer, got {raw!r}"
        raise ConfigError(msg, name) from e


def load_settings(environ: Mapping[str, str] | None = None) -> Settings:
    """Build Settings from environment variables.

    Args:
        environ: Mapping to read instead of ``os.environ`` (for tests)

    Returns:
        Validated Settings

    Raises:
        ConfigError: If a variable is malformed or out of range
    """
    env = os.environ if environ is None else environ

    seed = _read_int(env, "CONTEST_SEED", 42)
    jobs = _read_int(env, "CONTEST_JOBS", 1)
    if jobs < 1:
        msg = f"CONTEST_JOBS must be at least 1, got {jobs}"
        raise ConfigError(msg, "CONTEST_JOBS")

    cap = _read_int(env, "CONTEST_ENUMERATION_CAP", 25)
    if not 3 <= cap <= 25:
        msg = f"CONTEST_ENUMERATION_CAP must lie in [3, 25], got {cap}"
        raise ConfigError(msg, "CONTEST_ENUMERATION_CAP")

    log_level = env.get("CONTEST_LOG_LEVEL", "WARNING").strip().upper()
    if log_level not in LOG_LEVELS:
        msg = f"CONTEST_LOG_LEVEL must be one of {LOG_LEVELS}, got {log_level!r}"
        raise ConfigError(msg, "CONTEST_LOG_LEVEL")

    raw_slow = env.get("CONTEST_SLOW_SECONDS", "2.0")
    try:
        slow_seconds = float(raw_slow)
    except ValueError as e:
        msg = f"CONTEST_SLOW_SECONDS must be a number, got {raw_slow!r}"
        raise ConfigError(msg, "CONTEST_SLOW_SECONDS") from e
    if slow_seconds <= 0:
        msg = f"CONTEST_SLOW_SECONDS must be positive, got {slow_seconds}"
        raise ConfigError(msg, "CONTEST_SLOW_SECONDS")

    return Settings(
        seed=seed,
        jobs=jobs,
        log_level=log_level,
        enumeration_cap=cap,
        slow_seconds=slow_seconds,
    )


def warn_if_slow(logger: logging.Logger, operation: str, elapsed: float) -> None:
    """Log completion time, escalating to a warning past the slow threshold."""
    threshold = load_settings().slow_seconds
    if elapsed > threshold:
        logger.warning("Slow operation: %s took %.2fs", operation, elapsed)
    else:
        logger.info("%s finished in %.3fs", operation, elapsed)
