"""Application configuration settings.

This module provides configuration management.
All settings are loaded from environment variables (and an optional .env file);
command-line flags override them field by field.
"""

import logging
import os
import sys
from dataclasses import dataclass, replace
from typing import Any

from dotenv import load_dotenv

from src.exceptions import ConfigurationError


@dataclass(frozen=True)
class Settings:
    """Numerical and runtime settings loaded from environment variables.

    Attributes:
        log_level: Logging level (INFO, DEBUG, WARNING, ERROR)
        threads: Worker threads for sweeps and fuzz batches
        seed: Seed for every random generator used by fuzz suites
        tolerance: Default absolute tolerance for identity checks
        grid_depth: Dyadic depth of the interval-selection search grid
        fuzz_cases: Random cases per algebra in the identity suites
        output_dir: Directory receiving curve/ledger artifacts
        algebra_dir: Directory searched for user algebra tables
    """

    # Logging Configuration
    log_level: str = "INFO"

    # Execution Configuration
    threads: int = 1
    seed: int = 12345

    # Numerical Configuration
    tolerance: float = 1e-9
    grid_depth: int = 6
    fuzz_cases: int = 1000

    # Artifact Configuration
    output_dir: str = "./artifacts"
    algebra_dir: str = ""

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ConfigurationError(f"CARNOT_THREADS must be >= 1, got {self.threads}")
        if not self.tolerance > 0:
            raise ConfigurationError(f"CARNOT_TOLERANCE must be positive, got {self.tolerance}")
        if self.grid_depth < 1:
            raise ConfigurationError(f"CARNOT_GRID_DEPTH must be >= 1, got {self.grid_depth}")
        if self.fuzz_cases < 1:
            raise ConfigurationError(f"CARNOT_FUZZ_CASES must be >= 1, got {self.fuzz_cases}")

    @classmethod
    def from_env(cls) -> "Settings":
        """Load settings from environment variables.

        Returns:
            Settings instance loaded from environment

        Raises:
            ConfigurationError: If a variable is set to an invalid value
        """
        # Load .env file if it exists (for local development)
        load_dotenv()

        return cls(
            log_level=os.getenv("LOG_LEVEL", "INFO"),
            threads=_env_number("CARNOT_THREADS", "1", int),
            seed=_env_number("CARNOT_SEED", "12345", int),
            tolerance=_env_number("CARNOT_TOLERANCE", "1e-9", float),
            grid_depth=_env_number("CARNOT_GRID_DEPTH", "6", int),
            fuzz_cases=_env_number("CARNOT_FUZZ_CASES", "1000", int),
            output_dir=os.getenv("CARNOT_OUTPUT_DIR", "./artifacts"),
            algebra_dir=os.getenv("CARNOT_ALGEBRA_DIR", ""),
        )

    def with_overrides(self, **overrides: Any) -> "Settings":
        """Return a copy with the given non-None fields replaced.

        Args:
            **overrides: Field values, typically parsed command-line flags

        Returns:
            New Settings instance
        """
        values = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **values)


def _env_number(name: str, default: str, kind: type) -> Any:
    raw = os.getenv(name, default)
    try:
        return kind(raw)
    except ValueError:
        raise ConfigurationError(
            f"{name} environment variable must be a {kind.__name__}, got '{raw}'"
        )


def get_settings() -> Settings:
    """Get application settings instance.

    Returns:
        Settings instance loaded from environment
    """
    return Settings.from_env()


def configure_logging(settings: Settings) -> None:
    """Configure application logging.

    Log records go to stderr; stdout is reserved for JSON/CSV artifacts.

    Args:
        settings: Application settings with log level
    """
    log_level = getattr(logging, settings.log_level.upper(), logging.INFO)

    logging.basicConfig(
        level=log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
        force=True,
    )
