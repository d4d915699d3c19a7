"""Configuration module for the assortment solvers."""

import tomllib
from pathlib import Path

from pydantic import BaseModel, Field


class PtasSettings(BaseModel):
    """Settings for the cardinality-constrained approximation scheme."""

    epsilon: float = Field(default=0.75, gt=0.0, lt=1.0, description="Accuracy parameter")
    reps: int = Field(default=20, ge=1, description="Dependent roundings per feasible guess")
    guess_budget: int = Field(
        default=1_000_000, ge=1, description="Maximum number of guesses to enumerate"
    )
    workers: int = Field(default=1, ge=1, description="Threads used for the guess loop")
    seed: int = Field(default=0, ge=0, description="Base seed for the rounding RNG")


class OracleSettings(BaseModel):
    """Settings for the exhaustive oracles."""

    max_cells: int = Field(
        default=16, ge=1, description="Largest n*T the brute-force oracles accept"
    )


class Config(BaseModel):
    """Main configuration for the assortment-visibility tools."""

    ptas: PtasSettings = Field(default_factory=PtasSettings)
    oracle: OracleSettings = Field(default_factory=OracleSettings)
    log_level: str = Field(default="INFO", description="Root logging level")


def load_config(config_path: Path) -> Config:
    """Load configuration from TOML file.

    Args:
        config_path: Path to TOML configuration file

    Returns:
        Config object with loaded settings

    Raises:
        FileNotFoundError: If config file doesn't exist
        ValueError: If config file is invalid
    """
    if not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")

    try:
        with open(config_path, "rb") as f:
            data = tomllib.load(f)
        return Config(**data)
    except Exception as e:
        raise ValueError(f"Invalid configuration file: {e}") from e


def create_default_config() -> Config:
    """Create default configuration.

    Returns:
        Config with desk-scale defaults
    """
    return Config()
