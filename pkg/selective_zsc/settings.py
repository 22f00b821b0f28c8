"""
Process-level settings read from the environment (prefix SZSC_).
"""
import logging
import os
from functools import lru_cache
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Harness parallelism and log verbosity"""
    model_config = SettingsConfigDict(env_prefix="SZSC_", extra="ignore")

    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1, description="Cap on harness worker threads")
    log_level: str = Field("INFO", description="Root log level for the command line")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v):
        level = v.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"unknown log level '{v}'")
        return level


@lru_cache(maxsize=1)
def get_settings(dotenv_path: Optional[Path] = None) -> Settings:
    """
    Load `.env` from the working directory, then read the environment.

    Cached; call `get_settings.cache_clear()` after changing the environment.
    """
    load_dotenv(dotenv_path or Path.cwd() / ".env", override=False)
    return Settings()
