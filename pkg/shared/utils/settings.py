"""Runtime settings read from the environment (and a local .env file)."""

import logging
import os
from dataclasses import dataclass

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}, using {default}")
        return default


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"Ignoring non-numeric {name}={raw!r}, using {default}")
        return default


@dataclass
class Settings:
    log_level: str = "INFO"
    threads: int = 0                     # 0 = numba default
    max_work: float = 2e10               # weight evaluations per sweep row
    database_url: str = "sqlite:///radon_sweeps.db"
    progress: bool = True

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            log_level=os.getenv("RADON_LOG_LEVEL", "INFO").strip().upper() or "INFO",
            threads=_env_int("RADON_THREADS", 0),
            max_work=_env_float("RADON_MAX_WORK", 2e10),
            database_url=os.getenv("RADON_DATABASE_URL", "sqlite:///radon_sweeps.db"),
            progress=os.getenv("RADON_PROGRESS", "1").strip().lower() not in ("0", "false", "no", "off"),
        )


def get_settings() -> Settings:
    return Settings.from_env()
