"""
Runtime configuration read from the environment (.env supported)
"""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

load_dotenv()


def _int_env(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value.strip() == "":
        return default
    return int(value)


@dataclass(frozen=True)
class Settings:
    """Toolkit settings"""
    threads: int = 1
    supertile_cap: int = 7
    cell_budget: int = 400
    k_cap: int = 6
    isolation_radius: int = 1
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            threads=max(1, _int_env("SFTKIT_THREADS", 1)),
            supertile_cap=_int_env("SFTKIT_SUPERTILE_CAP", 7),
            cell_budget=_int_env("SFTKIT_CELL_BUDGET", 400),
            k_cap=_int_env("SFTKIT_K_CAP", 6),
            isolation_radius=_int_env("SFTKIT_ISOLATION_RADIUS", 1),
            log_level=os.getenv("SFTKIT_LOG_LEVEL", "INFO"),
        )


settings = Settings.from_env()
