"""
Configuration management using pydantic-settings.
Reads from .env file and environment variables (prefix STOCHCAP_).
"""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit configuration"""

    log_level: str = "INFO"

    heavy_vehicle_length_m: float = 9.0  # strictly longer counts as 2 PCE
    max_speed_kmh: float = 250.0
    max_length_m: float = 30.0

    likelihood_floor: float = 1e-300
    optimizer_max_iterations: int = 500
    optimizer_simplex_tolerance: float = 1e-8
    optimizer_grid_size: int = 20

    significant_digits: int = 6
    default_probability_levels: tuple[float, ...] = (0.001, 0.005, 0.01, 0.02, 0.05, 0.1)

    congestion_skip_minutes: int = 15

    model_config = SettingsConfigDict(
        env_prefix="STOCHCAP_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )


settings = Settings()
