from pydantic_settings import BaseSettings, SettingsConfigDict
import logging
from pathlib import Path
from typing import ClassVar


class Settings(BaseSettings):
    app_name: ClassVar[str] = "Matmul Noise Audit"
    version: ClassVar[str] = "1.0.0"

    # Default directory for reports; the only value read from the environment
    output_dir: Path = Path("reports")

    model_config = SettingsConfigDict(env_prefix="NOISE_AUDIT_", env_file=".env", extra="ignore")

    def setup(self):
        """Create necessary directories."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


settings = Settings()
