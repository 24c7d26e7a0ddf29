"""
Configuration settings for the matkg toolkit
"""

from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings"""

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    # Application settings
    APP_NAME: str = "matkg - materials literature knowledge maps"
    APP_VERSION: str = "1.0.0"

    # Logging settings
    LOG_LEVEL: str = Field(default="INFO")
    LOG_FORMAT: Literal["json", "console"] = Field(default="json")

    # LLM gateway settings
    LLM_MODE: Literal["live", "cache", "replay"] = Field(default="cache")
    PROVIDER_NAME: str = Field(default="openai")
    PROVIDER_ENDPOINT_URL: str = Field(default="https://api.openai.com/v1/chat/completions")
    MODEL_ID: str = Field(default="gpt-3.5-turbo-1106")
    # Name of the environment variable holding the key, never the key itself
    API_KEY_ENV: str = Field(default="OPENAI_API_KEY")
    TEMPERATURE: float = Field(default=0.0, ge=0.0)
    MAX_OUTPUT_TOKENS: int = Field(default=2048, gt=0)
    REQUEST_TIMEOUT: int = Field(default=60, gt=0)
    MAX_RETRIES: int = Field(default=3, ge=0)
    RETRY_BASE_DELAY: float = Field(default=1.0, ge=0.0)
    MAX_CONCURRENT_REQUESTS: int = Field(default=4, gt=0)

    # Paths
    TEMPLATES_DIR: Optional[str] = Field(default=None)
    FIXTURES_DIR: str = Field(default="fixtures")
    OUTPUT_DIR: str = Field(default="out")

    # Document ingestion
    PLAIN_HEADING_PATTERN: Optional[str] = Field(default=None)


# Global settings instance
settings = Settings()
