"""
Wiring shared by the CLI commands: run configuration and the gateway
"""

import argparse
import json
import os
import re
from pathlib import Path
from typing import Any, Dict, Optional

import structlog
from pydantic import ValidationError

from app.core.config import Settings, settings
from app.core.errors import ConfigError, FileUnreadable
from app.models.document import Document
from app.models.llm import GatewayMode
from app.models.run import RunConfig
from app.services.document_service import document_from_json
from app.services.fixture_store import FixtureStore
from app.services.llm_service import LLMGateway
from app.services.run_service import RunRecorder

logger = structlog.get_logger(__name__)

ENV_REFERENCE = re.compile(r"\$\{(?P<name>[A-Za-z_][A-Za-z0-9_]*)\}")


def settings_defaults(source: Settings) -> Dict[str, Any]:
    """RunConfig fields as configured through the environment / .env"""
    return {
        "provider": {
            "provider_name": source.PROVIDER_NAME,
            "endpoint_url": source.PROVIDER_ENDPOINT_URL,
            "model_id": source.MODEL_ID,
            "api_key_env": source.API_KEY_ENV,
            "temperature": source.TEMPERATURE,
            "max_output_tokens": source.MAX_OUTPUT_TOKENS,
            "timeout_seconds": source.REQUEST_TIMEOUT,
            "max_retries": source.MAX_RETRIES,
        },
        "mode": source.LLM_MODE,
        "templates_dir": source.TEMPLATES_DIR,
        "fixtures_dir": source.FIXTURES_DIR,
        "output_dir": source.OUTPUT_DIR,
        "max_concurrent_requests": source.MAX_CONCURRENT_REQUESTS,
        "retry_base_delay": source.RETRY_BASE_DELAY,
    }


def _interpolate_key_name(value: str) -> str:
    def replace(match: re.Match) -> str:
        name = match.group("name")
        if name not in os.environ:
            raise ConfigError(f"config references unset environment variable {name}")
        return os.environ[name]

    return ENV_REFERENCE.sub(replace, value)


def load_config_file(path: Path) -> Dict[str, Any]:
    """Read a RunConfig JSON file

    Only `provider.api_key_env` may reference the environment; key values
    never belong in a config file.
    """
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise FileUnreadable(str(path), str(e)) from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")

    provider = data.get("provider") or {}
    if "api_key" in provider or "api_key" in data:
        raise ConfigError(f"{path}: api keys are read from the environment, name the variable in provider.api_key_env")
    if isinstance(provider.get("api_key_env"), str):
        provider["api_key_env"] = _interpolate_key_name(provider["api_key_env"])
    return data


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def build_run_config(args: argparse.Namespace, source: Optional[Settings] = None) -> RunConfig:
    """Settings, then the --config file, then command-line flags"""
    data = settings_defaults(source or settings)
    if getattr(args, "config", None):
        data = _merge(data, load_config_file(Path(args.config)))
    if getattr(args, "mode", None):
        data["mode"] = args.mode
    if getattr(args, "out", None):
        data["output_dir"] = args.out
    if getattr(args, "fixtures", None):
        data["fixtures_dir"] = args.fixtures

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "config"
        raise ConfigError(f"invalid configuration at {location}: {first['msg']}") from e

    logger.info(
        "Run configuration",
        mode=config.mode.value,
        provider=config.provider.provider_name,
        model=config.provider.model_id,
        output_dir=str(config.output_dir),
        fixtures_dir=str(config.fixtures_dir) if config.fixtures_dir else None,
    )
    return config


def build_gateway(config: RunConfig) -> LLMGateway:
    store = FixtureStore(config.fixtures_dir) if config.fixtures_dir is not None else None
    return LLMGateway(
        mode=GatewayMode(config.mode),
        store=store,
        max_concurrency=config.max_concurrent_requests,
        retry_base_delay=config.retry_base_delay,
    )


def load_document(recorder: RunRecorder, path: str) -> Document:
    """Read an ingested `<id>.doc.json` file"""
    return document_from_json(recorder.read_input(path))
