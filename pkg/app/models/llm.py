"""
LLM gateway models
"""

from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Literal, Optional

import httpx
from pydantic import BaseModel, Field, field_validator, model_validator


class GatewayMode(str, Enum):
    """How the gateway treats the network and the fixture store"""
    LIVE = "live"
    CACHE = "cache"
    REPLAY = "replay"


class ProviderConfig(BaseModel):
    """Provider connection settings"""
    provider_name: str = "openai"
    endpoint_url: str = "https://api.openai.com/v1/chat/completions"
    model_id: str = "gpt-3.5-turbo-1106"
    api_key_env: str = "OPENAI_API_KEY"
    temperature: float = Field(default=0.0, ge=0.0)
    max_output_tokens: int = Field(default=2048, gt=0)
    timeout_seconds: int = Field(default=60, gt=0)
    max_retries: int = Field(default=3, ge=0)

    @field_validator("endpoint_url")
    @classmethod
    def endpoint_is_absolute(cls, v: str) -> str:
        if not httpx.URL(v).is_absolute_url:
            raise ValueError(f"endpoint_url must be absolute, got {v!r}")
        return v


class ChatMessage(BaseModel):
    """Single chat message"""
    role: Literal["system", "user"]
    content: str = Field(min_length=1)


class ChatRequest(BaseModel):
    """Chat-completion request"""
    messages: List[ChatMessage]
    config: ProviderConfig
    # Audit metadata, not part of the request digest
    template_name: Optional[str] = None

    @model_validator(mode="after")
    def has_user_message(self) -> "ChatRequest":
        if not any(m.role == "user" for m in self.messages):
            raise ValueError("a chat request needs at least one user message")
        return self

    @classmethod
    def from_prompt(
        cls,
        prompt: str,
        config: ProviderConfig,
        system: Optional[str] = None,
        template_name: Optional[str] = None,
    ) -> "ChatRequest":
        messages = [ChatMessage(role="system", content=system)] if system else []
        messages.append(ChatMessage(role="user", content=prompt))
        return cls(messages=messages, config=config, template_name=template_name)


class ChatResponse(BaseModel):
    """Chat-completion response"""
    content: str
    prompt_tokens: int = Field(default=0, ge=0)
    completion_tokens: int = Field(default=0, ge=0)
    latency_ms: int = Field(default=0, ge=0)
    from_cache: bool = False
    raw: Dict[str, Any] = Field(default_factory=dict)


class FixtureEntry(BaseModel):
    """On-disk fixture record: `<digest>.json`"""
    digest: str
    request: Dict[str, Any]
    response: ChatResponse
    rendered_prompt: str = ""
    template_name: Optional[str] = None
    recorded_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
