"""
LLM gateway: provider-agnostic chat completion with record/replay fixtures
"""

import asyncio
import os
import time
from abc import ABC, abstractmethod
from typing import Awaitable, Callable, Dict, Optional, Tuple

import httpx
import structlog
from openai import APIConnectionError, APIError, APIStatusError, APITimeoutError, AsyncOpenAI
from openai.types.chat import ChatCompletion

from app.core.errors import AuthMissing, ConfigError, ProviderError, ProviderTimeout
from app.models.llm import ChatRequest, ChatResponse, GatewayMode
from app.services.fixture_store import FixtureStore, request_digest

logger = structlog.get_logger(__name__)

RETRYABLE_STATUS = {429, 500, 502, 503, 504}
CHAT_COMPLETIONS_PATH = "/chat/completions"

# (content, prompt_tokens, completion_tokens, raw payload)
ProviderReply = Tuple[str, int, int, dict]


class AttemptFailed(Exception):
    """One provider call failed; the gateway decides whether to retry"""

    def __init__(self, status: Optional[int], text: str, retryable: bool, timed_out: bool = False):
        super().__init__(text)
        self.status = status
        self.text = text
        self.retryable = retryable
        self.timed_out = timed_out

    @classmethod
    def from_status(cls, status: int, text: str) -> "AttemptFailed":
        return cls(status, text, retryable=status in RETRYABLE_STATUS)


class LLMProvider(ABC):
    """Translation seam between ChatRequest/ChatResponse and a provider API"""

    @abstractmethod
    async def send(self, request: ChatRequest, api_key: str, client: httpx.AsyncClient) -> ProviderReply:
        """Make a single call, raising AttemptFailed on any failure"""

    @abstractmethod
    def get_provider_name(self) -> str:
        pass


class OpenAIProvider(LLMProvider):
    """OpenAI chat completions through the `openai` SDK

    The SDK's own retries are off; the gateway owns the retry budget.
    """

    @staticmethod
    def base_url(endpoint_url: str) -> str:
        endpoint = endpoint_url.rstrip("/")
        if endpoint.endswith(CHAT_COMPLETIONS_PATH):
            endpoint = endpoint[: -len(CHAT_COMPLETIONS_PATH)]
        return endpoint

    async def send(self, request, api_key, client):
        config = request.config
        sdk = AsyncOpenAI(
            api_key=api_key,
            base_url=self.base_url(config.endpoint_url),
            timeout=config.timeout_seconds,
            max_retries=0,
            http_client=client,
        )
        try:
            raw_response = await sdk.chat.completions.with_raw_response.create(
                model=config.model_id,
                messages=[{"role": m.role, "content": m.content} for m in request.messages],
                temperature=config.temperature,
                max_tokens=config.max_output_tokens,
            )
            completion = raw_response.parse()
        except APITimeoutError:
            raise AttemptFailed(None, "timeout", retryable=True, timed_out=True)
        except APIConnectionError as e:
            raise AttemptFailed(None, f"connection failed: {e.__cause__ or e}", retryable=True)
        except APIStatusError as e:
            raise AttemptFailed.from_status(e.status_code, e.response.text)
        except (APIError, ValueError) as e:
            raise AttemptFailed(200, f"unreadable response: {e}", retryable=False)

        http_response = raw_response.http_response
        if not isinstance(completion, ChatCompletion) or not getattr(completion, "choices", None):
            raise AttemptFailed(http_response.status_code, f"unexpected response: {http_response.text}", retryable=False)

        usage = completion.usage
        return (
            completion.choices[0].message.content or "",
            usage.prompt_tokens if usage else 0,
            usage.completion_tokens if usage else 0,
            http_response.json(),
        )

    def get_provider_name(self) -> str:
        return "openai"


class GeminiProvider(LLMProvider):
    """Gemini `generateContent` over REST on the gateway's httpx client"""

    def build_request(self, request: ChatRequest, api_key: str) -> Tuple[str, Dict[str, str], dict]:
        """Return (url, headers, json body)"""
        config = request.config
        system = "\n\n".join(m.content for m in request.messages if m.role == "system")
        body: dict = {
            "contents": [
                {"role": "user", "parts": [{"text": m.content}]}
                for m in request.messages
                if m.role == "user"
            ],
            "generationConfig": {
                "temperature": config.temperature,
                "maxOutputTokens": config.max_output_tokens,
            },
        }
        if system:
            body["systemInstruction"] = {"parts": [{"text": system}]}
        url = f"{config.endpoint_url.rstrip('/')}/models/{config.model_id}:generateContent"
        headers = {"x-goog-api-key": api_key, "Content-Type": "application/json"}
        return url, headers, body

    def parse_response(self, payload: dict) -> Tuple[str, int, int]:
        try:
            parts = payload["candidates"][0]["content"]["parts"]
            content = "".join(part.get("text", "") for part in parts)
        except (KeyError, IndexError, TypeError, AttributeError) as e:
            raise AttemptFailed(200, f"unexpected response shape: {e!r}", retryable=False)
        usage = payload.get("usageMetadata") or {}
        return content, int(usage.get("promptTokenCount", 0)), int(usage.get("candidatesTokenCount", 0))

    async def send(self, request, api_key, client):
        url, headers, body = self.build_request(request, api_key)
        try:
            response = await client.post(url, headers=headers, json=body, timeout=request.config.timeout_seconds)
        except httpx.TimeoutException:
            raise AttemptFailed(None, "timeout", retryable=True, timed_out=True)
        except httpx.TransportError as e:
            raise AttemptFailed(None, f"connection failed: {e!r}", retryable=True)

        if response.status_code >= 400:
            raise AttemptFailed.from_status(response.status_code, response.text)
        try:
            payload = response.json()
        except ValueError:
            raise AttemptFailed(response.status_code, f"unreadable response: {response.text}", retryable=False)
        if not isinstance(payload, dict):
            raise AttemptFailed(response.status_code, f"unexpected response: {response.text}", retryable=False)
        return (*self.parse_response(payload), payload)

    def get_provider_name(self) -> str:
        return "gemini"


PROVIDERS: Dict[str, Callable[[], LLMProvider]] = {
    "openai": OpenAIProvider,
    "gemini": GeminiProvider,
}


def get_provider(name: str) -> LLMProvider:
    try:
        return PROVIDERS[name]()
    except KeyError:
        raise ConfigError(f"unknown provider {name!r}; expected one of {sorted(PROVIDERS)}")


def resolve_api_key(env_var: str) -> str:
    value = os.environ.get(env_var, "")
    if not value.strip():
        raise AuthMissing(env_var)
    return value


def backoff_delay(attempt: int, base: float) -> float:
    """Delay before retry number `attempt` (0-based): base, 2*base, 4*base, ..."""
    return base * (2 ** attempt)


class LLMGateway:
    """Chat-completion client shared by all pipelines

    Modes: `live` always calls the provider; `cache` serves recorded
    fixtures and records misses; `replay` never touches the network.
    """

    def __init__(
        self,
        mode: GatewayMode = GatewayMode.CACHE,
        store: Optional[FixtureStore] = None,
        max_concurrency: int = 4,
        retry_base_delay: float = 1.0,
        client: Optional[httpx.AsyncClient] = None,
        sleep: Callable[[float], Awaitable[None]] = asyncio.sleep,
    ):
        if mode != GatewayMode.LIVE and store is None:
            raise ConfigError(f"{mode.value} mode requires a fixture store")
        self.mode = mode
        self.store = store
        self.retry_base_delay = retry_base_delay
        self._limiter = asyncio.Semaphore(max_concurrency)
        self._client = client
        self._owns_client = client is None
        self._sleep = sleep

    async def __aenter__(self) -> "LLMGateway":
        return self

    async def __aexit__(self, *exc) -> None:
        await self.close()

    def _get_client(self) -> httpx.AsyncClient:
        if self._client is None:
            self._client = httpx.AsyncClient()
        return self._client

    async def complete(self, request: ChatRequest) -> ChatResponse:
        """Answer a chat request according to the gateway mode"""
        digest = request_digest(request)
        if self.mode == GatewayMode.REPLAY:
            return self.store.replay_fixture(request)

        if self.mode == GatewayMode.CACHE:
            cached = self.store.lookup(request)
            if cached is not None:
                logger.info("Serving response from fixture", digest=digest, template=request.template_name)
                return cached

        # Resolved before any connection is opened
        api_key = resolve_api_key(request.config.api_key_env)
        provider = get_provider(request.config.provider_name)

        async with self._limiter:
            response = await self._call_with_retries(provider, request, api_key, digest)

        if self.mode == GatewayMode.CACHE:
            self.store.record_fixture(request, response)
        return response

    async def _call_with_retries(
        self, provider: LLMProvider, request: ChatRequest, api_key: str, digest: str
    ) -> ChatResponse:
        config = request.config
        client = self._get_client()

        attempt = 0
        while True:
            start_time = time.time()
            try:
                content, prompt_tokens, completion_tokens, payload = await provider.send(request, api_key, client)
            except AttemptFailed as failure:
                if not failure.retryable or attempt >= config.max_retries:
                    logger.error(
                        "Provider call failed",
                        provider=provider.get_provider_name(),
                        status=failure.status,
                        reason=failure.text[:200],
                        digest=digest,
                        attempts=attempt + 1,
                    )
                    if failure.timed_out:
                        raise ProviderTimeout(attempt + 1)
                    raise ProviderError(failure.status, failure.text)

                delay = backoff_delay(attempt, self.retry_base_delay)
                logger.warning(
                    "Retrying provider call", status=failure.status, reason=failure.text[:80], attempt=attempt + 1, delay_s=delay
                )
                await self._sleep(delay)
                attempt += 1
                continue

            latency_ms = int((time.time() - start_time) * 1000)
            logger.info(
                "Provider call completed",
                provider=provider.get_provider_name(),
                model=config.model_id,
                digest=digest,
                latency_ms=latency_ms,
                attempts=attempt + 1,
            )
            return ChatResponse(
                content=content,
                prompt_tokens=prompt_tokens,
                completion_tokens=completion_tokens,
                latency_ms=latency_ms,
                raw=payload,
            )

    async def close(self):
        """Close the HTTP client if the gateway created it"""
        if self._owns_client and self._client is not None:
            await self._client.aclose()
            self._client = None
