import json
from pathlib import Path
from typing import Dict, List, Union

import httpx
import pytest

from app.models.llm import ProviderConfig

FIXTURES = Path(__file__).parent / "fixtures"

# Instruction openings of the shipped templates
SUMMARY_MARKER = "Write a concise summary"
SUMMARY_TO_KG_MARKER = "Convert the summary below"
RELATION_MARKER = "Identify the entities"
TABLES_MARKER = "Extract the structured data"


def openai_payload(content: str, prompt_tokens: int = 11, completion_tokens: int = 7) -> dict:
    return {
        "id": "chatcmpl-test",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens},
    }


class ScriptedProvider:
    """OpenAI-style fake: answers by which marker text appears in the prompt

    Each marker maps to one answer or a queue of answers; the last answer of
    a queue is repeated.
    """

    def __init__(self, answers: Dict[str, Union[str, List[str]]]):
        self.answers = {k: [v] if isinstance(v, str) else list(v) for k, v in answers.items()}
        self.requests: List[dict] = []

    def __call__(self, request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        self.requests.append(body)
        prompt = "\n".join(m["content"] for m in body["messages"])
        for marker, queue in self.answers.items():
            if marker in prompt:
                answer = queue.pop(0) if len(queue) > 1 else queue[0]
                return httpx.Response(200, json=openai_payload(answer))
        return httpx.Response(404, json={"error": "no scripted answer"})

    def client(self) -> httpx.AsyncClient:
        return httpx.AsyncClient(transport=httpx.MockTransport(self))


class RecordingSleep:
    def __init__(self):
        self.delays: List[float] = []

    async def __call__(self, delay: float) -> None:
        self.delays.append(delay)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def read_fixture():
    def read(name: str) -> str:
        return (FIXTURES / name).read_text(encoding="utf-8")

    return read


@pytest.fixture
def provider_config() -> ProviderConfig:
    return ProviderConfig(
        provider_name="openai",
        endpoint_url="https://llm.test/v1/chat/completions",
        model_id="gpt-3.5-turbo-1106",
        api_key_env="MATKG_TEST_KEY",
        max_retries=3,
    )


@pytest.fixture
def api_key(monkeypatch) -> str:
    monkeypatch.setenv("MATKG_TEST_KEY", "sk-test-not-a-real-key")
    return "sk-test-not-a-real-key"


@pytest.fixture
def recording_sleep() -> RecordingSleep:
    return RecordingSleep()


@pytest.fixture
def pipeline_answers(read_fixture) -> Dict[str, str]:
    """Canned model answers for the titanium alloy document"""
    return {
        SUMMARY_TO_KG_MARKER: read_fixture("responses/gen2_kg.md"),
        SUMMARY_MARKER: read_fixture("responses/gen2_summary.txt"),
        RELATION_MARKER: read_fixture("responses/gen1_triplets.json"),
        TABLES_MARKER: read_fixture("gemini_tables.md"),
    }
