"""
Record/replay store for chat responses, one JSON file per request digest
"""

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import List, Optional, Union

import structlog

from app.core.errors import NotRecorded
from app.models.llm import ChatRequest, ChatResponse, FixtureEntry

logger = structlog.get_logger(__name__)


def digest_payload(request: ChatRequest) -> dict:
    """The request fields that identify a response

    Timeouts, retry budgets and token limits do not change what the model is
    asked, so they stay out of the digest.
    """
    return {
        "provider_name": request.config.provider_name,
        "model_id": request.config.model_id,
        "temperature": request.config.temperature,
        "messages": [{"role": m.role, "content": m.content} for m in request.messages],
    }


def request_digest(request: ChatRequest) -> str:
    """Stable sha256 over the canonical JSON of the identifying fields"""
    canonical = json.dumps(digest_payload(request), sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def atomic_write_text(path: Path, text: str) -> None:
    """Write through a temp file in the same directory, then rename"""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


class FixtureStore:
    """Directory of `<digest>.json` fixtures"""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    def path_for(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def record_fixture(self, request: ChatRequest, response: ChatResponse) -> str:
        """Persist a response under the request digest; returns the digest"""
        digest = request_digest(request)
        entry = FixtureEntry(
            digest=digest,
            request=digest_payload(request),
            response=response.model_copy(update={"from_cache": False}),
            rendered_prompt="\n\n".join(m.content for m in request.messages),
            template_name=request.template_name,
        )
        atomic_write_text(self.path_for(digest), entry.model_dump_json(indent=2) + "\n")
        logger.info("Recorded fixture", digest=digest, template=request.template_name)
        return digest

    def lookup(self, request: ChatRequest) -> Optional[ChatResponse]:
        path = self.path_for(request_digest(request))
        if not path.exists():
            return None
        entry = FixtureEntry.model_validate_json(path.read_text(encoding="utf-8"))
        return entry.response.model_copy(update={"from_cache": True})

    def replay_fixture(self, request: ChatRequest) -> ChatResponse:
        """Return the stored response verbatim or raise NotRecorded"""
        response = self.lookup(request)
        if response is None:
            digest = request_digest(request)
            logger.error("Fixture not recorded", digest=digest, template=request.template_name)
            raise NotRecorded(digest)
        return response

    def list_entries(self) -> List[FixtureEntry]:
        if not self.directory.is_dir():
            return []
        entries = []
        for path in sorted(self.directory.glob("*.json")):
            try:
                entries.append(FixtureEntry.model_validate_json(path.read_text(encoding="utf-8")))
            except ValueError as e:
                logger.warning("Skipping unreadable fixture", path=str(path), error=str(e))
        return entries
