"""
Run bookkeeping: artifact writes and the run manifest
"""

import hashlib
import json
from pathlib import Path
from typing import Iterable, Optional, Union

import structlog

from app.core.errors import FileUnreadable
from app.models.run import ArtifactRecord, RunConfig, RunManifest, RunStatus
from app.services.fixture_store import atomic_write_text

logger = structlog.get_logger(__name__)

MANIFESTS_DIR = "manifests"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def config_digest(config: RunConfig) -> str:
    """Digest of the canonical config JSON (paths as given)"""
    return sha256_text(json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":")))


def read_input(path: Union[str, Path]) -> str:
    path = Path(path)
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        logger.error("Cannot read input", path=str(path), error=str(e))
        raise FileUnreadable(str(path), str(e)) from e


class RunRecorder:
    """Collects inputs, artifacts and diagnostics of one CLI invocation

    Artifacts go through temp-file-then-rename. Used as a context manager,
    the manifest is written under `<output_dir>/manifests/<run_id>.json`
    when the block exits, with status "failed" and the error if it raised.
    """

    def __init__(self, command: str, config: RunConfig):
        self.config = config
        self.output_dir = Path(config.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(command=command, config_digest=config_digest(config))
        self.manifest_path: Optional[Path] = None

    def __enter__(self) -> "RunRecorder":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc is not None:
            self.fail(exc)
        self.finish()
        return False

    def read_input(self, path: Union[str, Path]) -> str:
        """Read a UTF-8 input file and record its digest"""
        text = read_input(path)
        self.manifest.input_digests[str(path)] = sha256_text(text)
        return text

    def write_artifact(self, name: str, text: str) -> Path:
        path = self.output_dir / name
        atomic_write_text(path, text)
        self.manifest.artifacts.append(ArtifactRecord(path=str(path), sha256=sha256_text(text)))
        logger.info("Wrote artifact", path=str(path))
        return path

    def add_diagnostics(self, diagnostics: Iterable[str]) -> None:
        self.manifest.diagnostics.extend(diagnostics)

    def fail(self, error: BaseException) -> None:
        self.manifest.status = RunStatus.FAILED
        self.manifest.error = str(error) or type(error).__name__

    def finish(self) -> Path:
        path = self.output_dir / MANIFESTS_DIR / f"{self.manifest.run_id}.json"
        atomic_write_text(path, self.manifest.model_dump_json(indent=2) + "\n")
        self.manifest_path = path
        log = logger.info if self.manifest.status == RunStatus.OK else logger.warning
        log(
            "Run complete",
            run_id=self.manifest.run_id,
            command=self.manifest.command,
            status=self.manifest.status.value,
            artifacts=len(self.manifest.artifacts),
            diagnostics=len(self.manifest.diagnostics),
        )
        return path
