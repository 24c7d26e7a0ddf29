"""
Run configuration and manifest models
"""

from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional
from uuid import uuid4

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.document import NormalizationPolicy
from app.models.llm import GatewayMode, ProviderConfig


class RunConfig(BaseModel):
    """Everything one CLI invocation needs"""
    model_config = ConfigDict(extra="forbid")

    provider: ProviderConfig = Field(default_factory=ProviderConfig)
    mode: GatewayMode = GatewayMode.CACHE
    templates_dir: Optional[Path] = None
    fixtures_dir: Optional[Path] = None
    output_dir: Path = Path("out")
    normalization: NormalizationPolicy = Field(default_factory=NormalizationPolicy)
    max_concurrent_requests: int = Field(default=4, gt=0)
    retry_base_delay: float = Field(default=1.0, ge=0.0)

    @model_validator(mode="after")
    def replay_needs_fixtures(self) -> "RunConfig":
        if self.mode != GatewayMode.LIVE and self.fixtures_dir is None:
            raise ValueError(f"{self.mode.value} mode requires fixtures_dir")
        return self


class RunStatus(str, Enum):
    OK = "ok"
    FAILED = "failed"


class ArtifactRecord(BaseModel):
    path: str
    sha256: str


class RunManifest(BaseModel):
    """Written once, atomically, at the end of a run, whether or not it succeeded"""
    run_id: str = Field(default_factory=lambda: uuid4().hex)
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    command: str
    config_digest: str
    input_digests: Dict[str, str] = Field(default_factory=dict)
    artifacts: List[ArtifactRecord] = Field(default_factory=list)
    diagnostics: List[str] = Field(default_factory=list)
    status: RunStatus = RunStatus.OK
    error: Optional[str] = None
