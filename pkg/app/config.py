# app/config.py
import json
from functools import lru_cache
from pathlib import Path
from typing import Annotated, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.errors import ConfigError
from app.jobs.experiment import ExperimentPlan
from app.ml.classifiers import ForestConfig, LogisticConfig
from app.ml.gcn import GcnConfig
from app.processing.cost import RateLimit, RateTable
from app.propagation.label_prop import PropagationConfig
from app.synth.sbm import SbmConfig
from app.utils.utils import get_dotenv_name


class AppSettings(BaseSettings):
    """Process-wide settings from the environment and ``.env.<APP_ENV>``."""

    model_config = SettingsConfigDict(
        env_file=get_dotenv_name(),
        case_sensitive=True,
        env_prefix="PARTY_",
        extra="ignore",
    )

    LOG_LEVEL: str = "INFO"
    THREADS: Annotated[int, Field(ge=1)] = 1
    DEFAULT_SEED: Optional[int] = None

    @field_validator("LOG_LEVEL")
    def _valid_level(cls, value: str) -> str:
        value = value.upper()
        if value not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {value!r}")
        return value


@lru_cache(maxsize=1)
def get_app_settings() -> AppSettings:
    return AppSettings()


class RunConfig(BaseModel):
    """Every stage's settings in one JSON document.

    Omitted sections take their defaults; unknown fields are rejected.
    """

    model_config = ConfigDict(extra="forbid")

    master_seed: Optional[int] = None
    propagation: PropagationConfig = Field(default_factory=PropagationConfig)
    gcn: GcnConfig = Field(default_factory=GcnConfig)
    forest: ForestConfig = Field(default_factory=ForestConfig)
    logistic: LogisticConfig = Field(default_factory=LogisticConfig)
    experiment: ExperimentPlan = Field(default_factory=ExperimentPlan)
    sbm: SbmConfig = Field(default_factory=SbmConfig)
    rate_overrides: dict[str, RateLimit] = Field(default_factory=dict)

    @property
    def rate_table(self) -> RateTable:
        return RateTable().with_overrides(self.rate_overrides)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "RunConfig":
        """Load a run config, naming the offending field on failure.

        Raises:
            FileNotFoundError: ``path`` does not exist.
            ConfigError: Malformed JSON or an invalid / unknown field.
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: malformed JSON: {e.msg}") from None
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            err = e.errors()[0]
            loc = ".".join(str(p) for p in err["loc"])
            raise ConfigError(f"{path}: invalid config field {loc}: {err['msg']}") from None


def write_schema(path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(RunConfig.model_json_schema(), indent=2) + "\n", encoding="utf-8")
