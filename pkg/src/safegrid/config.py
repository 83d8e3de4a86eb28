"""Run configuration: INI sections mapped onto the module dataclasses.

Sections ``[run]``, ``[env]``, ``[refine]``, ``[learner]`` and ``[advisor]``.
Values missing from the file take the dataclass defaults; ``--set
section.key=value`` overrides are applied on top. :meth:`RunConfig.to_ini`
renders the fully resolved configuration.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import MISSING, asdict, dataclass, field, fields, replace
from pathlib import Path

from .env.signals import EnvConfig
from .learner.config import LearnerConfig
from .refine.config import RefinementConfig


class ConfigError(ValueError):
    pass


ADVISOR_MODES = ("off", "rule", "remote", "mock")


@dataclass(frozen=True)
class AdvisorConfig:
    mode: str = "off"
    endpoint: str = ""
    model: str = ""
    timeout: float = 30.0
    directory: str = ""
    top_lines: int = 3

    def __post_init__(self):
        if self.mode not in ADVISOR_MODES:
            raise ValueError(f"advisor mode must be one of {', '.join(ADVISOR_MODES)}")
        if self.mode == "remote" and not self.endpoint:
            raise ValueError("advisor mode remote requires an endpoint")
        if self.mode == "mock" and not self.directory:
            raise ValueError("advisor mode mock requires a directory")
        if self.timeout <= 0 or self.top_lines < 1:
            raise ValueError("advisor timeout and top_lines must be positive")


@dataclass(frozen=True)
class RunSection:
    """``case``/``chronics`` accept ``bundled:<name>`` for the packaged fixtures."""

    case: str = "bundled:case5"
    chronics: str = "bundled:case5_stressed"
    seeds: str = "0"
    out_dir: str = "runs/default"
    eval_episodes: int = 2
    checkpoint_every: int = 0

    def __post_init__(self):
        try:
            seeds = self.seed_list
        except ValueError:
            raise ValueError("seeds must be a comma-separated list of integers") from None
        if not seeds:
            raise ValueError("at least one seed is required")
        if self.eval_episodes < 1 or self.checkpoint_every < 0:
            raise ValueError("eval_episodes must be positive, checkpoint_every nonnegative")

    @property
    def seed_list(self) -> list[int]:
        return [int(s) for s in self.seeds.replace(" ", "").split(",") if s]


SECTIONS = {
    "run": RunSection,
    "env": EnvConfig,
    "refine": RefinementConfig,
    "learner": LearnerConfig,
    "advisor": AdvisorConfig,
}


def _convert(cls, name: str, raw: str):
    f = next((f for f in fields(cls) if f.name == name), None)
    if f is None:
        raise ConfigError(f"unknown key '{name}'")
    default = f.default if f.default is not MISSING else f.default_factory()
    kind = type(default)
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"key '{name}': cannot read '{raw}' as {kind.__name__}") from None


@dataclass(frozen=True)
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    env: EnvConfig = field(default_factory=EnvConfig)
    refine: RefinementConfig = field(default_factory=RefinementConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    advisor: AdvisorConfig = field(default_factory=AdvisorConfig)

    @classmethod
    def from_ini(cls, text: str = "", overrides=(), base_dir: str | Path | None = None
                 ) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # keys such as N_LLM are case-sensitive
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config syntax: {exc}") from None
        values: dict[str, dict[str, str]] = {s: {} for s in SECTIONS}
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]")
            values[section].update(parser[section])
        for item in overrides:
            key, sep, val = item.partition("=")
            section, dot, name = key.strip().partition(".")
            if not sep or not dot:
                raise ConfigError(f"override '{item}' is not section.key=value")
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}] in override '{item}'")
            values[section][name.strip()] = val
        if base_dir is not None:
            for key in ("case", "chronics", "out_dir"):
                raw = values["run"].get(key)
                if raw and not raw.startswith("bundled:") and not Path(raw).is_absolute():
                    values["run"][key] = str((Path(base_dir) / raw).resolve())
            raw = values["advisor"].get("directory")
            if raw and not Path(raw).is_absolute():
                values["advisor"]["directory"] = str((Path(base_dir) / raw).resolve())
        built = {}
        for section, klass in SECTIONS.items():
            kwargs = {}
            for name, raw in values[section].items():
                try:
                    kwargs[name] = _convert(klass, name, raw)
                except ConfigError as exc:
                    raise ConfigError(f"[{section}] {exc}") from None
            try:
                built[section] = klass(**kwargs)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"[{section}] {exc}") from None
        return cls(**built)

    @classmethod
    def read(cls, path: str | Path, overrides=()) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise FileNotFoundError(f"cannot read config {path}: {exc.strerror}") from exc
        return cls.from_ini(text, overrides, base_dir=path.parent)

    def to_ini(self) -> str:
        lines = []
        for section in SECTIONS:
            lines.append(f"[{section}]")
            for key, val in asdict(getattr(self, section)).items():
                lines.append(f"{key} = {val!r}" if isinstance(val, float) else f"{key} = {val}")
            lines.append("")
        return "\n".join(lines)

    def fingerprint(self) -> str:
        """Digest of the resolved config; the output directory does not count."""
        text = self.replace("run", out_dir="").to_ini()
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def with_overrides(self, overrides) -> "RunConfig":
        return RunConfig.from_ini(self.to_ini(), overrides)

    def replace(self, section: str, **kwargs) -> "RunConfig":
        return replace(self, **{section: replace(getattr(self, section), **kwargs)})
