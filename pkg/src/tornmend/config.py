"""Pipeline configuration: one dataclass per stage, loaded from TOML."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .assemble import BlendParams
from .canny import CannyParams
from .contour import RimParams, SimplifyParams
from .diffusion import DiffusionParams
from .errors import ConfigError, TornMendError
from .matching import MatchParams
from .orient import OrientParams


@dataclass(frozen=True)
class RepairParams:
    enabled: bool = True
    atlas: str = ""  # PGM strip; empty selects the bundled atlas
    atlas_manifest: str = ""
    dictionary: str = ""  # newline-delimited word list; empty selects the bundled one

    def __post_init__(self):
        if bool(self.atlas) != bool(self.atlas_manifest):
            raise ValueError("atlas and atlas_manifest must be given together")


@dataclass(frozen=True)
class Config:
    diffusion: DiffusionParams = field(default_factory=DiffusionParams)
    orient: OrientParams = field(default_factory=OrientParams)
    simplify: SimplifyParams = field(default_factory=SimplifyParams)
    rim: RimParams = field(default_factory=RimParams)
    canny: CannyParams = field(default_factory=CannyParams)
    match: MatchParams = field(default_factory=MatchParams)
    blend: BlendParams = field(default_factory=BlendParams)
    repair: RepairParams = field(default_factory=RepairParams)
    invert: bool = False

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if dataclasses.is_dataclass(v):
                # TOML has no null; unset optional values are omitted
                out[f.name] = {k: x for k, x in dataclasses.asdict(v).items() if x is not None}
            else:
                out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        kwargs = {}
        known = {f.name: f for f in dataclasses.fields(cls)}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(f"unknown config section {key!r}")
            default = known[key].default_factory() if known[key].default_factory is not \
                dataclasses.MISSING else known[key].default
            if dataclasses.is_dataclass(default):
                if not isinstance(value, dict):
                    raise ConfigError(f"[{key}] must be a table")
                names = {f.name for f in dataclasses.fields(default)}
                extra = set(value) - names
                if extra:
                    raise ConfigError(f"unknown keys in [{key}]: {', '.join(sorted(extra))}")
                try:
                    kwargs[key] = dataclasses.replace(default, **value)
                except (TypeError, ValueError, TornMendError) as exc:
                    raise ConfigError(f"[{key}]: {exc}") from exc
            else:
                if not isinstance(value, type(default)):
                    raise ConfigError(f"{key} must be a {type(default).__name__}")
                kwargs[key] = value
        return cls(**kwargs)

    def with_overrides(self, **sections) -> "Config":
        """Replace individual fields, e.g. ``with_overrides(blend={"feather_width": 0})``."""
        data = self.to_dict()
        for key, value in sections.items():
            if isinstance(value, dict):
                data.setdefault(key, {}).update(value)
            else:
                data[key] = value
        return Config.from_dict(data)


def loads(text: str) -> Config:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    return Config.from_dict(data)


def load(path) -> Config:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)


def dumps(config: Config) -> str:
    return tomli_w.dumps(config.to_dict())
