"""Run configuration and hyperparameter grids, stored as TOML."""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .cluster import AFFINITIES, LINKAGES, SELECTORS, ClusterSelectConfig, MaxAriGrid
from .combine import CombineConfig
from .errors import ConfigError
from .sources import DEFAULT_PATTERN
from .vectorize import VectorizeConfig


@dataclass(frozen=True)
class SubstitutesConfig:
    source: str = "toy-lm"
    corpus_path: str = ""
    distributions_path: str = ""
    order: int = 2
    smoothing_k: float = 0.01
    top_k: int = 100_000
    use_pattern: bool = False
    pattern_text: str = DEFAULT_PATTERN

    def __post_init__(self):
        if self.source not in ("toy-lm", "file"):
            raise ConfigError(f"substitutes.source must be 'toy-lm' or 'file', got {self.source!r}")
        if self.source == "toy-lm" and not self.corpus_path:
            raise ConfigError("substitutes.corpus_path is required for the toy-lm source")
        if self.source == "file" and not self.distributions_path:
            raise ConfigError("substitutes.distributions_path is required for the file source")


@dataclass(frozen=True)
class VectorizeSection(VectorizeConfig):
    lemmatizer_path: str = ""


@dataclass(frozen=True)
class SelectConfig:
    selector: str = "silnc"
    nc_min: int = 2
    nc_max: int = 12
    fixed_nc: int | None = None
    prev_predictions_path: str = ""

    def __post_init__(self):
        if self.selector not in SELECTORS:
            raise ConfigError(f"select.selector must be one of {SELECTORS}, got {self.selector!r}")
        if self.selector == "fixnc" and self.fixed_nc is None:
            raise ConfigError("selector fixnc requires select.fixed_nc")
        self.cluster_config()

    def cluster_config(self) -> ClusterSelectConfig:
        return ClusterSelectConfig(self.nc_min, self.nc_max, self.fixed_nc)


@dataclass(frozen=True)
class EvalConfig:
    gold: bool = True
    max_ari: bool = False
    baselines: bool = False
    max_ari_linkages: tuple[str, ...] = LINKAGES
    max_ari_affinities: tuple[str, ...] = AFFINITIES
    max_ari_nc_max: int = 30

    def max_ari_grid(self) -> MaxAriGrid:
        return MaxAriGrid(tuple(self.max_ari_linkages), tuple(self.max_ari_affinities), 1, self.max_ari_nc_max)


@dataclass(frozen=True)
class AnalysisConfig:
    discriminative: bool = True
    profile_source: str = "gold"
    min_count: int = 10
    top_n: int = 10
    listing: bool = False
    dump_representatives: bool = False

    def __post_init__(self):
        if self.profile_source not in ("gold", "clusters"):
            raise ConfigError("analysis.profile_source must be 'gold' or 'clusters'")


@dataclass(frozen=True)
class RunConfig:
    dataset_path: str
    substitutes: SubstitutesConfig
    combine: CombineConfig = field(default_factory=CombineConfig)
    vectorize: VectorizeSection = field(default_factory=VectorizeSection)
    select: SelectConfig = field(default_factory=SelectConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    seed: int = 0
    output_dir: str = "wsi-output"
    workers: int = 1

    def __post_init__(self):
        if self.combine.rng_seed != self.seed:
            object.__setattr__(self, "combine", dataclasses.replace(self.combine, rng_seed=self.seed))
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def needs_gold(self) -> bool:
        return self.eval.gold or self.eval.max_ari or self.select.selector == "gold-oracle"

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["combine"].pop("rng_seed", None)
        return _drop_none(d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def to_toml(self) -> str:
        d = self.to_dict()
        for section in d.values():
            if isinstance(section, dict):
                for k, v in section.items():
                    if isinstance(v, tuple):
                        section[k] = list(v)
        return tomli_w.dumps(d)

    def with_overrides(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """Copy with dotted-key overrides such as ``{"combine.top_k": 50}``."""
        top: dict[str, Any] = {}
        per_section: dict[str, dict[str, Any]] = {}
        for key, value in overrides.items():
            section, _, name = key.rpartition(".")
            if not section:
                top[name] = value
                continue
            if section not in _SECTIONS:
                raise ConfigError(f"unknown config section {section!r} in {key!r}")
            if name not in {f.name for f in dataclasses.fields(_SECTIONS[section])}:
                raise ConfigError(f"unknown config key {key!r}")
            per_section.setdefault(section, {})[name] = value
        unknown = set(top) - _TOP_LEVEL
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        # each section is replaced in one step so that coupled keys validate together
        changes = {sec: dataclasses.replace(getattr(self, sec), **vals) for sec, vals in per_section.items()}
        return dataclasses.replace(self, **changes, **top)


_SECTIONS = {
    "substitutes": SubstitutesConfig,
    "combine": CombineConfig,
    "vectorize": VectorizeSection,
    "select": SelectConfig,
    "eval": EvalConfig,
    "analysis": AnalysisConfig,
}
_TOP_LEVEL = {"dataset_path", "seed", "output_dir", "workers"}
_PATH_KEYS = {
    ("", "dataset_path"),
    ("", "output_dir"),
    ("substitutes", "corpus_path"),
    ("substitutes", "distributions_path"),
    ("vectorize", "lemmatizer_path"),
    ("select", "prev_predictions_path"),
}


def _drop_none(d: dict) -> dict:
    return {k: _drop_none(v) if isinstance(v, dict) else v for k, v in d.items() if v is not None}


def _build(cls, values: Mapping[str, Any], section: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def config_from_dict(data: Mapping[str, Any], base_dir: str | Path | None = None) -> RunConfig:
    data = {k: dict(v) if isinstance(v, dict) else v for k, v in data.items()}
    data.pop("grid", None)
    if base_dir is not None:
        data.setdefault("output_dir", RunConfig.output_dir)
        for section, key in _PATH_KEYS:
            holder = data if not section else data.get(section, {})
            value = holder.get(key)
            if value and not Path(value).is_absolute():
                holder[key] = str(Path(base_dir) / value)
    unknown = set(data) - _TOP_LEVEL - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    if "dataset_path" not in data:
        raise ConfigError("dataset_path is required")
    sections = {name: _build(cls, data.get(name, {}), name) for name, cls in _SECTIONS.items()
                if name != "substitutes"}
    substitutes = _build(SubstitutesConfig, data.get("substitutes", {}), "substitutes")
    top = {k: data[k] for k in _TOP_LEVEL if k in data}
    return RunConfig(substitutes=substitutes, **sections, **top)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data, path.parent)


OBJECTIVES = ("ari", "maxARI")


@dataclass(frozen=True)
class GridSpec:
    values: dict[str, tuple]
    objective: str = "ari"

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"grid objective must be one of {OBJECTIVES}")
        if not self.values:
            raise ConfigError("grid has no hyperparameters")
        for key, vals in self.values.items():
            if len(vals) == 0:
                raise ConfigError(f"grid values for {key!r} are empty")

    def points(self) -> list[dict[str, Any]]:
        keys = list(self.values)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.values[k] for k in keys))]


def grid_from_dict(data: Mapping[str, Any]) -> GridSpec:
    data = dict(data)
    objective = data.pop("objective", "ari")
    values: dict[str, tuple] = {}

    def walk(prefix, node):
        for k, v in node.items():
            key = f"{prefix}.{k}" if prefix else k
            if isinstance(v, dict):
                walk(key, v)
            else:
                values[key] = tuple(v) if isinstance(v, list) else (v,)

    walk("", data)
    return GridSpec(values, objective)


def load_grid(path: str | Path) -> GridSpec:
    data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    return grid_from_dict(data.get("grid", data))
