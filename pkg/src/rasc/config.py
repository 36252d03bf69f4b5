"""Engine configuration: one TOML file, overridable per-flag.

Precedence is flags > file > built-in defaults. Sections mirror the module
boundaries ([rasc], [baselines], [generation], [paths], [features]); unknown
sections or keys are errors, not silently ignored, so a typo cannot quietly
run a benchmark with default knobs.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib  # type: ignore[no-redef]

from .baselines import BaselineConfig
from .controller import RascConfig
from .features import DEFAULT_FEATURE_CONFIG, FeatureConfig
from .generation import GenerationParams

DEFAULT_MODEL_NAME = "gpt-4o"


class ConfigError(Exception):
    """Config file missing, malformed, or carrying unknown/invalid keys."""


@dataclass(frozen=True)
class PathsConfig:
    dataset: str = ""
    sample_store: str = ""
    model_file: str = ""
    report_dir: str = "reports"


@dataclass(frozen=True)
class EngineConfig:
    rasc: RascConfig = RascConfig()
    baselines: BaselineConfig = BaselineConfig()
    generation: GenerationParams = GenerationParams(model_name=DEFAULT_MODEL_NAME)
    paths: PathsConfig = PathsConfig()
    features: FeatureConfig = DEFAULT_FEATURE_CONFIG
    exemplars_file: str = ""


def _build_section(name: str, cls: type, values: Mapping[str, Any]) -> Any:
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{name}] configuration: {exc}") from exc


def _merge(
    file_section: Mapping[str, Any] | None, flag_section: Mapping[str, Any] | None
) -> dict[str, Any]:
    merged: dict[str, Any] = dict(file_section or {})
    for key, value in (flag_section or {}).items():
        if value is not None:
            merged[key] = value
    return merged


def load_engine_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Mapping[str, Any]] | None = None,
) -> EngineConfig:
    """Assemble an EngineConfig from an optional TOML file plus flag overrides.

    ``overrides`` maps section name to {key: value}; None values (unset
    flags) are skipped so they never mask file values.
    """
    sections: dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.exists():
            raise ConfigError(f"config file {config_path} does not exist")
        try:
            with config_path.open("rb") as fh:
                sections = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{config_path}: not valid TOML: {exc}") from exc

    overrides = overrides or {}
    known_sections = {"rasc", "baselines", "generation", "paths", "features"}
    unknown = sorted(set(sections) - known_sections)
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")

    rasc = _build_section("rasc", RascConfig, _merge(sections.get("rasc"), overrides.get("rasc")))
    baselines = _build_section(
        "baselines", BaselineConfig, _merge(sections.get("baselines"), overrides.get("baselines"))
    )

    generation_values = _merge(sections.get("generation"), overrides.get("generation"))
    exemplars_file = str(generation_values.pop("exemplars_file", ""))
    generation_values.setdefault("model_name", DEFAULT_MODEL_NAME)
    generation = _build_section("generation", GenerationParams, generation_values)

    paths = _build_section(
        "paths", PathsConfig, _merge(sections.get("paths"), overrides.get("paths"))
    )

    feature_values = _merge(sections.get("features"), overrides.get("features"))
    if "admission_phrases" in feature_values:
        feature_values["admission_phrases"] = tuple(
            str(p) for p in feature_values["admission_phrases"]
        )
    features = (
        _build_section("features", FeatureConfig, feature_values)
        if feature_values
        else DEFAULT_FEATURE_CONFIG
    )

    return EngineConfig(
        rasc=rasc,
        baselines=baselines,
        generation=generation,
        paths=paths,
        features=features,
        exemplars_file=exemplars_file,
    )
