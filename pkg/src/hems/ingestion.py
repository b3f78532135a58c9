"""Loading and saving scenario documents and their profile CSVs.

A scenario is a YAML document with sections ``grid``, ``profiles``,
``hvac``, ``fridge``, ``appliances``, ``precedences``, ``storages``,
``pv_enabled`` and ``contract``. Profile paths are resolved relative to the
document. Profile CSVs use the header ``interval,value`` with 1-based
contiguous interval indices; lines starting with ``#`` are comments.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from pathlib import Path
from typing import Any

import yaml

from .domain import (
    CyclingAppliance,
    FridgeDevice,
    GridContract,
    HvacPair,
    PrecedencePair,
    Profile,
    ProfileKind,
    ScenarioConfig,
    StorageDevice,
    StorageKind,
    TimeGrid,
    validate,
)


class ProfileParseError(ValueError):
    pass


class ValidationError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ScenarioError(ValueError):
    pass


def parse_profile(text: str, kind: ProfileKind, grid: TimeGrid, source: str = "<text>") -> Profile:
    lines = [
        (n, line) for n, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines:
        raise ProfileParseError(f"{source}: empty profile")
    header_no, header = lines[0]
    if [h.strip() for h in header.split(",")] != ["interval", "value"]:
        raise ProfileParseError(f"{source}:{header_no}: header must be 'interval,value'")
    values: dict[int, float] = {}
    for lineno, line in lines[1:]:
        row = next(csv.reader([line]))
        if len(row) != 2:
            raise ProfileParseError(f"{source}:{lineno}: expected 2 fields, got {len(row)}")
        try:
            idx = int(row[0].strip())
            val = float(row[1].strip())
        except ValueError:
            raise ProfileParseError(f"{source}:{lineno}: non-numeric field in {line!r}") from None
        if not math.isfinite(val):
            raise ProfileParseError(f"{source}:{lineno}: non-finite value")
        if idx in values:
            raise ProfileParseError(f"{source}:{lineno}: duplicate interval {idx}")
        if not 1 <= idx <= grid.horizon_len:
            raise ProfileParseError(
                f"{source}:{lineno}: interval {idx} outside 1..{grid.horizon_len}"
            )
        values[idx] = val
    missing = [t for t in grid.intervals if t not in values]
    if missing:
        raise ProfileParseError(f"{source}: missing interval(s) {missing}")
    profile = Profile(kind, tuple(values[t] for t in grid.intervals))
    problems = profile.violations(grid, f"{source}")
    if problems:
        raise ValidationError(problems)
    return profile


def load_profile(path: str | Path, kind: ProfileKind, grid: TimeGrid) -> Profile:
    path = Path(path)
    return parse_profile(path.read_text(encoding="utf-8"), kind, grid, str(path))


def format_profile(profile: Profile, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    buf.write("interval,value\n")
    for t, v in enumerate(profile.values, start=1):
        buf.write(f"{t},{v!r}\n")
    return buf.getvalue()


# -- scenario documents ---------------------------------------------------------

_REQUIRED_SECTIONS = ("grid", "profiles", "contract")


def _section(doc: dict, key: str, required: bool) -> Any:
    if key not in doc or doc[key] is None:
        if required:
            raise ScenarioError(f"scenario document is missing required section {key!r}")
        return None
    return doc[key]


def _fill(cls, data: dict | None, path: str, provenance: dict[str, str]):
    """Build a dataclass from ``data``; absent optional fields take defaults."""
    data = dict(data or {})
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = data.pop(f.name)
            provenance[f"{path}.{f.name}"] = "document"
        elif f.default is not dataclasses.MISSING:
            provenance[f"{path}.{f.name}"] = f"default ({f.default!r})"
        else:
            raise ScenarioError(f"{path}.{f.name}: required field missing")
    if data:
        raise ScenarioError(f"{path}: unknown field(s) {sorted(data)}")
    return cls(**kwargs)


def _intervals(spec: Any, path: str) -> tuple[int, ...]:
    # Accepts a list of ints or {"from": a, "to": b} (inclusive).
    if isinstance(spec, dict):
        return tuple(range(int(spec["from"]), int(spec["to"]) + 1))
    if isinstance(spec, list):
        return tuple(int(t) for t in spec)
    raise ScenarioError(f"{path}: expected a list of intervals or a from/to range")


def config_from_dict(doc: dict, base_dir: Path | None = None) -> ScenarioConfig:
    base_dir = base_dir or Path(".")
    for key in _REQUIRED_SECTIONS:
        _section(doc, key, required=True)
    provenance: dict[str, str] = {}
    grid = _fill(TimeGrid, doc["grid"], "grid", provenance)

    prof_doc = doc["profiles"]
    profiles = {}
    for kind in ProfileKind:
        if kind.value not in prof_doc:
            raise ScenarioError(f"profiles.{kind.value}: required profile missing")
        entry = prof_doc[kind.value]
        if isinstance(entry, list):
            profiles[kind] = Profile(kind, tuple(float(v) for v in entry))
            continue
        ppath = base_dir / entry
        if not ppath.is_file():
            raise ScenarioError(f"profiles.{kind.value}: cannot resolve {str(entry)!r}")
        profiles[kind] = load_profile(ppath, kind, grid)

    hvac = _fill(HvacPair, _section(doc, "hvac", False), "hvac", provenance)
    fridge = _fill(FridgeDevice, _section(doc, "fridge", False), "fridge", provenance)
    appliances = []
    for i, item in enumerate(_section(doc, "appliances", False) or []):
        item = dict(item)
        item["allowed_window"] = _intervals(item.get("allowed_window"), f"appliances[{i}]")
        appliances.append(_fill(CyclingAppliance, item, f"appliances[{i}]", provenance))
    precedences = [
        _fill(PrecedencePair, item, f"precedences[{i}]", provenance)
        for i, item in enumerate(_section(doc, "precedences", False) or [])
    ]
    storages = []
    for i, item in enumerate(_section(doc, "storages", False) or []):
        item = dict(item)
        item["availability"] = _intervals(item.get("availability"), f"storages[{i}]")
        item["kind"] = StorageKind(item.get("kind"))
        storages.append(_fill(StorageDevice, item, f"storages[{i}]", provenance))
    contract = _fill(GridContract, doc["contract"], "contract", provenance)
    pv_enabled = bool(doc.get("pv_enabled", True))

    config = ScenarioConfig(
        name=str(doc.get("name", "scenario")),
        grid=grid,
        profiles=profiles,
        hvac=hvac,
        fridge=fridge,
        appliances=tuple(appliances),
        precedences=tuple(precedences),
        storages=tuple(storages),
        pv_enabled=pv_enabled,
        contract=contract,
        provenance=provenance,
    )
    problems = validate(config)
    if problems:
        raise ValidationError(problems)
    return config


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: not a valid scenario document ({exc})") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: scenario document must be a mapping")
    return config_from_dict(doc, path.parent)


def config_to_dict(config: ScenarioConfig, profile_paths: dict[ProfileKind, str] | None = None) -> dict:
    """Plain-data form of ``config``; profiles are inlined unless paths are given."""

    def plain(obj) -> dict:
        out = {}
        for f in dataclasses.fields(obj):
            val = getattr(obj, f.name)
            if isinstance(val, tuple):
                val = list(val)
            elif hasattr(val, "value") and isinstance(val, StorageKind):
                val = val.value
            out[f.name] = val
        return out

    profiles = {}
    for kind in ProfileKind:
        if profile_paths and kind in profile_paths:
            profiles[kind.value] = profile_paths[kind]
        else:
            profiles[kind.value] = list(config.profiles[kind].values)
    return {
        "name": config.name,
        "grid": plain(config.grid),
        "profiles": profiles,
        "pv_enabled": config.pv_enabled,
        "hvac": plain(config.hvac),
        "fridge": plain(config.fridge),
        "appliances": [plain(a) for a in config.appliances],
        "precedences": [plain(p) for p in config.precedences],
        "storages": [plain(s) for s in config.storages],
        "contract": plain(config.contract),
    }


def save_scenario(config: ScenarioConfig, path: str | Path) -> Path:
    """Write ``config`` as a scenario document plus one CSV per profile."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stem = path.stem
    paths = {}
    for kind in ProfileKind:
        rel = f"{stem}_{kind.value}.csv"
        (path.parent / rel).write_text(format_profile(config.profiles[kind]), encoding="utf-8")
        paths[kind] = rel
    doc = config_to_dict(config, paths)
    path.write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")
    return path
