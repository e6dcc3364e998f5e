"""YAML manifests: which behaviors sit at which indices, plus run expectations.

    name: wtt-const1
    construction: wtt
    functions:   {0: {script: identity}}
    functionals: {0: {script: const, value: 1}}
    ce:          {}
    families:    {}
    expect:      {within: 10, kinds: {action2: 1}}

Every descriptor is either a catalog script (``script: ...``) or an
interpreted program (``program: "..."`` or ``godel: N``).
"""

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .catalog import CatalogError, build_ce_set, build_family, build_function, build_functional
from .regmachine import ProgramSyntaxError
from .substrate import Substrate

CONSTRUCTIONS = ("wtt", "bs", "d", "q")
SECTIONS = {"functions": build_function, "functionals": build_functional,
            "ce": build_ce_set, "families": build_family}
TOP_KEYS = {"name", "construction", "description", "expect", *SECTIONS}
ENV_DIR = "INTROIMMUNE_MANIFEST_DIR"


class ManifestError(ValueError):
    pass


@dataclass
class Manifest:
    name: str
    construction: str | None
    substrate: Substrate
    expect: dict = field(default_factory=dict)
    description: str = ""
    source: str = "<memory>"
    raw: dict = field(default_factory=dict)


def parse_manifest(data, source="<memory>") -> Manifest:
    if not isinstance(data, dict):
        raise ManifestError(f"{source}: top level must be a mapping")
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ManifestError(f"{source}: unknown top-level key(s) {sorted(unknown)}")
    construction = data.get("construction")
    if construction is not None and construction not in CONSTRUCTIONS:
        raise ManifestError(f"{source}: construction must be one of {CONSTRUCTIONS}, got {construction!r}")
    built = {}
    for section, builder in SECTIONS.items():
        entries = data.get(section) or {}
        if not isinstance(entries, dict):
            raise ManifestError(f"{source}: {section} must map indices to descriptors")
        built[section] = {}
        for index, desc in entries.items():
            where = f"{source}: {section}.{index}"
            if not isinstance(index, int) or isinstance(index, bool) or index < 0:
                raise ManifestError(f"{where}: index must be a natural number")
            if not isinstance(desc, dict):
                raise ManifestError(f"{where}: descriptor must be a mapping")
            try:
                built[section][index] = builder(desc)
            except (CatalogError, ProgramSyntaxError, ValueError, TypeError) as err:
                raise ManifestError(f"{where}: {err}") from None
    expect = data.get("expect") or {}
    if not isinstance(expect, dict):
        raise ManifestError(f"{source}: expect must be a mapping")
    substrate = Substrate(built["functions"], built["functionals"], built["ce"], built["families"])
    return Manifest(str(data.get("name", Path(source).stem)), construction, substrate, expect,
                    data.get("description", ""), source, data)


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ManifestError(f"{path}: cannot read manifest ({err.strerror or err})") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ManifestError(f"{where}: YAML syntax error: {getattr(err, 'problem', err)}") from None
    return parse_manifest(data, str(path))


def builtin_pack_dir():
    return resources.files("introimmune") / "packs"


def builtin_pack_paths():
    return sorted((p for p in builtin_pack_dir().iterdir() if p.name.endswith(".yaml")),
                  key=lambda p: p.name)


def resolve_manifest(name_or_path) -> Path:
    """A path as given, else a file in $INTROIMMUNE_MANIFEST_DIR, else a builtin pack name."""
    candidate = Path(name_or_path)
    if candidate.exists():
        return candidate
    names = [str(name_or_path)]
    if not names[0].endswith((".yaml", ".yml")):
        names.append(names[0] + ".yaml")
    env = os.environ.get(ENV_DIR)
    if env and not candidate.is_absolute():
        for name in names:
            if (Path(env) / name).exists():
                return Path(env) / name
    for name in names:
        builtin = builtin_pack_dir() / name
        if builtin.is_file():
            return Path(str(builtin))
    raise ManifestError(f"{name_or_path}: no such manifest file or builtin pack")
