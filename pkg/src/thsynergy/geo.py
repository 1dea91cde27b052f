"""Nested region hierarchy keyed by location-code prefixes."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import UnmappedLocation

DEFAULT_LEVELS = ("subject", "district", "nation")


class Finding(NamedTuple):
    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


class RegionHierarchy:
    """Location-code prefixes mapped to ancestor chains, finest level first.

    Each entry is ``(prefix, (subject, district, ..., nation))``.  The
    hierarchy is immutable after construction; :meth:`resolve` uses the
    longest matching prefix.  Structural defects do not raise here, they are
    reported by :meth:`validate`.
    """

    def __init__(
        self,
        entries: Iterable[tuple[str, Sequence[str]]],
        levels: Sequence[str] = DEFAULT_LEVELS,
        names: dict[str, str] | None = None,
        load_findings: Sequence[Finding] = (),
    ):
        self.levels = tuple(levels)
        if len(self.levels) < 1 or len(set(self.levels)) != len(self.levels):
            raise ValueError("level names must be unique and non-empty")
        self.entries = tuple((str(p), tuple(str(r) for r in chain)) for p, chain in entries)
        self.names = dict(names or {})
        self._load_findings = tuple(load_findings)
        self._prefix_map: dict[str, tuple[str, ...]] = {}
        for prefix, chain in self.entries:
            self._prefix_map.setdefault(prefix, chain)
        self._max_len = max((len(p) for p in self._prefix_map), default=0)
        self._cache: dict[str, tuple[str, ...]] = {}

    # lookup ------------------------------------------------------------

    def resolve(self, location_code: str) -> tuple[str, ...]:
        """Ancestor chain (one region id per level) for a location code."""
        hit = self._cache.get(location_code)
        if hit is not None:
            return hit
        code = location_code.strip()
        for n in range(min(len(code), self._max_len), 0, -1):
            chain = self._prefix_map.get(code[:n])
            if chain is not None:
                self._cache[location_code] = chain
                return chain
        raise UnmappedLocation(f"no region prefix matches location {location_code!r}")

    def level_index(self, level: str) -> int:
        try:
            return self.levels.index(level)
        except ValueError:
            raise KeyError(f"unknown level {level!r}; levels are {', '.join(self.levels)}") from None

    def regions(self, level: str) -> list[str]:
        i = self.level_index(level)
        return sorted({chain[i] for _, chain in self.entries if len(chain) > i})

    def parent(self, level: str, region: str) -> str | None:
        """Parent id of ``region`` one level up, or None at the coarsest level."""
        i = self.level_index(level)
        if i == len(self.levels) - 1:
            return None
        for _, chain in self.entries:
            if chain[i] == region:
                return chain[i + 1]
        raise KeyError(f"unknown {level} region {region!r}")

    def display_name(self, region: str) -> str:
        return self.names.get(region, region)

    # checks ------------------------------------------------------------

    def validate(self) -> list[Finding]:
        return validate_hierarchy(self)

    @property
    def ok(self) -> bool:
        return not self.validate()

    # io ----------------------------------------------------------------

    @classmethod
    def parse(cls, text: str, names: dict[str, str] | None = None) -> "RegionHierarchy":
        """Parse ``prefix<TAB>subject<TAB>district<TAB>nation`` lines.

        A ``#levels<TAB>name...`` line renames (and re-counts) the levels;
        other ``#`` text is a comment.
        """
        levels = None
        entries = []
        findings = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            stripped = raw.strip()
            if stripped.startswith("#levels"):
                levels = tuple(f for f in stripped[len("#levels"):].replace(":", " ").split() if f)
                continue
            line = raw.split("#", 1)[0].rstrip("\r\n")
            if not line.strip():
                continue
            fields = [f.strip() for f in line.split("\t")]
            entries.append((lineno, fields))
        if levels is None:
            width = max((len(f) - 1 for _, f in entries), default=3)
            levels = DEFAULT_LEVELS if width == 3 else tuple(
                [f"level{i}" for i in range(1, width)] + ["nation"])
        good = []
        for lineno, fields in entries:
            prefix, chain = fields[0], fields[1:]
            if len(chain) != len(levels):
                findings.append(Finding(
                    "malformed-line",
                    f"line {lineno} has {len(chain)} region fields, expected {len(levels)}"))
                chain = (chain + [""] * len(levels))[:len(levels)]
            if not prefix:
                findings.append(Finding("malformed-line", f"line {lineno} has an empty prefix"))
                continue
            good.append((prefix, chain))
        return cls(good, levels, names, findings)

    @classmethod
    def from_file(cls, path, names_path=None) -> "RegionHierarchy":
        text = Path(path).read_text(encoding="utf-8")
        names = load_region_names(names_path) if names_path else None
        return cls.parse(text, names)

    def dumps(self) -> str:
        lines = ["#levels\t" + "\t".join(self.levels)]
        lines += ["\t".join((prefix,) + chain) for prefix, chain in self.entries]
        return "\n".join(lines) + "\n"


def load_region_names(path) -> dict[str, str]:
    """Sidecar ``region_id<TAB>display name`` file."""
    names = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            region, _, name = line.partition("\t")
            names[region.strip()] = name.strip() or region.strip()
    return names


def resolve(location_code: str, h: RegionHierarchy) -> tuple[str, ...]:
    return h.resolve(location_code)


def validate_hierarchy(h: RegionHierarchy) -> list[Finding]:
    """Structural defects: orphans, multi-parent regions, multiple roots, duplicate prefixes."""
    findings = list(h._load_findings)
    if not h.entries:
        findings.append(Finding("empty", "hierarchy has no prefix entries"))
        return findings

    seen: dict[str, tuple[str, ...]] = {}
    for prefix, chain in h.entries:
        if prefix in seen:
            findings.append(Finding("duplicate-prefix", f"prefix {prefix!r} listed more than once"))
        else:
            seen[prefix] = chain

    top = len(h.levels) - 1
    parents: dict[tuple[int, str], set[str]] = defaultdict(set)
    for prefix, chain in h.entries:
        for i, region in enumerate(chain):
            if not region:
                continue
            if i < top:
                parent = chain[i + 1]
                if not parent:
                    findings.append(Finding(
                        "orphan", f"{h.levels[i]} {region!r} (prefix {prefix!r}) has no parent"))
                else:
                    parents[(i, region)].add(parent)
        if not chain[0]:
            findings.append(Finding("orphan", f"prefix {prefix!r} maps to no {h.levels[0]}"))

    for (i, region), ps in sorted(parents.items()):
        if len(ps) > 1:
            findings.append(Finding(
                "multi-parent",
                f"{h.levels[i]} {region!r} has parents {', '.join(sorted(ps))}"))

    roots = sorted({chain[top] for _, chain in h.entries if chain[top]})
    if len(roots) > 1:
        findings.append(Finding("multiple roots", f"{h.levels[top]} level has {', '.join(roots)}"))
    return findings
