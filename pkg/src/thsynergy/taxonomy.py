"""Size and technology dimensions: employee-count bins and NACE Rev. 2 sectors."""

from __future__ import annotations

import re
from bisect import bisect_left
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import MalformedCode, NegativeEmployees

# ---------------------------------------------------------------------------
# firm size
# ---------------------------------------------------------------------------

DEFAULT_SIZE_UPPER_BOUNDS = (0, 4, 9, 19, 49, 99, 249)


@dataclass(frozen=True)
class SizeBins:
    """Ordered employee-count classes given by inclusive upper bounds.

    The bins start at 0 and a final open-ended bin collects everything above
    the last bound, so every non-negative integer falls into exactly one bin.
    """

    upper_bounds: tuple[int, ...] = DEFAULT_SIZE_UPPER_BOUNDS

    def __post_init__(self):
        bounds = tuple(int(b) for b in self.upper_bounds)
        if not bounds:
            raise ValueError("at least one upper bound is required")
        if bounds[0] < 0 or any(b <= a for a, b in zip(bounds, bounds[1:])):
            raise ValueError("upper bounds must be non-negative and strictly increasing")
        object.__setattr__(self, "upper_bounds", bounds)

    @cached_property
    def labels(self) -> tuple[str, ...]:
        out = []
        lower = 0
        for upper in self.upper_bounds:
            out.append(str(lower) if lower == upper else f"{lower}-{upper}")
            lower = upper + 1
        out.append(f">{self.upper_bounds[-1]}")
        return tuple(out)

    @property
    def lower_bounds(self) -> tuple[int, ...]:
        return (0,) + tuple(b + 1 for b in self.upper_bounds)

    def index(self, employees: int) -> int:
        if employees < 0:
            raise NegativeEmployees(f"negative employee count: {employees}")
        return bisect_left(self.upper_bounds, employees)

    def classify(self, employees: int) -> str:
        return self.labels[self.index(employees)]

    @classmethod
    def from_file(cls, path) -> "SizeBins":
        """Read upper bounds separated by whitespace or commas; ``#`` starts a comment."""
        text = Path(path).read_text(encoding="utf-8")
        tokens = []
        for line in text.splitlines():
            tokens += [t for t in re.split(r"[,\s]+", line.split("#", 1)[0]) if t]
        return cls(tuple(int(t) for t in tokens))


DEFAULT_SIZE_BINS = SizeBins()


def size_class(employees: int, bins: SizeBins = DEFAULT_SIZE_BINS) -> str:
    """Label of the size class holding ``employees`` (e.g. ``25 -> "20-49"``)."""
    return bins.classify(employees)


# ---------------------------------------------------------------------------
# NACE codes
# ---------------------------------------------------------------------------

_NACE_RE = re.compile(r"^(\d{2})(?:\.?(\d{1,2}))?$")


def normalize_nace(code) -> str:
    """Digits of a NACE Rev. 2 code, with an optional dot after the division.

    ``"30.11"`` and ``"3011"`` both give ``"3011"``.
    """
    text = str(code).strip()
    m = _NACE_RE.match(text)
    if m is None:
        raise MalformedCode(f"not a NACE Rev. 2 code: {code!r}")
    digits = m.group(1) + (m.group(2) or "")
    if digits[:2] == "00":
        raise MalformedCode(f"division 00 does not exist: {code!r}")
    return digits


def nace_division(code) -> str:
    return normalize_nace(code)[:2]


class Sector(str, Enum):
    HIGH_TECH = "HighTech"
    MEDIUM_HIGH_TECH = "MediumHighTech"
    KIS = "KIS"
    OTHER = "Other"


class SectorRule(NamedTuple):
    prefix: str
    sector: Sector
    include: bool = True
    high_tech_services: bool = False


class SectorAssignment(NamedTuple):
    sector: Sector
    high_tech_services: bool = False


class SectorTaxonomy:
    """Prefix rules mapping NACE codes to sectors.

    The longest rule prefix matching a code decides.  An ``exclude`` rule maps
    the codes it covers to :attr:`Sector.OTHER`, so it overrides any shorter
    include above it.
    """

    def __init__(self, rules: Iterable[SectorRule]):
        table = {}
        for rule in rules:
            prefix = rule.prefix.replace(".", "")
            if not prefix.isdigit() or not 1 <= len(prefix) <= 4:
                raise ValueError(f"bad rule prefix {rule.prefix!r}")
            if prefix in table:
                raise ValueError(f"duplicate rule prefix {rule.prefix!r}")
            table[prefix] = SectorRule(prefix, Sector(rule.sector), bool(rule.include),
                                       bool(rule.high_tech_services))
        self.rules = tuple(table.values())
        self._table = table
        self._max_len = max((len(p) for p in table), default=0)

    def classify(self, code) -> SectorAssignment:
        digits = normalize_nace(code)
        for n in range(min(len(digits), self._max_len), 0, -1):
            rule = self._table.get(digits[:n])
            if rule is not None:
                if not rule.include:
                    return SectorAssignment(Sector.OTHER)
                return SectorAssignment(rule.sector, rule.high_tech_services)
        return SectorAssignment(Sector.OTHER)

    @classmethod
    def parse(cls, text: str) -> "SectorTaxonomy":
        """Parse ``prefix<TAB>label<TAB>include|exclude[<TAB>hts]`` lines."""
        rules = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split("\t")]
            if len(parts) not in (3, 4):
                raise ValueError(f"taxonomy line {lineno}: expected 3 or 4 tab-separated fields")
            prefix, label, mode = parts[:3]
            if mode not in ("include", "exclude"):
                raise ValueError(f"taxonomy line {lineno}: mode must be include or exclude")
            hts = len(parts) == 4 and parts[3] == "hts"
            if len(parts) == 4 and not hts:
                raise ValueError(f"taxonomy line {lineno}: unknown flag {parts[3]!r}")
            try:
                sector = Sector(label)
            except ValueError:
                raise ValueError(f"taxonomy line {lineno}: unknown sector {label!r}") from None
            rules.append(SectorRule(prefix, sector, mode == "include", hts))
        return cls(rules)

    @classmethod
    def from_file(cls, path) -> "SectorTaxonomy":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    def dumps(self) -> str:
        lines = []
        for r in self.rules:
            fields = [r.prefix, r.sector.value, "include" if r.include else "exclude"]
            if r.high_tech_services:
                fields.append("hts")
            lines.append("\t".join(fields))
        return "\n".join(lines) + "\n"


def _kis_rules() -> list[str]:
    divisions = [50, 51, 58, 59, 60, 61, 62, 63, 64, 65, 66, 69, 70, 71, 72, 73, 74, 75,
                 78, 80, 84, 85, 86, 87, 88, 90, 91, 92, 93]
    hts = {59, 60, 61, 62, 63, 72}
    return [f"{d}\tKIS\tinclude" + ("\thts" if d in hts else "") for d in divisions]


# Eurostat/OECD aggregation of NACE Rev. 2 (high-tech and knowledge-based services)
DEFAULT_TAXONOMY_TEXT = "\n".join([
    "21\tHighTech\tinclude",
    "26\tHighTech\tinclude",
    "30.3\tHighTech\tinclude",
    "20\tMediumHighTech\tinclude",
    "25.4\tMediumHighTech\tinclude",
    "27\tMediumHighTech\tinclude",
    "28\tMediumHighTech\tinclude",
    "29\tMediumHighTech\tinclude",
    "30\tMediumHighTech\tinclude",
    "30.1\tMediumHighTech\texclude",
    "32.5\tMediumHighTech\tinclude",
    *_kis_rules(),
]) + "\n"

DEFAULT_TAXONOMY = SectorTaxonomy.parse(DEFAULT_TAXONOMY_TEXT)


def sector_of(code, taxonomy: SectorTaxonomy = DEFAULT_TAXONOMY) -> SectorAssignment:
    return taxonomy.classify(code)


# NACE Rev. 2 divisions, used wherever a list of real divisions is needed
NACE_DIVISIONS: Sequence[str] = tuple(
    f"{d:02d}" for d in (
        1, 2, 3, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24,
        25, 26, 27, 28, 29, 30, 31, 32, 33, 35, 36, 37, 38, 39, 41, 42, 43, 45, 46, 47, 49,
        50, 51, 52, 53, 55, 56, 58, 59, 60, 61, 62, 63, 64, 65, 66, 68, 69, 70, 71, 72, 73,
        74, 75, 77, 78, 79, 80, 81, 82, 84, 85, 86, 87, 88, 90, 91, 92, 93, 94, 95, 96, 97,
        98, 99,
    )
)
