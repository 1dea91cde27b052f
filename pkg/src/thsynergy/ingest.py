"""Firm-level CSV ingestion, validity accounting and tensor construction.

Input is UTF-8 CSV with header ``firm_id,zip,employees,nace[,year]``.  A
record is valid when its location resolves in the region hierarchy, its
employee count parses as a non-negative integer and its NACE code is
well formed.  Invalid records are counted under exactly one reason, the
first failing check in the order location, size, nace.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .entropy import Axis, CategoryAxis, ContingencyTensor
from .errors import HeaderMismatch, InputIOError, MalformedCode, NoValidRecords, UnmappedLocation
from .geo import RegionHierarchy
from .taxonomy import DEFAULT_SIZE_BINS, DEFAULT_TAXONOMY, SizeBins, SectorTaxonomy, normalize_nace

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("firm_id", "zip", "employees", "nace")
OPTIONAL_COLUMNS = ("year",)

EXCLUSION_REASONS = (
    "malformed_line",
    "duplicate_id",
    "missing_location",
    "unmapped_location",
    "missing_size",
    "bad_nace",
)
FILTER_REASONS = ("year", "zero_size")


class Diagnostic(NamedTuple):
    line: int
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class RawRecord:
    line: int
    firm_id: str
    zip: str
    employees: int | None
    nace: str
    year: int | None = None
    diagnostics: tuple[str, ...] = ()
    has_year: bool = False


class ClassifiedRecord(NamedTuple):
    firm_id: str
    location_code: str
    regions: tuple[str, ...]
    size_index: int
    size_label: str
    division: str
    nace: str
    sector: str
    high_tech_services: bool
    year: int | None = None


class Exclusion(NamedTuple):
    reason: str
    detail: str = ""


def _parse_int(text: str) -> int | None:
    text = text.strip()
    if not text:
        return None
    try:
        return int(text)
    except ValueError:
        try:
            value = float(text)
        except ValueError:
            return None
        return int(value) if value.is_integer() else None


def parse_records(path) -> Iterator[RawRecord | Diagnostic]:
    """Yield one :class:`RawRecord` per data line, or a :class:`Diagnostic`
    for lines that cannot be split into the header's fields.

    Field-level problems (an unparseable employee count) keep the record and
    note the reason in ``RawRecord.diagnostics``.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise HeaderMismatch(f"{path} is empty; expected header {','.join(REQUIRED_COLUMNS)}")
        except (csv.Error, UnicodeDecodeError) as exc:
            raise InputIOError(f"cannot read {path}: {exc}") from exc
        names = [h.strip().lower() for h in header]
        missing = [c for c in REQUIRED_COLUMNS if c not in names]
        if missing:
            raise HeaderMismatch(f"{path} lacks required column(s): {', '.join(missing)}")
        i_id, i_zip, i_emp, i_nace = (names.index(c) for c in REQUIRED_COLUMNS)
        i_year = names.index("year") if "year" in names else None
        width = len(names)
        lineno = 1
        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except csv.Error as exc:
                lineno = reader.line_num
                yield Diagnostic(lineno, "malformed_line", str(exc))
                continue
            lineno = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != width:
                yield Diagnostic(lineno, "malformed_line",
                                 f"{len(row)} fields, header has {width}")
                continue
            employees = _parse_int(row[i_emp])
            notes = ()
            if employees is None or employees < 0:
                employees = None
                notes = ("missing_size",)
            year = _parse_int(row[i_year]) if i_year is not None else None
            yield RawRecord(lineno, row[i_id].strip(), row[i_zip].strip(), employees,
                            row[i_nace].strip(), year, notes, i_year is not None)


def read_records(path) -> tuple[list[RawRecord], list[Diagnostic]]:
    """Collect :func:`parse_records` output into records and diagnostics."""
    records, diagnostics = [], []
    for item in parse_records(path):
        if isinstance(item, Diagnostic):
            diagnostics.append(item)
        else:
            records.append(item)
            diagnostics += [Diagnostic(item.line, reason) for reason in item.diagnostics]
    return records, diagnostics


class _NaceCache(dict):
    def __init__(self, taxonomy: SectorTaxonomy):
        super().__init__()
        self.taxonomy = taxonomy

    def __missing__(self, code):
        try:
            digits = normalize_nace(code)
        except MalformedCode:
            value = None
        else:
            assignment = self.taxonomy.classify(digits)
            value = (digits, digits[:2], assignment.sector.value, assignment.high_tech_services)
        self[code] = value
        return value


def validate_and_classify(
    raw: RawRecord,
    hierarchy: RegionHierarchy,
    taxonomy: SectorTaxonomy = DEFAULT_TAXONOMY,
    size_bins: SizeBins = DEFAULT_SIZE_BINS,
) -> ClassifiedRecord | Exclusion:
    return _classify(raw, hierarchy, size_bins, _NaceCache(taxonomy))


def _classify(raw, hierarchy, size_bins, nace_cache) -> ClassifiedRecord | Exclusion:
    if not raw.zip:
        return Exclusion("missing_location")
    try:
        chain = hierarchy.resolve(raw.zip)
    except UnmappedLocation:
        return Exclusion("unmapped_location", raw.zip)
    if raw.employees is None:
        return Exclusion("missing_size")
    nace = nace_cache[raw.nace]
    if nace is None:
        return Exclusion("bad_nace", raw.nace)
    size_index = size_bins.index(raw.employees)
    digits, division, sector, hts = nace
    return ClassifiedRecord(raw.firm_id, raw.zip, chain, size_index,
                            size_bins.labels[size_index], division, digits, sector, hts,
                            raw.year)


# ---------------------------------------------------------------------------
# accounting
# ---------------------------------------------------------------------------


@dataclass
class ExclusionReport:
    """Validity accounting: ``total_read == total_valid + excluded + filtered``."""

    total_read: int = 0
    total_valid: int = 0
    reasons: dict[str, int] = field(default_factory=lambda: dict.fromkeys(EXCLUSION_REASONS, 0))
    filtered: dict[str, int] = field(default_factory=lambda: dict.fromkeys(FILTER_REASONS, 0))
    examples: list[Diagnostic] = field(default_factory=list)
    max_examples: int = 20

    @property
    def total_excluded(self) -> int:
        return sum(self.reasons.values())

    @property
    def validity_ratio(self) -> float:
        """Valid records as a percentage of records read."""
        return 100.0 * self.total_valid / self.total_read if self.total_read else 0.0

    def balanced(self) -> bool:
        return self.total_read == self.total_valid + self.total_excluded + sum(self.filtered.values())

    def exclude(self, line: int, reason: str, detail: str = "") -> None:
        self.reasons[reason] += 1
        if len(self.examples) < self.max_examples:
            self.examples.append(Diagnostic(line, reason, detail))

    def summary(self) -> str:
        return (f"{self.total_valid:,} of {self.total_read:,} records valid "
                f"({self.validity_ratio:.1f}%)")

    def to_dict(self) -> dict:
        return {
            "total_read": self.total_read,
            "total_valid": self.total_valid,
            "validity_pct": round(self.validity_ratio, 1),
            "excluded": dict(self.reasons),
            "filtered": dict(self.filtered),
            "examples": [d._asdict() for d in self.examples],
        }


# ---------------------------------------------------------------------------
# columnar firm table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Column:
    """Categorical column stored as integer codes into ``labels``."""

    codes: np.ndarray
    labels: tuple[str, ...]

    @classmethod
    def encode(cls, values: Sequence[str], labels: Sequence[str] | None = None) -> "Column":
        if labels is None:
            labels = sorted(set(values))
        lookup = {label: i for i, label in enumerate(labels)}
        codes = np.fromiter((lookup[v] for v in values), dtype=np.int64, count=len(values))
        return cls(codes, tuple(labels))

    @classmethod
    def from_interned(cls, codes: Sequence[int], interned: dict[str, int],
                      labels: Sequence[str] | None = None) -> "Column":
        """Re-map first-seen codes to the (default: sorted) label order."""
        labels = tuple(sorted(interned) if labels is None else labels)
        lookup = {label: i for i, label in enumerate(labels)}
        remap = np.empty(max(len(interned), 1), dtype=np.int64)
        for label, first_seen in interned.items():
            remap[first_seen] = lookup[label]
        arr = np.asarray(codes, dtype=np.int64)
        return cls(remap[arr] if arr.size else arr, labels)

    def values(self) -> list[str]:
        labels = self.labels
        return [labels[c] for c in self.codes.tolist()]

    def take(self, idx) -> "Column":
        return Column(self.codes[idx], self.labels)

    def observed(self) -> tuple[np.ndarray, tuple[str, ...]]:
        """Codes compressed to observed categories (label order kept)."""
        present = np.flatnonzero(np.bincount(self.codes, minlength=len(self.labels)))
        remap = np.full(len(self.labels), -1, dtype=np.int64)
        remap[present] = np.arange(present.size)
        return remap[self.codes], tuple(self.labels[i] for i in present)


class FirmTable:
    """Valid, classified firms as parallel categorical columns."""

    def __init__(self, firm_ids, location: Column, regions: dict[str, Column],
                 size: Column, division: Column, sector: Column, hts, year=None,
                 nace: Column | None = None):
        self.firm_ids = np.asarray(firm_ids, dtype=object)
        self.location = location
        self.regions = dict(regions)
        self.levels = tuple(self.regions)
        self.size = size
        self.division = division
        self.sector = sector
        self.hts = np.asarray(hts, dtype=bool)
        self.year = None if year is None else np.asarray(year, dtype=np.int64)
        self.nace = division if nace is None else nace

    def __len__(self):
        return len(self.firm_ids)

    @classmethod
    def from_records(cls, records: Iterable[ClassifiedRecord], levels: Sequence[str],
                     size_labels: Sequence[str] = DEFAULT_SIZE_BINS.labels) -> "FirmTable":
        records = list(records)
        regions = {lvl: Column.encode([r.regions[i] for r in records])
                   for i, lvl in enumerate(levels)}
        size = Column(np.array([r.size_index for r in records], dtype=np.int64),
                      tuple(size_labels))
        years = [r.year for r in records]
        year = None if all(y is None for y in years) else [-1 if y is None else y for y in years]
        return cls(
            [r.firm_id for r in records],
            Column.encode([r.location_code for r in records]),
            regions, size,
            Column.encode([r.division for r in records]),
            Column.encode([r.sector for r in records]),
            [r.high_tech_services for r in records],
            year,
            Column.encode([r.nace for r in records]),
        )

    def subset(self, mask) -> "FirmTable":
        idx = np.flatnonzero(np.asarray(mask, dtype=bool)) if np.asarray(mask).dtype == bool \
            else np.asarray(mask, dtype=np.int64)
        return FirmTable(
            self.firm_ids[idx], self.location.take(idx),
            {lvl: col.take(idx) for lvl, col in self.regions.items()},
            self.size.take(idx), self.division.take(idx), self.sector.take(idx),
            self.hts[idx], None if self.year is None else self.year[idx],
            self.nace.take(idx),
        )

    def geo_column(self, geo_level: str) -> Column:
        if geo_level in ("zip", "location"):
            return self.location
        try:
            return self.regions[geo_level]
        except KeyError:
            raise KeyError(f"unknown geography level {geo_level!r}; "
                           f"choose zip or one of {', '.join(self.levels)}") from None

    def axes_and_codes(self, geo_level: str = "zip"):
        """Category axes over observed values and the ``(n, 3)`` code matrix."""
        axes, cols = [], []
        for axis_id, column in zip(
            (Axis.GEOGRAPHY, Axis.SIZE, Axis.TECHNOLOGY),
            (self.geo_column(geo_level), self.size, self.division),
        ):
            codes, labels = column.observed()
            axes.append(CategoryAxis(axis_id, labels))
            cols.append(codes)
        return axes, np.stack(cols, axis=1) if len(self) else np.zeros((0, 3), np.int64)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


def ingest(
    paths,
    hierarchy: RegionHierarchy,
    taxonomy: SectorTaxonomy = DEFAULT_TAXONOMY,
    size_bins: SizeBins = DEFAULT_SIZE_BINS,
    year: int | None = None,
    include_zero_size: bool = True,
) -> tuple[FirmTable, ExclusionReport]:
    """Parse, validate and classify firm files into a :class:`FirmTable`.

    ``paths`` is one path or a list of paths read in order; duplicate firm
    ids are detected across all of them.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    report = ExclusionReport()
    nace_cache = _NaceCache(taxonomy)
    seen_ids: set[str] = set()
    n_levels = len(hierarchy.levels)

    firm_ids: list[str] = []
    loc_codes, loc_intern = [], {}
    geo_codes = [[] for _ in range(n_levels)]
    geo_intern = [{} for _ in range(n_levels)]
    size_codes, div_codes, div_intern = [], [], {}
    sector_codes, sector_intern, hts_flags, years = [], {}, [], []
    nace_codes, nace_intern = [], {}

    for item in _chain_records(paths):
        report.total_read += 1
        if isinstance(item, Diagnostic):
            report.exclude(item.line, item.reason, item.detail)
            continue
        if year is not None and item.has_year and item.year != year:
            report.filtered["year"] += 1
            continue
        if item.firm_id:
            if item.firm_id in seen_ids:
                report.exclude(item.line, "duplicate_id", item.firm_id)
                continue
            seen_ids.add(item.firm_id)
        result = _classify(item, hierarchy, size_bins, nace_cache)
        if isinstance(result, Exclusion):
            report.exclude(item.line, result.reason, result.detail)
            continue
        if not include_zero_size and item.employees == 0:
            report.filtered["zero_size"] += 1
            continue

        report.total_valid += 1
        firm_ids.append(result.firm_id)
        loc_codes.append(loc_intern.setdefault(result.location_code, len(loc_intern)))
        for i, region in enumerate(result.regions):
            geo_codes[i].append(geo_intern[i].setdefault(region, len(geo_intern[i])))
        size_codes.append(result.size_index)
        div_codes.append(div_intern.setdefault(result.division, len(div_intern)))
        sector_codes.append(sector_intern.setdefault(result.sector, len(sector_intern)))
        hts_flags.append(result.high_tech_services)
        years.append(-1 if result.year is None else result.year)
        nace_codes.append(nace_intern.setdefault(result.nace, len(nace_intern)))

    table = FirmTable(
        firm_ids,
        Column.from_interned(loc_codes, loc_intern),
        {lvl: Column.from_interned(geo_codes[i], geo_intern[i])
         for i, lvl in enumerate(hierarchy.levels)},
        Column(np.asarray(size_codes, dtype=np.int64), size_bins.labels),
        Column.from_interned(div_codes, div_intern),
        Column.from_interned(sector_codes, sector_intern),
        hts_flags,
        years,
        Column.from_interned(nace_codes, nace_intern),
    )
    log.info("%s: %s", ", ".join(Path(p).name for p in paths), report.summary())
    return table, report


def _chain_records(paths):
    for path in paths:
        yield from parse_records(path)


def build_tensor(records, geo_level: str = "zip", chunks: int = 1) -> ContingencyTensor:
    """Count firms per (geography, size class, division) cell.

    ``chunks > 1`` counts contiguous slices separately and merges the partial
    tensors, which must give the same tensor as a single pass.
    """
    if not isinstance(records, FirmTable):
        raise TypeError("build_tensor expects a FirmTable")
    if len(records) == 0:
        raise NoValidRecords("no valid records to count")
    axes, codes = records.axes_and_codes(geo_level)
    if chunks <= 1:
        return ContingencyTensor.from_codes(axes, codes)
    parts = np.array_split(codes, chunks)
    tensor = ContingencyTensor.from_codes(axes, parts[0])
    for part in parts[1:]:
        tensor = tensor.merge(ContingencyTensor.from_codes(axes, part))
    return tensor


def file_digest(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


SECTOR_FILTERS = {
    "high_tech": "HighTech",
    "medium_tech": "MediumHighTech",
    "kis": "KIS",
}


def sector_mask(table: FirmTable, selection: str) -> np.ndarray:
    """Boolean row mask for a sector filter.

    ``selection`` is ``all``, ``high_tech``, ``medium_tech``, ``kis``, ``hts``
    (high-tech services) or ``custom:<prefix>,<prefix>,...`` over NACE digits.
    """
    if selection == "all":
        return np.ones(len(table), dtype=bool)
    if selection == "hts":
        return table.hts.copy()
    if selection in SECTOR_FILTERS:
        label = SECTOR_FILTERS[selection]
        if label not in table.sector.labels:
            return np.zeros(len(table), dtype=bool)
        return table.sector.codes == table.sector.labels.index(label)
    if selection.startswith("custom:"):
        prefixes = tuple(p.strip().replace(".", "") for p in selection[7:].split(",") if p.strip())
        if not prefixes or not all(p.isdigit() for p in prefixes):
            raise ValueError(f"custom sector filter needs digit prefixes: {selection!r}")
        hit = np.array([label.startswith(prefixes) for label in table.nace.labels], dtype=bool)
        return hit[table.nace.codes] if len(table) else np.zeros(0, dtype=bool)
    raise ValueError(f"unknown sector filter {selection!r}")
