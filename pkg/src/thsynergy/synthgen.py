"""Synthetic firm populations with planted dependence between the three dimensions.

A :class:`SynthSpec` fixes a region layout (districts and subjects), the
number of zip codes per subject, size classes and NACE divisions, and a
*structure* giving the joint distribution of (zip within subject, size,
division).  Two modes exist:

* ``exact`` replicates each cell ``p * scale`` times, so the transmission
  of the resulting table is known exactly;
* ``sampled`` draws ``n_records`` firms from the same distribution with a
  seeded generator.

Structures are small frozen dataclasses and can be written to / read from
JSON for the command line.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .entropy import AXIS_ORDER, CategoryAxis, ContingencyTensor
from .errors import BadSpec, NotRational
from .geo import RegionHierarchy
from .ingest import FirmTable, Column
from .taxonomy import DEFAULT_SIZE_BINS, DEFAULT_TAXONOMY, NACE_DIVISIONS

MAX_DENOMINATOR = 10**6


def _rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        frac = Fraction(repr(value))
    else:
        frac = Fraction(value)
    if frac.denominator > MAX_DENOMINATOR:
        raise NotRational(f"{value!r} is not a simple rational number")
    return frac


@dataclass(frozen=True)
class Independent:
    """All three dimensions uniform and mutually independent."""


@dataclass(frozen=True)
class PairCoupled:
    """Axis ``b`` copies axis ``a`` (mod its cardinality) with probability ``strength``."""

    axes: tuple[int, int] = (1, 2)
    strength: float = 1.0

    def __post_init__(self):
        if len(self.axes) != 2 or len(set(self.axes)) != 2 or not set(self.axes) <= {0, 1, 2}:
            raise BadSpec(f"PairCoupled needs two distinct axis positions, got {self.axes}")
        if not 0 <= float(self.strength) <= 1:
            raise BadSpec("strength must lie in [0, 1]")


@dataclass(frozen=True)
class ParityCoupled:
    """Geography and size uniform; technology = (geo + size) mod its cardinality."""


@dataclass(frozen=True)
class DiagonalCoupled:
    """All three dimensions equal (mod cardinality); a fully redundant triple."""


@dataclass(frozen=True)
class Mixture:
    """Weighted combination of structures.

    With ``spatial=True`` the components occupy disjoint sets of subjects
    (assigned round robin) and the weights are their shares of firms.  With
    ``spatial=False`` the component distributions are overlaid in every
    subject.
    """

    components: tuple[tuple[float, "Structure"], ...]
    spatial: bool = True

    def __post_init__(self):
        if not self.components:
            raise BadSpec("a mixture needs at least one component")
        weights = [_rational(w) for w, _ in self.components]
        if any(w < 0 for w in weights) or sum(weights) != 1:
            raise BadSpec("mixture weights must be non-negative and sum to 1")


Structure = Union[Independent, PairCoupled, ParityCoupled, DiagonalCoupled, Mixture]


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    n_records: int = 1000
    # zips per subject, size classes, divisions
    cardinalities: tuple[int, int, int] = (2, 2, 2)
    structure: Structure = field(default_factory=Independent)
    # (districts, subjects); the nation is implicit
    layout: tuple[int, ...] = (1, 1)
    mode: str = "sampled"

    def __post_init__(self):
        kx, ky, kz = self.cardinalities
        if min(self.cardinalities) < 1:
            raise BadSpec("cardinalities must be positive")
        if ky > len(DEFAULT_SIZE_BINS.labels):
            raise BadSpec(f"at most {len(DEFAULT_SIZE_BINS.labels)} size classes")
        if kz > len(NACE_DIVISIONS):
            raise BadSpec(f"at most {len(NACE_DIVISIONS)} divisions")
        if len(self.layout) < 1 or any(n < 1 for n in self.layout):
            raise BadSpec("layout needs positive region counts per level")
        if any(b < a for a, b in zip(self.layout, self.layout[1:])):
            raise BadSpec("finer levels need at least as many regions as coarser ones")
        if self.mode not in ("sampled", "exact"):
            raise BadSpec("mode must be 'sampled' or 'exact'")
        if self.n_records < 0:
            raise BadSpec("n_records must be non-negative")

    @property
    def n_subjects(self) -> int:
        return self.layout[-1]

    def replace(self, **changes) -> "SynthSpec":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return SynthSpec(**data)


# ---------------------------------------------------------------------------
# cell probabilities
# ---------------------------------------------------------------------------


def _pmf(structure: Structure, shape: tuple[int, int, int]) -> dict[tuple[int, int, int], Fraction]:
    """Exact joint distribution of one subject's (zip, size, division) cells."""
    kx, ky, kz = shape
    cells: dict[tuple[int, int, int], Fraction] = {}

    def add(cell, p):
        if p:
            cells[cell] = cells.get(cell, Fraction(0)) + p

    if isinstance(structure, Independent):
        p = Fraction(1, kx * ky * kz)
        for x in range(kx):
            for y in range(ky):
                for z in range(kz):
                    add((x, y, z), p)
    elif isinstance(structure, PairCoupled):
        a, b = structure.axes
        (c,) = {0, 1, 2} - {a, b}
        s = _rational(structure.strength)
        ka, kb, kc = shape[a], shape[b], shape[c]
        for va in range(ka):
            for vb in range(kb):
                p_ab = Fraction(1, ka) * (s * (vb == va % kb) + (1 - s) * Fraction(1, kb))
                for vc in range(kc):
                    cell = [0, 0, 0]
                    cell[a], cell[b], cell[c] = va, vb, vc
                    add(tuple(cell), p_ab / kc)
    elif isinstance(structure, ParityCoupled):
        p = Fraction(1, kx * ky)
        for x in range(kx):
            for y in range(ky):
                add((x, y, (x + y) % kz), p)
    elif isinstance(structure, DiagonalCoupled):
        k = max(shape)
        for v in range(k):
            add((v % kx, v % ky, v % kz), Fraction(1, k))
    elif isinstance(structure, Mixture):
        for w, comp in structure.components:
            for cell, p in _pmf(comp, shape).items():
                add(cell, _rational(w) * p)
    else:
        raise BadSpec(f"unknown structure {structure!r}")
    return cells


def _allocate(structure: Structure, subjects: list[int], weight: Fraction, out: dict) -> None:
    """Assign a structure and a share of firms to each subject."""
    if isinstance(structure, Mixture) and structure.spatial:
        comps = structure.components
        if len(subjects) < len(comps):
            raise BadSpec(f"spatial mixture of {len(comps)} components needs at least "
                          f"{len(comps)} subjects, got {len(subjects)}")
        for i, (w, comp) in enumerate(comps):
            _allocate(comp, subjects[i::len(comps)], weight * _rational(w), out)
        return
    share = weight / len(subjects)
    for s in subjects:
        out[s] = (structure, share)


def population_pmf(spec: SynthSpec) -> dict[tuple[int, int, int, int], Fraction]:
    """Exact distribution over (subject, zip, size, division) cells."""
    alloc: dict[int, tuple[Structure, Fraction]] = {}
    _allocate(spec.structure, list(range(spec.n_subjects)), Fraction(1), alloc)
    out = {}
    for s in sorted(alloc):
        structure, share = alloc[s]
        if share == 0:
            continue
        for (x, y, z), p in _pmf(structure, spec.cardinalities).items():
            out[(s, x, y, z)] = share * p
    return out


def subject_structures(spec: SynthSpec) -> dict[int, Structure]:
    alloc: dict[int, tuple[Structure, Fraction]] = {}
    _allocate(spec.structure, list(range(spec.n_subjects)), Fraction(1), alloc)
    return {s: alloc[s][0] for s in sorted(alloc)}


# ---------------------------------------------------------------------------
# labels and geography
# ---------------------------------------------------------------------------


def _widths(spec: SynthSpec) -> tuple[int, int]:
    return len(str(max(spec.n_subjects - 1, 1))), len(str(max(spec.cardinalities[0] - 1, 1)))


def subject_id(s: int) -> str:
    return f"S{s:03d}"


def zip_code(spec: SynthSpec, s: int, x: int) -> str:
    ws, wz = _widths(spec)
    return f"{s:0{ws}d}{x:0{wz}d}"


def level_names(spec: SynthSpec) -> tuple[str, ...]:
    n = len(spec.layout)
    if n == 1:
        return ("subject", "nation")
    return ("subject", "district") + tuple(f"level{i}" for i in range(3, n + 1)) + ("nation",)


def region_chain(spec: SynthSpec, s: int) -> tuple[str, ...]:
    """Region ids for subject ``s`` from subject up to the nation.

    Each coarser level groups contiguous blocks of the level below it.
    """
    names = level_names(spec)
    counts = list(reversed(spec.layout))  # finest first
    chain = [subject_id(s)]
    idx = s
    for depth in range(1, len(counts)):
        idx = idx * counts[depth] // counts[depth - 1]
        prefix = "D" if names[depth] == "district" else names[depth].upper() + "-"
        chain.append(f"{prefix}{idx:02d}")
    chain.append("NATION")
    return tuple(chain)


def hierarchy(spec: SynthSpec) -> RegionHierarchy:
    """Region hierarchy whose prefixes are the subject part of the synthetic zips."""
    ws, _ = _widths(spec)
    entries = [(f"{s:0{ws}d}", region_chain(spec, s)) for s in range(spec.n_subjects)]
    names = {subject_id(s): f"Synthetic subject {s}" for s in range(spec.n_subjects)}
    return RegionHierarchy(entries, level_names(spec), names)


# ---------------------------------------------------------------------------
# exact and sampled populations
# ---------------------------------------------------------------------------


def _exact_cells(spec: SynthSpec) -> tuple[list[tuple[int, int, int, int]], np.ndarray]:
    pmf = population_pmf(spec)
    scale = math.lcm(*(p.denominator for p in pmf.values()))
    if spec.n_records >= scale and spec.n_records % scale == 0:
        scale = spec.n_records
    cells = sorted(pmf)
    counts = np.array([int(pmf[c] * scale) for c in cells], dtype=np.int64)
    return cells, counts


def _sampled_cells(spec: SynthSpec) -> np.ndarray:
    pmf = population_pmf(spec)
    cells = sorted(pmf)
    p = np.array([float(pmf[c]) for c in cells])
    rng = np.random.default_rng(spec.seed)
    draws = rng.choice(len(cells), size=spec.n_records, p=p / p.sum())
    return np.asarray(cells, dtype=np.int64).reshape(-1, 4)[draws]


def _rows(spec: SynthSpec) -> np.ndarray:
    """``(n, 4)`` array of (subject, zip, size, division) per firm, in output order."""
    if spec.mode == "exact":
        cells, counts = _exact_cells(spec)
        return np.repeat(np.asarray(cells, dtype=np.int64).reshape(-1, 4), counts, axis=0)
    return _sampled_cells(spec)


def _axes(spec: SynthSpec):
    kx, ky, kz = spec.cardinalities
    zips = sorted(zip_code(spec, s, x) for s in range(spec.n_subjects) for x in range(kx))
    return [
        CategoryAxis(AXIS_ORDER[0], zips),
        CategoryAxis(AXIS_ORDER[1], DEFAULT_SIZE_BINS.labels[:ky]),
        CategoryAxis(AXIS_ORDER[2], SYNTH_DIVISIONS[:kz]),
    ]


def _tensor(spec: SynthSpec, rows: np.ndarray) -> ContingencyTensor:
    axes = _axes(spec)
    kx = spec.cardinalities[0]
    # zip labels sort in (subject, zip) order because both parts are zero padded
    geo = rows[:, 0] * kx + rows[:, 1]
    return ContingencyTensor.from_codes(axes, np.stack([geo, rows[:, 2], rows[:, 3]], axis=1))


def exact_counts_mode(spec: SynthSpec) -> ContingencyTensor:
    """Pooled tensor with cell counts exactly proportional to the planted distribution.

    Counts use the smallest common scale of the cell probabilities, or
    ``n_records`` when that is a multiple of it.
    """
    return _tensor(spec, _rows(spec.replace(mode="exact")))


def sampled_tensor(spec: SynthSpec) -> ContingencyTensor:
    return _tensor(spec, _rows(spec.replace(mode="sampled")))


@dataclass(frozen=True)
class FirmRecord:
    firm_id: str
    location_code: str
    employees: int
    nace: str
    year: int | None = None


def _employees(y: int) -> int:
    return DEFAULT_SIZE_BINS.lower_bounds[y]


def _interleaved_divisions() -> tuple[str, ...]:
    # round-robin over sectors so that even a few divisions cover every sector
    groups: dict[str, list[str]] = {}
    for d in NACE_DIVISIONS:
        groups.setdefault(DEFAULT_TAXONOMY.classify(d + "10").sector.value, []).append(d)
    queues = [groups[k] for k in ("HighTech", "KIS", "MediumHighTech", "Other")]
    out = []
    for i in range(max(map(len, queues))):
        out += [q[i] for q in queues if i < len(q)]
    return tuple(out)


SYNTH_DIVISIONS = _interleaved_divisions()


def _nace(z: int) -> str:
    return SYNTH_DIVISIONS[z] + "10"


def generate(spec: SynthSpec) -> list[FirmRecord]:
    """Firm records for ``spec``; identical specs give identical output."""
    rows = _rows(spec)
    ids = _firm_ids(len(rows))
    return [
        FirmRecord(fid, zip_code(spec, s, x), _employees(y), _nace(z))
        for fid, (s, x, y, z) in zip(ids, rows.tolist())
    ]


def _firm_ids(n: int) -> list[str]:
    width = len(str(max(n - 1, 1)))
    return [f"F{i:0{width}d}" for i in range(n)]


def firm_table(spec: SynthSpec) -> FirmTable:
    """The classified table ingest would produce from :func:`generate` output."""
    rows = _rows(spec)
    h = hierarchy(spec)
    n = len(rows)
    zips = [zip_code(spec, s, x) for s, x in rows[:, :2].tolist()]
    chains = [region_chain(spec, s) for s in range(spec.n_subjects)]
    regions = {}
    for i, lvl in enumerate(h.levels):
        values = [chains[s][i] for s in rows[:, 0].tolist()]
        regions[lvl] = Column.encode(values)
    divisions = [SYNTH_DIVISIONS[z] for z in rows[:, 3].tolist()]
    sectors = [DEFAULT_TAXONOMY.classify(_nace(z)) for z in rows[:, 3].tolist()]
    return FirmTable(
        _firm_ids(n), Column.encode(zips), regions,
        Column(rows[:, 2].copy(), DEFAULT_SIZE_BINS.labels),
        Column.encode(divisions),
        Column.encode([s.sector.value for s in sectors]),
        [s.high_tech_services for s in sectors],
        None,
        Column.encode([_nace(z) for z in rows[:, 3].tolist()]),
    )


def write_csv(records: Sequence[FirmRecord], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["firm_id", "zip", "employees", "nace"])
        w.writerows((r.firm_id, r.location_code, r.employees, r.nace) for r in records)


def write_dataset(spec: SynthSpec, stem) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.hierarchy.tsv``; returns both paths."""
    stem = Path(stem)
    csv_path = stem.with_name(stem.name + ".csv")
    tsv_path = stem.with_name(stem.name + ".hierarchy.tsv")
    write_csv(generate(spec), csv_path)
    tsv_path.write_text(hierarchy(spec).dumps(), encoding="utf-8")
    return csv_path, tsv_path


# ---------------------------------------------------------------------------
# JSON form
# ---------------------------------------------------------------------------


def structure_from_dict(data) -> Structure:
    kind = data.get("type") if isinstance(data, dict) else data
    if kind == "independent":
        return Independent()
    if kind == "parity":
        return ParityCoupled()
    if kind == "diagonal":
        return DiagonalCoupled()
    if kind == "pair":
        return PairCoupled(tuple(data.get("axes", (1, 2))), data.get("strength", 1.0))
    if kind == "mixture":
        comps = tuple((c["weight"], structure_from_dict(c["structure"]))
                      for c in data["components"])
        return Mixture(comps, data.get("spatial", True))
    raise BadSpec(f"unknown structure type {kind!r}")


def structure_to_dict(structure: Structure) -> dict:
    if isinstance(structure, Independent):
        return {"type": "independent"}
    if isinstance(structure, ParityCoupled):
        return {"type": "parity"}
    if isinstance(structure, DiagonalCoupled):
        return {"type": "diagonal"}
    if isinstance(structure, PairCoupled):
        return {"type": "pair", "axes": list(structure.axes), "strength": structure.strength}
    return {
        "type": "mixture",
        "spatial": structure.spatial,
        "components": [{"weight": w, "structure": structure_to_dict(s)}
                       for w, s in structure.components],
    }


def spec_from_dict(data: dict) -> SynthSpec:
    try:
        return SynthSpec(
            seed=int(data.get("seed", 0)),
            n_records=int(data.get("n_records", 1000)),
            cardinalities=tuple(data.get("cardinalities", (2, 2, 2))),
            structure=structure_from_dict(data.get("structure", {"type": "independent"})),
            layout=tuple(data.get("layout", (1, 1))),
            mode=data.get("mode", "sampled"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, BadSpec):
            raise
        raise BadSpec(f"invalid synthetic spec: {exc}") from exc


def load_spec(path) -> SynthSpec:
    return spec_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def spec_to_dict(spec: SynthSpec) -> dict:
    return {
        "seed": spec.seed,
        "n_records": spec.n_records,
        "cardinalities": list(spec.cardinalities),
        "structure": structure_to_dict(spec.structure),
        "layout": list(spec.layout),
        "mode": spec.mode,
    }
