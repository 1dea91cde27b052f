"""Group-wise decomposition of the three-way transmission.

For a partition of the firms into groups G the pooled transmission splits as

    T = T0 + sum_G (n_G / N) * T_G

where ``T_G`` is the transmission inside group G and ``T0`` the between-group
remainder.  ``(n_G / N) * T_G`` is the group's contribution ``delta_T`` to the
pooled value.  Repeating the split for nested levels (subjects inside
districts inside the nation) gives one increment per level; the increments
add up to the national total.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .entropy import CategoryAxis, ContingencyTensor, transmission3
from .errors import BadCounts, EmptyPartition, ZeroTotal

log = logging.getLogger(__name__)

SMALL_GROUP = 30


@dataclass
class GroupSynergy:
    group_id: str
    n: int
    t_group: float
    delta_t: float
    level: str = ""
    record_share: float = 0.0
    synergy_share: float | None = None
    parent: str | None = None
    # T0 of this group split by the next finer level; None at the finest level
    between: float | None = None


@dataclass
class GroupDecomposition:
    n: int
    t_total: float
    t_between: float
    groups: list[GroupSynergy]

    @property
    def in_group_sum(self) -> float:
        return math.fsum(g.delta_t for g in self.groups)


def sign_label(value: float) -> str:
    if value < 0:
        return "synergy"
    if value > 0:
        return "uncertainty"
    return "none"


def _group_transmissions(axes, codes, group_codes, n_groups, jobs=1):
    """T_G and n_G per group code, evaluated on each group's own tensor."""
    order = np.argsort(group_codes, kind="stable")
    sizes = np.bincount(group_codes, minlength=n_groups)
    bounds = np.concatenate([[0], np.cumsum(sizes)])

    def one(g):
        n = int(sizes[g])
        if n <= 1:
            return 0.0
        rows = codes[order[bounds[g]:bounds[g + 1]]]
        return transmission3(ContingencyTensor.from_codes(axes, rows))

    present = [g for g in range(n_groups) if sizes[g] > 0]
    if jobs > 1 and len(present) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(one, present))
    else:
        values = [one(g) for g in present]
    return {g: (int(sizes[g]), t) for g, t in zip(present, values)}


def decompose_codes(
    axes: Sequence[CategoryAxis],
    codes,
    group_labels: Sequence[str],
    required: Iterable[str] = (),
    jobs: int = 1,
    t_total: float | None = None,
) -> GroupDecomposition:
    """Decompose the transmission of ``codes`` over the groups in ``group_labels``.

    ``group_labels`` holds one group id per row of ``codes``.  Groups without
    records are skipped unless listed in ``required``.
    """
    codes = np.asarray(codes, dtype=np.int64).reshape(-1, 3)
    labels = np.asarray(group_labels, dtype=object)
    if len(labels) != len(codes):
        raise ValueError("one group label per record is required")
    n = len(codes)
    if n == 0:
        raise EmptyPartition("cannot decompose an empty record set")
    uniq, inv = np.unique(labels.astype(str), return_inverse=True)
    missing = sorted(set(map(str, required)) - set(uniq.tolist()))
    if missing:
        raise EmptyPartition(f"group(s) without records: {', '.join(missing)}")
    return _decompose(axes, codes, inv.ravel(), [str(u) for u in uniq], jobs, t_total)


def _decompose(axes, codes, group_codes, group_ids, jobs=1, t_total=None):
    n = len(codes)
    if t_total is None:
        t_total = transmission3(ContingencyTensor.from_codes(axes, codes))
    if len(group_ids) == 1:
        per_group = {0: (n, t_total)}
    else:
        per_group = _group_transmissions(axes, codes, group_codes, len(group_ids), jobs)
    groups = []
    for g in sorted(per_group, key=lambda g: group_ids[g]):
        n_g, t_g = per_group[g]
        groups.append(GroupSynergy(group_ids[g], n_g, t_g, n_g / n * t_g,
                                   record_share=100.0 * n_g / n))
    in_group = math.fsum(gs.delta_t for gs in groups)
    t0 = math.fsum([t_total, -in_group]) + 0.0
    for gs in groups:
        gs.synergy_share = 100.0 * gs.delta_t / t_total if t_total else None
    return GroupDecomposition(n, t_total, t0, groups)


def group_decompose(records, level: str, geo_level: str = "zip", jobs: int = 1,
                    required: Iterable[str] = ()) -> GroupDecomposition:
    """Decompose a :class:`~thsynergy.ingest.FirmTable` by one hierarchy level."""
    axes, codes = records.axes_and_codes(geo_level)
    column = records.regions[level]
    labels = [column.labels[c] for c in column.codes.tolist()]
    return decompose_codes(axes, codes, labels, required=required, jobs=jobs)


# ---------------------------------------------------------------------------
# shares and normalisation
# ---------------------------------------------------------------------------


def share_of_total(row: float, t_total: float) -> float:
    """``row`` as a percentage of ``t_total``."""
    if t_total == 0:
        raise ZeroTotal("total transmission is zero; shares are undefined")
    return 100.0 * row / t_total


def sector_normalize(t_sector: float, n_sector: int, n_all: int) -> float:
    """Scale a sector total to the all-sector population: ``T * n_sector / N``."""
    if n_all <= 0 or not 0 <= n_sector <= n_all:
        raise BadCounts(f"need 0 <= n_sector <= N and N > 0, got {n_sector} / {n_all}")
    return t_sector * n_sector / n_all


def rank_regions(groups: Iterable[GroupSynergy], min_share_of_records: float = 0.0) -> list[GroupSynergy]:
    """Groups holding at least the given percentage of records, most synergetic first."""
    kept = [g for g in groups if g.record_share >= min_share_of_records]
    return sorted(kept, key=lambda g: (g.delta_t, g.group_id))


# ---------------------------------------------------------------------------
# multilevel table
# ---------------------------------------------------------------------------


@dataclass
class LevelRow:
    level: str
    n_groups: int
    in_group_sum: float
    increment: float
    share: float | None = None
    sign: str = ""


@dataclass
class NormalizedRow:
    """Sector total rescaled to the all-sector population."""

    n_sector: int
    n_all: int
    value: float
    t_all: float | None = None
    share: float | None = None


@dataclass
class DecompositionReport:
    n: int
    t_total: float
    levels: list[str]
    rows: list[LevelRow]
    groups: dict[str, list[GroupSynergy]]
    # T0 between each finer level and the next coarser one
    between: list[dict]
    geo_axis: str
    shares_note: str | None = None
    normalized: NormalizedRow | None = None
    warnings: list[str] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def increments(self) -> list[float]:
        return [r.increment for r in self.rows]

    def in_group_sum(self, level: str) -> float:
        for r in self.rows:
            if r.level == level:
                return r.in_group_sum
        raise KeyError(level)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t_total": self.t_total,
            "t_total_sign": sign_label(self.t_total),
            "geo_axis": self.geo_axis,
            "levels": list(self.levels),
            "rows": [asdict(r) for r in self.rows],
            "shares_note": self.shares_note,
            "normalized_nationally": None if self.normalized is None else asdict(self.normalized),
            "between": self.between,
            "groups": {lvl: [asdict(g) for g in gs] for lvl, gs in self.groups.items()},
            "warnings": list(self.warnings),
            "metadata": self.metadata,
        }


def level_increments(in_group_sums: Sequence[float], t_total: float) -> list[float]:
    """Rows of the level table, finest level first.

    ``in_group_sums`` are the weighted in-group sums of the grouped levels
    below the nation.  The finest row is its own sum, each coarser row the
    change from the level below, and the national row ``t_total`` minus the
    coarsest grouped sum.  The rows add up to ``t_total``.
    """
    rows = []
    previous = 0.0
    for s in list(in_group_sums) + [t_total]:
        rows.append(math.fsum([s, -previous]) + 0.0)
        previous = s
    return rows


def level_shares(rows: Sequence[float], t_total: float) -> tuple[list[float | None], str | None]:
    """Percentage of total per row, or no shares when they would mislead."""
    if t_total == 0:
        return [None] * len(rows), "total transmission is zero"
    if any(r > 0 for r in rows) and any(r < 0 for r in rows):
        return [None] * len(rows), "rows have mixed signs"
    return [share_of_total(r, t_total) for r in rows], None


def multilevel_table(
    records,
    levels: Sequence[str] | None = None,
    geo_level: str = "zip",
    jobs: int = 1,
    metadata: dict | None = None,
) -> DecompositionReport:
    """Decompose a :class:`~thsynergy.ingest.FirmTable` over nested levels.

    ``levels`` run from finest to coarsest and must follow the table's level
    order; the table's coarsest (national) level is appended when omitted.
    """
    all_levels = list(records.levels)
    if levels is None:
        levels = all_levels
    levels = list(levels)
    if not levels or levels[-1] != all_levels[-1]:
        levels.append(all_levels[-1])
    positions = [all_levels.index(lvl) for lvl in levels]
    if positions != sorted(set(positions)):
        raise ValueError(f"levels must run finest to coarsest without repeats: {levels}")

    n = len(records)
    if n == 0:
        raise EmptyPartition("cannot decompose an empty record set")
    axes, codes = records.axes_and_codes(geo_level)
    t_total = transmission3(ContingencyTensor.from_codes(axes, codes))

    warnings = []
    if geo_level not in ("zip", "location"):
        geo_pos = all_levels.index(geo_level)
        if geo_pos >= positions[0]:
            warnings.append(
                f"geography axis {geo_level!r} is not finer than level {levels[0]!r}: "
                "every group at that level has a single geographic category")

    decomps: dict[str, GroupDecomposition] = {}
    for lvl in levels:
        col = records.regions[lvl]
        decomps[lvl] = _decompose(axes, codes, col.codes, list(col.labels), jobs, t_total)

    sums = [decomps[lvl].in_group_sum for lvl in levels[:-1]] + [t_total]
    increments = level_increments(sums[:-1], t_total)
    shares, note = level_shares(increments, t_total)
    rows = [
        LevelRow(lvl, len(decomps[lvl].groups), s, inc, sh, sign_label(inc))
        for lvl, s, inc, sh in zip(levels, sums, increments, shares)
    ]

    groups: dict[str, list[GroupSynergy]] = {}
    for lvl in levels:
        for g in decomps[lvl].groups:
            g.level = lvl
        groups[lvl] = decomps[lvl].groups

    between = []
    for finer, coarser in zip(levels, levels[1:]):
        _nest(records, finer, coarser, groups)
        between.append({
            "finer": finer,
            "coarser": coarser,
            "t0": math.fsum([decomps[coarser].in_group_sum, -decomps[finer].in_group_sum]) + 0.0,
        })

    for lvl in levels:
        small = [g.group_id for g in groups[lvl] if g.n < SMALL_GROUP]
        if small:
            shown = ", ".join(small[:10]) + (" ..." if len(small) > 10 else "")
            warnings.append(f"{len(small)} {lvl} group(s) have fewer than {SMALL_GROUP} firms: {shown}")
    for w in warnings:
        log.warning(w)

    return DecompositionReport(
        n=n, t_total=t_total, levels=levels, rows=rows, groups=groups, between=between,
        geo_axis=geo_level, shares_note=note, warnings=warnings, metadata=dict(metadata or {}),
    )


def _nest(records, finer: str, coarser: str, groups: dict[str, list[GroupSynergy]]) -> None:
    """Attach parents to finer groups and the within-group T0 to coarser groups."""
    fcol, ccol = records.regions[finer], records.regions[coarser]
    pairs = np.unique(np.stack([fcol.codes, ccol.codes], axis=1), axis=0)
    parent_of: dict[str, str] = {}
    for f, c in pairs.tolist():
        fid, cid = fcol.labels[f], ccol.labels[c]
        if fid in parent_of and parent_of[fid] != cid:
            raise ValueError(f"{finer} {fid!r} lies in more than one {coarser}")
        parent_of[fid] = cid
    children: dict[str, list[GroupSynergy]] = {}
    for g in groups[finer]:
        g.parent = parent_of[g.group_id]
        children.setdefault(g.parent, []).append(g)
    for g in groups[coarser]:
        kids = children.get(g.group_id, [])
        inside = math.fsum(k.n / g.n * k.t_group for k in kids)
        g.between = math.fsum([g.t_group, -inside]) + 0.0


def normalize_report(report: DecompositionReport, n_all: int, t_all: float | None = None) -> NormalizedRow:
    """Attach the all-sector normalisation of a sector-filtered report."""
    value = sector_normalize(report.t_total, report.n, n_all)
    share = share_of_total(value, t_all) if t_all else None
    report.normalized = NormalizedRow(report.n, n_all, value, t_all, share)
    return report.normalized
