"""Tables and files written from a :class:`~thsynergy.decomposition.DecompositionReport`.

Display values carry one decimal of mbits; JSON keeps full precision.
Nothing time-dependent goes into these files so that identical inputs give
byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable

from .decomposition import DecompositionReport, rank_regions

# Upper edges of the choropleth classes, in mbits.  A value equal to an edge
# falls into the more negative class.
BUCKET_EDGES = (0.0, -10.0, -25.0, -50.0, -100.0, -200.0)
BUCKET_LABELS = (
    "dT > 0",
    "0 >= dT > -10",
    "-10 >= dT > -25",
    "-25 >= dT > -50",
    "-50 >= dT > -100",
    "-100 >= dT > -200",
    "dT <= -200",
)


def map_bucket(delta_t: float) -> int:
    """Choropleth class index 0..6 for a contribution in mbits."""
    return sum(1 for edge in BUCKET_EDGES if delta_t <= edge)


def fmt(value: float | None, digits: int = 1) -> str:
    if value is None:
        return ""
    text = f"{value:.{digits}f}"
    return text[1:] if text.startswith("-") and float(text) == 0 else text


def _csv_text(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def levels_csv(report: DecompositionReport) -> str:
    rows = [
        (r.level, r.n_groups, fmt(r.in_group_sum), fmt(r.increment), fmt(r.share), r.sign)
        for r in report.rows
    ]
    rows.append(("total", "", "", fmt(report.t_total), "" if report.shares_note else fmt(100.0),
                 "synergy" if report.t_total < 0 else "uncertainty" if report.t_total > 0 else "none"))
    if report.normalized is not None:
        nr = report.normalized
        rows.append(("normalized nationally", "", "", fmt(nr.value), fmt(nr.share, 2), ""))
    return _csv_text(
        ["level", "groups", "in_group_sum_mbits", "increment_mbits", "share_pct", "sign"], rows)


def region_rows(report: DecompositionReport, min_share: float = 0.0):
    for level in report.levels:
        for g in rank_regions(report.groups[level], min_share):
            yield level, g


def regions_csv(report: DecompositionReport, names: dict[str, str] | None = None,
                min_share: float = 0.0) -> str:
    names = names or {}
    rows = [
        (level, g.group_id, names.get(g.group_id, g.group_id), g.parent or "", g.n,
         fmt(g.record_share, 2), fmt(g.t_group), fmt(g.delta_t), fmt(g.synergy_share),
         fmt(g.between))
        for level, g in region_rows(report, min_share)
    ]
    return _csv_text(
        ["level", "region_id", "name", "parent", "n", "record_share_pct", "t_group_mbits",
         "delta_t_mbits", "synergy_share_pct", "between_mbits"], rows)


def map_rows(groups) -> list[tuple[str, float, int]]:
    return [(g["group_id"], g["delta_t"], map_bucket(g["delta_t"]))
            for g in sorted(groups, key=lambda g: g["group_id"])]


def map_csv(groups) -> str:
    """``region_id,delta_T_mbits,bucket_index`` rows for joining to a shapefile."""
    return _csv_text(["region_id", "delta_T_mbits", "bucket_index"],
                     [(rid, fmt(d), b) for rid, d, b in map_rows(groups)])


def report_json(report: DecompositionReport, extra: dict | None = None) -> str:
    data = report.to_dict()
    if extra:
        data.update(extra)
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"


def output_paths(stem) -> dict[str, Path]:
    stem = Path(stem)
    return {
        kind: stem.with_name(f"{stem.name}.{kind}.csv") for kind in ("levels", "regions", "map")
    } | {"json": stem.with_name(stem.name + ".json"), "run": stem.with_name(stem.name + ".run.json")}
