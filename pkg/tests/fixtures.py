"""Random firm tables with a consistent zip -> subject -> district -> nation nesting."""

from __future__ import annotations

import random

from thsynergy.ingest import ClassifiedRecord, FirmTable
from thsynergy.taxonomy import DEFAULT_SIZE_BINS, NACE_DIVISIONS

LEVELS = ("subject", "district", "nation")


def random_rows(rng: random.Random, n: int, kx: int = 3, ky: int = 3, kz: int = 3,
                n_subjects: int = 4, n_districts: int = 2):
    district_of = {s: f"D{rng.randrange(n_districts)}" for s in range(n_subjects)}
    rows = []
    for _ in range(n):
        s = rng.randrange(n_subjects)
        rows.append({
            "geo": f"{s:02d}{rng.randrange(kx)}",
            "size": rng.randrange(ky),
            "tech": NACE_DIVISIONS[rng.randrange(kz)],
            "subject": f"S{s:02d}",
            "district": district_of[s],
            "nation": "N",
        })
    return rows


def table_from_rows(rows) -> FirmTable:
    labels = DEFAULT_SIZE_BINS.labels
    records = [
        ClassifiedRecord(f"F{i}", r["geo"], tuple(r[lvl] for lvl in LEVELS), r["size"],
                         labels[r["size"]], r["tech"], r["tech"] + "10", "Other", False)
        for i, r in enumerate(rows)
    ]
    return FirmTable.from_records(records, LEVELS)
