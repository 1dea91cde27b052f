from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thsynergy.entropy import transmission3
from thsynergy.errors import HeaderMismatch, InputIOError, NoValidRecords
from thsynergy.geo import RegionHierarchy
from thsynergy.ingest import (
    ExclusionReport, RawRecord, build_tensor, ingest, parse_records, read_records, sector_mask,
    validate_and_classify,
)

HIER = RegionHierarchy.parse(
    "10\tMoscow\tCentral\tRussia\n19\tSPb\tNorthwest\tRussia\n30\tTver\tCentral\tRussia\n")


def write(tmp_path, text, name="firms.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_parse_clean(tmp_path):
    p = write(tmp_path, "firm_id,zip,employees,nace\n1,1010,3,2110\n2,1910,0,7220\n3,3000,12,4711\n")
    records, diags = read_records(p)
    assert len(records) == 3 and diags == []
    assert records[0].employees == 3 and records[2].nace == "4711"


def test_parse_non_numeric_employees(tmp_path):
    p = write(tmp_path, "firm_id,zip,employees,nace\n1,1010,many,2110\n")
    records, diags = read_records(p)
    assert records[0].employees is None
    assert [d.reason for d in diags] == ["missing_size"]


def test_parse_header_only(tmp_path):
    assert list(parse_records(write(tmp_path, "firm_id,zip,employees,nace\n"))) == []


def test_parse_errors(tmp_path):
    with pytest.raises(HeaderMismatch):
        list(parse_records(write(tmp_path, "id,zip,employees,nace\n1,2,3,4\n")))
    with pytest.raises(HeaderMismatch):
        list(parse_records(write(tmp_path, "")))
    with pytest.raises(InputIOError):
        list(parse_records(tmp_path / "absent.csv"))


def test_parse_malformed_line(tmp_path):
    p = write(tmp_path, "firm_id,zip,employees,nace\n1,1010,3\n2,1010,3,2110\n")
    items = list(parse_records(p))
    assert items[0].reason == "malformed_line" and items[0].line == 2
    assert isinstance(items[1], RawRecord)


def test_classify_example():
    raw = RawRecord(2, "f", "1010", 0, "7220")
    rec = validate_and_classify(raw, HIER)
    assert rec.regions == ("Moscow", "Central", "Russia")
    assert (rec.size_label, rec.division, rec.sector, rec.high_tech_services) == ("0", "72", "KIS", True)


@pytest.mark.parametrize("raw, reason", [
    (RawRecord(2, "f", "1010", None, "7220", diagnostics=("missing_size",)), "missing_size"),
    (RawRecord(2, "f", "", 1, "7220"), "missing_location"),
    (RawRecord(2, "f", "9999", 1, "7220"), "unmapped_location"),
    (RawRecord(2, "f", "1010", 1, "72x0"), "bad_nace"),
    (RawRecord(2, "f", "1010", 1, ""), "bad_nace"),
])
def test_classify_exclusions(raw, reason):
    assert validate_and_classify(raw, HIER).reason == reason


def test_validity_ratio_formatting():
    r = ExclusionReport(total_read=613_018, total_valid=593_987)
    assert f"{r.validity_ratio:.1f}" == "96.9"
    assert "96.9%" in r.summary()


DIRTY = """firm_id,zip,employees,nace,year
a,1010,5,2110,2011
b,1910,0,7220,2011
b,1910,0,7220,2011
c,9999,1,2110,2011
d,,1,2110,2011
e,3010,-4,2110,2011
f,3010,7,x,2011
g,3010,7,2110
h,3010,7,2110,2010
i,3010,0,2611,2011
"""


def test_ingest_accounting(tmp_path):
    table, rep = ingest(write(tmp_path, DIRTY), HIER, year=2011)
    assert rep.total_read == 10
    assert rep.reasons == {"malformed_line": 1, "duplicate_id": 1, "missing_location": 1,
                           "unmapped_location": 1, "missing_size": 1, "bad_nace": 1}
    assert rep.filtered == {"year": 1, "zero_size": 0}
    assert rep.total_valid == len(table) == 3
    assert rep.balanced()
    assert list(table.firm_ids) == ["a", "b", "i"]
    assert table.regions["subject"].values() == ["Moscow", "SPb", "Tver"]


def test_ingest_zero_size_and_no_year(tmp_path):
    table, rep = ingest(write(tmp_path, DIRTY), HIER, include_zero_size=False)
    assert rep.filtered == {"year": 0, "zero_size": 2}
    assert list(table.firm_ids) == ["a", "h"]
    assert rep.balanced()


def test_one_bad_line_counts_once(tmp_path):
    p = write(tmp_path, "firm_id,zip,employees,nace\n1,1010,3,2110\n2,1010,3,ZZ\n")
    _, rep = ingest(p, HIER)
    assert rep.reasons["bad_nace"] == 1 and rep.total_excluded == 1


def test_duplicates_across_files(tmp_path):
    a = write(tmp_path, "firm_id,zip,employees,nace\n1,1010,3,2110\n", "a.csv")
    b = write(tmp_path, "firm_id,zip,employees,nace\n1,1910,3,2110\n2,1910,3,2110\n", "b.csv")
    table, rep = ingest([a, b], HIER)
    assert rep.reasons["duplicate_id"] == 1 and len(table) == 2


def test_build_tensor_examples(tmp_path):
    one, _ = ingest(write(tmp_path, "firm_id,zip,employees,nace\n1,1010,3,2110\n"), HIER)
    t = build_tensor(one)
    assert t.cells == {(0, 0, 0): 1} and t.total == 1
    two, _ = ingest(write(tmp_path, "firm_id,zip,employees,nace\n1,1010,3,2110\n2,1010,3,2110\n"), HIER)
    assert build_tensor(two).cells == {(0, 0, 0): 2}


def test_build_tensor_xor(tmp_path):
    # geography x size x division parity pattern, each even cell twice
    lines = ["firm_id,zip,employees,nace"]
    zips, emps, naces = ("1010", "1910"), (0, 3), ("2110", "2610")
    i = 0
    for x in (0, 1):
        for y in (0, 1):
            for _ in range(2):
                lines.append(f"{i},{zips[x]},{emps[y]},{naces[(x + y) % 2]}")
                i += 1
    table, _ = ingest(write(tmp_path, "\n".join(lines) + "\n"), HIER)
    assert len(table) == 8
    assert transmission3(build_tensor(table)) == pytest.approx(-1000.0, abs=1e-6)


def test_build_tensor_empty(tmp_path):
    table, _ = ingest(write(tmp_path, "firm_id,zip,employees,nace\n"), HIER)
    with pytest.raises(NoValidRecords):
        build_tensor(table)


def _random_file(tmp_path, rng, n, name="r.csv"):
    zips = ["1010", "1011", "1910", "3000", "3001", "9999"]
    naces = ["2110", "2611", "7220", "4711", "3011", "bad"]
    lines = ["firm_id,zip,employees,nace"]
    for i in range(n):
        lines.append(f"F{rng.randrange(n * 2)},{rng.choice(zips)},{rng.choice(['0', '3', '40', '300', 'x'])},{rng.choice(naces)}")
    return write(tmp_path, "\n".join(lines) + "\n", name), lines


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 80))
def test_conservation_idempotence_order(tmp_path_factory, seed, n):
    tmp = tmp_path_factory.mktemp("ing")
    rng = random.Random(seed)
    path, lines = _random_file(tmp, rng, n)
    t1, r1 = ingest(path, HIER)
    t2, r2 = ingest(path, HIER)
    assert r1.to_dict() == r2.to_dict() and r1.balanced()
    if len(t1) == 0:
        return
    tensor = build_tensor(t1)
    assert tensor.total == r1.total_valid
    assert tensor == build_tensor(t2)
    assert tensor == build_tensor(t1, chunks=3)
    # shuffling rows changes which duplicate survives, so use unique ids
    body = [f"U{i}," + ln.split(",", 1)[1] for i, ln in enumerate(lines[1:])]
    a = write(tmp, "\n".join([lines[0]] + body) + "\n", "a.csv")
    rng.shuffle(body)
    b = write(tmp, "\n".join([lines[0]] + body) + "\n", "b.csv")
    ta, _ = ingest(a, HIER)
    tb, _ = ingest(b, HIER)
    if len(ta):
        assert build_tensor(ta) == build_tensor(tb)
        assert transmission3(build_tensor(ta)) == transmission3(build_tensor(tb))


def test_sector_mask(tmp_path):
    p = write(tmp_path, "firm_id,zip,employees,nace\n1,1010,3,2110\n2,1010,3,7220\n3,1010,3,3011\n4,1010,3,2811\n5,1010,3,6420\n")
    table, _ = ingest(p, HIER)
    assert sector_mask(table, "high_tech").tolist() == [True, False, False, False, False]
    assert sector_mask(table, "kis").tolist() == [False, True, False, False, True]
    assert sector_mask(table, "hts").tolist() == [False, True, False, False, False]
    assert sector_mask(table, "medium_tech").tolist() == [False, False, False, True, False]
    assert sector_mask(table, "custom:30.1,64").tolist() == [False, False, True, False, True]
    assert sector_mask(table, "all").all()
    with pytest.raises(ValueError):
        sector_mask(table, "custom:")
    with pytest.raises(ValueError):
        sector_mask(table, "nope")
    assert np.count_nonzero(sector_mask(table.subset(sector_mask(table, "kis")), "high_tech")) == 0
