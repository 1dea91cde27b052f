"""Command line entry point.

Exit codes: 0 success, 1 usage, 2 input/output, 3 data.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import __version__
from .decomposition import multilevel_table, normalize_report
from .entropy import ContingencyTensor, transmission3
from .errors import (
    BadSpec, HeaderMismatch, InputIOError, MissingRun, NoValidRecords, SynergyError,
)
from .geo import RegionHierarchy
from .ingest import build_tensor, file_digest, ingest, sector_mask
from .report import levels_csv, map_csv, output_paths, regions_csv, report_json
from .synthgen import load_spec, write_dataset
from .taxonomy import DEFAULT_TAXONOMY, DEFAULT_SIZE_BINS, SectorTaxonomy, SizeBins

log = logging.getLogger("thsynergy")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3
SECTOR_CHOICES = ("all", "high_tech", "medium_tech", "kis", "hts")


class UsageError(SynergyError):
    pass


class DataError(SynergyError):
    pass


@dataclass
class RunConfig:
    inputs: list[Path] = field(default_factory=list)
    hierarchy: Path | None = None
    names: Path | None = None
    taxonomy: Path | None = None
    size_bins: Path | None = None
    levels: list[str] | None = None
    geo_axis: str = "zip"
    sector: str = "all"
    year: int | None = None
    include_zero_size: bool = True
    fmt: str = "csv"
    out: Path | None = None
    force: bool = False
    min_share: float = 0.0
    jobs: int = 1

    def load_hierarchy(self) -> RegionHierarchy:
        if self.hierarchy is None:
            raise UsageError("--hierarchy is required")
        try:
            return RegionHierarchy.from_file(self.hierarchy, self.names)
        except OSError as exc:
            raise InputIOError(f"cannot read hierarchy: {exc}") from exc

    def load_taxonomy(self) -> SectorTaxonomy:
        if self.taxonomy is None:
            return DEFAULT_TAXONOMY
        try:
            return SectorTaxonomy.from_file(self.taxonomy)
        except OSError as exc:
            raise InputIOError(f"cannot read taxonomy: {exc}") from exc
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def load_size_bins(self) -> SizeBins:
        if self.size_bins is None:
            return DEFAULT_SIZE_BINS
        try:
            return SizeBins.from_file(self.size_bins)
        except OSError as exc:
            raise InputIOError(f"cannot read size bins: {exc}") from exc
        except ValueError as exc:
            raise UsageError(f"bad size bins: {exc}") from exc

    def resolve_levels(self, h: RegionHierarchy) -> list[str]:
        if not self.levels:
            return list(h.levels)
        levels = list(self.levels)
        n = len(levels)
        if levels != list(h.levels[-n:]):
            raise UsageError(
                f"--levels must be a contiguous suffix of {','.join(h.levels)}; got {','.join(levels)}")
        return levels


def _check_writable(paths: Sequence[Path], force: bool) -> None:
    existing = [str(p) for p in paths if p.exists()]
    if existing and not force:
        raise InputIOError(f"refusing to overwrite {', '.join(existing)} (use --force)")


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputIOError(f"cannot write {path}: {exc}") from exc


def _run_header(command: str, argv: Sequence[str] | None) -> str:
    header = {
        "command": command,
        "argv": list(argv) if argv is not None else sys.argv[1:],
        "finished_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "version": __version__,
        "python": platform.python_version(),
    }
    return json.dumps(header, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_validate(config: RunConfig) -> tuple[dict, int]:
    """Exclusion report plus hierarchy findings; exit status 3 on a broken hierarchy."""
    h = config.load_hierarchy()
    findings = h.validate()
    result = {"hierarchy": {"levels": list(h.levels), "entries": len(h.entries),
                            "findings": [str(f) for f in findings]}}
    if config.inputs:
        _, report = ingest(config.inputs, h, config.load_taxonomy(), config.load_size_bins(),
                           year=config.year, include_zero_size=config.include_zero_size)
        result["records"] = report.to_dict()
    return result, EXIT_DATA if findings else EXIT_OK


def cmd_synergy(config: RunConfig, argv: Sequence[str] | None = None) -> dict:
    """Run the multilevel decomposition and write the report files."""
    if config.out is None:
        raise UsageError("--out is required")
    h = config.load_hierarchy()
    findings = h.validate()
    if findings:
        raise DataError("hierarchy has defects: " + "; ".join(map(str, findings)))
    levels = config.resolve_levels(h)
    if config.geo_axis not in ("zip",) + h.levels:
        raise UsageError(f"--geo-axis must be zip or one of {', '.join(h.levels)}")

    paths = output_paths(config.out)
    targets = [paths["json"], paths["run"]]
    if config.fmt == "csv":
        targets += [paths["levels"], paths["regions"]]
    _check_writable(targets, config.force)

    taxonomy = config.load_taxonomy()
    table, exclusions = ingest(config.inputs, h, taxonomy, config.load_size_bins(),
                               year=config.year, include_zero_size=config.include_zero_size)
    if len(table) == 0:
        raise NoValidRecords("no valid records in the input")
    try:
        mask = sector_mask(table, config.sector)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    selected = table.subset(mask) if config.sector != "all" else table
    if len(selected) == 0:
        raise NoValidRecords(f"sector filter {config.sector!r} selects no firms "
                             f"out of {len(table):,} valid records")

    metadata = {
        "inputs": [{"name": Path(p).name, "sha256": file_digest(p)} for p in config.inputs],
        "hierarchy_sha256": file_digest(config.hierarchy),
        "taxonomy": "default" if config.taxonomy is None else file_digest(config.taxonomy),
        "filter": {"sector": config.sector, "year": config.year,
                   "include_zero_size": config.include_zero_size},
        "axes": {
            "geography": {"level": config.geo_axis,
                          "categories": len(selected.geo_column(config.geo_axis).observed()[1])},
            "size": list(selected.size.observed()[1]),
            "technology": list(selected.division.observed()[1]),
        },
        "exclusions": exclusions.to_dict(),
    }
    report = multilevel_table(selected, levels, config.geo_axis, jobs=config.jobs,
                              metadata=metadata)
    if config.sector != "all":
        t_all = transmission3(build_tensor(table, config.geo_axis))
        normalize_report(report, len(table), t_all)

    names = h.names
    _write(paths["json"], report_json(report, {"region_names": {
        g.group_id: names[g.group_id]
        for gs in report.groups.values() for g in gs if g.group_id in names}}))
    if config.fmt == "csv":
        _write(paths["levels"], levels_csv(report))
        _write(paths["regions"], regions_csv(report, names, config.min_share))
    _write(paths["run"], _run_header("synergy", argv))
    return report.to_dict()


def cmd_export_map(config: RunConfig, level: str | None = None) -> Path:
    """Write ``<stem>.map.csv`` from a finished synergy run."""
    if config.out is None:
        raise UsageError("--out is required")
    paths = output_paths(config.out)
    if not paths["json"].exists():
        raise MissingRun(f"no synergy run found at {paths['json']}; run 'synergy' first")
    try:
        data = json.loads(paths["json"].read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputIOError(f"cannot read {paths['json']}: {exc}") from exc
    level = level or data["levels"][0]
    if level not in data["groups"]:
        raise UsageError(f"level {level!r} not in run; available: {', '.join(data['levels'])}")
    _check_writable([paths["map"]], config.force)
    _write(paths["map"], map_csv(data["groups"][level]))
    return paths["map"]


def cmd_synth(spec_path, out, seed: int | None = None, force: bool = False) -> tuple[Path, Path]:
    try:
        spec = load_spec(spec_path)
    except OSError as exc:
        raise InputIOError(f"cannot read synthetic spec: {exc}") from exc
    except BadSpec:
        raise
    except ValueError as exc:
        raise BadSpec(f"cannot parse synthetic spec: {exc}") from exc
    if seed is not None:
        spec = spec.replace(seed=seed)
    stem = Path(out)
    targets = [stem.with_name(stem.name + ".csv"), stem.with_name(stem.name + ".hierarchy.tsv")]
    _check_writable(targets, force)
    return write_dataset(spec, stem)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sector(value: str) -> str:
    if value in SECTOR_CHOICES or value.startswith("custom:"):
        return value
    raise argparse.ArgumentTypeError(
        f"choose from {', '.join(SECTOR_CHOICES)} or custom:<prefix>,...")


def _add_data_args(p, need_input=True):
    p.add_argument("--input", action="append", type=Path, required=need_input, default=None,
                   help="firm CSV (firm_id,zip,employees,nace[,year]); repeatable")
    p.add_argument("--hierarchy", type=Path, required=True,
                   help="prefix<TAB>subject<TAB>district<TAB>nation file")
    p.add_argument("--names", type=Path, help="region_id<TAB>name sidecar file")
    p.add_argument("--taxonomy", type=Path, help="sector rules file (default: built-in)")
    p.add_argument("--size-bins", type=Path, help="file of size-class upper bounds")
    p.add_argument("--year", type=int, help="keep only records of this year")
    zero = p.add_mutually_exclusive_group()
    zero.add_argument("--include-zero-size", dest="include_zero_size", action="store_true",
                      default=True, help="keep firms with zero employees (default)")
    zero.add_argument("--exclude-zero-size", dest="include_zero_size", action="store_false")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thsynergy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check inputs and report exclusions")
    _add_data_args(p, need_input=False)
    p.add_argument("--out", type=Path, help="also write <out>.validation.json")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("synergy", help="multilevel synergy decomposition")
    _add_data_args(p)
    p.add_argument("--levels", help="comma-separated levels, finest first (default: all)")
    p.add_argument("--geo-axis", default="zip",
                   help="geography categories inside each tensor: zip or a hierarchy level")
    p.add_argument("--sector", type=_sector, default="all")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    p.add_argument("--min-share", type=float, default=0.0,
                   help="list regions holding at least this percentage of firms")
    p.add_argument("--jobs", type=int, default=1, help="threads for per-region work")
    p.add_argument("--out", type=Path, required=True, help="output stem")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("export-map", help="region-keyed values for choropleth joins")
    p.add_argument("--out", type=Path, required=True, help="stem of a finished synergy run")
    p.add_argument("--level", help="hierarchy level (default: finest in the run)")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("synth", help="write a synthetic firm file and hierarchy")
    p.add_argument("--synth-spec", type=Path, required=True, help="JSON synthetic spec")
    p.add_argument("--seed", type=int, help="override the seed in the synthetic spec")
    p.add_argument("--out", type=Path, required=True, help="output stem")
    p.add_argument("--force", action="store_true")
    return parser


def _config(args) -> RunConfig:
    return RunConfig(
        inputs=list(args.input or []),
        hierarchy=args.hierarchy,
        names=args.names,
        taxonomy=args.taxonomy,
        size_bins=args.size_bins,
        levels=[s.strip() for s in args.levels.split(",")] if getattr(args, "levels", None) else None,
        geo_axis=getattr(args, "geo_axis", "zip"),
        sector=getattr(args, "sector", "all"),
        year=args.year,
        include_zero_size=args.include_zero_size,
        fmt=getattr(args, "fmt", "csv"),
        out=args.out,
        force=args.force,
        min_share=getattr(args, "min_share", 0.0),
        jobs=getattr(args, "jobs", 1),
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            config = _config(args)
            result, status = cmd_validate(config)
            text = json.dumps(result, indent=2, sort_keys=True) + "\n"
            if config.out is not None:
                target = config.out.with_name(config.out.name + ".validation.json")
                _check_writable([target], config.force)
                _write(target, text)
            sys.stdout.write(text)
            for finding in result["hierarchy"]["findings"]:
                print(f"hierarchy: {finding}", file=sys.stderr)
            return status
        if args.command == "synergy":
            result = cmd_synergy(_config(args), argv)
            for row in result["rows"]:
                print(f"{row['level']:>12}  {row['increment']:10.1f} mbits")
            print(f"{'total':>12}  {result['t_total']:10.1f} mbits  (N={result['n']:,})")
            return EXIT_OK
        if args.command == "export-map":
            path = cmd_export_map(RunConfig(out=args.out, force=args.force), args.level)
            print(path)
            return EXIT_OK
        if args.command == "synth":
            for path in cmd_synth(args.synth_spec, args.out, args.seed, args.force):
                print(path)
            return EXIT_OK
    except UsageError as exc:
        print(f"thsynergy: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputIOError, HeaderMismatch, MissingRun) as exc:
        print(f"thsynergy: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NoValidRecords, DataError, BadSpec) as exc:
        print(f"thsynergy: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
