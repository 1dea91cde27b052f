"""Triple-helix synergy: signed three-way mutual information over firm microdata.

Geography, firm size and technology (NACE division) are the three
dimensions.  The package builds sparse count tables from firm-level files,
computes entropies and transmissions in millibits, and decomposes the
national value over nested regions.
"""

__version__ = "0.1.0"

from .entropy import (
    Axis,
    CategoryAxis,
    ContingencyTensor,
    EntropyTerms,
    entropy,
    entropy_terms,
    marginalize,
    transmission2,
    transmission3,
)
from .decomposition import (
    DecompositionReport,
    GroupSynergy,
    group_decompose,
    multilevel_table,
    rank_regions,
    sector_normalize,
    share_of_total,
)
from .geo import RegionHierarchy, resolve, validate_hierarchy
from .ingest import ExclusionReport, FirmTable, build_tensor, ingest, parse_records, validate_and_classify
from .taxonomy import DEFAULT_TAXONOMY, Sector, SectorTaxonomy, SizeBins, nace_division, sector_of, size_class

__all__ = [
    "Axis", "CategoryAxis", "ContingencyTensor", "EntropyTerms", "entropy", "entropy_terms",
    "marginalize", "transmission2", "transmission3",
    "DecompositionReport", "GroupSynergy", "group_decompose", "multilevel_table",
    "rank_regions", "sector_normalize", "share_of_total",
    "RegionHierarchy", "resolve", "validate_hierarchy",
    "ExclusionReport", "FirmTable", "build_tensor", "ingest", "parse_records",
    "validate_and_classify",
    "DEFAULT_TAXONOMY", "Sector", "SectorTaxonomy", "SizeBins", "nace_division", "sector_of",
    "size_class",
]
