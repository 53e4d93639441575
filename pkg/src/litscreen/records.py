"""Corpus data model: paper records, dedup keys, and merge bookkeeping."""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field, replace

DOI_PATTERN = re.compile(r"^10\.\d{2,9}/\S+$")

_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def normalize_doi(raw: str) -> str | None:
    """Lowercase a DOI and strip common URL/prefix decorations.

    Returns None when the remainder does not look like a DOI at all.
    """
    doi = raw.strip().lower()
    for prefix in ("https://doi.org/", "http://doi.org/", "https://dx.doi.org/",
                   "http://dx.doi.org/", "doi.org/", "doi:"):
        if doi.startswith(prefix):
            doi = doi[len(prefix):]
    doi = doi.strip()
    return doi if DOI_PATTERN.match(doi) else None


@dataclass
class PaperRecord:
    """One bibliographic item flowing through the screening pipeline."""

    id: str
    title: str
    abstract: str = ""
    authors: list[str] = field(default_factory=list)
    year: int | None = None
    venue: str | None = None
    doi: str | None = None
    source: str = ""
    entry_kind: str = "other"  # article | inproceedings | other

    def __post_init__(self):
        if not self.title.strip():
            raise ValueError(f"paper {self.id!r}: title must be non-empty")
        if self.doi is not None and not DOI_PATTERN.match(self.doi):
            raise ValueError(f"paper {self.id!r}: malformed DOI {self.doi!r}")


def dedup_key(record: PaperRecord) -> str:
    """Duplicate-detection key: the DOI when present, else the normalized title.

    Title normalization lowercases and strips every non-alphanumeric
    character, so punctuation/casing variants of the same title collide.
    """
    if record.doi:
        return record.doi
    return _NON_ALNUM.sub("", record.title.lower())


@dataclass
class IngestionEvent:
    """Provenance entry for one merge: where records came from and what happened."""

    source: str
    timestamp: float
    added: int
    duplicates_removed: int
    non_papers_excluded: int


@dataclass
class MergeReport:
    added: int = 0
    duplicates_removed: int = 0
    non_papers_excluded: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "added": self.added,
            "duplicates_removed": self.duplicates_removed,
            "non_papers_excluded": self.non_papers_excluded,
        }


@dataclass
class Corpus:
    """Ordered, deduplicated collection of paper records with ingestion provenance."""

    papers: list[PaperRecord] = field(default_factory=list)
    provenance: list[IngestionEvent] = field(default_factory=list)

    def paper_ids(self) -> list[str]:
        return [p.id for p in self.papers]

    def get(self, paper_id: str) -> PaperRecord | None:
        for p in self.papers:
            if p.id == paper_id:
                return p
        return None


def _is_non_paper(record: PaperRecord) -> bool:
    # Conservative rule: only unclassifiable entry kinds with nothing to
    # screen on beyond the title are dropped.
    return record.entry_kind == "other" and not record.abstract.strip()


def merge_into_corpus(
    corpus: Corpus,
    records: list[PaperRecord],
    source: str = "",
    now: float | None = None,
) -> tuple[Corpus, MergeReport]:
    """Merge records into a corpus, dropping duplicates and non-papers.

    Duplicates (by dedup_key, against the corpus and within the batch) are
    counted before the non-paper check, mirroring the ingest order
    dedup-then-exclude. Every record lands in exactly one report bucket, so
    added + duplicates_removed + non_papers_excluded == len(records).
    """
    report = MergeReport()
    merged = list(corpus.papers)
    seen_keys = {dedup_key(p) for p in merged}
    seen_ids = {p.id for p in merged}

    for record in records:
        key = dedup_key(record)
        if key in seen_keys:
            report.duplicates_removed += 1
            continue
        if _is_non_paper(record):
            report.non_papers_excluded += 1
            continue
        if record.id in seen_ids:
            # Same citation key from two files for different papers: keep
            # both, qualify the newcomer's id.
            n = 2
            while f"{record.id}-{n}" in seen_ids:
                n += 1
            record = replace(record, id=f"{record.id}-{n}")
        merged.append(record)
        seen_keys.add(key)
        seen_ids.add(record.id)
        report.added += 1

    event = IngestionEvent(
        source=source,
        timestamp=now if now is not None else time.time(),
        added=report.added,
        duplicates_removed=report.duplicates_removed,
        non_papers_excluded=report.non_papers_excluded,
    )
    return Corpus(papers=merged, provenance=corpus.provenance + [event]), report
