"""DOI metadata resolution against a CrossRef-shaped HTTP endpoint."""

from __future__ import annotations

import re
from typing import Protocol

import httpx

from litscreen.errors import DoiError, DoiNotFoundError, TransportError
from litscreen.records import PaperRecord, normalize_doi


class MetadataResolver(Protocol):
    """Maps a DOI to a CrossRef-style metadata dict."""

    name: str

    def fetch(self, doi: str) -> dict: ...


class HttpDoiResolver:
    """GET {base_url}/{doi} returning JSON with CrossRef-style keys."""

    def __init__(self, base_url: str, timeout: float = 15.0, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.name = self.base_url
        self._client = client or httpx.Client(timeout=timeout)

    def fetch(self, doi: str) -> dict:
        try:
            response = self._client.get(f"{self.base_url}/{doi}")
        except httpx.TimeoutException as exc:
            raise TransportError(f"resolver timeout for {doi}: {exc}", retryable=True) from exc
        except httpx.HTTPError as exc:
            raise TransportError(f"resolver unreachable: {exc}", retryable=True) from exc
        if response.status_code == 404:
            raise DoiNotFoundError(f"resolver does not know DOI {doi}")
        if response.status_code >= 400:
            raise TransportError(
                f"resolver returned HTTP {response.status_code} for {doi}",
                retryable=response.status_code == 429 or response.status_code >= 500,
            )
        payload = response.json()
        # CrossRef proper nests the record under "message".
        return payload.get("message", payload) if isinstance(payload, dict) else {}


class TableResolver:
    """In-memory resolver backed by a {doi: metadata dict} table."""

    def __init__(self, table: dict[str, dict], name: str = "table"):
        self.table = table
        self.name = name

    def fetch(self, doi: str) -> dict:
        if doi not in self.table:
            raise DoiNotFoundError(f"resolver does not know DOI {doi}")
        return self.table[doi]


def _first(value) -> str:
    if isinstance(value, list):
        return str(value[0]) if value else ""
    return str(value) if value is not None else ""


_TAG_RE = re.compile(r"<[^>]+>")


def _clean_abstract(raw: str) -> str:
    # CrossRef abstracts arrive wrapped in JATS XML tags.
    return " ".join(_TAG_RE.sub(" ", raw).split())


def resolve_doi(doi: str, resolver: MetadataResolver) -> PaperRecord:
    """Fetch metadata for one DOI and shape it into a paper record.

    The DOI is validated before any network call; unknown DOIs surface as
    DoiNotFoundError and transport problems as retryable TransportError.
    """
    normalized = normalize_doi(doi)
    if normalized is None:
        raise DoiError(f"not a DOI: {doi!r}")

    meta = resolver.fetch(normalized)
    title = _first(meta.get("title")).strip()
    if not title:
        raise DoiNotFoundError(f"resolver returned no title for DOI {normalized}")

    authors = []
    for person in meta.get("author") or []:
        if isinstance(person, dict):
            name = " ".join(p for p in (person.get("given"), person.get("family")) if p)
        else:
            name = str(person)
        if name:
            authors.append(name)

    year = None
    issued = meta.get("issued")
    if isinstance(issued, dict):
        parts = issued.get("date-parts") or []
        if parts and parts[0]:
            try:
                year = int(parts[0][0])
            except (TypeError, ValueError):
                year = None
    elif issued is not None:
        m = re.search(r"\d{4}", str(issued))
        year = int(m.group(0)) if m else None

    kind = str(meta.get("type", "")).lower()
    if kind in ("journal-article", "article"):
        entry_kind = "article"
    elif "proceedings" in kind or kind == "inproceedings":
        entry_kind = "inproceedings"
    else:
        entry_kind = "article" if meta.get("container-title") else "other"

    return PaperRecord(
        id=normalized,
        title=title,
        abstract=_clean_abstract(_first(meta.get("abstract"))),
        authors=authors,
        year=year,
        venue=_first(meta.get("container-title")) or None,
        doi=normalized,
        source=resolver.name,
        entry_kind=entry_kind,
    )
