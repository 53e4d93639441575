"""Fault-tolerant BibTeX parsing for corpus ingestion.

Only the fields that feed the screening prompt and exports are kept
(title, abstract, author, year, journal/booktitle, doi); everything else
is ignored. Broken entries yield diagnostics instead of aborting the file.
"""

from __future__ import annotations

import re
import unicodedata
from bisect import bisect_right
from dataclasses import dataclass

from litscreen.errors import IngestError
from litscreen.records import PaperRecord, normalize_doi

SUPPORTED_KINDS = {
    "article": "article",
    "inproceedings": "inproceedings",
    "conference": "inproceedings",
    "misc": "other",
}

KEPT_FIELDS = {"title", "abstract", "author", "year", "journal", "booktitle", "doi"}


@dataclass
class ParseDiagnostic:
    """One skipped or degraded entry, with enough context to find it in the file."""

    message: str
    line: int
    entry_key: str | None = None

    def __str__(self) -> str:
        where = f"line {self.line}"
        if self.entry_key:
            where += f", entry {self.entry_key!r}"
        return f"{self.message} ({where})"


# Accent commands mapped to Unicode combining characters, composed via NFC.
_COMBINING = {
    "'": "\u0301", "`": "\u0300", "^": "\u0302", '"': "\u0308", "~": "\u0303",
    "=": "\u0304", ".": "\u0307", "u": "\u0306", "v": "\u030c", "H": "\u030b",
    "c": "\u0327", "k": "\u0328", "r": "\u030a", "b": "\u0331", "d": "\u0323",
}

_SYMBOLS = {
    "ss": "ß", "ae": "æ", "AE": "Æ", "oe": "œ", "OE": "Œ", "o": "ø", "O": "Ø",
    "aa": "å", "AA": "Å", "l": "ł", "L": "Ł", "i": "ı", "j": "ȷ",
}

_ACCENT_RE = re.compile(
    r"\\([" + "".join(re.escape(c) for c in "'`^\"~=.") + r"uvHckrbd])\s*"
    r"(?:\{\\?([a-zA-Z])\}|\\?([a-zA-Z]))"
)
_SYMBOL_RE = re.compile(r"\\(" + "|".join(sorted(_SYMBOLS, key=len, reverse=True)) + r")(?![a-zA-Z])\s*")


def decode_tex(value: str) -> str:
    """Decode common TeX escapes to Unicode and drop brace markup."""
    s = value.replace(r"\{", "\x01").replace(r"\}", "\x02")

    def compose(m: re.Match) -> str:
        accent = _COMBINING[m.group(1)]
        base = m.group(2) or m.group(3)
        return unicodedata.normalize("NFC", base + accent)

    s = _ACCENT_RE.sub(compose, s)
    s = _SYMBOL_RE.sub(lambda m: _SYMBOLS[m.group(1)], s)
    for tex, plain in ((r"\&", "&"), (r"\%", "%"), (r"\$", "$"), (r"\#", "#"), (r"\_", "_")):
        s = s.replace(tex, plain)
    s = s.replace("---", "\u2014").replace("--", "\u2013")
    s = s.replace("``", "\u201c").replace("''", "\u201d")
    s = s.replace("~", " ").replace(r"\,", " ")
    # Remaining \commands are formatting (\emph, \textbf, ...): drop the
    # command, keep its braced argument.
    s = re.sub(r"\\[a-zA-Z]+\s*", "", s)
    s = s.replace("{", "").replace("}", "")
    s = s.replace("\x01", "{").replace("\x02", "}")
    return " ".join(s.split())


def _decode_stream(data: bytes) -> str:
    nul = data.find(b"\x00")
    if nul != -1:
        raise IngestError("binary data is not BibTeX", byte_offset=nul)
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        return data.decode("latin-1")


class _Scanner:
    """Index-based scanner over the decoded text with line tracking."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.n = len(text)
        self._newlines = [i for i, ch in enumerate(text) if ch == "\n"]

    def line(self, pos: int | None = None) -> int:
        return bisect_right(self._newlines, (self.pos if pos is None else pos) - 1) + 1

    def eof(self) -> bool:
        return self.pos >= self.n

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < self.n else ""

    def skip_ws(self) -> None:
        while self.pos < self.n and self.text[self.pos].isspace():
            self.pos += 1

    def resync(self) -> None:
        """Advance to the next '@' that starts a line (entry boundary)."""
        i = self.pos
        while True:
            i = self.text.find("@", i)
            if i == -1:
                self.pos = self.n
                return
            head = self.text[self.text.rfind("\n", 0, i) + 1 : i]
            if head.strip() == "":
                self.pos = i
                return
            i += 1


class _EntryError(Exception):
    def __init__(self, message: str, pos: int):
        super().__init__(message)
        self.pos = pos


def _at_entry_boundary(sc: _Scanner) -> bool:
    """True when the scanner sits on an '@' that starts a line (a new entry)."""
    if sc.peek() != "@":
        return False
    head = sc.text[sc.text.rfind("\n", 0, sc.pos) + 1 : sc.pos]
    return head.strip() == ""


def _read_value(sc: _Scanner) -> str:
    """Read one field value: {braced}, "quoted", or a bare token."""
    sc.skip_ws()
    ch = sc.peek()
    if ch == "{":
        depth = 0
        start = sc.pos
        while sc.pos < sc.n:
            c = sc.text[sc.pos]
            if c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    sc.pos += 1
                    return sc.text[start + 1 : sc.pos - 1]
            elif _at_entry_boundary(sc):
                # A fresh entry begins before this value closed: the entry
                # above is truncated. Leave pos here so resync keeps the rest.
                raise _EntryError("unterminated braced value", start)
            sc.pos += 1
        raise _EntryError("unterminated braced value", start)
    if ch == '"':
        start = sc.pos
        sc.pos += 1
        depth = 0
        while sc.pos < sc.n:
            c = sc.text[sc.pos]
            if c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
            elif c == '"' and depth == 0:
                sc.pos += 1
                return sc.text[start + 1 : sc.pos - 1]
            elif _at_entry_boundary(sc):
                raise _EntryError("unterminated quoted value", start)
            sc.pos += 1
        raise _EntryError("unterminated quoted value", start)
    start = sc.pos
    while sc.pos < sc.n and (sc.text[sc.pos].isalnum() or sc.text[sc.pos] in "._-+:"):
        sc.pos += 1
    if sc.pos == start:
        raise _EntryError("expected a field value", start)
    return sc.text[start:sc.pos]


def _parse_entry(sc: _Scanner, source: str, diagnostics: list[ParseDiagnostic]) -> PaperRecord | None:
    """Parse one entry starting at '@'. Returns None when it only diagnosed."""
    entry_start = sc.pos
    sc.pos += 1  # consume '@'
    m = re.match(r"[a-zA-Z]+", sc.text[sc.pos:])
    if not m:
        raise _EntryError("missing entry type after '@'", entry_start)
    kind_raw = m.group(0).lower()
    sc.pos += m.end()
    sc.skip_ws()
    if sc.peek() != "{":
        raise _EntryError(f"expected '{{' after @{kind_raw}", sc.pos)
    sc.pos += 1

    # Citation key runs to the first comma (or '}' for a fieldless entry).
    key_start = sc.pos
    while sc.pos < sc.n and sc.text[sc.pos] not in ",}":
        if sc.text[sc.pos] == "@" and sc.text[key_start : sc.pos].count("\n") > 0:
            raise _EntryError("truncated entry", entry_start)
        sc.pos += 1
    if sc.eof():
        raise _EntryError("unterminated entry", entry_start)
    key = sc.text[key_start : sc.pos].strip()

    fields: dict[str, str] = {}
    while sc.pos < sc.n and sc.text[sc.pos] == ",":
        sc.pos += 1
        sc.skip_ws()
        if sc.peek() == "}":
            break  # trailing comma
        if sc.peek() == "@":
            raise _EntryError("truncated entry", entry_start)
        m = re.match(r"[a-zA-Z_][a-zA-Z0-9_-]*", sc.text[sc.pos:])
        if not m:
            raise _EntryError("expected a field name", sc.pos)
        name = m.group(0).lower()
        sc.pos += m.end()
        sc.skip_ws()
        if sc.peek() != "=":
            raise _EntryError(f"expected '=' after field {name!r}", sc.pos)
        sc.pos += 1
        value = _read_value(sc)
        if name in KEPT_FIELDS:
            fields[name] = value
        sc.skip_ws()
    if sc.peek() != "}":
        raise _EntryError("unterminated entry", entry_start)
    sc.pos += 1

    line = sc.line(entry_start)
    if kind_raw not in SUPPORTED_KINDS:
        diagnostics.append(ParseDiagnostic(f"unsupported entry type @{kind_raw}", line, key or None))
        return None
    title = decode_tex(fields.get("title", ""))
    if not title:
        diagnostics.append(ParseDiagnostic("entry has no title", line, key or None))
        return None
    if not key:
        diagnostics.append(ParseDiagnostic("entry has no citation key", line))
        return None

    year: int | None = None
    if "year" in fields:
        ym = re.search(r"\d{4}", fields["year"])
        year = int(ym.group(0)) if ym else None
    authors = [decode_tex(a) for a in re.split(r"\s+and\s+", fields["author"])] if fields.get("author") else []
    venue = fields.get("journal") or fields.get("booktitle")
    return PaperRecord(
        id=key,
        title=title,
        abstract=decode_tex(fields.get("abstract", "")),
        authors=[a for a in authors if a],
        year=year,
        venue=decode_tex(venue) if venue else None,
        doi=normalize_doi(fields["doi"]) if fields.get("doi") else None,
        source=source,
        entry_kind=SUPPORTED_KINDS[kind_raw],
    )


def parse_bibtex(data: bytes, source: str = "") -> tuple[list[PaperRecord], list[ParseDiagnostic]]:
    """Parse a BibTeX byte stream into paper records plus per-entry diagnostics.

    Never raises for malformed entries; the whole stream only fails
    (IngestError) when it is binary rather than text.
    """
    text = _decode_stream(data)
    # Drop '%'-prefixed comment lines, keeping line numbers stable.
    text = "\n".join("" if ln.lstrip().startswith("%") else ln for ln in text.split("\n"))

    sc = _Scanner(text)
    records: list[PaperRecord] = []
    diagnostics: list[ParseDiagnostic] = []
    while True:
        sc.resync()
        if sc.eof():
            break
        start = sc.pos
        try:
            record = _parse_entry(sc, source, diagnostics)
        except _EntryError as exc:
            diagnostics.append(ParseDiagnostic(str(exc), sc.line(start)))
            sc.pos = max(start + 1, sc.pos)
            continue
        if record is not None:
            records.append(record)
    return records, diagnostics
