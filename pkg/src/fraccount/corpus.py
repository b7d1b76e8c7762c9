"""Corpus and journal-master ingestion, abbreviation matching, processing statistics."""

from __future__ import annotations

import csv
import io
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence

DOC_TYPES = ("article", "review", "letter", "proceedings", "other")
YEAR_MIN, YEAR_MAX = 1800, 2100


class CorpusError(ValueError):
    """Raised for unrecoverable corpus or master-file problems."""


class AmbiguousAliasError(CorpusError):
    pass


@dataclass(frozen=True)
class RawReference:
    cited_journal_abbrev: str
    cited_year: int | None = None


@dataclass(frozen=True)
class DocumentRecord:
    doc_id: str
    journal_abbrev: str
    pub_year: int
    doc_type: str
    n_refs_total: int
    refs: tuple[RawReference, ...] = ()

    def to_json(self) -> str:
        obj = {
            "doc_id": self.doc_id,
            "journal": self.journal_abbrev,
            "year": self.pub_year,
            "type": self.doc_type,
            "n_refs": self.n_refs_total,
            "refs": [{"j": r.cited_journal_abbrev, "y": r.cited_year} for r in self.refs],
        }
        return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


@dataclass
class ParseReport:
    rejections: list[tuple[int, str]] = field(default_factory=list)

    def to_tsv(self) -> str:
        return "".join(f"{ln}\t{reason}\n" for ln, reason in self.rejections)


def format_fixed(x: float | Fraction, places: int = 6) -> str:
    """Fixed-point text rounded half-to-even on the exact value of ``x``.

    Floats are taken at their exact binary value; pass a ``Fraction`` to
    round a rational quantity without an intermediate float.
    """
    if isinstance(x, Fraction):
        scaled = x * 10**places
        q, r = divmod(scaled.numerator, scaled.denominator)
        if 2 * r > scaled.denominator or (2 * r == scaled.denominator and q % 2):
            q += 1
        return str(Decimal(q).scaleb(-places))
    return str(Decimal(x).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_EVEN))


def normalize_abbrev(abbrev: str) -> str:
    """Canonical matching key: trimmed, single-spaced, upper-case, no trailing periods."""
    s = re.sub(r"\s+", " ", abbrev.strip()).upper()
    return s.rstrip(".").rstrip()


def _parse_record(line: str) -> DocumentRecord:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    missing = [k for k in ("doc_id", "journal", "year", "type", "n_refs", "refs") if k not in obj]
    if missing:
        raise ValueError(f"missing keys: {','.join(missing)}")
    year = obj["year"]
    if not isinstance(year, int) or isinstance(year, bool) or not YEAR_MIN <= year <= YEAR_MAX:
        raise ValueError(f"implausible year: {year!r}")
    doc_type = obj["type"]
    if doc_type not in DOC_TYPES:
        raise ValueError(f"unknown document type: {doc_type!r}")
    n = obj["n_refs"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ValueError(f"invalid n_refs: {n!r}")
    if not isinstance(obj["journal"], str) or not obj["journal"].strip():
        raise ValueError("empty journal")
    if not isinstance(obj["refs"], list):
        raise ValueError("refs is not a list")
    refs = []
    for r in obj["refs"]:
        if not isinstance(r, dict) or not isinstance(r.get("j"), str):
            raise ValueError("malformed reference")
        y = r.get("y")
        if y is not None and (not isinstance(y, int) or isinstance(y, bool)):
            raise ValueError(f"malformed cited year: {y!r}")
        refs.append(RawReference(r["j"], y))
    return DocumentRecord(str(obj["doc_id"]), obj["journal"], year, doc_type, n, tuple(refs))


def parse_corpus(
    lines: Iterable[str], strict: bool = False
) -> tuple[list[DocumentRecord], ParseReport]:
    """Parse line-delimited JSON document records.

    Blank lines are skipped. Malformed lines are recorded in the returned
    report (or raise immediately when ``strict``). A repeated ``doc_id`` is
    always a load error.
    """
    records: list[DocumentRecord] = []
    report = ParseReport()
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = _parse_record(line)
        except (ValueError, TypeError) as exc:
            reason = str(exc).replace("\t", " ").replace("\n", " ")
            if strict:
                raise CorpusError(f"line {lineno}: {reason}") from exc
            report.rejections.append((lineno, reason))
            continue
        if rec.doc_id in seen:
            raise CorpusError(f"line {lineno}: duplicate doc_id {rec.doc_id!r}")
        seen.add(rec.doc_id)
        records.append(rec)
    return records, report


def read_corpus(path: str | Path, strict: bool = False) -> tuple[list[DocumentRecord], ParseReport]:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh, strict=strict)


def serialize_corpus(records: Iterable[DocumentRecord]) -> str:
    return "".join(r.to_json() + "\n" for r in records)


@dataclass(frozen=True)
class JournalEntry:
    journal_id: str
    full_title: str
    canonical_abbrev: str
    extra_aliases: tuple[str, ...] = ()
    citable_items: dict[int, int] = field(default_factory=dict)
    field_id: str | None = None
    reference_if: float | None = None


class JournalMaster:
    """Immutable journal registry with a normalized alias index."""

    def __init__(self, entries: Iterable[JournalEntry]):
        self._entries: dict[str, JournalEntry] = {}
        self._alias: dict[str, str] = {}
        for e in entries:
            if e.journal_id in self._entries:
                raise CorpusError(f"duplicate journal_id {e.journal_id!r}")
            if any(v < 0 for v in e.citable_items.values()):
                raise CorpusError(f"negative citable-item count for {e.journal_id!r}")
            keys = {normalize_abbrev(a) for a in (e.canonical_abbrev, *e.extra_aliases) if a.strip()}
            if not keys:
                raise CorpusError(f"journal {e.journal_id!r} has no abbreviation")
            for key in keys:
                owner = self._alias.get(key)
                if owner is not None:
                    raise AmbiguousAliasError(
                        f"alias {key!r} claimed by both {owner!r} and {e.journal_id!r}"
                    )
                self._alias[key] = e.journal_id
            self._entries[e.journal_id] = e

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[JournalEntry]:
        return iter(self._entries.values())

    def __getitem__(self, journal_id: str) -> JournalEntry:
        return self._entries[journal_id]

    def __contains__(self, journal_id: object) -> bool:
        return journal_id in self._entries

    @property
    def journal_ids(self) -> list[str]:
        return sorted(self._entries)

    @property
    def alias_keys(self) -> list[str]:
        return sorted(self._alias)

    def lookup(self, key: str) -> str | None:
        """Look up an already-normalized alias."""
        return self._alias.get(key)

    def citable(self, journal_id: str, years: Iterable[int]) -> int:
        items = self._entries[journal_id].citable_items
        return sum(items.get(y, 0) for y in years)

    def field_map(self) -> dict[str, str]:
        return {e.journal_id: e.field_id for e in self if e.field_id is not None}


def match_journal(abbrev: str, master: JournalMaster) -> str | None:
    return master.lookup(normalize_abbrev(abbrev))


_MASTER_COLS = ("journal_id", "full_title", "canonical_abbrev", "aliases", "field_id", "reference_if")


def _opt_float(s: str) -> float | None:
    s = s.strip()
    if not s:
        return None
    v = float(s)
    if v < 0:
        raise CorpusError(f"negative reference_if {s!r}")
    return v


def parse_journal_master(text: str | Iterable[str]) -> JournalMaster:
    """Parse the tab-separated master file.

    Columns: journal_id, full_title, canonical_abbrev, aliases (pipe-separated),
    field_id, reference_if, followed by any number of ``year:count`` cells.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    rows = csv.reader(stream, delimiter="\t", quoting=csv.QUOTE_NONE)
    header = next(rows, None)
    if header is None or tuple(h.strip() for h in header[:6]) != _MASTER_COLS:
        raise CorpusError("journal master: missing or malformed header row")
    entries = []
    for lineno, row in enumerate(rows, start=2):
        if not any(c.strip() for c in row):
            continue
        if len(row) < 6:
            raise CorpusError(f"journal master line {lineno}: expected at least 6 columns")
        jid, title, canon, aliases, field_id, ref_if = row[:6]
        citable: dict[int, int] = {}
        for cell in row[6:]:
            if not cell.strip():
                continue
            try:
                y, c = cell.split(":")
                year, count = int(y), int(c)
            except ValueError as exc:
                raise CorpusError(f"journal master line {lineno}: bad year:count cell {cell!r}") from exc
            if count < 0:
                raise CorpusError(f"journal master line {lineno}: negative citable count for {jid}")
            citable[year] = count
        entries.append(
            JournalEntry(
                journal_id=jid.strip(),
                full_title=title.strip(),
                canonical_abbrev=canon.strip(),
                extra_aliases=tuple(a.strip() for a in aliases.split("|") if a.strip()),
                citable_items=citable,
                field_id=field_id.strip() or None,
                reference_if=_opt_float(ref_if),
            )
        )
    return JournalMaster(entries)


def read_journal_master(path: str | Path) -> JournalMaster:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_journal_master(fh)


def serialize_journal_master(master: JournalMaster) -> str:
    out = ["\t".join(_MASTER_COLS)]
    for jid in master.journal_ids:
        e = master[jid]
        cells = [
            e.journal_id,
            e.full_title,
            e.canonical_abbrev,
            "|".join(e.extra_aliases),
            e.field_id or "",
            "" if e.reference_if is None else repr(e.reference_if),
        ]
        cells += [f"{y}:{c}" for y, c in sorted(e.citable_items.items())]
        out.append("\t".join(cells))
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class ProcessingStats:
    n_documents: int = 0
    n_documents_with_refs: int = 0
    n_refs_total: int = 0
    n_refs_with_year: int = 0
    n_refs_matched: int = 0
    n_refs_with_year_in_window: int = 0
    n_refs_in_window: int = 0
    fractional_sum_all: float = 0.0
    fractional_sum_window: float = 0.0
    fractional_sum_window_matched: float = 0.0
    exact_sums: tuple[Fraction, Fraction, Fraction] | None = field(default=None, compare=False, repr=False)

    @property
    def avg_refs_per_citing_doc(self) -> float:
        """Matched references per unit of fractional mass (all-years column)."""
        return self.n_refs_matched / self.fractional_sum_all if self.fractional_sum_all else 0.0

    @property
    def avg_refs_per_citing_doc_window(self) -> float:
        m = self.n_refs_in_window
        return m / self.fractional_sum_window if self.fractional_sum_window else 0.0

    def as_rows(self) -> list[tuple[str, str]]:
        f_all, f_win, f_mwin = self.exact_sums or tuple(
            Fraction(x) for x in (self.fractional_sum_all, self.fractional_sum_window, self.fractional_sum_window_matched)
        )
        return [
            ("n_documents", str(self.n_documents)),
            ("n_documents_with_refs", str(self.n_documents_with_refs)),
            ("n_refs_total", str(self.n_refs_total)),
            ("n_refs_with_year", str(self.n_refs_with_year)),
            ("n_refs_matched", str(self.n_refs_matched)),
            ("n_refs_with_year_in_window", str(self.n_refs_with_year_in_window)),
            ("n_refs_in_window", str(self.n_refs_in_window)),
            ("fractional_sum_all", format_fixed(f_all)),
            ("fractional_sum_window", format_fixed(f_win)),
            ("fractional_sum_window_matched", format_fixed(f_mwin)),
            ("avg_refs_per_citing_doc", format_fixed(self.n_refs_matched / f_all if f_all else Fraction(0))),
            ("avg_refs_per_citing_doc_window", format_fixed(self.n_refs_in_window / f_win if f_win else Fraction(0))),
        ]


def compute_processing_stats(
    corpus: Sequence[DocumentRecord], master: JournalMaster, window: tuple[int, int]
) -> ProcessingStats:
    """Table-style counts for the all-years and the cited-window columns.

    ``n_refs_total`` counts the references actually listed and
    ``n_refs_in_window`` the matched ones whose cited year falls in ``window``.
    The fractional sums are the total masses of the corresponding tallies:
    all-years with the document's n as denominator, window with the number of
    in-window references as denominator (all of them, or only the matched ones
    for the ``_matched`` variant).
    """

    lo, hi = window
    n_docs = n_with = n_total = n_year = n_matched = n_win = n_mwin = 0
    frac_all: Counter = Counter()
    frac_win: Counter = Counter()
    n_mdocs = 0
    cache: dict[str, str | None] = {}
    for doc in corpus:
        n_docs += 1
        if doc.refs:
            n_with += 1
        n_total += len(doc.refs)
        d_matched = d_win = d_mwin = 0
        for ref in doc.refs:
            if ref.cited_year is None:
                continue
            n_year += 1
            key = ref.cited_journal_abbrev
            if key not in cache:
                cache[key] = match_journal(key, master)
            jid = cache[key]
            in_win = lo <= ref.cited_year <= hi
            d_win += in_win
            if jid is not None:
                d_matched += 1
                d_mwin += in_win
        n_matched += d_matched
        n_win += d_win
        n_mwin += d_mwin
        if d_matched:
            frac_all[Fraction(d_matched, max(doc.n_refs_total, len(doc.refs)))] += 1
        if d_mwin:
            frac_win[Fraction(d_mwin, d_win)] += 1
            n_mdocs += 1
    f_all = sum((w * c for w, c in frac_all.items()), Fraction(0))
    f_win = sum((w * c for w, c in frac_win.items()), Fraction(0))
    return ProcessingStats(
        n_documents=n_docs,
        n_documents_with_refs=n_with,
        n_refs_total=n_total,
        n_refs_with_year=n_year,
        n_refs_matched=n_matched,
        n_refs_with_year_in_window=n_win,
        n_refs_in_window=n_mwin,
        fractional_sum_all=float(f_all),
        fractional_sum_window=float(f_win),
        fractional_sum_window_matched=float(n_mdocs),
        exact_sums=(f_all, f_win, Fraction(n_mdocs)),
    )
