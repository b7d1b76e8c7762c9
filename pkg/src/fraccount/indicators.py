"""Quasi impact factors and fractional c/p ratios per journal."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .corpus import DocumentRecord, JournalMaster
from .counting import NormalizationScope, accumulate, format_fixed


class ExcludedJournal(ValueError):
    """A journal cannot receive an indicator (zero denominator)."""


def quasi_if(numerator: float, *citable: int) -> float:
    """Numerator over the summed citable items of the window years."""
    denom = sum(citable)
    if denom <= 0:
        raise ExcludedJournal("no citable items in the window")
    return numerator / denom


def cp_ratio(total_fractional_cites: float, publications: int) -> float:
    if publications <= 0:
        raise ExcludedJournal("no publications")
    return total_fractional_cites / publications


@dataclass(frozen=True)
class IndicatorRow:
    journal_id: str
    reference_if: float | None
    quasi_if_integer: float
    quasi_if_fractional: float
    cp_fractional: float | None
    denominator_citable: int
    field_id: str | None = None
    quasi_if_fractional_allrefs: float | None = None
    exact: dict[str, Fraction] = field(default_factory=dict, compare=False, repr=False)

    def formatted(self, name: str) -> str:
        """Column value as 6-decimal text, rounded from the exact ratio when known."""
        if name in self.exact:
            return format_fixed(self.exact[name])
        return _fmt(getattr(self, name))


@dataclass
class IndicatorTable:
    citing_year: int
    window: tuple[int, int]
    rows: list[IndicatorRow] = field(default_factory=list)
    excluded: list[tuple[str, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def row(self, journal_id: str) -> IndicatorRow:
        for r in self.rows:
            if r.journal_id == journal_id:
                return r
        raise KeyError(journal_id)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            [
                "journal_id",
                "reference_if",
                "quasi_if_integer",
                "quasi_if_fractional",
                "cp_fractional",
                "denominator_citable",
                "field_id",
            ]
        )
        for r in self.rows:
            w.writerow(
                [
                    r.journal_id,
                    _fmt(r.reference_if),
                    r.formatted("quasi_if_integer"),
                    r.formatted("quasi_if_fractional"),
                    r.formatted("cp_fractional"),
                    r.denominator_citable,
                    r.field_id or "",
                ]
            )
        return buf.getvalue()

    def exclusions_tsv(self) -> str:
        return "journal_id\treason\n" + "".join(f"{j}\t{why}\n" for j, why in self.excluded)


def _fmt(x: float | None) -> str:
    return "" if x is None else format_fixed(x)


def read_indicator_csv(text: str) -> list[IndicatorRow]:
    def opt(s: str) -> float | None:
        return float(s) if s else None

    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(
            IndicatorRow(
                journal_id=rec["journal_id"],
                reference_if=opt(rec["reference_if"]),
                quasi_if_integer=float(rec["quasi_if_integer"]),
                quasi_if_fractional=float(rec["quasi_if_fractional"]),
                cp_fractional=opt(rec["cp_fractional"]),
                denominator_citable=int(rec["denominator_citable"]),
                field_id=rec["field_id"] or None,
            )
        )
    return rows


def build_indicator_table(
    corpus: Sequence[DocumentRecord],
    master: JournalMaster,
    citing_year: int,
    window_length: int = 2,
    matched_only: bool = False,
    cp_citing_year_only: bool = False,
    journals: Sequence[str] | None = None,
    workers: int = 1,
) -> IndicatorTable:
    """Indicator rows for every journal with a usable IF denominator and numerator.

    Citing documents are those published in ``citing_year``; the cited window
    is the ``window_length`` preceding years. The fractional quasi-IF uses the
    window-references normalization, with the all-references variant kept
    alongside. The c/p ratio divides all-years, all-references fractional cites
    by the journal's publications over every year in the master (or only the
    citing year with ``cp_citing_year_only``).

    Journals failing a filter land in ``excluded`` with a reason, so each
    master journal is accounted for exactly once.
    """
    if window_length < 1:
        raise ValueError("window_length must be >= 1")
    window = (citing_year - window_length, citing_year - 1)
    window_years = range(window[0], window[1] + 1)
    citing = [d for d in corpus if d.pub_year == citing_year]

    win = accumulate(citing, master, NormalizationScope.window_refs(window, matched_only), workers=workers)
    win_all = accumulate(
        citing, master, NormalizationScope.all_refs(matched_only), cited_window=window, workers=workers
    )
    total = accumulate(citing, master, NormalizationScope.all_refs(matched_only), workers=workers)

    table = IndicatorTable(citing_year, window)
    ids = sorted(journals) if journals is not None else master.journal_ids
    for jid in ids:
        entry = master[jid]
        missing = [y for y in window_years if entry.citable_items.get(y, 0) <= 0]
        if missing:
            table.excluded.append((jid, "no citable items for " + ",".join(map(str, missing))))
            continue
        if win.integer(jid) == 0:
            table.excluded.append((jid, "zero numerator"))
            continue
        citable = [entry.citable_items[y] for y in window_years]
        denom = sum(citable)
        if cp_citing_year_only:
            pubs = entry.citable_items.get(citing_year, 0)
        else:
            pubs = sum(entry.citable_items.values())
        exact = {
            "quasi_if_integer": Fraction(win.integer(jid), denom),
            "quasi_if_fractional": win.exact_fractional(jid) / denom,
        }
        try:
            cp = cp_ratio(total.fractional(jid), pubs)
            exact["cp_fractional"] = total.exact_fractional(jid) / pubs
        except ExcludedJournal:
            cp = None
        table.rows.append(
            IndicatorRow(
                journal_id=jid,
                reference_if=entry.reference_if,
                quasi_if_integer=quasi_if(win.integer(jid), *citable),
                quasi_if_fractional=quasi_if(win.fractional(jid), *citable),
                cp_fractional=cp,
                denominator_citable=denom,
                field_id=entry.field_id,
                quasi_if_fractional_allrefs=quasi_if(win_all.fractional(jid), *citable),
                exact=exact,
            )
        )
    return table
