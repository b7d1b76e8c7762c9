from __future__ import annotations

import pytest

from conftest import doc
from fraccount.corpus import JournalEntry, JournalMaster
from fraccount.indicators import (
    ExcludedJournal,
    build_indicator_table,
    cp_ratio,
    quasi_if,
    read_indicator_csv,
)
from fraccount.simgen import SimSpec, generate


def test_quasi_if_division():
    assert quasi_if(4.5, 10, 8) == 0.25
    assert quasi_if(0, 10, 8) == 0.0
    with pytest.raises(ExcludedJournal):
        quasi_if(3.0, 0, 0)


def test_cp_ratio():
    assert cp_ratio(12.0, 4) == 3.0
    assert cp_ratio(0.0, 4) == 0.0
    with pytest.raises(ExcludedJournal):
        cp_ratio(1.0, 0)


def _master(stem_citable=None):
    return JournalMaster(
        [
            JournalEntry("A", "A", "AA", (), {2006: 10, 2007: 10, 2008: 5}, "F1", 1.5),
            JournalEntry("B", "B", "BB", (), {2006: 4, 2007: 6}, "F2"),
            JournalEntry("S", "Stem", "SS", (), stem_citable or {2007: 12}, "F2"),
        ]
    )


def test_one_window_year_missing_is_excluded():
    corpus = [doc("d", [("AA", 2006), ("SS", 2007), ("BB", 2007)], year=2008)]
    t = build_indicator_table(corpus, _master(), 2008)
    assert [r.journal_id for r in t] == ["A", "B"]
    assert t.excluded == [("S", "no citable items for 2006")]


def test_empty_corpus_gives_empty_table():
    t = build_indicator_table([], _master(), 2008)
    assert len(t) == 0
    assert {j for j, _ in t.excluded} == {"A", "B", "S"}


def test_values_by_hand():
    corpus = [
        doc("d1", [("AA", 2006), ("AA", 2007), ("BB", 2007), ("XX", 2006)], n=10, year=2008),
        doc("d2", [("AA", 2001)], n=2, year=2008),
        doc("d3", [("AA", 2006)], year=2007),
    ]
    t = build_indicator_table(corpus, _master(), 2008)
    a = t.row("A")
    assert a.quasi_if_integer == 2 / 20
    assert a.quasi_if_fractional == pytest.approx(0.5 / 20)
    assert a.quasi_if_fractional_allrefs == pytest.approx(0.2 / 20)
    assert a.cp_fractional == pytest.approx((0.2 + 0.5) / 25)
    assert a.reference_if == 1.5
    assert t.row("B").quasi_if_fractional == pytest.approx(0.25 / 10)


def test_cp_citing_year_only():
    corpus = [doc("d1", [("AA", 2006)], n=4, year=2008)]
    t = build_indicator_table(corpus, _master(), 2008, cp_citing_year_only=True)
    assert t.row("A").cp_fractional == pytest.approx(0.25 / 5)
    t = build_indicator_table(corpus, _master(), 2008)
    assert t.row("A").cp_fractional == pytest.approx(0.25 / 25)


def test_five_year_window():
    m = JournalMaster([JournalEntry("A", "A", "AA", (), {y: 2 for y in range(2003, 2008)})])
    t = build_indicator_table([doc("d", [("AA", 2003)], year=2008)], m, 2008, window_length=5)
    assert t.window == (2003, 2007)
    assert t.row("A").quasi_if_integer == 0.1


def test_fixture_matches_golden(fixture_corpus, fixture_master, data_dir):
    t = build_indicator_table(fixture_corpus[0], fixture_master, 2008)
    assert t.to_csv() == (data_dir / "golden_indicators.csv").read_text()
    assert t.exclusions_tsv() == (data_dir / "golden_exclusions.tsv").read_text()


def test_sim13_matches_golden(data_dir):
    spec = SimSpec.load(data_dir / "sim13_spec.json")
    corpus, master = generate(spec)
    t = build_indicator_table(corpus, master, spec.years[1])
    assert t.to_csv() == (data_dir / "golden_sim13_indicators.csv").read_text()


def test_table_invariants(fixture_corpus, fixture_master):
    t = build_indicator_table(fixture_corpus[0], fixture_master, 2008)
    for r in t:
        assert r.quasi_if_fractional <= r.quasi_if_integer
        assert r.denominator_citable > 0
    listed = [r.journal_id for r in t] + [j for j, _ in t.excluded]
    assert sorted(listed) == fixture_master.journal_ids


def test_doubling_citable_halves_quasi_if(fixture_corpus, fixture_master):
    doubled = JournalMaster(
        JournalEntry(e.journal_id, e.full_title, e.canonical_abbrev, e.extra_aliases,
                     {y: 2 * c for y, c in e.citable_items.items()}, e.field_id, e.reference_if)
        for e in fixture_master
    )
    a = build_indicator_table(fixture_corpus[0], fixture_master, 2008)
    b = build_indicator_table(fixture_corpus[0], doubled, 2008)
    for ra, rb in zip(a, b):
        assert rb.quasi_if_integer == ra.quasi_if_integer / 2
        assert rb.quasi_if_fractional == ra.quasi_if_fractional / 2


def test_csv_round_trip(fixture_corpus, fixture_master):
    t = build_indicator_table(fixture_corpus[0], fixture_master, 2008)
    rows = read_indicator_csv(t.to_csv())
    assert [r.journal_id for r in rows] == [r.journal_id for r in t]
    for a, b in zip(rows, t):
        assert a.quasi_if_fractional == pytest.approx(b.quasi_if_fractional, abs=5e-7)
