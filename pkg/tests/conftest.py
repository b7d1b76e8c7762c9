from __future__ import annotations

from pathlib import Path

import pytest

from fraccount.corpus import DocumentRecord, JournalEntry, JournalMaster, RawReference, read_corpus, read_journal_master

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def fixture_master() -> JournalMaster:
    return read_journal_master(DATA / "fixture_master.tsv")


@pytest.fixture(scope="session")
def fixture_corpus():
    records, report = read_corpus(DATA / "fixture_corpus.jsonl")
    return records, report


def master_of(*specs, citable=None) -> JournalMaster:
    """Small master from (journal_id, abbrev[, aliases]) tuples."""
    entries = []
    for spec in specs:
        jid, abbrev, *rest = spec
        aliases = tuple(rest[0]) if rest else ()
        entries.append(JournalEntry(jid, jid, abbrev, aliases, dict(citable or {2006: 10, 2007: 10}), "F"))
    return JournalMaster(entries)


def doc(doc_id: str, refs, n=None, journal="SRC", year=2008) -> DocumentRecord:
    refs = tuple(RawReference(j, y) for j, y in refs)
    return DocumentRecord(doc_id, journal, year, "article", len(refs) if n is None else n, refs)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
