"""Integer and fractional (citing-side normalized) citation tallies.

Each citing document distributes at most one unit of citation mass over the
journals it cites: a journal cited ``k`` times in a document with ``n``
references receives ``k/n``. The denominator ``n`` is either the document's
full reference count (``AllRefs``) or the number of its references whose
cited year falls in a window (``WindowRefs``).

Per journal, multiplicities are first summed per distinct denominator ``n``
(integer arithmetic), then the few resulting ``K_n / n`` terms are added as
exact rationals and rounded once. Tallies are therefore correctly rounded and
bit-identical across corpus orderings and worker counts.
"""

from __future__ import annotations

from collections import Counter
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .corpus import DocumentRecord, JournalMaster, format_fixed, normalize_abbrev

YearRange = tuple[int, int]


@dataclass(frozen=True)
class NormalizationScope:
    """How the per-document denominator ``n`` is computed.

    ``window=None`` means all references (``n`` = the document's reference
    count); a year range means only references cited to that range.
    ``matched_only`` restricts the denominator to references matched to the
    master list.
    """

    window: YearRange | None = None
    matched_only: bool = False

    def __post_init__(self):
        if self.window is not None and self.window[0] > self.window[1]:
            raise ValueError(f"empty window {self.window}")

    @classmethod
    def all_refs(cls, matched_only: bool = False) -> "NormalizationScope":
        return cls(None, matched_only)

    @classmethod
    def window_refs(cls, window: YearRange, matched_only: bool = False) -> "NormalizationScope":
        return cls(tuple(window), matched_only)

    @property
    def label(self) -> str:
        base = "all" if self.window is None else f"window{self.window[0]}-{self.window[1]}"
        return base + ("-matched" if self.matched_only else "")


@dataclass(frozen=True)
class DocWeightVector:
    source_doc: str
    denominator_n: int
    multiplicity: dict[str, int] = field(default_factory=dict)

    @property
    def weights(self) -> dict[str, float]:
        n = self.denominator_n
        return {j: k / n for j, k in self.multiplicity.items()}

    @property
    def mass(self) -> float:
        return sum(self.multiplicity.values()) / self.denominator_n if self.denominator_n else 0.0


@dataclass
class JournalTally:
    integer_count: int = 0
    fractional_count: float = 0.0
    per_doc: list[tuple[str, int, int]] | None = None
    exact: Fraction = Fraction(0)

    def weights(self) -> list[float]:
        """Per-citing-document fractional weights ``k/n``, in doc_id order."""
        return [k / n for _, k, n in self.per_doc or ()]

    def multiplicities(self) -> list[int]:
        """Per-citing-document integer citation counts, in doc_id order."""
        return [k for _, k, _ in self.per_doc or ()]


@dataclass
class CitationTally:
    scope: NormalizationScope
    cited_window: YearRange | None
    journals: dict[str, JournalTally] = field(default_factory=dict)

    def __getitem__(self, journal_id: str) -> JournalTally:
        return self.journals[journal_id]

    def __contains__(self, journal_id: object) -> bool:
        return journal_id in self.journals

    def integer(self, journal_id: str) -> int:
        t = self.journals.get(journal_id)
        return t.integer_count if t else 0

    def fractional(self, journal_id: str) -> float:
        t = self.journals.get(journal_id)
        return t.fractional_count if t else 0.0

    def exact_fractional(self, journal_id: str) -> Fraction:
        t = self.journals.get(journal_id)
        return t.exact if t else Fraction(0)

    def total_fractional(self) -> float:
        return float(sum((t.exact for t in self.journals.values()), Fraction(0)))

    def total_integer(self) -> int:
        return sum(t.integer_count for t in self.journals.values())

    def to_tsv(self) -> str:
        lines = ["journal_id\tinteger_count\tfractional_count"]
        for jid in sorted(self.journals):
            t = self.journals[jid]
            lines.append(f"{jid}\t{t.integer_count}\t{format_fixed(t.exact)}")
        return "\n".join(lines) + "\n"


def _in(year: int, window: YearRange | None) -> bool:
    return window is None or window[0] <= year <= window[1]


class _Matcher:
    """Memoized abbrev -> journal_id lookups against one master."""

    def __init__(self, master: JournalMaster):
        self.master = master
        self.cache: dict[str, str | None] = {}

    def __call__(self, abbrev: str) -> str | None:
        try:
            return self.cache[abbrev]
        except KeyError:
            jid = self.cache[abbrev] = self.master.lookup(normalize_abbrev(abbrev))
            return jid


def _aggregate(doc: DocumentRecord, match, cited_window: YearRange | None):
    counts: Counter = Counter()
    for ref in doc.refs:
        y = ref.cited_year
        if y is None or not _in(y, cited_window):
            continue
        jid = match(ref.cited_journal_abbrev)
        if jid is not None:
            counts[(jid, y)] += 1
    return counts


def aggregate_doc_refs(
    doc: DocumentRecord, master: JournalMaster, cited_window: YearRange | None = None
) -> dict[tuple[str, int], int]:
    """Multiplicity of each (journal, cited year) among the document's usable references."""
    return dict(_aggregate(doc, _Matcher(master), cited_window))


def _denominator(doc: DocumentRecord, match, scope: NormalizationScope) -> int:
    if scope.window is None and not scope.matched_only:
        return max(doc.n_refs_total, len(doc.refs))
    n = 0
    for ref in doc.refs:
        y = ref.cited_year
        if scope.window is not None and (y is None or not _in(y, scope.window)):
            continue
        if scope.matched_only and (y is None or match(ref.cited_journal_abbrev) is None):
            continue
        n += 1
    return n


def _weight_vector(doc, match, scope, cited_window) -> DocWeightVector:
    window = cited_window if cited_window is not None else scope.window
    n = _denominator(doc, match, scope)
    if n == 0:
        return DocWeightVector(doc.doc_id, 0, {})
    mult: Counter = Counter()
    for (jid, _), k in _aggregate(doc, match, window).items():
        mult[jid] += k
    return DocWeightVector(doc.doc_id, n, dict(mult))


def doc_weight_vector(
    doc: DocumentRecord,
    master: JournalMaster,
    scope: NormalizationScope,
    cited_window: YearRange | None = None,
) -> DocWeightVector:
    """Per-journal weights ``multiplicity / n`` contributed by one citing document.

    ``cited_window`` restricts which references are credited; it defaults to
    the scope's window. Documents whose denominator is zero contribute nothing.
    """
    return _weight_vector(doc, _Matcher(master), scope, cited_window)


def _partial(docs: Sequence[DocumentRecord], master, scope, cited_window, keep_per_doc):
    match = _Matcher(master)
    ints: dict[str, int] = {}
    by_n: dict[str, Counter] = {}
    per_doc: dict[str, list] = {}
    for doc in docs:
        wv = _weight_vector(doc, match, scope, cited_window)
        n = wv.denominator_n
        for jid, k in wv.multiplicity.items():
            ints[jid] = ints.get(jid, 0) + k
            c = by_n.get(jid)
            if c is None:
                c = by_n[jid] = Counter()
            c[n] += k
            if keep_per_doc:
                per_doc.setdefault(jid, []).append((doc.doc_id, k, n))
    return ints, by_n, per_doc


_JOB = None


def _inherited_partial(i: int):
    chunks, *rest = _JOB
    return _partial(chunks[i], *rest)


def accumulate(
    corpus: Sequence[DocumentRecord],
    master: JournalMaster,
    scope: NormalizationScope,
    cited_window: YearRange | None = None,
    keep_per_doc: bool = False,
    workers: int = 1,
) -> CitationTally:
    """Tally integer and fractional citations per cited journal.

    With ``workers > 1`` the corpus is split into contiguous chunks processed
    in separate processes. Partials merge by integer addition, so the result
    does not depend on ``workers`` or on corpus order.
    """
    if cited_window is None:
        cited_window = scope.window
    corpus = list(corpus)
    if workers > 1 and len(corpus) > 1:
        size = -(-len(corpus) // workers)
        chunks = [corpus[i : i + size] for i in range(0, len(corpus), size)]
        job = (chunks, master, scope, cited_window, keep_per_doc)
        if "fork" in mp.get_all_start_methods():
            # forked children inherit the chunks; only small partials are pickled back
            global _JOB
            _JOB = job
            try:
                with ProcessPoolExecutor(max_workers=workers, mp_context=mp.get_context("fork")) as ex:
                    partials = list(ex.map(_inherited_partial, range(len(chunks))))
            finally:
                _JOB = None
        else:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                futures = [ex.submit(_partial, c, *job[1:]) for c in chunks]
                partials = [f.result() for f in futures]
    else:
        partials = [_partial(corpus, master, scope, cited_window, keep_per_doc)]

    ints: dict[str, int] = {}
    by_n: dict[str, Counter] = {}
    per_doc: dict[str, list] = {}
    for p_ints, p_by_n, p_docs in partials:
        for jid, k in p_ints.items():
            ints[jid] = ints.get(jid, 0) + k
        for jid, c in p_by_n.items():
            by_n.setdefault(jid, Counter()).update(c)
        for jid, ws in p_docs.items():
            per_doc.setdefault(jid, []).extend(ws)

    tally = CitationTally(scope, cited_window)
    for jid in sorted(ints):
        exact = sum((Fraction(k, n) for n, k in sorted(by_n[jid].items())), Fraction(0))
        docs = sorted(per_doc[jid]) if keep_per_doc else None
        tally.journals[jid] = JournalTally(ints[jid], float(exact), docs, exact)
    return tally
