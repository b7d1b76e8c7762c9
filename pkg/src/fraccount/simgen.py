"""Seeded synthetic corpora with fields that differ in citation potential.

Every journal-year block draws from its own Philox stream keyed by
``(seed, block index)``, so output depends only on the spec.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import DocumentRecord, JournalEntry, JournalMaster, RawReference

RNG_NAME = "philox4x64-seedsequence-v1"
OLD_YEARS_SPAN = 8


class SimSpecError(ValueError):
    pass


@dataclass(frozen=True)
class FieldSpec:
    field_id: str
    n_journals: int
    papers_per_journal_per_year: int
    reflist_mean: float
    reflist_dispersion: float = 5.0
    reflist_family: str = "negative_binomial"
    share_refs_to_window: float = 0.3
    within_field_citation_share: float = 0.9

    def validate(self) -> None:
        if self.n_journals < 1 or self.papers_per_journal_per_year < 1:
            raise SimSpecError(f"field {self.field_id}: journal and paper counts must be positive")
        if self.reflist_mean <= 0:
            raise SimSpecError(f"field {self.field_id}: reflist mean must be positive")
        if self.reflist_family not in ("negative_binomial", "fixed"):
            raise SimSpecError(f"field {self.field_id}: unknown family {self.reflist_family!r}")
        if self.reflist_family == "negative_binomial" and self.reflist_dispersion <= 0:
            raise SimSpecError(f"field {self.field_id}: dispersion must be positive")
        for name in ("share_refs_to_window", "within_field_citation_share"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SimSpecError(f"field {self.field_id}: {name} outside [0, 1]")


@dataclass(frozen=True)
class SimSpec:
    fields: tuple[FieldSpec, ...]
    years: tuple[int, int]
    seed: int
    quality_profile: dict[str, float] | None = None
    quality_spread: float = 0.0
    window_length: int = 2

    def validate(self) -> None:
        if not self.fields:
            raise SimSpecError("at least one field is required")
        if self.years[0] > self.years[1]:
            raise SimSpecError("empty year range")
        if not 0 <= self.seed < 2**64:
            raise SimSpecError("seed must be a 64-bit unsigned integer")
        ids = [f.field_id for f in self.fields]
        if len(set(ids)) != len(ids):
            raise SimSpecError("duplicate field ids")
        for f in self.fields:
            f.validate()
        if any(v < 0 for v in (self.quality_profile or {}).values()):
            raise SimSpecError("quality multipliers must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "SimSpec":
        try:
            fields = tuple(FieldSpec(**f) for f in d["fields"])
            return cls(
                fields=fields,
                years=tuple(d["years"]),
                seed=int(d["seed"]),
                quality_profile=d.get("quality_profile"),
                quality_spread=float(d.get("quality_spread", 0.0)),
                window_length=int(d.get("window_length", 2)),
            )
        except (KeyError, TypeError) as exc:
            raise SimSpecError(f"invalid simulation config: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "SimSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def journal_id(field_id: str, index: int) -> str:
    return f"{field_id}J{index:04d}"


def journal_abbrev(field_id: str, index: int) -> str:
    return f"SIM {field_id} J{index:04d}"


def _stream(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _reflist_lengths(rng, f: FieldSpec, size: int) -> np.ndarray:
    if f.reflist_family == "fixed":
        return np.full(size, int(round(f.reflist_mean)), dtype=np.int64)
    r = f.reflist_dispersion
    return rng.negative_binomial(r, r / (r + f.reflist_mean), size=size)


def generate(spec: SimSpec) -> tuple[list[DocumentRecord], JournalMaster]:
    """Generate a corpus and its master file.

    A reference goes to one of the ``window_length`` years preceding the
    citing year with probability ``share_refs_to_window`` (otherwise to an
    older year), and to a journal of the citing field with probability
    ``within_field_citation_share`` (otherwise to any other field). Targets
    are drawn proportional to journal quality multipliers.
    """
    spec.validate()
    jids: list[str] = []
    abbrevs: list[str] = []
    field_of: list[int] = []
    for fi, f in enumerate(spec.fields):
        for i in range(f.n_journals):
            jids.append(journal_id(f.field_id, i))
            abbrevs.append(journal_abbrev(f.field_id, i))
            field_of.append(fi)
    field_arr = np.asarray(field_of)
    n_all = len(jids)

    quality = np.ones(n_all)
    if spec.quality_spread > 0:
        quality = _stream(spec.seed, 2**40).lognormal(0.0, spec.quality_spread, n_all)
    for jid, mult in (spec.quality_profile or {}).items():
        try:
            quality[jids.index(jid)] = mult
        except ValueError:
            raise SimSpecError(f"quality profile names unknown journal {jid!r}") from None

    pools = []
    for fi in range(len(spec.fields)):
        inside = np.flatnonzero(field_arr == fi)
        outside = np.flatnonzero(field_arr != fi)
        pools.append((_probs(inside, quality), _probs(outside, quality)))

    y0, y1 = spec.years
    years = list(range(y0, y1 + 1))
    w = spec.window_length
    corpus: list[DocumentRecord] = []
    citable = [dict.fromkeys(years, 0) for _ in range(n_all)]
    block = 0
    for j in range(n_all):
        f = spec.fields[field_of[j]]
        inside, outside = pools[field_of[j]]
        for year in years:
            rng = _stream(spec.seed, block)
            block += 1
            n_docs = f.papers_per_journal_per_year
            citable[j][year] = n_docs
            lengths = _reflist_lengths(rng, f, n_docs)
            total = int(lengths.sum())
            recent = rng.random(total) < f.share_refs_to_window
            cited_year = np.where(
                recent,
                year - rng.integers(1, w + 1, total),
                year - w - rng.integers(1, OLD_YEARS_SPAN + 1, total),
            )
            within = rng.random(total) < f.within_field_citation_share
            targets = np.empty(total, dtype=np.int64)
            n_in = int(within.sum())
            targets[within] = _draw(rng, inside, n_in, f.field_id, "within-field")
            targets[~within] = _draw(rng, outside, total - n_in, f.field_id, "cross-field")
            pos = 0
            for d in range(n_docs):
                L = int(lengths[d])
                refs = tuple(
                    RawReference(abbrevs[t], int(cy))
                    for t, cy in zip(targets[pos : pos + L].tolist(), cited_year[pos : pos + L].tolist())
                )
                pos += L
                corpus.append(DocumentRecord(f"{jids[j]}-{year}-{d:05d}", abbrevs[j], year, "article", L, refs))

    entries = [
        JournalEntry(
            journal_id=jids[j],
            full_title=f"Synthetic journal {jids[j]}",
            canonical_abbrev=abbrevs[j],
            citable_items=citable[j],
            field_id=spec.fields[field_of[j]].field_id,
        )
        for j in range(n_all)
    ]
    return corpus, JournalMaster(entries)


def _probs(idx: np.ndarray, quality: np.ndarray):
    if idx.size == 0:
        return idx, None
    q = quality[idx]
    total = q.sum()
    return idx, (q / total if total > 0 else None)


def _draw(rng, pool, size: int, field_id: str, kind: str) -> np.ndarray:
    idx, p = pool
    if size == 0:
        return np.empty(0, dtype=np.int64)
    if idx.size == 0 or p is None:
        raise SimSpecError(f"field {field_id}: no journals available for {kind} citations")
    return idx[rng.choice(idx.size, size=size, p=p)]


def symmetric_spec(
    n_fields: int,
    journals_per_field: int,
    reflist_means: Sequence[float] | None = None,
    seed: int = 0,
    papers: int = 10,
    years: tuple[int, int] = (2006, 2008),
    **field_kw,
) -> SimSpec:
    """Convenience constructor: ``n_fields`` fields identical except for their reflist means."""
    means = list(reflist_means) if reflist_means is not None else [20.0] * n_fields
    if len(means) != n_fields:
        raise SimSpecError("one reflist mean per field is required")
    fields = tuple(
        FieldSpec(f"F{i + 1:02d}", journals_per_field, papers, float(m), **field_kw) for i, m in enumerate(means)
    )
    return SimSpec(fields=fields, years=years, seed=seed)
