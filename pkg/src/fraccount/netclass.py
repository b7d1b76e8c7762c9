"""Journal citation graphs, significance networks, densities, Pajek export."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import DocumentRecord, JournalMaster, match_journal
from .stats import GroupSample, dunnett_c, tukey_hsd


@dataclass
class JournalGraph:
    """Nodes are journal ids; edges map (a, b) to a weight.

    Undirected graphs store each edge once with ``a < b``.
    """

    nodes: list[str]
    directed: bool
    edges: dict[tuple[str, str], int] = field(default_factory=dict)
    partition: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = sorted(set(self.nodes))

    def add_edge(self, a: str, b: str, weight: int = 1) -> None:
        known = set(self.nodes)
        if a not in known or b not in known:
            raise KeyError(f"edge ({a}, {b}) has an unregistered endpoint")
        if not self.directed:
            if a == b:
                raise ValueError("self-loop in an undirected graph")
            a, b = min(a, b), max(a, b)
        self.edges[a, b] = self.edges.get((a, b), 0) + weight

    def components(self) -> list[set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        seen: set[str] = set()
        out = []
        for n in self.nodes:
            if n in seen:
                continue
            comp, stack = set(), [n]
            while stack:
                v = stack.pop()
                if v in comp:
                    continue
                comp.add(v)
                stack.extend(adj[v] - comp)
            seen |= comp
            out.append(comp)
        return out

    def degree(self, node: str) -> int:
        return sum((a == node) + (b == node) for a, b in self.edges if a != b)


def citation_graph(
    corpus: Sequence[DocumentRecord],
    journals: Sequence[str],
    master: JournalMaster,
    cited_window: tuple[int, int] | None = None,
    citing_year: int | None = None,
) -> JournalGraph:
    """Directed graph weighted by the number of references from one journal to another.

    No threshold is applied; self-citation appears as a self-loop.
    """
    subset = set(journals)
    if not subset:
        raise ValueError("empty journal set")
    missing = subset.difference(master.journal_ids)
    if missing:
        raise KeyError(f"journals not in master: {sorted(missing)}")
    g = JournalGraph(list(subset), directed=True)
    cache: dict[str, str | None] = {}

    def match(abbrev):
        if abbrev not in cache:
            cache[abbrev] = match_journal(abbrev, master)
        return cache[abbrev]

    for doc in corpus:
        if citing_year is not None and doc.pub_year != citing_year:
            continue
        src = match(doc.journal_abbrev)
        if src not in subset:
            continue
        for ref in doc.refs:
            y = ref.cited_year
            if y is None or (cited_window and not cited_window[0] <= y <= cited_window[1]):
                continue
            dst = match(ref.cited_journal_abbrev)
            if dst in subset:
                g.add_edge(src, dst)
    return g


def significance_graph(
    samples: Sequence[GroupSample], alpha: float = 0.05, test: str = "dunnett_c"
) -> JournalGraph:
    """Undirected graph linking journals whose distributions do NOT differ significantly."""
    if len(samples) < 2:
        raise ValueError("need at least two journals")
    tests = {"dunnett_c": dunnett_c, "tukey_hsd": tukey_hsd}
    if test not in tests:
        raise ValueError(f"unknown test {test!r}")
    g = JournalGraph([s.group_id for s in samples], directed=False)
    for cmp in tests[test](samples, alpha):
        if cmp.group_i < cmp.group_j and not cmp.significant:
            g.add_edge(cmp.group_i, cmp.group_j)
    return g


@dataclass(frozen=True)
class ScopeDensity:
    n: int
    edges: int
    density: float
    average_degree: float | None
    defined: bool = True


@dataclass
class DensityReport:
    """Densities over the complete set, each partition class, and between classes.

    ``average_degree`` counts every tie at both endpoints, i.e. it is
    ``2 * density * (n - 1)``; the plain undirected mean degree is half that.
    """

    scopes: dict[str, ScopeDensity]
    labels: tuple[str, str]

    def as_row(self) -> list[str]:
        a, b = self.labels
        out = []
        for key in ("complete", a, b):
            s = self.scopes[key]
            out += [_f(s.density), _f(s.average_degree)]
        out.append(_f(self.scopes["between"].density))
        return out


def _f(x: float | None) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.4f}"


def _within(n: int, m: int) -> ScopeDensity:
    if n < 2:
        return ScopeDensity(n, m, math.nan, None, defined=False)
    d = m / (n * (n - 1) / 2)
    return ScopeDensity(n, m, d, 2 * d * (n - 1))


def density_report(graph: JournalGraph, partition: dict[str, str]) -> DensityReport:
    if graph.directed:
        raise ValueError("density report expects an undirected graph")
    uncovered = [n for n in graph.nodes if n not in partition]
    if uncovered:
        raise ValueError(f"partition does not cover {uncovered}")
    labels = tuple(sorted({partition[n] for n in graph.nodes}))
    if len(labels) != 2:
        raise ValueError(f"expected a two-class partition, got {labels}")
    a, b = labels
    na = sum(partition[n] == a for n in graph.nodes)
    nb = len(graph.nodes) - na
    ea = eb = ex = 0
    for u, v in graph.edges:
        pu, pv = partition[u], partition[v]
        if pu != pv:
            ex += 1
        elif pu == a:
            ea += 1
        else:
            eb += 1
    between = ScopeDensity(na + nb, ex, ex / (na * nb) if na and nb else math.nan, None, bool(na and nb))
    return DensityReport(
        {
            "complete": _within(na + nb, len(graph.edges)),
            a: _within(na, ea),
            b: _within(nb, eb),
            "between": between,
        },
        (a, b),
    )


def density_report_csv(reports: dict[str, DensityReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    first = next(iter(reports.values()), None)
    a, b = first.labels if first else ("A", "B")
    w.writerow(
        ["graph", "complete_density", "complete_avg_degree", f"{a}_density", f"{a}_avg_degree",
         f"{b}_density", f"{b}_avg_degree", "between_density"]
    )
    for name, rep in reports.items():
        w.writerow([name, *rep.as_row()])
    return buf.getvalue()


def export_pajek(graph: JournalGraph) -> str:
    """Pajek .net text: vertices numbered from 1 in sorted id order."""
    index = {n: i + 1 for i, n in enumerate(graph.nodes)}
    lines = [f"*Vertices {len(graph.nodes)}"]
    lines += [f'{index[n]} "{n}"' for n in graph.nodes]
    lines.append("*Arcs" if graph.directed else "*Edges")
    for (a, b) in sorted(graph.edges, key=lambda e: (index[e[0]], index[e[1]])):
        lines.append(f"{index[a]} {index[b]} {graph.edges[a, b]}")
    return "\n".join(lines) + "\n"


def parse_pajek(text: str) -> JournalGraph:
    """Read back the subset of the Pajek format written by :func:`export_pajek`."""
    labels: dict[int, str] = {}
    edges: list[tuple[int, int, int]] = []
    directed = None
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("*"):
            section = line.split()[0].lower()
            if section in ("*arcs", "*edges"):
                directed = section == "*arcs"
            continue
        if section == "*vertices":
            m = re.match(r'(\d+)\s+"(.*)"', line)
            if not m:
                raise ValueError(f"bad vertex line {raw!r}")
            labels[int(m.group(1))] = m.group(2)
        elif section in ("*arcs", "*edges"):
            parts = line.split()
            w = int(float(parts[2])) if len(parts) > 2 else 1
            edges.append((int(parts[0]), int(parts[1]), w))
    g = JournalGraph(list(labels.values()), directed=bool(directed))
    for a, b, w in edges:
        g.add_edge(labels[a], labels[b], w)
    return g
