"""Canonical Delta(k, r, s) walk graphs and their edge taxonomy.

A closed walk ``i1 j1 i2 j2 ... ik jk i1`` on a bipartite vertex set (I row
vertices, J column vertices) gives ``2k`` edges: down edges ``(i_u, j_u)``
and up edges ``(j_u, i_{u+1})``. Two edges coincide when they join the same
I and J vertex. The canonical representative relabels vertices in order of
first appearance, so ``f`` and ``g`` are restricted growth strings.
"""

from __future__ import annotations

import enum
import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, Sequence

from .qmatrix import GuardExceeded

ENUMERATE_LIMIT = 5
VERIFY_LIMIT = 4


class EdgeLabel(enum.Enum):
    UP_INNOVATION = "T1-up-innovation"
    DOWN_INNOVATION = "T1-down-innovation"
    T3_IRREGULAR = "T3-irregular"
    T3_REGULAR = "T3-regular"
    T2 = "T2"
    T4 = "T4"

    @property
    def is_innovation(self) -> bool:
        return self in (EdgeLabel.UP_INNOVATION, EdgeLabel.DOWN_INNOVATION)

    @property
    def is_t3(self) -> bool:
        return self in (EdgeLabel.T3_IRREGULAR, EdgeLabel.T3_REGULAR)

    @property
    def is_t4(self) -> bool:
        """T2 edges are the first appearances of T4 edges and count as T4."""
        return self in (EdgeLabel.T2, EdgeLabel.T4)


@dataclass(frozen=True)
class Edge:
    """One step of the walk. ``tail``/``head`` are ``('I', label)`` or ``('J', label)``."""

    down: bool
    i: int
    j: int

    @property
    def key(self) -> tuple[int, int]:
        return (self.i, self.j)

    @property
    def tail(self) -> tuple[str, int]:
        return ("I", self.i) if self.down else ("J", self.j)

    @property
    def head(self) -> tuple[str, int]:
        return ("J", self.j) if self.down else ("I", self.i)


def walk_edges(i_seq: Sequence[int], j_seq: Sequence[int]) -> list[Edge]:
    k = len(i_seq)
    if len(j_seq) != k or k == 0:
        raise ValueError("need equal, nonempty I and J sequences")
    edges = []
    for u in range(k):
        edges.append(Edge(True, i_seq[u], j_seq[u]))
        edges.append(Edge(False, i_seq[(u + 1) % k], j_seq[u]))
    return edges


def canonical_labels(seq: Sequence[int]) -> tuple[int, ...]:
    """Relabel by order of first appearance, starting at 1."""
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(v, len(seen) + 1) for v in seq)


@dataclass(frozen=True)
class CanonicalGraph:
    """Canonical graph given by ``f`` on ``{1..k+1}`` and ``g`` on ``{1..k}``."""

    f: tuple[int, ...]
    g: tuple[int, ...]

    def __post_init__(self):
        k = len(self.g)
        if len(self.f) != k + 1 or k == 0:
            raise ValueError("f must have one more entry than g")
        if self.f[0] != 1 or self.f[-1] != 1 or self.g[0] != 1:
            raise ValueError("f(1) = g(1) = f(k+1) = 1 is required")
        if not (_is_growth(self.f[:-1]) and _is_growth(self.g)):
            raise ValueError("f and g must be restricted growth sequences")

    @classmethod
    def from_sequences(cls, i_seq: Sequence[int], j_seq: Sequence[int]) -> "CanonicalGraph":
        f = canonical_labels(i_seq)
        return cls(f + (1,), canonical_labels(j_seq))

    @property
    def k(self) -> int:
        return len(self.g)

    @property
    def r(self) -> int:
        return max(self.f) - 1

    @property
    def s(self) -> int:
        return max(self.g)

    def edges(self) -> list[Edge]:
        return walk_edges(self.f[:-1], self.g)

    def multiplicities(self) -> Counter:
        return Counter(e.key for e in self.edges())

    @property
    def has_single_edge(self) -> bool:
        return any(m == 1 for m in self.multiplicities().values())

    @property
    def zero_contribution(self) -> bool:
        """Mean-zero entries make the expectation of any walk with a single edge vanish."""
        return self.has_single_edge

    def labels(self) -> list[EdgeLabel]:
        return classify_edges(self)


def _is_growth(seq: Sequence[int]) -> bool:
    top = 0
    for v in seq:
        if v < 1 or v > top + 1:
            return False
        top = max(top, v)
    return True


def _growth_strings(length: int) -> Iterator[tuple[int, ...]]:
    def rec(prefix: list[int], top: int):
        if len(prefix) == length:
            yield tuple(prefix)
            return
        for v in range(1, top + 2):
            prefix.append(v)
            yield from rec(prefix, max(top, v))
            prefix.pop()
    yield from rec([1], 1)


def enumerate_canonical(k: int, limit: int = ENUMERATE_LIMIT) -> list[CanonicalGraph]:
    """All canonical Delta(k, r, s) graphs, ordered lexicographically in ``(f, g)``."""
    if k < 1:
        raise ValueError("k must be positive")
    if k > limit:
        raise GuardExceeded(f"k={k} exceeds the enumeration guard {limit}")
    fs = list(_growth_strings(k))
    gs = list(_growth_strings(k))
    return [CanonicalGraph(f + (1,), g) for f in fs for g in gs]


def canonical_forms_bruteforce(k: int, p: int | None = None, n: int | None = None) -> set:
    """Canonical forms of every ``(I, J)`` sequence over ``p`` and ``n`` labels."""
    p = k + 1 if p is None else p
    n = k + 1 if n is None else n
    forms = set()
    for i_seq in itertools.product(range(1, p + 1), repeat=k):
        fi = canonical_labels(i_seq)
        for j_seq in itertools.product(range(1, n + 1), repeat=k):
            forms.add((fi, canonical_labels(j_seq)))
    return forms


# edge classification --------------------------------------------------------

def classify_sequence(i_seq: Sequence[int], j_seq: Sequence[int]) -> list[EdgeLabel]:
    """Label the ``2k`` walk edges of an arbitrary (not necessarily canonical) walk.

    Scans the edges in order. An edge reaching an unseen vertex is an
    innovation. Otherwise it is T3 when it coincides with an innovation
    that is still single, irregular when exactly one single innovation is
    incident to its tail vertex at that moment (the current edge excluded).
    Remaining edges are T4; the first T4 of each coincidence class is T2.
    """
    edges = walk_edges(i_seq, j_seq)
    seen_i = {i_seq[0]}
    seen_j: set[int] = set()
    counts: Counter = Counter()
    innovation_of: dict[tuple[int, int], int] = {}
    t4_seen: set[tuple[int, int]] = set()
    labels: list[EdgeLabel] = []
    for pos, e in enumerate(edges):
        if e.down and e.j not in seen_j:
            label = EdgeLabel.DOWN_INNOVATION
            innovation_of[e.key] = pos
        elif not e.down and e.i not in seen_i:
            label = EdgeLabel.UP_INNOVATION
            innovation_of[e.key] = pos
        elif e.key in innovation_of and counts[e.key] == 1:
            single_at_tail = _single_innovations_at(e.tail, edges[:pos], counts, innovation_of)
            label = EdgeLabel.T3_IRREGULAR if single_at_tail == 1 else EdgeLabel.T3_REGULAR
        else:
            label = EdgeLabel.T4 if e.key in t4_seen else EdgeLabel.T2
            t4_seen.add(e.key)
        labels.append(label)
        counts[e.key] += 1
        seen_i.add(e.i)
        seen_j.add(e.j)
    return labels


def _single_innovations_at(vertex, prior: Sequence[Edge], counts: Counter,
                           innovation_of: dict) -> int:
    """Innovations among ``prior`` that are still single and touch ``vertex``."""
    side, label = vertex
    total = 0
    for key, pos in innovation_of.items():
        if pos >= len(prior) or counts[key] != 1:
            continue
        if (side == "I" and key[0] == label) or (side == "J" and key[1] == label):
            total += 1
    return total


def classify_edges(graph: CanonicalGraph) -> list[EdgeLabel]:
    return classify_sequence(graph.f[:-1], graph.g)


def label_counts(labels: Sequence[EdgeLabel]) -> dict[str, int]:
    return {
        "T1": sum(l.is_innovation for l in labels),
        "T3": sum(l.is_t3 for l in labels),
        "T3-regular": sum(l is EdgeLabel.T3_REGULAR for l in labels),
        "T4": sum(l.is_t4 for l in labels),
        "T2": sum(l is EdgeLabel.T2 for l in labels),
    }


# lemma checks ------------------------------------------------------------------

@dataclass(frozen=True)
class Counterexample:
    graph: CanonicalGraph
    lemma: str
    detail: str


@dataclass(frozen=True)
class ChainLemmaReport:
    k: int
    graphs_checked: int
    chains_checked: int
    counterexamples: tuple[Counterexample, ...]

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def chain_statistics(graph: CanonicalGraph, length: int) -> tuple[int, int]:
    """``(l, t)`` for the chain made of the first ``length`` edges.

    ``t`` counts T2 edges in the chain; ``l`` counts innovations in the chain
    that are single within it and touch the vertex where the chain ends.
    """
    edges = graph.edges()[:length]
    labels = classify_edges(graph)[:length]
    end = edges[-1].head
    counts = Counter(e.key for e in edges)
    t = sum(lab is EdgeLabel.T2 for lab in labels)
    side, label = end
    l = 0
    for e, lab in zip(edges, labels):
        if not lab.is_innovation or counts[e.key] != 1:
            continue
        if (side == "I" and e.i == label) or (side == "J" and e.j == label):
            l += 1
    return l, t


def verify_chain_lemmas(k: int, limit: int = VERIFY_LIMIT) -> ChainLemmaReport:
    """Exhaustively check ``l <= t + 1`` on every chain and ``#regular T3 <= 2 #T2``.

    Chains are the edge prefixes of the walk: ``i1 j1 ... i_tau j_tau`` for
    ``tau = 1..k`` and ``i1 j1 ... i_tau`` for ``tau = 2..k+1``, the last one
    being the closed walk (``i_{k+1} = i1``). The edgeless chain ``i1`` is
    skipped.
    """
    if k > limit:
        raise GuardExceeded(f"k={k} exceeds the verification guard {limit}")
    bad: list[Counterexample] = []
    graphs = enumerate_canonical(k)
    chains = 0
    for graph in graphs:
        for length in range(1, 2 * k + 1):
            chains += 1
            l, t = chain_statistics(graph, length)
            if l > t + 1:
                bad.append(Counterexample(graph, "chain", f"length={length} l={l} t={t}"))
        counts = label_counts(classify_edges(graph))
        if counts["T3-regular"] > 2 * counts["T2"]:
            bad.append(Counterexample(
                graph, "regular-T3",
                f"regular T3={counts['T3-regular']} T2={counts['T2']}"))
    return ChainLemmaReport(k, len(graphs), chains, tuple(bad))


def is_leading(graph: CanonicalGraph) -> bool:
    """Every edge coincides with exactly one other and ``r + s = k``."""
    mult = graph.multiplicities()
    return all(m == 2 for m in mult.values()) and graph.r + graph.s == graph.k


def leading_moment_counts(k: int, limit: int = ENUMERATE_LIMIT) -> dict[int, int]:
    """Number of leading-order canonical graphs, indexed by ``s``."""
    counts: dict[int, int] = {s: 0 for s in range(1, k + 1)}
    for graph in enumerate_canonical(k, limit):
        if is_leading(graph):
            counts[graph.s] += 1
    return counts
