"""Concept DAG with is-a semantics, label consistency, and atomic edits.

A hierarchy is an immutable snapshot: every mutating operation returns a new
instance, so live copies can be shared read-only between threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field

LabelVector = dict[str, int]


class HierarchyError(ValueError):
    """Raised on invalid hierarchy structure or operations."""


@dataclass(frozen=True)
class ConceptHierarchy:
    """DAG of concepts connected by is-a edges (child, parent)."""

    concepts: frozenset[str]
    edges: frozenset[tuple[str, str]]
    root: str
    names: dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.root not in self.concepts:
            raise HierarchyError(f"root {self.root!r} not among concepts")
        for child, parent in self.edges:
            if child == parent:
                raise HierarchyError(f"self-edge on {child!r}")
            if child not in self.concepts or parent not in self.concepts:
                raise HierarchyError(f"edge ({child!r}, {parent!r}) references unknown concept")
        self._check_acyclic()
        for c in self.concepts:
            if c != self.root and self.root not in self._reachable_up(c):
                raise HierarchyError(f"concept {c!r} has no ancestor path to root")

    # -- structure helpers ---------------------------------------------------

    def parents(self, c: str) -> set[str]:
        self._require(c)
        return {p for ch, p in self.edges if ch == c}

    def children(self, c: str) -> set[str]:
        self._require(c)
        return {ch for ch, p in self.edges if p == c}

    def ancestors(self, c: str) -> set[str]:
        """Transitive closure along is-a edges, excluding c itself."""
        self._require(c)
        return self._reachable_up(c)

    def descendants(self, c: str) -> set[str]:
        self._require(c)
        out: set[str] = set()
        frontier = [c]
        while frontier:
            node = frontier.pop()
            for ch, p in self.edges:
                if p == node and ch not in out:
                    out.add(ch)
                    frontier.append(ch)
        return out

    def _reachable_up(self, c: str) -> set[str]:
        out: set[str] = set()
        frontier = [c]
        while frontier:
            node = frontier.pop()
            for ch, p in self.edges:
                if ch == node and p not in out:
                    out.add(p)
                    frontier.append(p)
        return out

    def _check_acyclic(self):
        # Kahn's algorithm over child -> parent direction.
        indeg = {c: 0 for c in self.concepts}
        for child, _parent in self.edges:
            indeg[child] = indeg[child]  # keep key
        out_edges: dict[str, list[str]] = {c: [] for c in self.concepts}
        for child, parent in self.edges:
            out_edges[child].append(parent)
            indeg[parent] += 1
        queue = [c for c, d in indeg.items() if d == 0]
        seen = 0
        while queue:
            node = queue.pop()
            seen += 1
            for nxt in out_edges[node]:
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    queue.append(nxt)
        if seen != len(self.concepts):
            raise HierarchyError("edge set contains a directed cycle")

    def _require(self, c: str):
        if c not in self.concepts:
            raise HierarchyError(f"unknown concept {c!r}")

    # -- atomic edits --------------------------------------------------------

    def add_relation(self, child: str, parent: str) -> "ConceptHierarchy":
        """Add is-a edge; duplicates and cycle-forming edges are errors."""
        self._require(child)
        self._require(parent)
        if (child, parent) in self.edges:
            raise HierarchyError(f"edge ({child!r}, {parent!r}) already present")
        if child == parent or parent in self.descendants(child) or child in self.ancestors(parent):
            raise HierarchyError(f"edge ({child!r}, {parent!r}) would create a cycle")
        return ConceptHierarchy(self.concepts, self.edges | {(child, parent)}, self.root, self.names)

    def remove_relation(self, child: str, parent: str) -> "ConceptHierarchy":
        """Remove is-a edge and link the child to each grand-parent (deduplicated)."""
        if (child, parent) not in self.edges:
            raise HierarchyError(f"edge ({child!r}, {parent!r}) not present")
        edges = set(self.edges)
        edges.discard((child, parent))
        for grand in self.parents(parent):
            if grand != child and (child, grand) not in edges:
                edges.add((child, grand))
        return ConceptHierarchy(self.concepts, frozenset(edges), self.root, self.names)

    def remove_concept(self, c: str) -> "ConceptHierarchy":
        """Drop a concept; each orphaned child is attached to every former parent."""
        self._require(c)
        if c == self.root:
            raise HierarchyError("cannot remove the root concept")
        old_parents = self.parents(c)
        old_children = self.children(c)
        edges = {(ch, p) for ch, p in self.edges if ch != c and p != c}
        for ch in old_children:
            for p in old_parents:
                if ch != p:
                    edges.add((ch, p))
        names = {k: v for k, v in self.names.items() if k != c}
        return ConceptHierarchy(self.concepts - {c}, frozenset(edges), self.root, names)

    def add_concept(self, c: str, parents: set[str], name: str | None = None) -> "ConceptHierarchy":
        if c in self.concepts:
            raise HierarchyError(f"concept {c!r} already present")
        parents = set(parents) or {self.root}
        for p in parents:
            self._require(p)
        edges = self.edges | {(c, p) for p in parents}
        names = dict(self.names)
        if name is not None:
            names[c] = name
        return ConceptHierarchy(self.concepts | {c}, edges, self.root, names)

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "concepts": [{"id": c, "name": self.names.get(c, c)} for c in sorted(self.concepts)],
            "edges": sorted([list(e) for e in self.edges]),
            "root": self.root,
        }

    @staticmethod
    def from_json(payload: dict) -> "ConceptHierarchy":
        concepts = frozenset(c["id"] for c in payload["concepts"])
        names = {c["id"]: c.get("name", c["id"]) for c in payload["concepts"]}
        edges = frozenset((child, parent) for child, parent in payload["edges"])
        return ConceptHierarchy(concepts, edges, payload["root"], names)


def _check_domain(labels: LabelVector, h: ConceptHierarchy):
    unknown = set(labels) - h.concepts
    if unknown:
        raise HierarchyError(f"label vector keyed on unknown concepts: {sorted(unknown)}")


def is_consistent(labels: LabelVector, h: ConceptHierarchy) -> bool:
    """True iff every positive label propagates to all parents."""
    _check_domain(labels, h)
    for child, parent in h.edges:
        if labels.get(child, 0) == 1 and labels.get(parent, 0) != 1:
            return False
    return True


def closure(labels: LabelVector, h: ConceptHierarchy) -> LabelVector:
    """Minimal upward propagation of positives making the vector consistent."""
    _check_domain(labels, h)
    out = {c: int(labels.get(c, 0)) for c in h.concepts}
    frontier = [c for c, v in out.items() if v == 1]
    while frontier:
        node = frontier.pop()
        for parent in h.parents(node):
            if out[parent] != 1:
                out[parent] = 1
                frontier.append(parent)
    return out


def is_isomorphic(a: ConceptHierarchy, b: ConceptHierarchy) -> bool:
    """Graph equality on (concepts, edges, root); names are ignored."""
    return a.concepts == b.concepts and a.edges == b.edges and a.root == b.root
