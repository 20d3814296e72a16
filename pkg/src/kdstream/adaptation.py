"""Knowledge-aware application of drift edits to the hierarchy and windows."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .disambiguation import (CONCEPT_DRIFT, CONCEPT_REMOVAL, RELATION_ADDITION,
                             RELATION_REMOVAL, KdEdit)
from .hierarchy import ConceptHierarchy, HierarchyError
from .kernels import ExamplePoint
from .windows import WindowStore

log = logging.getLogger(__name__)


class AdaptationError(ValueError):
    """A batch of edits could not be applied; the store was left untouched."""


@dataclass
class AdaptationReport:
    applied: list[KdEdit] = field(default_factory=list)
    window_changes: dict[str, tuple[int, int, int]] = field(default_factory=dict)
    hierarchy_version: int = 0

    def to_json(self) -> dict:
        return {
            "applied": [e.to_json() for e in self.applied],
            "window_changes": {c: list(v) for c, v in self.window_changes.items()},
            "hierarchy_version": self.hierarchy_version,
        }


_ORDER = {RELATION_ADDITION: 0, RELATION_REMOVAL: 0, CONCEPT_DRIFT: 1, CONCEPT_REMOVAL: 2}


def _ordered(edits: list[KdEdit]) -> list[KdEdit]:
    # Structural edits first, drift swaps next, concept removals last; stable
    # within each group so multi-edit oracle answers stay deterministic.
    return sorted(edits, key=lambda e: _ORDER[e.kind])


def _apply_to_hierarchy(h: ConceptHierarchy, edit: KdEdit) -> ConceptHierarchy:
    if edit.kind == RELATION_ADDITION:
        return h.add_relation(edit.child, edit.parent)
    if edit.kind == RELATION_REMOVAL:
        return h.remove_relation(edit.child, edit.parent)
    if edit.kind == CONCEPT_REMOVAL:
        return h.remove_concept(edit.concept)
    if edit.kind == CONCEPT_DRIFT:
        if edit.concept not in h.concepts:
            raise HierarchyError(f"unknown concept {edit.concept!r}")
        return h
    raise AdaptationError(f"unsupported edit kind {edit.kind!r}")


def _merge_sorted(window: list[ExamplePoint], incoming: list[ExamplePoint]):
    """Insert copies preserving arrival order; same-identity entries are replaced."""
    ids = {p.example_id for p in incoming}
    kept = [p for p in window if p.example_id not in ids]
    merged = sorted(kept + incoming, key=lambda p: p.t)
    window[:] = merged


def adapt(store: WindowStore, h: ConceptHierarchy, edits: list[KdEdit],
          version: int = 0) -> tuple[ConceptHierarchy, AdaptationReport]:
    """Apply a batch of disambiguated edits.

    Per kind: concept drift swaps the concept's current window into the past;
    concept removal deletes its windows and reattaches children; relation
    addition copies the child's positives into the parent's windows and
    doubles the parent's capacity; relation removal deletes the positives
    that came from the child and halves the capacity (floored at the base
    size). The whole batch is validated first and aborts atomically on error.
    """
    ordered = _ordered(edits)
    trial = h
    for edit in ordered:
        try:
            trial = _apply_to_hierarchy(trial, edit)
        except HierarchyError as exc:
            raise AdaptationError(f"edit {edit.to_json()} invalid: {exc}") from exc

    report = AdaptationReport(hierarchy_version=version + 1)
    sizes_before = {c: len(p.w_old) + len(p.w_cur) for c, p in store.pairs.items()}
    caps_before = {c: p.capacity for c, p in store.pairs.items()}

    for edit in ordered:
        h = _apply_to_hierarchy(h, edit)
        if edit.kind == CONCEPT_DRIFT:
            if edit.concept in store.pairs:
                store.swap_to_past(edit.concept)
        elif edit.kind == CONCEPT_REMOVAL:
            if edit.concept in store.pairs:
                store.drop(edit.concept)
        elif edit.kind == RELATION_ADDITION:
            if edit.child not in store.pairs or edit.parent not in store.pairs:
                log.info("no windows for %s/%s; relation addition applied to hierarchy only",
                         edit.child, edit.parent)
                report.applied.append(edit)
                continue
            child, parent = store.pairs[edit.child], store.pairs[edit.parent]
            parent.capacity *= 2
            for src, dst in ((child.w_old, parent.w_old), (child.w_cur, parent.w_cur)):
                copies = [ExamplePoint(p.x, 1, p.t, p.example_id, origin=edit.child)
                          for p in src if p.y == 1]
                _merge_sorted(dst, copies)
            parent.enforce_caps()
        elif edit.kind == RELATION_REMOVAL:
            if edit.child not in store.pairs or edit.parent not in store.pairs:
                log.info("no windows for %s/%s; relation removal applied to hierarchy only",
                         edit.child, edit.parent)
                report.applied.append(edit)
                continue
            child, parent = store.pairs[edit.child], store.pairs[edit.parent]
            child_pos = {p.example_id for w in (child.w_old, child.w_cur)
                         for p in w if p.y == 1}
            for window in (parent.w_old, parent.w_cur):
                window[:] = [p for p in window
                             if not (p.y == 1 and (p.origin == edit.child
                                                   or p.example_id in child_pos))]
            parent.capacity = max(parent.base_capacity, parent.capacity // 2)
            parent.enforce_caps()
        report.applied.append(edit)

    for c, pair in store.pairs.items():
        after = len(pair.w_old) + len(pair.w_cur)
        if after != sizes_before.get(c) or pair.capacity != caps_before.get(c):
            report.window_changes[c] = (sizes_before.get(c, 0), after,
                                        pair.capacity - caps_before.get(c, pair.capacity))
    for c in sizes_before:
        if c not in store.pairs:
            report.window_changes[c] = (sizes_before[c], 0, -caps_before[c])
    return h, report


def forget_adapt(store: WindowStore, flagged: set[str]) -> None:
    """Adaptation-by-forgetting baseline: swap every flagged concept's window."""
    for c in sorted(flagged):
        if c in store.pairs:
            store.swap_to_past(c)
