"""Drift descriptions and the three answer channels: oracle, likelihood-ratio
test, and merged human corrections."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .detector import DetectionResult
from .hierarchy import ConceptHierarchy, HierarchyError
from .kernels import ExamplePoint, KernelConfig, witness_examples
from .windows import Example, WindowStore

log = logging.getLogger(__name__)

CONCEPT_DRIFT = "concept_drift"
CONCEPT_REMOVAL = "concept_removal"
CONCEPT_ADDITION = "concept_addition"
RELATION_ADDITION = "relation_addition"
RELATION_REMOVAL = "relation_removal"


class DisambiguationError(ValueError):
    pass


@dataclass(frozen=True)
class KdEdit:
    """Atomic knowledge-drift edit exchanged between machine and user."""

    kind: str
    concept: str | None = None
    child: str | None = None
    parent: str | None = None

    def touches(self) -> set[str]:
        return {c for c in (self.concept, self.child, self.parent) if c is not None}

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.concept is not None:
            out["concept"] = self.concept
        if self.child is not None:
            out["child"] = self.child
            out["parent"] = self.parent
        return out

    @staticmethod
    def from_json(payload: dict) -> "KdEdit":
        return KdEdit(payload["kind"], payload.get("concept"),
                      payload.get("child"), payload.get("parent"))

    @staticmethod
    def drift(c: str) -> "KdEdit":
        return KdEdit(CONCEPT_DRIFT, concept=c)

    @staticmethod
    def removal(c: str) -> "KdEdit":
        return KdEdit(CONCEPT_REMOVAL, concept=c)

    @staticmethod
    def relation_add(child: str, parent: str) -> "KdEdit":
        return KdEdit(RELATION_ADDITION, child=child, parent=parent)

    @staticmethod
    def relation_remove(child: str, parent: str) -> "KdEdit":
        return KdEdit(RELATION_REMOVAL, child=child, parent=parent)

    def sort_key(self):
        return (self.kind, self.concept or "", self.child or "", self.parent or "")


@dataclass
class DriftDescription:
    """Unit of machine-to-user exchange: what looks drifted and why."""

    flagged: set[str]
    proposed_edits: list[KdEdit]
    witnesses: dict[str, tuple[list[ExamplePoint], list[ExamplePoint]]]
    iteration: int
    scores: dict[str, float] = field(default_factory=dict)

    def to_json(self, max_features: int = 16) -> dict:
        def point(p: ExamplePoint) -> dict:
            return {"x": list(p.x[:max_features]), "y": p.y, "t": p.t, "example_id": p.example_id}

        return {
            "iteration": self.iteration,
            "flagged": sorted(self.flagged),
            "proposed_edits": [e.to_json() for e in self.proposed_edits],
            "scores": {c: self.scores.get(c, 0.0) for c in sorted(self.flagged)},
            "witnesses": {
                c: {"old": [point(p) for p in old], "new": [point(p) for p in cur]}
                for c, (old, cur) in self.witnesses.items()
            },
        }


def build_description(det: DetectionResult, store: WindowStore, kcfg: KernelConfig,
                      m_witness: int, iteration: int = 0) -> DriftDescription:
    """Describe a detection: one concept-drift proposal per flagged concept,
    plus witness picks from each concept's windows."""
    if not det.flagged:
        raise DisambiguationError("no flagged concepts to describe")
    if m_witness < 1:
        raise DisambiguationError(f"m_witness must be >= 1, got {m_witness}")
    witnesses = {}
    for c in sorted(det.flagged):
        pair = store.pairs[c]
        top_old, top_cur = witness_examples(pair.w_old, pair.w_cur, kcfg, m_witness)
        witnesses[c] = (top_old, top_cur)
    proposals = [KdEdit.drift(c) for c in sorted(det.flagged)]
    return DriftDescription(set(det.flagged), proposals, witnesses, iteration,
                            dict(det.scores))


class OracleUser:
    """Simulated supervisor answering from the ground-truth event log.

    Each event is returned at most once across a run; concept-addition events
    have no machine-side edit and are skipped.
    """

    def __init__(self, event_log):
        self.event_log = event_log  # live list owned by the ground truth
        self._applied: set[int] = set()

    def pending(self, iteration: int) -> list:
        return [ev for idx, ev in enumerate(self.event_log)
                if idx not in self._applied and ev.iteration <= iteration]

    def answer(self, desc: DriftDescription) -> list[KdEdit]:
        return self.answer_at(desc.iteration)

    def answer_at(self, iteration: int) -> list[KdEdit]:
        edits = []
        for idx, ev in enumerate(self.event_log):
            if idx in self._applied or ev.iteration > iteration:
                continue
            self._applied.add(idx)
            if ev.edit.kind == CONCEPT_ADDITION:
                continue
            edits.append(ev.edit)
        return edits


@dataclass(frozen=True)
class LlrConfig:
    """Likelihood-ratio test for is-a relations among recent joint labels.

    beta = inf is realized as an exact zero-violation test; finite beta uses
    Laplace-smoothed conditional frequencies.
    """

    beta: float = math.inf

    def __post_init__(self):
        if not self.beta > 1:
            raise ValueError(f"beta must be > 1, got {self.beta}")


def _relation_evidence(recent: list[Example], j: str, i: str) -> tuple[int, int, int, int]:
    n11 = n10 = ni1 = ni0 = 0
    for z in recent:
        yj, yi = z.y.get(j, 0), z.y.get(i, 0)
        if yi == 1:
            ni1 += 1
        else:
            ni0 += 1
        if yj == 1 and yi == 1:
            n11 += 1
        if yj == 1 and yi == 0:
            n10 += 1
    return n11, n10, ni1, ni0


def _implies(n11: int, n10: int, ni1: int, ni0: int, beta: float) -> bool:
    if math.isinf(beta):
        return n10 == 0 and n11 > 0
    # Laplace-smoothed P(y^j=1 | y^i=1) / P(y^j=1 | y^i=0)
    ratio = ((n11 + 1) / (ni1 + 2)) / ((n10 + 1) / (ni0 + 2))
    return n11 > 0 and ratio >= beta


def llr_disambiguate(desc: DriftDescription, store: WindowStore, h: ConceptHierarchy,
                     cfg: LlrConfig = LlrConfig()) -> list[KdEdit]:
    """Automated disambiguation over pairs with at least one flagged member.

    Emits relation additions/removals supported by the recent joint labels;
    flagged concepts with no relation edit fall back to concept drift.
    Additions that would break acyclicity are skipped.
    """
    recent = list(store.recent)
    concepts = sorted(h.concepts - {h.root})
    edits: list[KdEdit] = []
    trial = h
    covered: set[str] = set()
    for j in concepts:
        for i in concepts:
            if i == j or (j not in desc.flagged and i not in desc.flagged):
                continue
            n11, n10, ni1, ni0 = _relation_evidence(recent, j, i)
            if (j, i) not in trial.edges:
                if recent and _implies(n11, n10, ni1, ni0, cfg.beta):
                    try:
                        trial = trial.add_relation(j, i)
                    except HierarchyError as exc:
                        log.info("llr skipping relation %s is-a %s: %s", j, i, exc)
                        continue
                    edits.append(KdEdit.relation_add(j, i))
                    covered.update({j, i})
            else:
                if n10 > 0:
                    trial = trial.remove_relation(j, i)
                    edits.append(KdEdit.relation_remove(j, i))
                    covered.update({j, i})
    for c in sorted(desc.flagged):
        if c not in covered:
            edits.append(KdEdit.drift(c))
    return edits


def merge_user_edits(desc: DriftDescription, user_edits: list[KdEdit],
                     deselected: set[str], h: ConceptHierarchy) -> list[KdEdit]:
    """Combine machine proposals with user corrections.

    Machine proposals touching a deselected concept, or any concept a user
    edit touches, are dropped; the result is deduplicated and user edits are
    emitted in canonical order so merging is order-independent.
    """
    for e in user_edits:
        unknown = e.touches() - h.concepts
        if unknown:
            raise DisambiguationError(f"edit references unknown concepts: {sorted(unknown)}")
    user_touched = set().union(*(e.touches() for e in user_edits)) if user_edits else set()
    kept = [e for e in desc.proposed_edits
            if not (e.touches() & deselected) and not (e.touches() & user_touched)]
    final: list[KdEdit] = []
    for e in kept + sorted(set(user_edits), key=KdEdit.sort_key):
        if e not in final:
            final.append(e)
    return final
