"""Synthetic hierarchical streams with scripted knowledge drift, plus ingestion
of pre-embedded datasets.

The ground truth owns the true hierarchy, the labeling rules, and the event
log the oracle consults. Stream generation is a pure function of
(config, seed, t).
"""
from __future__ import annotations

import copy
import csv
import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .disambiguation import (CONCEPT_ADDITION, CONCEPT_DRIFT, CONCEPT_REMOVAL,
                             RELATION_ADDITION, RELATION_REMOVAL, KdEdit)
from .hierarchy import ConceptHierarchy, closure, is_consistent
from .windows import Example

log = logging.getLogger(__name__)

ATTRIBUTES = ("size", "color", "shape")
ATTRIBUTE_VALUES = (
    ("small", "medium", "large", "huge"),
    ("green", "red", "blue", "yellow"),
    ("circle", "square", "triangle", "star"),
)

# A rule is a DNF formula: disjunction of conjunctions of (attribute, value) atoms.
Atom = tuple[int, int]
Conjunction = tuple[Atom, ...]
Formula = tuple[Conjunction, ...]


class StreamError(ValueError):
    pass


def eval_formula(formula: Formula, instance: tuple[int, ...]) -> bool:
    return any(all(instance[a] == v for a, v in conj) for conj in formula)


def format_formula(formula: Formula) -> str:
    parts = [" and ".join(f"{ATTRIBUTE_VALUES[a][v]}" for a, v in conj) for conj in formula]
    return " or ".join(f"({p})" if len(parts) > 1 else p for p in parts)


@dataclass(frozen=True)
class HstaggerConfig:
    n_attributes: int = 3
    values_per_attribute: int = 4
    n_leaf_concepts: int = 5
    seed: int = 0
    pos_ratio_band: tuple[float, float] = (0.25, 0.75)
    max_attempts: int = 10_000


@dataclass
class KdEvent:
    """Ground-truth atomic drift record; new_rule carries the resampled
    formula for concept-drift events and the labeling rule for additions."""

    iteration: int
    edit: KdEdit
    new_rule: Formula | None = None
    parents: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"iteration": self.iteration, "edit": self.edit.to_json()}


@dataclass
class DriftSchedule:
    events: list[KdEvent] = field(default_factory=list)

    def at(self, t: int) -> list[KdEvent]:
        return [ev for ev in self.events if ev.iteration == t]


class GroundTruth:
    """Mutable true state of the world: hierarchy, labeling rules, event log."""

    def __init__(self, hierarchy: ConceptHierarchy, leaf_rules: dict[str, Formula],
                 instance_space: list[tuple[int, ...]],
                 dataset: "Dataset | None" = None):
        self.hierarchy = hierarchy
        self.leaf_rules = dict(leaf_rules)
        self.instance_space = instance_space
        self.dataset = dataset
        self.event_log: list[KdEvent] = []
        self.values_per_attribute = (
            1 + max(v for inst in instance_space for v in inst) if instance_space else 0)

    # -- labeling -------------------------------------------------------------

    def label_of(self, idx: int) -> dict[str, int]:
        """Closure-consistent label vector for instance index under the
        current hierarchy."""
        if self.dataset is not None:
            raw = {c: v for c, v in self.dataset.labels[idx].items()
                   if c in self.hierarchy.concepts}
        else:
            x = self.instance_space[idx]
            raw = {c: int(eval_formula(rule, x))
                   for c, rule in self.leaf_rules.items()
                   if c in self.hierarchy.concepts}
        raw[self.hierarchy.root] = 1
        return closure(raw, self.hierarchy)

    def features_of(self, idx: int) -> np.ndarray:
        if self.dataset is not None:
            return self.dataset.features[idx]
        return one_hot(self.instance_space[idx], self.values_per_attribute)

    def n_instances(self) -> int:
        if self.dataset is not None:
            return len(self.dataset.features)
        return len(self.instance_space)

    def sample_index(self, t: int, seed: int) -> int:
        rng = np.random.default_rng([seed, t + 2**20])
        return int(rng.integers(self.n_instances()))

    def apply_event(self, ev: KdEvent):
        kind = ev.edit.kind
        if kind == CONCEPT_DRIFT:
            if ev.new_rule is None:
                raise StreamError("concept-drift event carries no resampled rule")
            self.leaf_rules[ev.edit.concept] = ev.new_rule
        elif kind == RELATION_ADDITION:
            self.hierarchy = self.hierarchy.add_relation(ev.edit.child, ev.edit.parent)
        elif kind == RELATION_REMOVAL:
            self.hierarchy = self.hierarchy.remove_relation(ev.edit.child, ev.edit.parent)
        elif kind == CONCEPT_REMOVAL:
            self.hierarchy = self.hierarchy.remove_concept(ev.edit.concept)
            self.leaf_rules.pop(ev.edit.concept, None)
        elif kind == CONCEPT_ADDITION:
            self.hierarchy = self.hierarchy.add_concept(ev.edit.concept, set(ev.parents))
            if ev.new_rule is not None:
                self.leaf_rules[ev.edit.concept] = ev.new_rule
        else:
            raise StreamError(f"unsupported event kind {kind!r}")
        self.event_log.append(ev)

    def clone(self) -> "GroundTruth":
        g = GroundTruth(self.hierarchy, copy.deepcopy(self.leaf_rules),
                        self.instance_space, self.dataset)
        return g


def one_hot(instance: tuple[int, ...], values_per_attribute: int = 4) -> np.ndarray:
    out = np.zeros(len(instance) * values_per_attribute)
    for a, v in enumerate(instance):
        out[a * values_per_attribute + v] = 1.0
    return out


def _sample_formula(rng: np.random.Generator, cfg: HstaggerConfig,
                    space: list[tuple[int, ...]]) -> Formula:
    """One rejection attempt: disjunction of <=2 conjunctions of <=2 atoms."""
    n_conj = int(rng.integers(1, 3))
    conjs = []
    for _ in range(n_conj):
        n_atoms = int(rng.integers(1, 3))
        attrs = rng.choice(cfg.n_attributes, size=n_atoms, replace=False)
        conjs.append(tuple(sorted((int(a), int(rng.integers(cfg.values_per_attribute)))
                                  for a in attrs)))
    return tuple(dict.fromkeys(conjs))


def sample_rule(rng: np.random.Generator, cfg: HstaggerConfig,
                space: list[tuple[int, ...]], exclude: Formula | None = None) -> Formula:
    """Rejection-sample a formula whose positive rate lies in the configured
    band and whose positive set differs from ``exclude``."""
    lo, hi = cfg.pos_ratio_band
    excl_set = None
    if exclude is not None:
        excl_set = frozenset(x for x in space if eval_formula(exclude, x))
    for _ in range(cfg.max_attempts):
        f = _sample_formula(rng, cfg, space)
        pos = frozenset(x for x in space if eval_formula(f, x))
        rate = len(pos) / len(space)
        if lo <= rate <= hi and (excl_set is None or pos != excl_set):
            return f
    raise StreamError(f"could not sample a rule with positive rate in [{lo}, {hi}]")


def hstagger_generate(cfg: HstaggerConfig) -> GroundTruth:
    """Build the synthetic ground truth: root, one parent concept spanning the
    first two rule-labeled leaves, remaining leaves under root.

    The parent concept has no rule of its own; its labels are the union of
    its children's memberships via closure.
    """
    import itertools

    rng = np.random.default_rng(cfg.seed)
    space = [tuple(t) for t in
             itertools.product(range(cfg.values_per_attribute), repeat=cfg.n_attributes)]
    leaves = [f"c{i + 1}" for i in range(cfg.n_leaf_concepts)]
    rules = {leaf: sample_rule(rng, cfg, space) for leaf in leaves}
    parent = "p1"
    concepts = frozenset(["root", parent, *leaves])
    edges = {(parent, "root")}
    edges.update((leaf, parent) for leaf in leaves[:2])
    edges.update((leaf, "root") for leaf in leaves[2:])
    names = {leaf: format_formula(rules[leaf]) for leaf in leaves}
    names[parent] = f"{leaves[0]} or {leaves[1]}"
    h = ConceptHierarchy(concepts, frozenset(edges), "root", names)
    return GroundTruth(h, rules, space)


# -- schedules -----------------------------------------------------------------


def _label_signature(gt: GroundTruth) -> tuple:
    return tuple(tuple(sorted(gt.label_of(i).items())) for i in range(gt.n_instances()))


def _changed_count(probe: GroundTruth, gt: GroundTruth) -> int:
    return sum(1 for i in range(gt.n_instances())
               if probe.label_of(i) != gt.label_of(i))


def _resolve_target(gt: GroundTruth, kind: str, args: dict, rng: np.random.Generator,
                    cfg: HstaggerConfig) -> KdEvent:
    h = gt.hierarchy
    non_root = sorted(h.concepts - {h.root})
    if kind == CONCEPT_DRIFT:
        concept = args.get("concept")
        if concept is None:
            ruled = sorted(c for c in gt.leaf_rules if c in h.concepts)
            if not ruled:
                raise StreamError("no rule-labeled concept left for concept drift")
            concept = ruled[int(rng.integers(len(ruled)))]
        new_rule = args.get("rule")
        if new_rule is None:
            new_rule = sample_rule(rng, cfg, gt.instance_space,
                                   exclude=gt.leaf_rules.get(concept))
        return KdEvent(0, KdEdit.drift(concept), new_rule=tuple(map(tuple, new_rule)))
    if kind == CONCEPT_REMOVAL:
        concept = args.get("concept")
        if concept is None:
            concept = non_root[int(rng.integers(len(non_root)))]
        return KdEvent(0, KdEdit.removal(concept))
    if kind == RELATION_ADDITION:
        if "child" in args:
            return KdEvent(0, KdEdit.relation_add(args["child"], args["parent"]))
        candidates = []
        for child in non_root:
            for parent in non_root:
                if child == parent or (child, parent) in h.edges:
                    continue
                try:
                    trial = h.add_relation(child, parent)
                except Exception:
                    continue
                candidates.append((child, parent, trial))
        if not candidates:
            raise StreamError("no feasible relation addition")
        # prefer additions that actually change emitted labels
        changing = []
        for child, parent, trial in candidates:
            probe = gt.clone()
            probe.hierarchy = trial
            if _changed_count(probe, gt) > 0:
                changing.append((child, parent))
        pool = changing or [(c, p) for c, p, _ in candidates]
        child, parent = pool[int(rng.integers(len(pool)))]
        return KdEvent(0, KdEdit.relation_add(child, parent))
    if kind == RELATION_REMOVAL:
        if "child" in args:
            return KdEvent(0, KdEdit.relation_remove(args["child"], args["parent"]))
        candidates = [(c, p) for c, p in sorted(h.edges) if p != h.root]
        if not candidates:
            raise StreamError("no removable relation (all edges attach to root)")
        changing = []
        for child, parent in candidates:
            probe = gt.clone()
            probe.hierarchy = h.remove_relation(child, parent)
            if _changed_count(probe, gt) > 0:
                changing.append((child, parent))
        pool = changing or candidates
        child, parent = pool[int(rng.integers(len(pool)))]
        return KdEvent(0, KdEdit.relation_remove(child, parent))
    if kind == CONCEPT_ADDITION:
        concept = args.get("concept", f"c{len(h.concepts)}")
        parents = tuple(args.get("parents", [h.root]))
        rule = args.get("rule") or sample_rule(rng, cfg, gt.instance_space)
        return KdEvent(0, KdEdit(CONCEPT_ADDITION, concept=concept),
                       new_rule=tuple(map(tuple, rule)), parents=parents)
    raise StreamError(f"unknown drift kind {kind!r}")


def build_schedule(gt: GroundTruth, spec: list[dict], seed: int,
                   cfg: HstaggerConfig | None = None) -> DriftSchedule:
    """Resolve a schedule spec (random or explicit targets) into concrete
    events against a simulated copy of the ground truth.

    Spec entries look like {"t": 100, "kind": "relation_addition", "args": {...}}.
    Iterations must be non-decreasing; infeasible targets raise at build time.
    """
    cfg = cfg or HstaggerConfig()
    rng = np.random.default_rng([seed, 987])
    probe = gt.clone()
    events: list[KdEvent] = []
    last_t = -1
    for entry in sorted(spec, key=lambda e: e["t"]):
        t = int(entry["t"])
        if t < last_t:
            raise StreamError("schedule iterations must be non-decreasing")
        last_t = t
        ev = _resolve_target(probe, entry["kind"], entry.get("args", {}), rng, cfg)
        ev.iteration = t
        probe.apply_event(ev)
        events.append(copy.deepcopy(ev))
    return DriftSchedule(events)


def apply_schedule(gt: GroundTruth, sched: DriftSchedule, t: int) -> list[KdEvent]:
    """Apply (and log) every scheduled event at iteration t, in list order."""
    applied = []
    for ev in sched.at(t):
        gt.apply_event(ev)
        applied.append(ev)
    return applied


def next_example(gt: GroundTruth, t: int, seed: int) -> Example:
    """Uniform random instance labeled under the current ground truth."""
    idx = gt.sample_index(t, seed)
    return Example.make(gt.features_of(idx), gt.label_of(idx), t)


def schedule_to_json(sched: DriftSchedule) -> list[dict]:
    return [ev.to_json() for ev in sched.events]


# -- dataset ingestion ----------------------------------------------------------


@dataclass
class Dataset:
    features: np.ndarray            # (n, d)
    labels: list[dict[str, int]]    # raw per-row label vectors


def load_dataset(path: str | Path, hierarchy_path: str | Path | None = None,
                 repair: bool = True):
    """Load a pre-embedded CSV stream (header f0..f{d-1},y_<conceptid>,...)
    with its sidecar hierarchy JSON.

    Rows whose labels violate the hierarchy are repaired via closure when
    ``repair`` is set; the repair count is returned alongside the examples.
    """
    path = Path(path)
    if hierarchy_path is None:
        hierarchy_path = path.with_suffix(".hierarchy.json")
    if not path.exists():
        raise StreamError(f"dataset file not found: {path}")
    try:
        with open(hierarchy_path) as fh:
            h = ConceptHierarchy.from_json(json.load(fh))
    except FileNotFoundError:
        raise StreamError(f"hierarchy file not found: {hierarchy_path}") from None
    examples: list[Example] = []
    repaired = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise StreamError(f"{path}: empty file") from None
        feat_cols = [i for i, name in enumerate(header) if name.startswith("f")]
        label_cols = {name[2:]: i for i, name in enumerate(header) if name.startswith("y_")}
        if not feat_cols or not label_cols:
            raise StreamError(f"{path}: header must contain f* and y_* columns")
        unknown = set(label_cols) - h.concepts
        if unknown:
            raise StreamError(f"{path}: label columns for unknown concepts {sorted(unknown)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise StreamError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                x = [float(row[i]) for i in feat_cols]
                y = {c: int(row[i]) for c, i in label_cols.items()}
            except ValueError as exc:
                raise StreamError(f"{path}:{lineno}: {exc}") from None
            if not is_consistent(y, h):
                if not repair:
                    raise StreamError(f"{path}:{lineno}: labels violate hierarchy")
                y = closure(y, h)
                repaired += 1
            examples.append(Example.make(x, y, t=lineno - 2))
    if not examples:
        raise StreamError(f"{path}: no data rows")
    if repaired:
        log.warning("%s: repaired %d inconsistent label rows via closure", path, repaired)
    return examples, h, repaired


def save_dataset(examples: list[Example], h: ConceptHierarchy, path: str | Path):
    path = Path(path)
    concepts = sorted(h.concepts)
    d = len(examples[0].x)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(d)] + [f"y_{c}" for c in concepts])
        for z in examples:
            writer.writerow([f"{v:g}" for v in z.x] + [z.y.get(c, 0) for c in concepts])
    with open(path.with_suffix(".hierarchy.json"), "w") as fh:
        json.dump(h.to_json(), fh, indent=2)
