"""Per-concept two-window storage with class-aware allocation and kNN prediction.

A WindowStore is owned by a single engine loop; hierarchy snapshots passed to
predict() are immutable.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .hierarchy import ConceptHierarchy, LabelVector, closure
from .kernels import ExamplePoint


class WindowError(ValueError):
    """Raised on invalid window operations."""


@dataclass
class Example:
    """Full stream example: features, hierarchy-consistent label vector, iteration."""

    x: tuple[float, ...]
    y: LabelVector
    t: int
    example_id: int = -1

    @staticmethod
    def make(x, y: LabelVector, t: int, example_id: int | None = None) -> "Example":
        xs = tuple(float(v) for v in np.asarray(x).ravel())
        return Example(xs, dict(y), t, t if example_id is None else example_id)


@dataclass(frozen=True)
class ClassifierConfig:
    k: int = 3

    def __post_init__(self):
        if self.k < 1:
            raise WindowError(f"k must be >= 1, got {self.k}")


class WindowPair:
    """Past and current windows for one concept.

    Each window holds at most ``capacity`` points, with at most
    ceil(neg_fraction * capacity) negatives and capacity - floor(neg_fraction
    * capacity) positives; eviction is oldest-first within the class of the
    incoming point.
    """

    def __init__(self, concept: str, capacity: int, neg_fraction: float = 2 / 3,
                 class_aware: bool = True):
        if capacity < 1:
            raise WindowError(f"window capacity must be >= 1, got {capacity}")
        self.concept = concept
        self.base_capacity = capacity
        self.capacity = capacity
        self.neg_fraction = neg_fraction
        self.class_aware = class_aware
        self.w_old: list[ExamplePoint] = []
        self.w_cur: list[ExamplePoint] = []

    @property
    def neg_cap(self) -> int:
        if not self.class_aware:
            return self.capacity
        return math.ceil(self.neg_fraction * self.capacity)

    @property
    def pos_cap(self) -> int:
        if not self.class_aware:
            return self.capacity
        return self.capacity - math.floor(self.neg_fraction * self.capacity)

    def _cap(self, y: int) -> int:
        return self.pos_cap if y == 1 else self.neg_cap

    def _push(self, window: list[ExamplePoint], p: ExamplePoint):
        window.append(p)
        if sum(1 for q in window if q.y == p.y) > self._cap(p.y):
            idx = next(i for i, q in enumerate(window) if q.y == p.y)
            del window[idx]
        elif len(window) > self.capacity:
            del window[0]

    def push_cur(self, p: ExamplePoint):
        self._push(self.w_cur, p)

    def push_old(self, p: ExamplePoint):
        self._push(self.w_old, p)

    def swap_to_past(self):
        self.w_old = self.w_cur
        self.w_cur = []

    def enforce_caps(self):
        """Re-apply allocation bounds after a capacity change (oldest evicted first)."""
        for window in (self.w_old, self.w_cur):
            for y in (0, 1):
                excess = sum(1 for q in window if q.y == y) - self._cap(y)
                while excess > 0:
                    idx = next(i for i, q in enumerate(window) if q.y == y)
                    del window[idx]
                    excess -= 1
            while len(window) > self.capacity:
                del window[0]


class WindowStore:
    """Mapping concept -> WindowPair plus a small joint-label buffer used by
    automated disambiguation."""

    def __init__(self, concepts, capacity: int, neg_fraction: float = 2 / 3,
                 class_aware: bool = True, recent_size: int = 70):
        self.capacity = capacity
        self.neg_fraction = neg_fraction
        self.class_aware = class_aware
        self.pairs: dict[str, WindowPair] = {
            c: WindowPair(c, capacity, neg_fraction, class_aware) for c in concepts
        }
        self.recent: deque[Example] = deque(maxlen=recent_size)

    def track(self, concept: str):
        """Start maintaining windows for a newly appeared concept."""
        if concept not in self.pairs:
            self.pairs[concept] = WindowPair(
                concept, self.capacity, self.neg_fraction, self.class_aware)

    def drop(self, concept: str):
        if concept not in self.pairs:
            raise WindowError(f"no windows for concept {concept!r}")
        del self.pairs[concept]

    def _restrict(self, z: Example, concept: str) -> ExamplePoint:
        return ExamplePoint(z.x, int(z.y.get(concept, 0)), z.t, z.example_id)

    def push(self, z: Example):
        """Append the per-concept restriction of z to every current window."""
        self.recent.append(z)
        for c, pair in self.pairs.items():
            pair.push_cur(self._restrict(z, c))

    def push_old(self, z: Example):
        for c, pair in self.pairs.items():
            pair.push_old(self._restrict(z, c))

    def swap_to_past(self, concept: str):
        if concept not in self.pairs:
            raise WindowError(f"unknown concept {concept!r}")
        self.pairs[concept].swap_to_past()

    # -- prediction -----------------------------------------------------------

    def _vote_window(self, concept: str) -> list[ExamplePoint]:
        pair = self.pairs[concept]
        return pair.w_cur if pair.w_cur else pair.w_old

    def predict_batch(self, X, h: ConceptHierarchy, cfg: ClassifierConfig) -> list[LabelVector]:
        """kNN majority vote per concept over current windows, then closure.

        Distance ties break by recency (newer wins); vote ties default to
        negative; concepts with an empty current window vote from the past
        window; the root is always positive.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        votes: dict[str, np.ndarray] = {}
        any_window = False
        for c, pair in self.pairs.items():
            window = self._vote_window(c)
            if not window:
                votes[c] = np.zeros(X.shape[0], dtype=int)
                continue
            any_window = True
            W = np.asarray([p.x for p in window], dtype=float)
            if W.shape[1] != X.shape[1]:
                raise WindowError(f"feature dimension mismatch: {W.shape[1]} vs {X.shape[1]}")
            ys = np.asarray([p.y for p in window], dtype=int)
            ts = np.asarray([p.t for p in window], dtype=int)
            d2 = cdist(X, W, "sqeuclidean")
            kk = min(cfg.k, len(window))
            out = np.zeros(X.shape[0], dtype=int)
            for i in range(X.shape[0]):
                order = np.lexsort((-ts, d2[i]))[:kk]
                out[i] = 1 if 2 * int(ys[order].sum()) > kk else 0
            votes[c] = out
        if not any_window and self.pairs:
            raise WindowError("all windows empty; cannot predict")
        results = []
        for i in range(X.shape[0]):
            raw = {c: int(votes[c][i]) for c in self.pairs}
            raw[h.root] = 1
            results.append(closure(raw, h))
        return results

    def predict(self, x, h: ConceptHierarchy, cfg: ClassifierConfig) -> LabelVector:
        return self.predict_batch([x], h, cfg)[0]


def init_windows(S1: list[Example], h: ConceptHierarchy, w: int,
                 neg_fraction: float = 2 / 3, class_aware: bool = True,
                 recent_size: int = 70) -> WindowStore:
    """Fill past windows from the most recent min(w, |S1|) initial examples."""
    if not S1:
        raise WindowError("initial dataset is empty")
    concepts = sorted(h.concepts - {h.root})
    store = WindowStore(concepts, w, neg_fraction, class_aware, recent_size)
    for z in S1[-w:]:
        store.push_old(z)
    for z in S1[-recent_size:]:
        store.recent.append(z)
    return store
