import numpy as np
import pytest

from kdstream import (
    ClassifierConfig,
    ConceptHierarchy,
    Example,
    ExamplePoint,
    WindowError,
    WindowPair,
    WindowStore,
    init_windows,
    is_consistent,
)


def tiny_hierarchy():
    return ConceptHierarchy(
        frozenset({"root", "p", "a", "b"}),
        frozenset({("p", "root"), ("a", "p"), ("b", "root")}),
        "root",
    )


def ep(x, y, t):
    return ExamplePoint.make(x, y, t)


class TestAllocation:
    def test_caps_for_w_200(self):
        pair = WindowPair("c", capacity=200)
        assert pair.neg_cap == 134   # ceil(2/3 * 200)
        assert pair.pos_cap == 67    # 200 - floor(2/3 * 200)

    def test_caps_for_odd_capacity(self):
        pair = WindowPair("c", capacity=10)
        assert pair.neg_cap == 7
        assert pair.pos_cap == 4

    def test_class_blind_window_has_no_split(self):
        pair = WindowPair("c", capacity=10, class_aware=False)
        assert pair.neg_cap == 10
        assert pair.pos_cap == 10

    def test_zero_capacity_rejected(self):
        with pytest.raises(WindowError):
            WindowPair("c", capacity=0)


class TestEviction:
    def test_oldest_of_same_class_evicted_first(self):
        pair = WindowPair("c", capacity=3)  # neg_cap 2, pos_cap 1
        pair.push_cur(ep((0.0,), 0, 0))
        pair.push_cur(ep((1.0,), 0, 1))
        pair.push_cur(ep((2.0,), 0, 2))  # third negative: t=0 must go
        assert [p.t for p in pair.w_cur] == [1, 2]

    def test_positive_overflow_does_not_touch_negatives(self):
        pair = WindowPair("c", capacity=3)
        pair.push_cur(ep((0.0,), 0, 0))
        pair.push_cur(ep((1.0,), 1, 1))
        pair.push_cur(ep((2.0,), 1, 2))  # pos_cap is 1: t=1 evicted
        assert [(p.t, p.y) for p in pair.w_cur] == [(0, 0), (2, 1)]

    def test_class_blind_eviction_is_fifo(self):
        pair = WindowPair("c", capacity=2, class_aware=False)
        for t in range(4):
            pair.push_cur(ep((float(t),), t % 2, t))
        assert [p.t for p in pair.w_cur] == [2, 3]

    def test_swap_moves_current_to_past(self):
        pair = WindowPair("c", capacity=4)
        pair.push_cur(ep((0.0,), 0, 0))
        pair.swap_to_past()
        assert [p.t for p in pair.w_old] == [0]
        assert pair.w_cur == []

    def test_double_swap_leaves_both_empty(self):
        pair = WindowPair("c", capacity=4)
        pair.push_cur(ep((0.0,), 0, 0))
        pair.swap_to_past()
        pair.swap_to_past()
        assert pair.w_old == [] and pair.w_cur == []

    def test_enforce_caps_after_shrink(self):
        pair = WindowPair("c", capacity=9)  # neg_cap 6
        for t in range(6):
            pair.push_cur(ep((float(t),), 0, t))
        pair.capacity = 3  # neg_cap becomes 2
        pair.enforce_caps()
        assert [p.t for p in pair.w_cur] == [4, 5]


class TestStore:
    def test_push_restricts_per_concept(self):
        h = tiny_hierarchy()
        store = WindowStore(["p", "a", "b"], capacity=10)
        store.push(Example.make((1.0, 0.0), {"p": 1, "a": 1, "b": 0, "root": 1}, 0))
        assert store.pairs["a"].w_cur[0].y == 1
        assert store.pairs["b"].w_cur[0].y == 0

    def test_track_and_drop(self):
        store = WindowStore(["a"], capacity=5)
        store.track("z")
        assert "z" in store.pairs
        store.drop("z")
        with pytest.raises(WindowError):
            store.drop("z")

    def test_init_windows_fills_old_only(self):
        h = tiny_hierarchy()
        rng = np.random.default_rng(0)
        S1 = [Example.make((float(rng.integers(3)),),
                           {"p": 1, "a": 0, "b": 0, "root": 1}, t) for t in range(12)]
        store = init_windows(S1, h, w=8)
        for pair in store.pairs.values():
            assert pair.w_cur == []
            assert len(pair.w_old) > 0

    def test_init_windows_empty_s1_is_error(self):
        with pytest.raises(WindowError):
            init_windows([], tiny_hierarchy(), w=8)


def brute_force_vote(window, x, k):
    """Full sort by (distance, -t), majority among first k, ties negative."""
    scored = sorted(window, key=lambda p: (sum((a - b) ** 2 for a, b in zip(p.x, x)), -p.t))
    top = scored[: min(k, len(window))]
    pos = sum(p.y for p in top)
    return 1 if 2 * pos > len(top) else 0


class TestPrediction:
    def _single_concept_store(self, window):
        h = ConceptHierarchy(frozenset({"root", "c"}), frozenset({("c", "root")}), "root")
        store = WindowStore(["c"], capacity=100)
        store.pairs["c"].w_cur = list(window)
        return h, store

    def test_matches_full_sort_oracle_on_200_random_queries(self):
        rng = np.random.default_rng(9)
        for trial in range(200):
            n = int(rng.integers(1, 50))
            d = int(rng.integers(1, 4))
            k = int(rng.choice([1, 3, 5, 11]))
            window = [ExamplePoint.make(tuple(rng.integers(0, 3, size=d).astype(float)),
                                        int(rng.integers(2)), t) for t in range(n)]
            h, store = self._single_concept_store(window)
            x = tuple(rng.integers(0, 3, size=d).astype(float))
            got = store.predict(x, h, ClassifierConfig(k))["c"]
            assert got == brute_force_vote(window, x, k), f"trial {trial}"

    def test_distance_tie_broken_by_recency(self):
        # two equidistant points with opposite labels; the newer one wins
        window = [ep((1.0,), 0, 0), ep((-1.0,), 1, 1)]
        h, store = self._single_concept_store(window)
        assert store.predict((0.0,), h, ClassifierConfig(1))["c"] == 1

    def test_vote_tie_defaults_negative(self):
        window = [ep((0.0,), 1, 0), ep((0.0,), 0, 1)]
        h, store = self._single_concept_store(window)
        # k=3 but only 2 points: one vote each -> tie -> 0
        assert store.predict((0.0,), h, ClassifierConfig(3))["c"] == 0

    def test_empty_current_window_votes_from_past(self):
        h = ConceptHierarchy(frozenset({"root", "c"}), frozenset({("c", "root")}), "root")
        store = WindowStore(["c"], capacity=10)
        store.pairs["c"].w_old = [ep((0.0,), 1, 0)]
        assert store.predict((0.0,), h, ClassifierConfig(1))["c"] == 1

    def test_all_windows_empty_is_error(self):
        h = ConceptHierarchy(frozenset({"root", "c"}), frozenset({("c", "root")}), "root")
        store = WindowStore(["c"], capacity=10)
        with pytest.raises(WindowError):
            store.predict((0.0,), h, ClassifierConfig(1))

    def test_root_always_positive_and_closure_applied(self):
        h = tiny_hierarchy()
        store = WindowStore(["p", "a", "b"], capacity=10)
        # concept 'a' predicts positive; its parent 'p' window says negative
        store.pairs["a"].w_cur = [ep((0.0,), 1, 0)]
        store.pairs["p"].w_cur = [ep((0.0,), 0, 0)]
        store.pairs["b"].w_cur = [ep((0.0,), 0, 0)]
        out = store.predict((0.0,), h, ClassifierConfig(1))
        assert out["root"] == 1
        assert out["a"] == 1 and out["p"] == 1    # closure lifts the parent
        assert is_consistent(out, h)

    def test_dimension_mismatch_is_error(self):
        window = [ep((0.0, 1.0), 1, 0)]
        h, store = self._single_concept_store(window)
        with pytest.raises(WindowError):
            store.predict((0.0,), h, ClassifierConfig(1))


def test_predictions_hierarchy_consistent_on_random_streams():
    # 1000 random stream steps, every emitted prediction obeys the hierarchy
    rng = np.random.default_rng(21)
    h = tiny_hierarchy()
    store = WindowStore(sorted(h.concepts - {"root"}), capacity=20)
    cfg = ClassifierConfig(3)
    for t in range(1000):
        x = tuple(rng.integers(0, 2, size=3).astype(float))
        a = int(rng.integers(2))
        y = {"a": a, "p": max(a, int(rng.integers(2))), "b": int(rng.integers(2)), "root": 1}
        store.push(Example.make(x, y, t))
        if t > 5:
            pred = store.predict(tuple(rng.integers(0, 2, size=3).astype(float)), h, cfg)
            assert is_consistent(pred, h)
