"""Edits to hierarchy plus windows: the four adaptation rules, batch ordering,
and atomic failure."""
import pytest

from kdstream import (
    AdaptationError,
    ConceptHierarchy,
    Example,
    ExamplePoint,
    KdEdit,
    WindowStore,
    adapt,
    forget_adapt,
    is_isomorphic,
)


def fixture():
    h = ConceptHierarchy(
        frozenset({"root", "p", "a", "b"}),
        frozenset({("p", "root"), ("a", "p"), ("b", "root")}),
        "root",
    )
    store = WindowStore(["p", "a", "b"], capacity=6)
    for t in range(6):
        y = {"p": t % 2, "a": t % 2, "b": 1 - t % 2, "root": 1}
        z = Example.make((float(t), 0.0), y, t)
        store.push_old(z)
        store.push(Example.make((float(t), 1.0), y, t + 100))
    return h, store


class TestConceptDrift:
    def test_swap(self):
        h, store = fixture()
        cur_before = list(store.pairs["a"].w_cur)
        h2, report = adapt(store, h, [KdEdit.drift("a")])
        assert store.pairs["a"].w_old == cur_before
        assert store.pairs["a"].w_cur == []
        assert is_isomorphic(h, h2)
        assert report.hierarchy_version == 1

    def test_forget_equals_single_drift_edit(self):
        h1, s1 = fixture()
        _, s2 = fixture()
        adapt(s1, h1, [KdEdit.drift("a")])
        forget_adapt(s2, {"a"})
        assert s1.pairs["a"].w_old == s2.pairs["a"].w_old
        assert s1.pairs["a"].w_cur == s2.pairs["a"].w_cur


class TestConceptRemoval:
    def test_windows_deleted_and_children_reattached(self):
        h, store = fixture()
        h2, report = adapt(store, h, [KdEdit.removal("p")])
        assert "p" not in store.pairs
        assert "p" not in h2.concepts
        assert h2.parents("a") == {"root"}
        assert report.window_changes["p"][1] == 0


class TestRelationAddition:
    def test_positives_copied_and_capacity_doubled(self):
        h, store = fixture()
        pos_b_before = sum(1 for p in store.pairs["b"].w_cur if p.y == 1)
        a_pos_ids = {p.example_id for p in store.pairs["a"].w_cur if p.y == 1}
        h2, report = adapt(store, h, [KdEdit.relation_add("a", "b")])
        assert ("a", "b") in h2.edges
        assert store.pairs["b"].capacity == 12
        got_ids = {p.example_id for p in store.pairs["b"].w_cur if p.origin == "a"}
        assert got_ids == a_pos_ids
        assert sum(1 for p in store.pairs["b"].w_cur if p.y == 1) >= pos_b_before

    def test_copies_are_positive_and_tagged(self):
        h, store = fixture()
        adapt(store, h, [KdEdit.relation_add("a", "b")])
        for p in store.pairs["b"].w_cur + store.pairs["b"].w_old:
            if p.origin == "a":
                assert p.y == 1

    def test_copy_replaces_stale_entry_with_same_identity(self):
        # b's window holds the same stream example as a negative; the copy
        # must replace it, not sit next to it
        h, store = fixture()
        before = {p.example_id for p in store.pairs["b"].w_cur}
        adapt(store, h, [KdEdit.relation_add("a", "b")])
        ids = [p.example_id for p in store.pairs["b"].w_cur]
        assert len(ids) == len(set(ids))
        assert set(ids) == before  # same identities, some relabeled


class TestRelationRemoval:
    def test_round_trip_restores_capacity_and_drops_copies(self):
        h, store = fixture()
        h2, _ = adapt(store, h, [KdEdit.relation_add("a", "b")])
        h3, _ = adapt(store, h2, [KdEdit.relation_remove("a", "b")])
        assert store.pairs["b"].capacity == 6
        assert all(p.origin != "a" for p in store.pairs["b"].w_cur)
        assert all(p.origin != "a" for p in store.pairs["b"].w_old)
        assert ("a", "b") not in h3.edges

    def test_grandparent_link_created(self):
        h, store = fixture()
        h2, _ = adapt(store, h, [KdEdit.relation_remove("a", "p")])
        assert ("a", "root") in h2.edges

    def test_native_positives_matching_child_identities_removed(self):
        h, store = fixture()
        a_pos = {p.example_id for w in (store.pairs["a"].w_cur, store.pairs["a"].w_old)
                 for p in w if p.y == 1}
        adapt(store, h, [KdEdit.relation_remove("a", "p")])
        for p in store.pairs["p"].w_cur + store.pairs["p"].w_old:
            if p.y == 1:
                assert p.example_id not in a_pos

    def test_capacity_never_drops_below_base(self):
        h, store = fixture()
        h2, _ = adapt(store, h, [KdEdit.relation_remove("a", "p")])
        assert store.pairs["p"].capacity == 6


class TestBatchSemantics:
    def test_empty_batch_is_identity(self):
        h, store = fixture()
        snapshot = {c: (list(p.w_old), list(p.w_cur)) for c, p in store.pairs.items()}
        h2, report = adapt(store, h, [])
        assert h2 == h
        assert report.applied == []
        for c, (old, cur) in snapshot.items():
            assert store.pairs[c].w_old == old and store.pairs[c].w_cur == cur

    def test_structural_edits_apply_before_drift_swaps(self):
        h, store = fixture()
        _, report = adapt(store, h, [KdEdit.drift("b"), KdEdit.relation_add("a", "b")])
        kinds = [e.kind for e in report.applied]
        assert kinds == ["relation_addition", "concept_drift"]

    def test_concept_removal_applies_last(self):
        h, store = fixture()
        _, report = adapt(store, h, [KdEdit.removal("a"), KdEdit.drift("b")])
        assert [e.kind for e in report.applied] == ["concept_drift", "concept_removal"]

    def test_invalid_edit_aborts_whole_batch(self):
        h, store = fixture()
        snapshot = {c: (list(p.w_old), list(p.w_cur), p.capacity)
                    for c, p in store.pairs.items()}
        with pytest.raises(AdaptationError):
            # second edit forms a cycle, so even the valid first edit must not land
            adapt(store, h, [KdEdit.drift("a"), KdEdit.relation_add("root", "a")])
        for c, (old, cur, cap) in snapshot.items():
            pair = store.pairs[c]
            assert pair.w_old == old and pair.w_cur == cur and pair.capacity == cap

    def test_version_increments(self):
        h, store = fixture()
        h2, r1 = adapt(store, h, [KdEdit.drift("a")], version=4)
        assert r1.hierarchy_version == 5

    def test_window_keys_track_concept_set(self):
        h, store = fixture()
        h2, _ = adapt(store, h, [KdEdit.removal("b")])
        assert set(store.pairs) == h2.concepts - {"root"}


def test_forget_ignores_unknown_concepts():
    _, store = fixture()
    forget_adapt(store, {"a", "ghost"})
    assert store.pairs["a"].w_cur == []


def test_report_json_shape():
    h, store = fixture()
    _, report = adapt(store, h, [KdEdit.relation_add("a", "b")])
    payload = report.to_json()
    assert set(payload) == {"applied", "window_changes", "hierarchy_version"}
    assert payload["applied"][0]["kind"] == "relation_addition"
