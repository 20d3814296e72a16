"""Property-based checks for the structural core.

Random hierarchies and random edit sequences; invariants must hold for every
reachable state, not just the handful of fixtures in the unit tests.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdstream import (
    ConceptHierarchy,
    ExamplePoint,
    HierarchyError,
    WindowPair,
    closure,
    is_consistent,
)


def random_hierarchy(rng, n_concepts=6):
    """Random DAG where every concept reaches the root."""
    ids = ["root"] + [f"c{i}" for i in range(n_concepts - 1)]
    edges = set()
    for i, c in enumerate(ids[1:], start=1):
        # at least one parent among earlier concepts keeps it acyclic and rooted
        parent = ids[int(rng.integers(i))]
        edges.add((c, parent))
        if rng.random() < 0.3:
            extra = ids[int(rng.integers(i))]
            if extra != c:
                edges.add((c, extra))
    return ConceptHierarchy(frozenset(ids), frozenset(edges), "root")


@given(st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_closure_idempotent_on_random_vectors(seed):
    rng = np.random.default_rng(seed)
    h = random_hierarchy(rng)
    labels = {c: int(rng.integers(2)) for c in h.concepts}
    once = closure(labels, h)
    assert closure(once, h) == once
    assert is_consistent(once, h)


@given(st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_closure_never_clears_a_positive(seed):
    rng = np.random.default_rng(seed)
    h = random_hierarchy(rng)
    labels = {c: int(rng.integers(2)) for c in h.concepts}
    out = closure(labels, h)
    for c, v in labels.items():
        if v == 1:
            assert out[c] == 1


def apply_random_edit(h, rng):
    ids = sorted(h.concepts)
    op = rng.integers(4)
    try:
        if op == 0 and len(ids) > 2:
            child, parent = rng.choice(ids, size=2, replace=False)
            return h.add_relation(str(child), str(parent))
        if op == 1 and h.edges:
            child, parent = sorted(h.edges)[int(rng.integers(len(h.edges)))]
            return h.remove_relation(child, parent)
        if op == 2 and len(ids) > 2:
            victim = str(rng.choice([c for c in ids if c != h.root]))
            return h.remove_concept(victim)
        new_id = f"n{int(rng.integers(1_000_000))}"
        parent = str(rng.choice(ids))
        return h.add_concept(new_id, {parent})
    except HierarchyError:
        return h  # rejected edits leave the hierarchy unchanged


def test_random_edit_sequences_preserve_dag_invariants():
    # the constructor re-validates on every edit, so surviving 10k edits
    # means acyclicity and root reachability held throughout
    rng = np.random.default_rng(7)
    h = random_hierarchy(rng)
    for _ in range(10_000):
        h = apply_random_edit(h, rng)
        assert h.root == "root"
    assert h.root in h.concepts


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_window_capacity_bounds_under_fuzzed_pushes(seed):
    rng = np.random.default_rng(seed)
    cap = int(rng.integers(3, 40))
    pair = WindowPair("c", capacity=cap)
    for t in range(200):
        z = ExamplePoint.make((float(rng.integers(4)),), int(rng.integers(2)), t)
        if rng.random() < 0.5:
            pair.push_cur(z)
        else:
            pair.push_old(z)
        if rng.random() < 0.02:
            pair.swap_to_past()
        assert len(pair.w_cur) <= cap
        assert len(pair.w_old) <= cap
        for window in (pair.w_cur, pair.w_old):
            pos = sum(1 for e in window if e.y == 1)
            assert pos <= pair.pos_cap
            assert len(window) - pos <= pair.neg_cap
