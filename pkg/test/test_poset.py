import pytest

from src.internal.errors import BoundExceeded, NotADownSet, NotConvex, NotJoinIrreducible, ValidationError
from src.internal.poset import (ConvexRelation, ConvexSet, Poset, adjacent_quadruple, adjacent_triple,
                                convex_relation, convex_sets, down_set_masks, down_sets,
                                immediate_predecessor, join_irreducible_decomposition)


@pytest.fixture
def v():
    return Poset(["a", "b", "c"], [("a", "c"), ("b", "c")])


def test_transitive_closure():
    """Relations are closed transitively."""
    poset = Poset(["x", "y", "z"], [("x", "y"), ("y", "z")])
    assert poset.leq("x", "z")
    assert not poset.leq("z", "x")
    assert poset.leq("y", "y")


def test_cycle_rejected():
    """A relation cycle breaks antisymmetry."""
    with pytest.raises(ValidationError) as e:
        Poset(["x", "y"], [("x", "y"), ("y", "x")])
    assert e.value.invariant == "antisymmetric"


def test_duplicate_label_rejected():
    with pytest.raises(ValidationError):
        Poset(["x", "x"])


def test_down_sets_of_chain_and_antichain():
    """A 2-chain has 3 down-sets and a 2-antichain has 4, each listed once by size."""
    chain = Poset(["p", "q"], [("p", "q")])
    assert [d.labels() for d in down_sets(chain)] == [[], ["p"], ["p", "q"]]
    anti = Poset(["a", "b"])
    assert [d.labels() for d in down_sets(anti)] == [[], ["a"], ["b"], ["a", "b"]]


def test_down_sets_of_v(v):
    """{a,b,c} with a,b < c: ∅, {a}, {b}, {a,b}, {a,b,c}."""
    masks = down_set_masks(v)
    assert len(masks) == 5
    assert all(v.is_down_set(m) for m in masks)
    assert v.mask_of(["c"]) not in masks


def test_down_set_bound():
    poset = Poset([f"e{i}" for i in range(5)])
    with pytest.raises(BoundExceeded):
        down_set_masks(poset, max_elements=4)
    assert len(down_set_masks(poset, max_elements=5)) == 32


def test_convex_sets(v):
    """Convex sets are the differences β∖α of nested down-sets."""
    labels = [c.labels() for c in convex_sets(v)]
    assert [] in labels
    assert ["a", "c"] in labels
    assert ["c"] in labels
    chain = Poset(["p", "q", "r"], [("p", "q"), ("q", "r")])
    assert ["p", "r"] not in [c.labels() for c in convex_sets(chain)]
    assert not chain.is_convex(chain.mask_of(["p", "r"]))


def test_join_irreducible_decomposition(v):
    top = v.top()
    parts = join_irreducible_decomposition(top)
    assert [p.labels() for p in parts] == [["a", "b", "c"]]
    ab = v.down_set(["a", "b"])
    assert sorted(p.labels() for p in join_irreducible_decomposition(ab)) == [["a"], ["b"]]
    assert join_irreducible_decomposition(v.empty()) == []


def test_immediate_predecessor(v):
    assert immediate_predecessor(v.principal("c")).labels() == ["a", "b"]
    assert immediate_predecessor(v.principal("a")).labels() == []
    with pytest.raises(NotJoinIrreducible):
        immediate_predecessor(v.down_set(["a", "b"]))


def test_down_set_validation(v):
    with pytest.raises(NotADownSet):
        v.down_set(["c"])
    with pytest.raises(NotConvex):
        Poset(["p", "q", "r"], [("p", "q"), ("q", "r")]).convex_set(["p", "r"])


def test_convex_relation():
    """Adjacent, incomparable and neither, on the 3-chain and the antichain."""
    chain = Poset(["p", "q", "r"], [("p", "q"), ("q", "r")])
    p, q, r = (ConvexSet(chain, chain.mask_of([x])) for x in "pqr")
    assert convex_relation(p, q) is ConvexRelation.ADJACENT
    assert convex_relation(q, p) is ConvexRelation.NEITHER
    assert convex_relation(p, r) is ConvexRelation.NEITHER
    anti = Poset(["a", "b"])
    a, b = (ConvexSet(anti, anti.mask_of([x])) for x in "ab")
    assert convex_relation(a, b) is ConvexRelation.INCOMPARABLE


def test_adjacent_triple_and_quadruple():
    chain = Poset(["p", "q", "r"], [("p", "q"), ("q", "r")])
    p, q, r = (ConvexSet(chain, chain.mask_of([x])) for x in "pqr")
    alpha, beta, gamma = adjacent_triple(q, r)
    assert (alpha.labels(), beta.labels(), gamma.labels()) == (["p"], ["p", "q"], ["p", "q", "r"])
    quad = adjacent_quadruple(p, q, r)
    assert [d.labels() for d in quad] == [[], ["p"], ["p", "q"], ["p", "q", "r"]]
    assert adjacent_triple(r, q) is None


def test_linear_extension_respects_order(v):
    order = v.linear_extension()
    position = {i: k for k, i in enumerate(order)}
    for i in range(len(v)):
        for j in range(len(v)):
            if v.lt_index(i, j):
                assert position[i] < position[j]


def test_subposet(v):
    sub = v.subposet(v.mask_of(["a", "c"]))
    assert sub.elements == ("a", "c")
    assert sub.leq("a", "c")
