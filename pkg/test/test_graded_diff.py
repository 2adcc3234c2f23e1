import pytest

from src.internal.errors import NotInvertible, ValidationError
from src.internal.exact_linalg import INTEGERS, RATIONALS, ExactMatrix, block_diagonal
from src.internal.graded_diff import (ChainHomotopy, ClassCondition, FilteredChainMap, GradedDifferentialGroup,
                                      complete_chain_map, compose, conjugate, diagonal_blocks, filtration_subgroup,
                                      identity_map, inverse_map, restrict, subgroup_filtration_check, validate,
                                      validate_map, verify_homotopy, zero_homotopy)
from src.internal.poset import ConvexSet, Poset


def _m(rows, ring=INTEGERS):
    return ExactMatrix.from_rows(rows, ring)


def test_running_examples_validate(running_examples):
    for c in running_examples:
        report = validate(c)
        assert report.ok, report.failures
        assert report.d_squared_zero and report.filtered


def test_chain2_layout(chain2):
    assert chain2.size == 2
    assert chain2.grade_of() == [0, 1]
    assert chain2.block("p", "q") == _m([[2]])
    assert [(p, q) for p, q, _ in chain2.nonzero_blocks()] == [(0, 1)]
    assert chain2.is_strict()


def test_wrong_direction_is_not_filtered(chain2):
    """A block q<-p on p < q points down the filtration."""
    bad = GradedDifferentialGroup.from_blocks(chain2.poset, INTEGERS, {"p": 1, "q": 1}, {("q", "p"): [[1]]})
    report = validate(bad)
    assert not report.filtered
    assert report.failures == ("filtered",)
    assert report.offending_blocks == (("q", "p"),)


def test_d_squared_nonzero():
    poset = Poset(["p", "q", "r"], [("p", "q"), ("q", "r")])
    c = GradedDifferentialGroup.from_blocks(poset, RATIONALS, {"p": 1, "q": 1, "r": 1},
                                            {("p", "q"): [[1]], ("q", "r"): [[1]]})
    report = validate(c)
    assert not report.d_squared_zero
    assert "d∘d = 0" in report.failures


def test_strict_flag_checked():
    poset = Poset(["p"])
    c = GradedDifferentialGroup.from_blocks(poset, RATIONALS, {"p": 2}, {("p", "p"): [[0, 1], [0, 0]]}, strict=True)
    assert validate(c).failures == ("strict",)
    assert not c.is_strict()


def test_degree_consistency(v_poset):
    assert validate(v_poset).degree_consistent is True
    shifted = GradedDifferentialGroup.from_blocks(v_poset.poset, v_poset.coefficients, {"a": 1, "b": 1, "c": 1},
                                                  {("a", "c"): [[1]]}, degrees={"a": [0], "b": [0], "c": [2]})
    report = validate(shifted)
    assert report.degree_consistent is False
    assert "degree -1" in report.failures


def test_restrict_and_filtration(chain2):
    top = restrict(chain2, ConvexSet(chain2.poset, chain2.poset.mask_of(["q"])))
    assert top.size == 1
    assert top.differential.is_zero()
    assert top.rank(0) == 0
    assert filtration_subgroup(chain2, chain2.poset.down_set(["p"])) == [0]
    assert restrict(chain2, ConvexSet(chain2.poset, chain2.poset.full_mask)) is chain2


def test_validate_map_modes(chain2):
    ident = identity_map(chain2)
    assert validate_map(ident, "Equality").ok
    doubled = FilteredChainMap(chain2, chain2, _m([[2, 0], [0, 2]]))
    report = validate_map(doubled, "Equality")
    assert report.chain and report.filtered
    assert report.equality is False
    assert validate_map(doubled, "Preserving").ok
    not_chain = FilteredChainMap(chain2, chain2, _m([[1, 0], [0, 2]]))
    assert "chain condition" in validate_map(not_chain).failures
    with pytest.raises(ValidationError):
        validate_map(ident, "Sideways")


def test_subgroup_filtration_proper_image():
    """Multiplication by 2 sends F = 2Z onto 4Z: preserving but not equal."""
    f = _m([[2]])
    report = subgroup_filtration_check(f, {"α": _m([[2]])}, {"α": _m([[2]])})
    assert report.preserving
    assert not report.equality
    assert subgroup_filtration_check(_m([[1]]), {"α": _m([[2]])}, {"α": _m([[2]])}).equality


def test_conjugate(chain2):
    def by(rows):
        return FilteredChainMap(chain2, chain2, _m(rows))

    flipped = conjugate(chain2, by([[-1, 0], [0, 1]]))
    assert flipped.differential == _m([[0, -2], [0, 0]])
    with pytest.raises(ValidationError):
        conjugate(chain2, by([[1, 0], [1, 1]]))
    with pytest.raises(NotInvertible):
        conjugate(chain2, by([[2, 0], [0, 1]]))


def test_equality_allows_onto_diagonal_of_other_shape():
    """f = [1 0] from Z^2 onto Z on one element: F_α C maps onto F_α A."""
    poset = Poset(["p"])
    c = GradedDifferentialGroup.from_blocks(poset, INTEGERS, {"p": 2}, {})
    a = GradedDifferentialGroup.from_blocks(poset, INTEGERS, {"p": 1}, {})
    f = FilteredChainMap(c, a, _m([[1, 0]]))
    report = validate_map(f, "Equality")
    assert report.equality is True
    assert report.ok
    assert subgroup_filtration_check(f.matrix, {"p": ExactMatrix.identity(2, INTEGERS)},
                                     {"p": ExactMatrix.identity(1, INTEGERS)}).equality
    not_onto = FilteredChainMap(c, a, _m([[2, 4]]))
    assert validate_map(not_onto, "Equality").failures == ("equality at p",)
    into = FilteredChainMap(a, c, _m([[1], [0]]))
    assert validate_map(into, "Equality").equality is False


def test_compose_and_inverse(chain2):
    f = FilteredChainMap(chain2, chain2, _m([[1, 3], [0, 1]]))
    g = inverse_map(f)
    assert compose(g, f).matrix == ExactMatrix.identity(2, INTEGERS)
    assert diagonal_blocks(f)[1] == _m([[1]])


def test_verify_homotopy_on_acyclic_pair():
    """id ≃ 0 on e2 -> e1 via h e1 = e2."""
    c = GradedDifferentialGroup.from_blocks(Poset(["p"]), RATIONALS, {"p": 2}, {("p", "p"): [[0, 1], [0, 0]]})
    zero = FilteredChainMap(c, c, ExactMatrix.zeros(2, 2, RATIONALS))
    h = ChainHomotopy(c, c, _m([[0, 0], [1, 0]], RATIONALS))
    assert verify_homotopy(identity_map(c), zero, h)
    assert not verify_homotopy(identity_map(c), zero, zero_homotopy(c))


def test_complete_chain_map(chain2):
    f = complete_chain_map(chain2, chain2, {0: _m([[1]]), 1: _m([[1]])})
    assert f is not None and f.is_chain_map()
    assert complete_chain_map(chain2, chain2, {0: _m([[1]]), 1: _m([[-1]])}) is None


def test_complete_chain_map_with_classes():
    """With d = 0 the free entry f^{pq} is zero unless a class condition asks for e_q -> e_q + 5 e_p."""
    poset = Poset(["p", "q"], [("p", "q")])
    c = GradedDifferentialGroup.from_blocks(poset, INTEGERS, {"p": 1, "q": 1}, {})
    diagonal = {0: _m([[1]]), 1: _m([[1]])}
    assert complete_chain_map(c, c, diagonal).matrix == ExactMatrix.identity(2, INTEGERS)
    shear = ClassCondition(poset.full_mask, ExactMatrix.identity(2, INTEGERS), _m([[1, 5], [0, 1]]))
    assert complete_chain_map(c, c, diagonal, [shear]).matrix == _m([[1, 5], [0, 1]])
    wrong = ClassCondition(poset.full_mask, ExactMatrix.identity(2, INTEGERS), _m([[2, 0], [0, 1]]))
    assert complete_chain_map(c, c, diagonal, [wrong]) is None


def test_complete_chain_map_classes_modulo_boundaries(chain2):
    """H = Z/2 on chain2: e_p and 3 e_p are the same class, so either target is met."""
    cycles = _m([[1], [0]])
    diagonal = {0: _m([[1]]), 1: _m([[1]])}
    for target in ([[1], [0]], [[3], [0]]):
        f = complete_chain_map(chain2, chain2, diagonal, [ClassCondition(3, cycles, _m(target))])
        assert f is not None and f.is_chain_map()
    assert complete_chain_map(chain2, chain2, diagonal, [ClassCondition(3, cycles, _m([[2], [0]]))]) is None


def test_degree_preserving_maps(v_poset, chain2):
    assert identity_map(v_poset).is_degree_preserving() is True
    assert identity_map(chain2).is_degree_preserving() is None


def test_restrict_twice(chain3):
    poset = chain3.poset
    lower = restrict(chain3, poset.convex_set(["p", "q"]))
    assert restrict(lower, poset.convex_set(["q"])) == restrict(chain3, poset.convex_set(["q"]))
    assert restrict(lower, poset.convex_set(["p", "q"])) is lower
    assert restrict(chain3, poset.convex_set(["q", "r"])).differential.is_zero()


def test_incomparable_pieces_split():
    """Two chains p < q and r < s: the differential on the union is block diagonal."""
    poset = Poset(["p", "q", "r", "s"], [("p", "q"), ("r", "s")])
    c = GradedDifferentialGroup.from_blocks(poset, INTEGERS, {"p": 1, "q": 1, "r": 1, "s": 1},
                                            {("p", "q"): [[3]], ("r", "s"): [[1]]})
    left = restrict(c, poset.convex_set(["p", "q"]))
    right = restrict(c, poset.convex_set(["r", "s"]))
    union = restrict(c, poset.convex_set(["p", "q", "r", "s"]))
    assert union.differential == block_diagonal([left.differential, right.differential], INTEGERS)
    assert union.differential.submatrix(c.generator_indices(left.support),
                                        c.generator_indices(right.support)).is_zero()
