import pytest

from src.internal.ce_system import CEIso, CESystem, NotIsomorphic, ce_isomorphic_bruteforce, induced_ce_iso
from src.internal.connection_matrix import (MorseSmaleGrading, chain_equivalence, certify_unique_differential,
                                            check_morse_smale, connection_matrix, reduce, relating_automorphisms)
from src.internal.errors import CEIsoInconsistent, GradingMismatch, NotAField, ValidationError
from src.internal.exact_linalg import BINARY, INTEGERS, RATIONALS, ExactMatrix
from src.internal.graded_diff import FilteredChainMap, GradedDifferentialGroup, conjugate
from src.internal.instance_generator import InstanceGenerator
from src.internal.poset import Poset

V_MU = MorseSmaleGrading({"a": 0, "b": 0, "c": 1})


def _chain2_pair():
    """G_p = Z2² with d e_p2 = e_p1, G_q = Z2 with d e_q = e_p1."""
    poset = Poset(["p", "q"], [("p", "q")])
    return GradedDifferentialGroup.from_blocks(poset, BINARY, {"p": 2, "q": 1},
                                               {("p", "p"): [[0, 1], [0, 0]], ("p", "q"): [[1], [0]]})


def test_reduce_strict_is_identity(v_poset):
    w = reduce(v_poset)
    assert w.a.differential == v_poset.differential
    assert w.pivots == ()
    assert w.f.matrix == ExactMatrix.identity(3, BINARY)
    assert w.h.matrix.is_zero()


def test_reduce_one_cancellation():
    d = _chain2_pair()
    w = reduce(d)
    assert w.a.ranks == (0, 1)
    assert w.a.differential.is_zero()
    assert w.pivots == ((0, 1),)
    assert w.f.matrix == ExactMatrix.from_rows([[0], [1], [1]], BINARY)
    assert w.verify()


def test_reduce_acyclic_pair():
    d = GradedDifferentialGroup.from_blocks(Poset(["p"]), RATIONALS, {"p": 2}, {("p", "p"): [[0, 1], [0, 0]]})
    w = reduce(d)
    assert w.a.size == 0
    assert connection_matrix(d).size == 0


def test_reduce_refuses_integers():
    d = GradedDifferentialGroup.from_blocks(Poset(["p"]), INTEGERS, {"p": 2}, {("p", "p"): [[0, 2], [0, 0]]})
    with pytest.raises(NotAField) as e:
        reduce(d)
    assert "Z/2" in str(e.value)


def test_reduce_rejects_bad_pivot_order():
    with pytest.raises(ValidationError):
        reduce(_chain2_pair(), pivot_order=[0, 0, 1])


def test_reduce_ranks_and_idempotence():
    gen = InstanceGenerator(11)
    poset = gen.random_poset(3)
    d = gen.acyclic_padding(gen.strict_instance(poset, RATIONALS).group, count=3)
    w = reduce(d)
    system = CESystem(d)
    for i in range(len(poset)):
        assert w.a.rank(i) == system.term_data(1 << i).group.free_rank
    again = reduce(w.a)
    assert again.a.differential == w.a.differential
    assert again.pivots == ()


def test_seeded_pivot_orders_agree_on_witness():
    d = InstanceGenerator(5).acyclic_padding(_chain2_pair(), count=2)
    for seed in range(4):
        assert reduce(d, seed=seed).verify()


def test_check_morse_smale(v_poset):
    assert check_morse_smale(v_poset, V_MU)
    double = GradedDifferentialGroup.from_blocks(v_poset.poset, BINARY, {"a": 2, "b": 1, "c": 1}, {},
                                                 degrees={"a": [0, 0], "b": [0], "c": [1]})
    report = check_morse_smale(double, V_MU)
    assert not report
    assert any("rank 2" in r for r in report.reasons)
    flat = MorseSmaleGrading({"a": 1, "b": 0, "c": 1})
    assert not check_morse_smale(v_poset, flat)


def test_check_morse_smale_needs_binary(chain2):
    report = check_morse_smale(chain2, MorseSmaleGrading({"p": 0, "q": 1}))
    assert not report.ok
    assert any("not Z2" in r for r in report.reasons)
    assert any("no degree map" in r for r in report.reasons)


def test_certify_unique_differential(v_poset):
    assert certify_unique_differential(v_poset, v_poset, V_MU)
    other = GradedDifferentialGroup.from_blocks(v_poset.poset, BINARY, {"a": 1, "b": 1, "c": 1},
                                                {("a", "c"): [[1]]}, degrees={"a": [0], "b": [0], "c": [1]})
    assert not certify_unique_differential(v_poset, other, V_MU)
    assert not ce_isomorphic_bruteforce(CESystem(v_poset), CESystem(other))


def test_certify_rejects_mismatched_grading(v_poset):
    with pytest.raises(GradingMismatch):
        certify_unique_differential(v_poset, v_poset, MorseSmaleGrading({"a": 0, "b": 0, "c": 2}))


def test_only_the_identity_relates_morse_smale_differentials(v_poset):
    related = relating_automorphisms(v_poset, v_poset)
    assert related == [ExactMatrix.identity(3, BINARY)]


def test_relating_automorphisms_use_free_entries():
    """Two generators of degree 0 on p < q: the p<-q entry is free."""
    poset = Poset(["p", "q"], [("p", "q")])
    c = GradedDifferentialGroup.from_blocks(poset, BINARY, {"p": 1, "q": 1}, {}, degrees={"p": [0], "q": [0]})
    assert len(relating_automorphisms(c, c)) == 2


def test_certify_raises_when_brute_force_disagrees(v_poset, monkeypatch):
    monkeypatch.setattr("src.internal.connection_matrix.ce_isomorphic_bruteforce",
                        lambda *args: NotIsomorphic(None, None, "forced"))
    with pytest.raises(CEIsoInconsistent):
        certify_unique_differential(v_poset, v_poset, V_MU)


def test_chain_equivalence_through_strict_forms(v_poset):
    gen = InstanceGenerator(2)
    d = gen.acyclic_padding(gen.strict_instance(v_poset.poset, BINARY).group)
    f0 = gen.random_filtered_iso(d)
    d_prime = conjugate(d, FilteredChainMap(d, d, f0))
    h = induced_ce_iso(FilteredChainMap(d, d_prime, f0), CESystem(d), CESystem(d_prime))
    eq = chain_equivalence(d, d_prime, h)
    assert eq.certified
    assert eq.phi.is_chain_map() and eq.psi.is_chain_map()


def test_bruteforce_compares_non_strict_field_instances():
    gen = InstanceGenerator(9)
    poset = Poset(["p", "q"], [("p", "q")])
    d = gen.acyclic_padding(gen.strict_instance(poset, BINARY, min_pairs=1).group)
    d_prime = conjugate(d, FilteredChainMap(d, d, gen.random_filtered_iso(d)))
    result = ce_isomorphic_bruteforce(CESystem(d), CESystem(d_prime))
    assert isinstance(result, CEIso)
    assert result.verify().ok
