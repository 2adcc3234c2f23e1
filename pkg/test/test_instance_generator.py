import pytest

from src.internal.ce_system import CESystem
from src.internal.connection_matrix import check_morse_smale
from src.internal.errors import ValidationError
from src.internal.exact_linalg import BINARY, INTEGERS, RATIONALS, inverse
from src.internal.fgab import homology
from src.internal.graded_diff import FilteredChainMap, conjugate, validate
from src.internal.instance_generator import InstanceGenerator
from src.internal.poset import Poset


def test_random_poset_is_seeded():
    a, b = InstanceGenerator(4).random_poset(5), InstanceGenerator(4).random_poset(5)
    assert len(a) == 5
    assert a.elements == b.elements
    assert a.relations == b.relations


@pytest.mark.parametrize("ring", [INTEGERS, BINARY, RATIONALS])
def test_strict_instance(ring):
    gen = InstanceGenerator(8)
    inst = gen.strict_instance(gen.random_poset(4), ring, degrees=True)
    report = validate(inst.group)
    assert report.ok, report.failures
    assert report.degree_consistent is True
    assert inst.group.is_strict()
    f = inst.conjugator
    assert inst.group.differential == f @ inst.base @ inverse(f)


def test_same_seed_same_instance():
    poset = Poset(["p", "q", "r"], [("p", "q"), ("p", "r")])
    one = InstanceGenerator(3).strict_instance(poset, INTEGERS)
    two = InstanceGenerator(3).strict_instance(poset, INTEGERS)
    assert one.group.differential == two.group.differential


def test_filtered_iso_conjugates(v_poset):
    f = InstanceGenerator(1).random_filtered_iso(v_poset)
    assert validate(conjugate(v_poset, FilteredChainMap(v_poset, v_poset, f))).ok


def test_acyclic_padding_keeps_e_terms(chain2):
    padded = InstanceGenerator(6).acyclic_padding(chain2, count=3)
    assert padded.size == chain2.size + 6
    assert not padded.is_strict()
    before, after = CESystem(chain2).e_term_table(), CESystem(padded).e_term_table()
    assert {xi: g.invariants() for xi, g in before.items()} == {xi: g.invariants() for xi, g in after.items()}


def test_perturb_raises_free_rank():
    gen = InstanceGenerator(12)
    poset = Poset(["p", "q"], [("p", "q")])
    inst = gen.strict_instance(poset, RATIONALS, max_rank=2, min_pairs=1)
    while not inst.pairs:
        inst = gen.strict_instance(poset, RATIONALS, max_rank=2, min_pairs=1)
    broken = gen.perturb(inst)
    assert homology(broken.differential).group.free_rank == homology(inst.group.differential).group.free_rank + 2


def test_perturb_needs_a_pair():
    gen = InstanceGenerator(0)
    inst = gen.strict_instance(Poset(["a", "b"]), INTEGERS)
    with pytest.raises(ValidationError):
        gen.perturb(inst)


def test_morse_smale_instances():
    gen = InstanceGenerator(5)
    for _ in range(10):
        c, mu = gen.morse_smale_instance(gen.random_poset(5))
        assert validate(c).ok
        assert check_morse_smale(c, mu), check_morse_smale(c, mu).reasons
