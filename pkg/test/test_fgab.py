import itertools

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.matrices.normalforms import smith_normal_form

from src.internal.errors import NotAChainMap, NotADifferential, ValidationError
from src.internal.exact_linalg import BINARY, INTEGERS, RATIONALS, Coefficients, ExactMatrix
from src.internal.fgab import (FgGroup, GroupHom, homology, image_equals_kernel, induced_hom, is_isomorphism,
                               is_surjective)


def _m(rows, ring=INTEGERS):
    return ExactMatrix.from_rows(rows, ring)


def test_from_orders_invariant_factors():
    """Z/2 ⊕ Z/3 = Z/6 and Z/4 ⊕ Z/6 = Z/2 ⊕ Z/12."""
    assert FgGroup.from_orders(INTEGERS, [2, 3]).torsion == (6,)
    assert FgGroup.from_orders(INTEGERS, [4, 6]).torsion == (2, 12)
    g = FgGroup.from_orders(INTEGERS, [0, 1, 5])
    assert g.invariants() == (1, (5,))


def test_group_validation():
    with pytest.raises(ValidationError):
        FgGroup(RATIONALS, 0, (2,))
    with pytest.raises(ValidationError):
        FgGroup(INTEGERS, 0, (2, 3))


def test_group_names():
    assert str(FgGroup(INTEGERS, 2, (2,))) == "Z^2 ⊕ Z/2"
    assert str(FgGroup.trivial(INTEGERS)) == "0"
    assert str(FgGroup(BINARY, 1)) == "Z2"
    assert str(FgGroup(Coefficients.prime_field(3), 2)) == "Z/3^2"


def test_homology_with_torsion():
    """d e2 = 2 e1 over Z has homology Z/2; over Z2 the same matrix is zero."""
    h = homology(_m([[0, 2], [0, 0]]))
    assert h.group.invariants() == (0, (2,))
    h2 = homology(_m([[0, 2], [0, 0]], BINARY))
    assert h2.group.free_rank == 2


def test_homology_projection_and_boundaries():
    d = _m([[0, 1], [0, 0]], RATIONALS)
    h = homology(d)
    assert h.group.is_trivial()
    e1 = _m([[1], [0]], RATIONALS)
    assert h.is_boundary(e1) == []


def test_homology_rejects_non_differential():
    with pytest.raises(NotADifferential):
        homology(_m([[1]]))
    with pytest.raises(NotADifferential):
        homology(_m([[0, 1]]))


def test_isomorphism_decisions():
    z3, z4 = FgGroup(INTEGERS, 0, (3,)), FgGroup(INTEGERS, 0, (4,))
    assert is_isomorphism(GroupHom(z3, z3, _m([[2]])))
    assert not is_isomorphism(GroupHom(z4, z4, _m([[2]])))
    z = FgGroup(INTEGERS, 1)
    doubling = GroupHom(z, z, _m([[2]]))
    assert not is_surjective(doubling)
    decision = is_isomorphism(GroupHom(z, z, _m([[-1]])))
    assert decision.inverse.matrix == _m([[-1]])
    assert "invariants differ" in is_isomorphism(GroupHom(z, z3, _m([[1]]))).obstruction


def test_homomorphisms_reduce_modulo_target():
    z3 = FgGroup(INTEGERS, 0, (3,))
    assert GroupHom(z3, z3, _m([[4]])).matrix == _m([[1]])
    assert GroupHom(z3, z3, _m([[3]])).is_zero()
    assert GroupHom.identity(z3) @ GroupHom(z3, z3, _m([[2]])) == GroupHom(z3, z3, _m([[2]]))


def test_image_equals_kernel():
    """Z --2--> Z --> Z/2 is exact in the middle; Z --4--> Z --> Z/2 is not."""
    z, z2 = FgGroup(INTEGERS, 1), FgGroup(INTEGERS, 0, (2,))
    proj = GroupHom(z, z2, _m([[1]]))
    assert image_equals_kernel(GroupHom(z, z, _m([[2]])), proj)
    assert not image_equals_kernel(GroupHom(z, z, _m([[4]])), proj)


def test_induced_hom():
    d = _m([[0, 2], [0, 0]])
    h = homology(d)
    ident = induced_hom(ExactMatrix.identity(2, INTEGERS), h, h)
    assert ident == GroupHom.identity(h.group)
    with pytest.raises(NotAChainMap):
        induced_hom(_m([[1, 0], [0, 0]]), h, h)


def test_well_defined_homomorphisms():
    """Z/2 -> Z/4 must send the generator to an element of order dividing 2."""
    z2, z4 = FgGroup(INTEGERS, 0, (2,)), FgGroup(INTEGERS, 0, (4,))
    assert GroupHom(z2, z4, _m([[2]])).is_well_defined()
    assert not GroupHom(z2, z4, _m([[1]])).is_well_defined()


@st.composite
def square_zero(draw, max_dim=4):
    """d = [[0, X], [0, 0]] up to a relabelling of generators; entries of X in [-3, 3]."""
    n1 = draw(st.integers(min_value=1, max_value=max_dim - 1))
    n2 = draw(st.integers(min_value=1, max_value=max_dim - n1))
    n = n1 + n2
    x = draw(st.lists(st.lists(st.integers(-3, 3), min_size=n2, max_size=n2), min_size=n1, max_size=n1))
    perm = draw(st.permutations(range(n)))
    data = [[0] * n for _ in range(n)]
    for i in range(n1):
        for j in range(n2):
            data[perm[i]][perm[n1 + j]] = x[i][j]
    return ExactMatrix(n, n, INTEGERS, data)


@settings(max_examples=100, deadline=None)
@given(square_zero())
def test_homology_matches_smith_form(d):
    """H = Z^(n - 2r) plus the non-unit invariant factors of d."""
    snf = smith_normal_form(sympy.Matrix(d.to_lists()), domain=sympy.ZZ)
    factors = [abs(int(snf[i, i])) for i in range(min(snf.shape)) if snf[i, i] != 0]
    group = homology(d).group
    assert group.free_rank == d.rows - 2 * len(factors)
    assert group.torsion == tuple(sorted(x for x in factors if x != 1))


@settings(max_examples=100, deadline=None)
@given(square_zero())
def test_binary_homology_by_counting(d):
    """|H| = |ker d| / |im d| over Z2, counted over all vectors."""
    rows = ExactMatrix(d.rows, d.cols, BINARY, d.to_lists()).to_lists()
    n = d.rows
    images = set()
    kernel = 0
    for v in itertools.product((0, 1), repeat=n):
        w = tuple(sum(r[j] * v[j] for j in range(n)) % 2 for r in rows)
        images.add(w)
        kernel += not any(w)
    group = homology(ExactMatrix(n, n, BINARY, rows)).group
    assert 2 ** group.free_rank == kernel // len(images)


@settings(max_examples=50, deadline=None)
@given(square_zero(), st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3))
def test_induced_hom_is_functorial(d, k, t, m, s):
    n = d.rows
    ident = ExactMatrix.identity(n, INTEGERS)
    f = ident.scale(k) + d.scale(t)
    g = ident.scale(m) + d.scale(s)
    h = homology(d)
    assert induced_hom(g @ f, h, h) == induced_hom(g, h, h) @ induced_hom(f, h, h)
    assert induced_hom(ident, h, h) == GroupHom.identity(h.group)


@settings(max_examples=50, deadline=None)
@given(square_zero(), st.lists(st.integers(-2, 2), min_size=16, max_size=16))
def test_homotopic_maps_induce_the_same_map(d, entries):
    n = d.rows
    homotopy = ExactMatrix(n, n, INTEGERS, [entries[i * n:(i + 1) * n] for i in range(n)])
    f = ExactMatrix.identity(n, INTEGERS)
    g = f + homotopy @ d + d @ homotopy
    h = homology(d)
    assert induced_hom(f, h, h) == induced_hom(g, h, h)


def test_times_three_on_z2_is_the_identity():
    d = _m([[0, 2], [0, 0]])
    h = homology(d)
    assert h.group.invariants() == (0, (2,))
    assert induced_hom(ExactMatrix.identity(2, INTEGERS).scale(3), h, h) == GroupHom.identity(h.group)
