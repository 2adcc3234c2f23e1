from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from src.internal.errors import NotInvertible, ValidationError
from src.internal.exact_linalg import (BINARY, INTEGERS, RATIONALS, Coefficients, ExactMatrix, NoSolution,
                                       block_diagonal, determinant, inverse, kernel_basis, left_inverse, rank,
                                       smith_normal_form, solve)


@st.composite
def integer_matrices(draw, max_dim=5, low=-9, high=9):
    rows = draw(st.integers(min_value=1, max_value=max_dim))
    cols = draw(st.integers(min_value=1, max_value=max_dim))
    data = draw(st.lists(st.lists(st.integers(low, high), min_size=cols, max_size=cols),
                         min_size=rows, max_size=rows))
    return ExactMatrix(rows, cols, INTEGERS, data)


def _sympy(m: ExactMatrix) -> sympy.Matrix:
    return sympy.Matrix(m.to_lists())


def test_coefficient_tags():
    assert Coefficients.parse("Z") is INTEGERS
    assert Coefficients.parse("Q") is RATIONALS
    assert Coefficients.parse("Z2") == BINARY
    assert Coefficients.parse("Zp:5").modulus == 5
    assert Coefficients.parse("Zp:5").name == "Zp:5"
    with pytest.raises(ValidationError):
        Coefficients.parse("Zp:6")
    with pytest.raises(ValidationError):
        Coefficients.parse("R")


def test_normalization():
    """Entries are stored canonically for each ring."""
    assert ExactMatrix(1, 2, BINARY, [[3, -1]]).to_lists() == [[1, 1]]
    assert ExactMatrix(1, 1, RATIONALS, [[2]])[0, 0] == Fraction(2)
    assert ExactMatrix(1, 1, Coefficients.prime_field(5), [[Fraction(1, 2)]])[0, 0] == 3
    with pytest.raises(ValidationError):
        ExactMatrix(1, 1, INTEGERS, [[Fraction(1, 2)]])


@settings(max_examples=200, deadline=None)
@given(integer_matrices())
def test_smith_normal_form(m):
    """u m v = d with unimodular u, v and a divisibility chain on the diagonal."""
    snf = smith_normal_form(m)
    assert snf.u @ m @ snf.v == snf.d
    assert abs(determinant(snf.u)) == 1
    assert abs(determinant(snf.v)) == 1
    assert snf.u @ snf.u_inv == ExactMatrix.identity(m.rows, INTEGERS)
    assert snf.v @ snf.v_inv == ExactMatrix.identity(m.cols, INTEGERS)
    diag = snf.diagonal()
    assert all(x > 0 for x in diag)
    assert all(b % a == 0 for a, b in zip(diag, diag[1:]))
    assert all(x == 0 for i, j, x in snf.d.nonzero_entries() if i != j)


@settings(max_examples=100, deadline=None)
@given(integer_matrices())
def test_rank_matches_sympy(m):
    assert rank(m) == _sympy(m).rank()


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.lists(st.lists(st.integers(-9, 9), min_size=n, max_size=n),
                                                     min_size=n, max_size=n)))
def test_determinant_matches_sympy(rows):
    m = ExactMatrix.from_rows(rows, INTEGERS)
    assert determinant(m) == _sympy(m).det()
    q = ExactMatrix.from_rows(rows, RATIONALS)
    assert determinant(q) == Fraction(int(_sympy(m).det()))


@settings(max_examples=150, deadline=None)
@given(integer_matrices(), st.data())
def test_solve_consistent_systems(a, data):
    """b = a x always has a solution, and the returned one satisfies a y = b."""
    x = ExactMatrix(a.cols, 1, INTEGERS, [[data.draw(st.integers(-5, 5))] for _ in range(a.cols)])
    b = a @ x
    y = solve(a, b)
    assert not isinstance(y, NoSolution)
    assert a @ y == b


@settings(max_examples=150, deadline=None)
@given(integer_matrices())
def test_kernel_basis(m):
    k = kernel_basis(m)
    assert (m @ k).is_zero()
    assert k.cols == m.cols - rank(m)
    assert len(_sympy(m).nullspace()) == k.cols


def test_no_solution_reports_divisibility():
    """2 x = 1 has no integer solution; over Q it does."""
    result = solve(ExactMatrix.from_rows([[2]], INTEGERS), ExactMatrix.from_rows([[1]], INTEGERS))
    assert isinstance(result, NoSolution)
    assert not result
    assert "divisibility" in result.reason
    over_q = solve(ExactMatrix.from_rows([[2]], RATIONALS), ExactMatrix.from_rows([[1]], RATIONALS))
    assert over_q[0, 0] == Fraction(1, 2)


def test_inconsistent_system():
    a = ExactMatrix.from_rows([[1, 0], [0, 0]], RATIONALS)
    b = ExactMatrix.from_rows([[1], [1]], RATIONALS)
    result = solve(a, b)
    assert isinstance(result, NoSolution)
    assert result.reason == "inconsistent system"


def test_inverse():
    m = ExactMatrix.from_rows([[2, 1], [1, 1]], INTEGERS)
    assert m @ inverse(m) == ExactMatrix.identity(2, INTEGERS)
    with pytest.raises(NotInvertible):
        inverse(ExactMatrix.from_rows([[2]], INTEGERS))
    z2 = ExactMatrix.from_rows([[1, 1], [0, 1]], BINARY)
    assert inverse(z2) == z2


def test_left_inverse():
    basis = ExactMatrix.from_rows([[1], [2], [3]], INTEGERS)
    left = left_inverse(basis)
    assert left @ basis == ExactMatrix.identity(1, INTEGERS)
    with pytest.raises(NotInvertible):
        left_inverse(ExactMatrix.from_rows([[2], [4]], INTEGERS))


def test_block_diagonal():
    a = ExactMatrix.from_rows([[1]], INTEGERS)
    b = ExactMatrix.from_rows([[2, 3]], INTEGERS)
    assert block_diagonal([a, b], INTEGERS).to_lists() == [[1, 0, 0], [0, 2, 3]]


def test_shape_errors():
    with pytest.raises(ValidationError):
        ExactMatrix.from_rows([[1, 2]], INTEGERS) @ ExactMatrix.from_rows([[1, 2]], INTEGERS)
    with pytest.raises(ValidationError):
        ExactMatrix(2, 2, INTEGERS, [[1, 2]])
