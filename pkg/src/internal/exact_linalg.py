"""
Exact matrices over Z, prime fields and Q.

Entries are Python ints (Z, Z/p) or Fractions (Q), always stored in canonical form.
Smith normal form is the workhorse: solving, kernels, left inverses and ranks all go
through it so that every free choice is resolved the same way.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from sympy import isprime

from .errors import NotInvertible, ValidationError
from ..utils.logging_setup import get_logger

logger = get_logger('internal.exact_linalg')

Scalar = Union[int, Fraction]


@dataclass(frozen=True)
class Coefficients:
    tag: str
    modulus: int = 0

    @classmethod
    def prime_field(cls, p: int) -> 'Coefficients':
        if not isprime(p):
            raise ValidationError("prime modulus", f"{p} is not prime")
        return cls("Zp", int(p))

    @classmethod
    def parse(cls, name: str) -> 'Coefficients':
        name = name.strip()
        if name == "Z":
            return INTEGERS
        if name == "Q":
            return RATIONALS
        if name == "Z2":
            return BINARY
        if name.startswith("Zp:") or name.startswith("Z/"):
            try:
                return cls.prime_field(int(name.split(":" if ":" in name else "/", 1)[1]))
            except ValueError:
                raise ValidationError("coefficients", f"bad prime field tag {name!r}") from None
        raise ValidationError("coefficients", f"unknown coefficient tag {name!r}")

    @property
    def name(self) -> str:
        if self.tag == "Zp":
            return "Z2" if self.modulus == 2 else f"Zp:{self.modulus}"
        return self.tag

    @property
    def is_field(self) -> bool:
        return self.tag != "Z"

    def normalize(self, x) -> Scalar:
        if self.tag == "Z":
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise ValidationError("integral entry", f"{x} is not an integer")
                return int(x.numerator)
            return int(x)
        if self.tag == "Q":
            return Fraction(x)
        if isinstance(x, Fraction):
            return x.numerator * pow(x.denominator, -1, self.modulus) % self.modulus
        return int(x) % self.modulus

    def is_unit(self, x: Scalar) -> bool:
        if self.tag == "Z":
            return x in (1, -1)
        return x != 0

    def inverse(self, x: Scalar) -> Scalar:
        if not self.is_unit(x):
            raise NotInvertible(f"{x} is not a unit in {self.name}")
        if self.tag == "Z":
            return x
        if self.tag == "Q":
            return 1 / Fraction(x)
        return pow(int(x), -1, self.modulus)

    def divides(self, a: Scalar, b: Scalar) -> bool:
        if a == 0:
            return b == 0
        return self.is_field or b % a == 0

    def quotient(self, a: Scalar, b: Scalar) -> Scalar:
        """q with a - q*b 'smaller' than b: floor division over Z, exact division over fields."""
        if self.tag == "Z":
            return a // b
        return self.normalize(a * self.inverse(b))

    def size(self, x: Scalar) -> int:
        # pivot ranking: absolute value over Z, any nonzero entry ranks equally over fields
        return abs(x) if self.tag == "Z" else (0 if x == 0 else 1)

    def format(self, x: Scalar) -> str:
        return str(x)


INTEGERS = Coefficients("Z")
RATIONALS = Coefficients("Q")
BINARY = Coefficients("Zp", 2)


class ExactMatrix:
    """Immutable dense matrix over a coefficient ring."""

    __slots__ = ("rows", "cols", "coefficients", "_data")

    def __init__(self, rows: int, cols: int, coefficients: Coefficients,
                 data: Optional[Sequence[Sequence]] = None, _trusted: bool = False):
        self.rows = rows
        self.cols = cols
        self.coefficients = coefficients
        if data is None:
            self._data: Tuple[Tuple[Scalar, ...], ...] = tuple((0,) * cols for _ in range(rows))
            if coefficients.tag == "Q":
                self._data = tuple(tuple(Fraction(0) for _ in range(cols)) for _ in range(rows))
        elif _trusted:
            self._data = tuple(tuple(r) for r in data)
        else:
            if len(data) != rows or any(len(r) != cols for r in data):
                raise ValidationError("block dimensions", f"expected a {rows}x{cols} matrix")
            norm = coefficients.normalize
            self._data = tuple(tuple(norm(x) for x in r) for r in data)

    # construction

    @classmethod
    def zeros(cls, rows: int, cols: int, coefficients: Coefficients) -> 'ExactMatrix':
        return cls(rows, cols, coefficients)

    @classmethod
    def identity(cls, n: int, coefficients: Coefficients) -> 'ExactMatrix':
        return cls(n, n, coefficients, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], coefficients: Coefficients, cols: Optional[int] = None) -> 'ExactMatrix':
        width = len(rows[0]) if rows else (cols or 0)
        return cls(len(rows), width, coefficients, rows)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], coefficients: Coefficients, rows: int) -> 'ExactMatrix':
        data = [[columns[j][i] for j in range(len(columns))] for i in range(rows)]
        return cls(rows, len(columns), coefficients, data)

    @classmethod
    def hstack(cls, blocks: Sequence['ExactMatrix'], rows: int, coefficients: Coefficients) -> 'ExactMatrix':
        data = [[] for _ in range(rows)]
        for b in blocks:
            if b.rows != rows:
                raise ValidationError("block dimensions", "hstack row mismatch")
            for i in range(rows):
                data[i].extend(b._data[i])
        return cls(rows, sum(b.cols for b in blocks), coefficients, data, _trusted=True)

    @classmethod
    def vstack(cls, blocks: Sequence['ExactMatrix'], cols: int, coefficients: Coefficients) -> 'ExactMatrix':
        data = []
        for b in blocks:
            if b.cols != cols:
                raise ValidationError("block dimensions", "vstack column mismatch")
            data.extend(b._data)
        return cls(len(data), cols, coefficients, data, _trusted=True)

    # access

    def __getitem__(self, key: Tuple[int, int]) -> Scalar:
        i, j = key
        return self._data[i][j]

    def to_lists(self) -> List[List[Scalar]]:
        return [list(r) for r in self._data]

    def row(self, i: int) -> Tuple[Scalar, ...]:
        return self._data[i]

    def column(self, j: int) -> List[Scalar]:
        return [r[j] for r in self._data]

    def columns(self) -> Iterator[List[Scalar]]:
        for j in range(self.cols):
            yield self.column(j)

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> 'ExactMatrix':
        data = [[self._data[i][j] for j in col_idx] for i in row_idx]
        return ExactMatrix(len(row_idx), len(col_idx), self.coefficients, data, _trusted=True)

    def embed(self, rows: int, cols: int, row_idx: Sequence[int], col_idx: Sequence[int]) -> 'ExactMatrix':
        """Place this matrix into a zero rows x cols matrix at the given row/column positions."""
        data = ExactMatrix.zeros(rows, cols, self.coefficients).to_lists()
        for a, i in enumerate(row_idx):
            for b, j in enumerate(col_idx):
                data[i][j] = self._data[a][b]
        return ExactMatrix(rows, cols, self.coefficients, data, _trusted=True)

    def with_block(self, row_idx: Sequence[int], col_idx: Sequence[int], block: 'ExactMatrix') -> 'ExactMatrix':
        data = self.to_lists()
        for a, i in enumerate(row_idx):
            for b, j in enumerate(col_idx):
                data[i][j] = block._data[a][b]
        return ExactMatrix(self.rows, self.cols, self.coefficients, data, _trusted=True)

    def is_zero(self) -> bool:
        return all(x == 0 for r in self._data for x in r)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def nonzero_entries(self) -> Iterator[Tuple[int, int, Scalar]]:
        for i, r in enumerate(self._data):
            for j, x in enumerate(r):
                if x != 0:
                    yield i, j, x

    # arithmetic

    def _check_same(self, other: 'ExactMatrix') -> None:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValidationError("block dimensions",
                                  f"{self.rows}x{self.cols} vs {other.rows}x{other.cols}")

    def __add__(self, other: 'ExactMatrix') -> 'ExactMatrix':
        self._check_same(other)
        norm = self.coefficients.normalize
        data = [[norm(a + b) for a, b in zip(r, s)] for r, s in zip(self._data, other._data)]
        return ExactMatrix(self.rows, self.cols, self.coefficients, data, _trusted=True)

    def __sub__(self, other: 'ExactMatrix') -> 'ExactMatrix':
        self._check_same(other)
        norm = self.coefficients.normalize
        data = [[norm(a - b) for a, b in zip(r, s)] for r, s in zip(self._data, other._data)]
        return ExactMatrix(self.rows, self.cols, self.coefficients, data, _trusted=True)

    def __neg__(self) -> 'ExactMatrix':
        return self.scale(-1)

    def scale(self, c: Scalar) -> 'ExactMatrix':
        norm = self.coefficients.normalize
        data = [[norm(c * a) for a in r] for r in self._data]
        return ExactMatrix(self.rows, self.cols, self.coefficients, data, _trusted=True)

    def __matmul__(self, other: 'ExactMatrix') -> 'ExactMatrix':
        if self.cols != other.rows:
            raise ValidationError("block dimensions",
                                  f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        norm = self.coefficients.normalize
        zero = norm(0)
        out = []
        other_rows = other._data
        for r in self._data:
            acc = [zero] * other.cols
            for k, a in enumerate(r):
                if a == 0:
                    continue
                for j, b in enumerate(other_rows[k]):
                    if b != 0:
                        acc[j] += a * b
            out.append([norm(x) for x in acc])
        return ExactMatrix(self.rows, other.cols, self.coefficients, out, _trusted=True)

    def transpose(self) -> 'ExactMatrix':
        data = [[self._data[i][j] for i in range(self.rows)] for j in range(self.cols)]
        return ExactMatrix(self.cols, self.rows, self.coefficients, data, _trusted=True)

    def reduce_rows(self, moduli: Sequence[int]) -> 'ExactMatrix':
        """Reduce row i modulo moduli[i] (0 leaves the row untouched)."""
        data = [[x % m if m else x for x in r] for r, m in zip(self._data, moduli)]
        return ExactMatrix(self.rows, self.cols, self.coefficients, data, _trusted=True)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return (self.rows, self.cols, self.coefficients, self._data) == (other.rows, other.cols, other.coefficients, other._data)

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.coefficients, self._data))

    def __repr__(self) -> str:
        return f"ExactMatrix({self.coefficients.name}, {self.to_lists()!r})"


@dataclass(frozen=True)
class SmithForm:
    """u @ m @ v == d, with the inverses of u and v carried along."""
    u: ExactMatrix
    d: ExactMatrix
    v: ExactMatrix
    u_inv: ExactMatrix
    v_inv: ExactMatrix
    rank: int

    def __iter__(self):
        return iter((self.u, self.d, self.v))

    def diagonal(self) -> List[Scalar]:
        return [self.d[i, i] for i in range(self.rank)]


class _Reducer:
    """Row and column operations mirrored onto u, u_inv, v, v_inv."""

    def __init__(self, m: ExactMatrix):
        ring = m.coefficients
        self.ring = ring
        self.a = m.to_lists()
        self.u = ExactMatrix.identity(m.rows, ring).to_lists()
        self.u_inv = ExactMatrix.identity(m.rows, ring).to_lists()
        self.v = ExactMatrix.identity(m.cols, ring).to_lists()
        self.v_inv = ExactMatrix.identity(m.cols, ring).to_lists()

    def swap_rows(self, i: int, k: int) -> None:
        if i == k:
            return
        for mat in (self.a, self.u):
            mat[i], mat[k] = mat[k], mat[i]
        for r in self.u_inv:
            r[i], r[k] = r[k], r[i]

    def swap_cols(self, j: int, k: int) -> None:
        if j == k:
            return
        for mat in (self.a, self.v):
            for r in mat:
                r[j], r[k] = r[k], r[j]
        self.v_inv[j], self.v_inv[k] = self.v_inv[k], self.v_inv[j]

    def add_row(self, target: int, source: int, c: Scalar) -> None:
        """row[target] += c * row[source]"""
        norm = self.ring.normalize
        for mat in (self.a, self.u):
            src, dst = mat[source], mat[target]
            for j, x in enumerate(src):
                if x != 0:
                    dst[j] = norm(dst[j] + c * x)
        for r in self.u_inv:
            if r[target] != 0:
                r[source] = norm(r[source] - c * r[target])

    def add_col(self, target: int, source: int, c: Scalar) -> None:
        """col[target] += c * col[source]"""
        norm = self.ring.normalize
        for mat in (self.a, self.v):
            for r in mat:
                if r[source] != 0:
                    r[target] = norm(r[target] + c * r[source])
        src, dst = self.v_inv[target], self.v_inv[source]
        for j, x in enumerate(src):
            if x != 0:
                dst[j] = norm(dst[j] - c * x)

    def scale_row(self, i: int, unit: Scalar) -> None:
        norm = self.ring.normalize
        inv = self.ring.inverse(unit)
        for mat in (self.a, self.u):
            mat[i] = [norm(unit * x) for x in mat[i]]
        for r in self.u_inv:
            r[i] = norm(r[i] * inv)


def smith_normal_form(m: ExactMatrix) -> SmithForm:
    """Smith normal form by smallest-pivot elimination.

    Over a field the diagonal is made of ones; over Z the diagonal is nonnegative with
    d1 | d2 | ... | dk.
    """
    ring = m.coefficients
    red = _Reducer(m)
    a = red.a
    rows, cols = m.rows, m.cols
    t = 0
    while t < min(rows, cols):
        candidates = [(ring.size(a[i][j]), j, i) for i in range(t, rows) for j in range(t, cols) if a[i][j] != 0]
        if not candidates:
            break
        _, j0, i0 = min(candidates)
        red.swap_rows(t, i0)
        red.swap_cols(t, j0)
        while True:
            dirty = False
            for i in range(t + 1, rows):
                if a[i][t] != 0:
                    red.add_row(i, t, -ring.quotient(a[i][t], a[t][t]))
                    dirty = dirty or a[i][t] != 0
            for j in range(t + 1, cols):
                if a[t][j] != 0:
                    red.add_col(j, t, -ring.quotient(a[t][j], a[t][t]))
                    dirty = dirty or a[t][j] != 0
            if dirty:
                best = min([(ring.size(a[i][t]), 0, i) for i in range(t + 1, rows) if a[i][t] != 0]
                           + [(ring.size(a[t][j]), 1, j) for j in range(t + 1, cols) if a[t][j] != 0])
                if best[1] == 0:
                    red.swap_rows(t, best[2])
                else:
                    red.swap_cols(t, best[2])
                continue
            bad = next(((i, j) for i in range(t + 1, rows) for j in range(t + 1, cols)
                        if not ring.divides(a[t][t], a[i][j])), None)
            if bad is None:
                break
            red.add_row(t, bad[0], 1)
        pivot = a[t][t]
        if ring.is_field and pivot != 1:
            red.scale_row(t, ring.inverse(pivot))
        elif not ring.is_field and pivot < 0:
            red.scale_row(t, -1)
        t += 1

    def wrap(data: List[List[Scalar]], r: int, c: int) -> ExactMatrix:
        return ExactMatrix(r, c, ring, data, _trusted=True)

    return SmithForm(u=wrap(red.u, rows, rows), d=wrap(a, rows, cols), v=wrap(red.v, cols, cols),
                     u_inv=wrap(red.u_inv, rows, rows), v_inv=wrap(red.v_inv, cols, cols), rank=t)


@dataclass(frozen=True)
class NoSolution:
    """Why a x = b has no solution: the failing column of b and the obstruction."""
    column: int
    reason: str
    row: int = -1

    def __bool__(self) -> bool:
        return False


class LinearSolver:
    """Solves a x = b for many right-hand sides against one Smith decomposition of a."""

    def __init__(self, a: ExactMatrix):
        self.a = a
        self.snf = smith_normal_form(a)

    def solve(self, b: ExactMatrix) -> Union[ExactMatrix, NoSolution]:
        a, snf = self.a, self.snf
        ring = a.coefficients
        if b.rows != a.rows:
            raise ValidationError("block dimensions", f"right-hand side has {b.rows} rows, expected {a.rows}")
        c = snf.u @ b
        y = ExactMatrix.zeros(a.cols, b.cols, ring).to_lists()
        for col in range(b.cols):
            for i in range(a.rows):
                value = c[i, col]
                if i < snf.rank:
                    di = snf.d[i, i]
                    if not ring.divides(di, value):
                        return NoSolution(col, f"divisibility: {di} does not divide {value}", i)
                    y[i][col] = ring.quotient(value, di) if ring.is_field else value // di
                elif value != 0:
                    return NoSolution(col, "inconsistent system", i)
        return snf.v @ ExactMatrix(a.cols, b.cols, ring, y, _trusted=True)

    def kernel(self) -> ExactMatrix:
        idx = list(range(self.snf.rank, self.a.cols))
        return self.snf.v.submatrix(list(range(self.a.cols)), idx)


def solve(a: ExactMatrix, b: ExactMatrix) -> Union[ExactMatrix, NoSolution]:
    """x with a @ x == b (free parameters set to zero), or NoSolution."""
    return LinearSolver(a).solve(b)


def kernel_basis(a: ExactMatrix) -> ExactMatrix:
    """Columns spanning ker a; over Z a basis of the saturated kernel lattice."""
    return LinearSolver(a).kernel()


def rank(a: ExactMatrix) -> int:
    return smith_normal_form(a).rank


def left_inverse(basis: ExactMatrix) -> ExactMatrix:
    """L with L @ basis == I, for a basis of a direct summand (saturated over Z)."""
    snf = smith_normal_form(basis)
    ring = basis.coefficients
    if snf.rank != basis.cols or any(not ring.is_unit(x) for x in snf.diagonal()):
        raise NotInvertible("columns do not span a direct summand")
    # basis = u_inv @ d @ v_inv with d = [D; 0], D a diagonal of units
    d_inv = ExactMatrix.zeros(basis.cols, basis.rows, ring).to_lists()
    for i in range(basis.cols):
        d_inv[i][i] = ring.inverse(snf.d[i, i])
    return snf.v @ ExactMatrix(basis.cols, basis.rows, ring, d_inv, _trusted=True) @ snf.u


def determinant(a: ExactMatrix) -> Scalar:
    if not a.is_square():
        raise ValidationError("square matrix", f"{a.rows}x{a.cols}")
    ring = a.coefficients
    n = a.rows
    if n == 0:
        return ring.normalize(1)
    m = a.to_lists()
    if ring.tag == "Z":
        # Bareiss fraction-free elimination
        sign, prev = 1, 1
        for k in range(n - 1):
            if m[k][k] == 0:
                swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
                if swap is None:
                    return 0
                m[k], m[swap] = m[swap], m[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            prev = m[k][k]
        return sign * m[n - 1][n - 1]
    det = ring.normalize(1)
    for k in range(n):
        pivot = next((i for i in range(k, n) if m[i][k] != 0), None)
        if pivot is None:
            return ring.normalize(0)
        if pivot != k:
            m[k], m[pivot] = m[pivot], m[k]
            det = ring.normalize(-det)
        det = ring.normalize(det * m[k][k])
        inv = ring.inverse(m[k][k])
        for i in range(k + 1, n):
            factor = ring.normalize(m[i][k] * inv)
            if factor != 0:
                m[i] = [ring.normalize(x - factor * y) for x, y in zip(m[i], m[k])]
    return det


def inverse(a: ExactMatrix) -> ExactMatrix:
    if not a.is_square():
        raise NotInvertible(f"{a.rows}x{a.cols} matrix is not square")
    x = solve(a, ExactMatrix.identity(a.rows, a.coefficients))
    if isinstance(x, NoSolution):
        raise NotInvertible(f"matrix is singular over {a.coefficients.name} ({x.reason})")
    return x


def block_diagonal(blocks: Iterable[ExactMatrix], coefficients: Coefficients) -> ExactMatrix:
    blocks = list(blocks)
    rows = sum(b.rows for b in blocks)
    cols = sum(b.cols for b in blocks)
    out = ExactMatrix.zeros(rows, cols, coefficients)
    r = c = 0
    for b in blocks:
        out = out.with_block(range(r, r + b.rows), range(c, c + b.cols), b)
        r += b.rows
        c += b.cols
    return out


@lru_cache(maxsize=None)
def _unit_list(coefficients: Coefficients) -> Tuple[Scalar, ...]:
    if coefficients.tag == "Z":
        return (1, -1)
    if coefficients.tag == "Zp":
        return tuple(range(1, coefficients.modulus))
    return (Fraction(1), Fraction(-1))


def units(coefficients: Coefficients) -> Tuple[Scalar, ...]:
    """Units used when enumerating automorphisms; all units for Z/p, signs otherwise."""
    return _unit_list(coefficients)
