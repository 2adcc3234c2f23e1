"""
P-graded, O(P)-filtered differential groups stored as one block matrix.

Generators are laid out grade by grade in the declared element order of the poset; column j
of the differential is d(e_j). A group may be supported on a convex subset of the poset
(restrictions keep the parent poset so generator positions stay comparable).
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .errors import NotConvex, NotInvertible, ValidationError
from .exact_linalg import Coefficients, ExactMatrix, NoSolution, determinant, inverse, solve
from .poset import ConvexSet, DownSet, Poset, _bits
from ..utils.logging_setup import get_logger

logger = get_logger('internal.graded_diff')


@dataclass(frozen=True)
class GradedDifferentialGroup:
    poset: Poset
    coefficients: Coefficients
    ranks: Tuple[int, ...]
    differential: ExactMatrix
    degrees: Optional[Tuple[int, ...]] = None
    strict_flag: bool = False
    support: Optional[int] = None

    def __post_init__(self):
        if len(self.ranks) != len(self.poset):
            raise ValidationError("declared ranks", f"{len(self.ranks)} ranks for {len(self.poset)} elements")
        if self.support is None:
            object.__setattr__(self, "support", self.poset.full_mask)
        n = self.size
        if (self.differential.rows, self.differential.cols) != (n, n):
            raise ValidationError("block dimensions",
                                  f"differential is {self.differential.rows}x{self.differential.cols}, expected {n}x{n}")
        if self.degrees is not None and len(self.degrees) != n:
            raise ValidationError("degree map", f"{len(self.degrees)} degrees for {n} generators")

    @classmethod
    def from_blocks(cls, poset: Poset, coefficients: Coefficients, ranks: Dict[str, int],
                    blocks: Dict[Tuple[str, str], Sequence[Sequence]], degrees: Optional[Dict[str, Sequence[int]]] = None,
                    strict: bool = False) -> 'GradedDifferentialGroup':
        """Assemble from blocks d^{pq}: G_q -> G_p keyed by (p, q) labels."""
        rank_tuple = tuple(int(ranks.get(label, 0)) for label in poset.elements)
        n = sum(rank_tuple)
        d = ExactMatrix.zeros(n, n, coefficients)
        skeleton = cls(poset, coefficients, rank_tuple, d)
        for (p, q), rows in blocks.items():
            ip, iq = poset.index(p), poset.index(q)
            block = ExactMatrix(rank_tuple[ip], rank_tuple[iq], coefficients, [list(r) for r in rows])
            d = d.with_block(skeleton.grade_indices(ip), skeleton.grade_indices(iq), block)
        deg = None
        if degrees is not None:
            deg_list: List[int] = []
            for i, label in enumerate(poset.elements):
                values = list(degrees.get(label, []))
                if len(values) != rank_tuple[i]:
                    raise ValidationError("degree map", f"{label!r} has {len(values)} degrees for rank {rank_tuple[i]}")
                deg_list.extend(int(v) for v in values)
            deg = tuple(deg_list)
        return cls(poset, coefficients, rank_tuple, d, deg, strict)

    # layout

    @cached_property
    def _grades(self) -> Tuple[int, ...]:
        out: List[int] = []
        for i in range(len(self.poset)):
            out.extend([i] * self.rank(i))
        return tuple(out)

    @cached_property
    def _offsets(self) -> Tuple[int, ...]:
        out, acc = [], 0
        for i in range(len(self.poset)):
            out.append(acc)
            acc += self.rank(i)
        return tuple(out)

    @property
    def size(self) -> int:
        return len(self._grades)

    def rank(self, i: int) -> int:
        return self.ranks[i] if self.support >> i & 1 else 0

    def grade_of(self) -> List[int]:
        """Grade (element index) of every generator."""
        return list(self._grades)

    def grade_indices(self, i: int) -> List[int]:
        start = self._offsets[i]
        return list(range(start, start + self.rank(i)))

    def generator_indices(self, mask: int) -> List[int]:
        """Positions of the generators whose grade lies in mask."""
        return [g for g, grade in enumerate(self._grades) if mask >> grade & 1]

    def block(self, p: str, q: str) -> ExactMatrix:
        return self.differential.submatrix(self.grade_indices(self.poset.index(p)),
                                           self.grade_indices(self.poset.index(q)))

    def nonzero_blocks(self) -> Iterator[Tuple[int, int, ExactMatrix]]:
        for p in _bits(self.support):
            for q in _bits(self.support):
                rows, cols = self.grade_indices(p), self.grade_indices(q)
                if not rows or not cols:
                    continue
                blk = self.differential.submatrix(rows, cols)
                if not blk.is_zero():
                    yield p, q, blk

    def is_strict(self) -> bool:
        return all(p != q for p, q, _ in self.nonzero_blocks())

    def with_differential(self, d: ExactMatrix) -> 'GradedDifferentialGroup':
        return GradedDifferentialGroup(self.poset, self.coefficients, self.ranks, d, self.degrees,
                                       self.strict_flag, self.support)


@dataclass(frozen=True)
class ValidationReport:
    d_squared_zero: bool
    filtered: bool
    strict: bool
    degree_consistent: Optional[bool]
    failures: Tuple[str, ...] = ()
    offending_blocks: Tuple[Tuple[str, str], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.failures


def validate(c: GradedDifferentialGroup) -> ValidationReport:
    poset = c.poset
    failures: List[str] = []
    offending: List[Tuple[str, str]] = []
    d2 = (c.differential @ c.differential).is_zero()
    if not d2:
        failures.append("d∘d = 0")
    filtered = True
    strict = True
    for p, q, _ in c.nonzero_blocks():
        if not poset.leq_index(p, q):
            filtered = False
            offending.append((poset.elements[p], poset.elements[q]))
        if p == q:
            strict = False
    if not filtered:
        failures.append("filtered")
    if c.strict_flag and not strict:
        failures.append("strict")
    degree_ok: Optional[bool] = None
    if c.degrees is not None:
        degree_ok = all(c.degrees[i] == c.degrees[j] - 1 for i, j, _ in c.differential.nonzero_entries())
        if not degree_ok:
            failures.append("degree -1")
    return ValidationReport(d2, filtered, strict, degree_ok, tuple(failures), tuple(offending))


def restrict(c: GradedDifferentialGroup, xi: ConvexSet) -> GradedDifferentialGroup:
    """G_ξ C with the sub-block differential."""
    if not c.poset.is_convex(xi.mask):
        raise NotConvex(f"{xi.labels()} is not convex")
    mask = xi.mask & c.support
    if mask == c.support:
        return c
    idx = c.generator_indices(mask)
    degrees = None if c.degrees is None else tuple(c.degrees[g] for g in idx)
    return GradedDifferentialGroup(c.poset, c.coefficients, c.ranks, c.differential.submatrix(idx, idx),
                                   degrees, c.strict_flag, mask)


def restrict_mask(c: GradedDifferentialGroup, mask: int) -> GradedDifferentialGroup:
    return restrict(c, ConvexSet(c.poset, mask))


def filtration_subgroup(c: GradedDifferentialGroup, alpha: DownSet) -> List[int]:
    """Generator positions spanning F_α C."""
    return c.generator_indices(alpha.mask)


@dataclass(frozen=True)
class FilteredChainMap:
    """Block map f^{pq}: G_q C -> G_p A; rows index target generators, columns source generators."""
    source: GradedDifferentialGroup
    target: GradedDifferentialGroup
    matrix: ExactMatrix

    def __post_init__(self):
        if self.source.poset is not self.target.poset and self.source.poset.elements != self.target.poset.elements:
            raise ValidationError("same poset", "maps must join groups graded by the same poset")
        if (self.matrix.rows, self.matrix.cols) != (self.target.size, self.source.size):
            raise ValidationError("block dimensions",
                                  f"map is {self.matrix.rows}x{self.matrix.cols}, expected {self.target.size}x{self.source.size}")

    def block(self, p: str, q: str) -> ExactMatrix:
        poset = self.source.poset
        return self.matrix.submatrix(self.target.grade_indices(poset.index(p)),
                                     self.source.grade_indices(poset.index(q)))

    def nonzero_blocks(self) -> Iterator[Tuple[int, int, ExactMatrix]]:
        src, tgt = self.source, self.target
        for p in _bits(tgt.support):
            for q in _bits(src.support):
                rows, cols = tgt.grade_indices(p), src.grade_indices(q)
                if rows and cols:
                    blk = self.matrix.submatrix(rows, cols)
                    if not blk.is_zero():
                        yield p, q, blk

    def is_filtered(self) -> bool:
        return all(self.source.poset.leq_index(p, q) for p, q, _ in self.nonzero_blocks())

    def is_chain_map(self) -> bool:
        return self.target.differential @ self.matrix == self.matrix @ self.source.differential

    def is_degree_preserving(self, shift: int = 0) -> Optional[bool]:
        if self.source.degrees is None or self.target.degrees is None:
            return None
        return all(self.target.degrees[i] == self.source.degrees[j] + shift
                   for i, j, _ in self.matrix.nonzero_entries())

    def restrict(self, mask: int) -> 'FilteredChainMap':
        """The map F_α C -> F_α A for a down-set mask α."""
        src, tgt = restrict_mask(self.source, mask), restrict_mask(self.target, mask)
        rows = self.target.generator_indices(tgt.support)
        cols = self.source.generator_indices(src.support)
        return FilteredChainMap(src, tgt, self.matrix.submatrix(rows, cols))


@dataclass(frozen=True)
class ChainHomotopy:
    source: GradedDifferentialGroup
    target: GradedDifferentialGroup
    matrix: ExactMatrix

    def is_filtered(self) -> bool:
        return FilteredChainMap(self.source, self.target, self.matrix).is_filtered()


@dataclass(frozen=True)
class MapReport:
    filtered: bool
    chain: bool
    preserving: bool
    equality: Optional[bool]
    degree_preserving: Optional[bool] = None
    failures: Tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return self.filtered and self.chain and self.equality is not False and self.degree_preserving is not False


def _diagonal_invertible(f: FilteredChainMap) -> List[str]:
    bad: List[str] = []
    ring = f.matrix.coefficients
    for i, label in enumerate(f.source.poset.elements):
        rows, cols = f.target.grade_indices(i), f.source.grade_indices(i)
        if len(rows) != len(cols):
            bad.append(label)
            continue
        if rows and not ring.is_unit(determinant(f.matrix.submatrix(rows, cols))):
            bad.append(label)
    return bad


def _diagonal_onto(f: FilteredChainMap) -> List[str]:
    bad: List[str] = []
    ring = f.matrix.coefficients
    for i, label in enumerate(f.source.poset.elements):
        rows, cols = f.target.grade_indices(i), f.source.grade_indices(i)
        if rows and not _spans(f.matrix.submatrix(rows, cols), ExactMatrix.identity(len(rows), ring)):
            bad.append(label)
    return bad


def validate_map(f: FilteredChainMap, mode: str = "Preserving") -> MapReport:
    """Preserving: f(F_α C) ⊆ F_α A for all α. Equality: additionally f(F_α C) = F_α A."""
    if mode not in ("Preserving", "Equality"):
        raise ValidationError("map mode", f"unknown mode {mode!r}")
    failures: List[str] = []
    filtered = f.is_filtered()
    if not filtered:
        failures.append("filtered")
    chain = f.is_chain_map()
    if not chain:
        failures.append("chain condition")
    equality: Optional[bool] = None
    if mode == "Equality":
        # block upper triangular: f(F_α C) = F_α A for every α iff each diagonal block is onto
        bad = _diagonal_onto(f) if filtered else ["(not filtered)"]
        equality = not bad
        if bad:
            failures.append("equality at " + ",".join(bad))
    degree_ok = f.is_degree_preserving()
    if degree_ok is False:
        failures.append("degree preserving")
    return MapReport(filtered, chain, filtered, equality, degree_ok, tuple(failures))


@dataclass(frozen=True)
class FiltrationReport:
    preserving: bool
    equality: bool
    failures: Tuple[str, ...] = ()


def subgroup_filtration_check(f: ExactMatrix, source_filtration: Dict[str, ExactMatrix],
                              target_filtration: Dict[str, ExactMatrix]) -> FiltrationReport:
    """Compare f(F_α C) with F_α A for filtrations given by explicit generator columns.

    Keys name the filtration index α; missing keys on one side count as the zero subgroup.
    """
    preserving, equality = True, True
    failures: List[str] = []
    ring = f.coefficients
    for key in sorted(set(source_filtration) | set(target_filtration)):
        src = source_filtration.get(key, ExactMatrix.zeros(f.cols, 0, ring))
        tgt = target_filtration.get(key, ExactMatrix.zeros(f.rows, 0, ring))
        image = f @ src
        inside = _spans(tgt, image)
        onto = _spans(image, tgt)
        if not inside:
            preserving = False
            failures.append(f"{key}: image not contained")
        if not (inside and onto):
            equality = False
            if inside:
                failures.append(f"{key}: image is a proper subgroup")
    return FiltrationReport(preserving, equality, tuple(failures))


def _spans(outer: ExactMatrix, inner: ExactMatrix) -> bool:
    if inner.cols == 0 or inner.is_zero():
        return True
    if outer.cols == 0:
        return False
    return not isinstance(solve(outer, inner), NoSolution)


def verify_homotopy(f: FilteredChainMap, g: FilteredChainMap, h: ChainHomotopy) -> bool:
    """f - g == h d_C + d_A h, exactly."""
    lhs = f.matrix - g.matrix
    rhs = h.matrix @ f.source.differential + f.target.differential @ h.matrix
    return lhs == rhs


def conjugate(c: GradedDifferentialGroup, f: FilteredChainMap) -> GradedDifferentialGroup:
    """The group with differential f d_C f^-1, for an invertible filtered f with source c.

    Only the grading of f.target is used; its differential is ignored.
    """
    if f.source.ranks != c.ranks or f.target.ranks != c.ranks:
        raise ValidationError("declared ranks", "conjugating map must have the ranks of the group on both sides")
    if not f.is_filtered():
        raise ValidationError("filtered", "conjugating map is not filtered")
    bad = _diagonal_invertible(f)
    if bad:
        raise NotInvertible(f"diagonal blocks at {','.join(bad)} are not invertible")
    d = f.matrix @ c.differential @ inverse(f.matrix)
    return c.with_differential(d)


def identity_map(c: GradedDifferentialGroup) -> FilteredChainMap:
    return FilteredChainMap(c, c, ExactMatrix.identity(c.size, c.coefficients))


def compose(g: FilteredChainMap, f: FilteredChainMap) -> FilteredChainMap:
    """g after f."""
    if f.target.size != g.source.size:
        raise ValidationError("composable maps", f"{f.target.size} vs {g.source.size} generators")
    return FilteredChainMap(f.source, g.target, g.matrix @ f.matrix)


def inverse_map(f: FilteredChainMap) -> FilteredChainMap:
    return FilteredChainMap(f.target, f.source, inverse(f.matrix))


def zero_homotopy(c: GradedDifferentialGroup, a: Optional[GradedDifferentialGroup] = None) -> ChainHomotopy:
    a = c if a is None else a
    return ChainHomotopy(c, a, ExactMatrix.zeros(a.size, c.size, c.coefficients))


@dataclass(frozen=True)
class ClassCondition:
    """f sends each cycle column to the matching target column modulo boundaries of F_β A.

    Cycles are in the coordinates of c.generator_indices(mask), targets in those of
    a.generator_indices(mask), for a down-set mask β.
    """
    mask: int
    cycles: ExactMatrix
    targets: ExactMatrix


def complete_chain_map(c: GradedDifferentialGroup, a: GradedDifferentialGroup,
                       diagonal: Dict[int, ExactMatrix],
                       classes: Sequence[ClassCondition] = ()) -> Optional[FilteredChainMap]:
    """Fill the off-diagonal blocks f^{pq} (p < q) so that d_A f = f d_C, or None.

    The diagonal blocks are fixed by `diagonal` (keyed by element index). In chain-complex
    mode only degree-preserving entries are free. Each ClassCondition adds the equations
    f z - t = d_A w with fresh unknowns w. The returned solution is the one SNF back
    substitution produces with free parameters set to zero.
    """
    poset = c.poset
    ring = c.coefficients
    grade_c, grade_a = c.grade_of(), a.grade_of()
    base = ExactMatrix.zeros(a.size, c.size, ring)
    for i, blk in diagonal.items():
        rows, cols = a.grade_indices(i), c.grade_indices(i)
        if (blk.rows, blk.cols) != (len(rows), len(cols)):
            raise ValidationError("block dimensions", f"diagonal block at {poset.elements[i]!r}")
        if rows and cols:
            base = base.with_block(rows, cols, blk)

    unknowns = [(r, s) for r in range(a.size) for s in range(c.size)
                if poset.lt_index(grade_a[r], grade_c[s])
                and (c.degrees is None or a.degrees is None or a.degrees[r] == c.degrees[s])]
    # equations: entries (r, s) of d_A f - f d_C with grade(r) <= grade(s)
    equations = [(r, s) for r in range(a.size) for s in range(c.size) if poset.leq_index(grade_a[r], grade_c[s])]
    d_a, d_c = a.differential, c.differential
    residual = d_a @ base - base @ d_c
    eq_pos = {e: k for k, e in enumerate(equations)}
    coeff = [[0] * len(unknowns) for _ in equations]
    for u, (r, s) in enumerate(unknowns):
        # d_A E_rs puts column r of d_A into column s; E_rs d_C puts row s of d_C into row r
        for x in range(a.size):
            val = d_a[x, r]
            if val != 0 and (x, s) in eq_pos:
                coeff[eq_pos[(x, s)]][u] += val
        for y in range(c.size):
            val = d_c[s, y]
            if val != 0 and (r, y) in eq_pos:
                coeff[eq_pos[(r, y)]][u] -= val
    rhs = [[-residual[r, s]] for (r, s) in equations]

    width = len(unknowns)
    by_row: Dict[int, List[Tuple[int, int]]] = {}
    for u, (r, s) in enumerate(unknowns):
        by_row.setdefault(r, []).append((u, s))
    for cond in classes:
        rows_a, cols_c = a.generator_indices(cond.mask), c.generator_indices(cond.mask)
        col_pos = {s: k for k, s in enumerate(cols_c)}
        fixed = cond.targets - base.submatrix(rows_a, cols_c) @ cond.cycles
        k_cols = cond.cycles.cols
        for row in coeff:
            row.extend([0] * (len(rows_a) * k_cols))
        for x, r in enumerate(rows_a):
            for j in range(k_cols):
                row = [0] * (width + len(rows_a) * k_cols)
                for u, s in by_row.get(r, ()):
                    if s in col_pos:
                        row[u] += cond.cycles[col_pos[s], j]
                for k, r2 in enumerate(rows_a):
                    row[width + k * k_cols + j] -= d_a[r, r2]
                coeff.append(row)
                rhs.append([fixed[x, j]])
        width += len(rows_a) * k_cols

    if not width:
        return FilteredChainMap(c, a, base) if all(v[0] == 0 for v in rhs) else None
    system = ExactMatrix(len(coeff), width, ring, coeff)
    x = solve(system, ExactMatrix(len(rhs), 1, ring, rhs))
    if isinstance(x, NoSolution):
        logger.debug(f"No chain map completes the given diagonal: {x.reason}")
        return None
    data = base.to_lists()
    for u, (r, s) in enumerate(unknowns):
        data[r][s] = x[u, 0]
    return FilteredChainMap(c, a, ExactMatrix(a.size, c.size, ring, data))


def diagonal_blocks(f: FilteredChainMap) -> Dict[int, ExactMatrix]:
    out = {}
    for i in range(len(f.source.poset)):
        rows, cols = f.target.grade_indices(i), f.source.grade_indices(i)
        out[i] = f.matrix.submatrix(rows, cols)
    return out

