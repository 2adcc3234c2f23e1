"""
Finitely generated abelian groups in invariant-factor presentation, homomorphisms between
them, and homology of a differential with explicit cycle representatives.

Generators of an FgGroup are ordered torsion first (ascending invariant factors), then free.
Over a field the torsion list is always empty and the group is a vector space.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .errors import NotAChainMap, NotADifferential, ValidationError
from .exact_linalg import (Coefficients, ExactMatrix, NoSolution,
                           kernel_basis, left_inverse, smith_normal_form, solve)
from ..utils.logging_setup import get_logger

logger = get_logger('internal.fgab')


@dataclass(frozen=True)
class FgGroup:
    coefficients: Coefficients
    free_rank: int
    torsion: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.coefficients.is_field and self.torsion:
            raise ValidationError("invariant factors", "vector spaces carry no torsion")
        for a, b in zip(self.torsion, self.torsion[1:]):
            if b % a != 0:
                raise ValidationError("invariant factors", f"{a} does not divide {b}")
        if any(t < 2 for t in self.torsion):
            raise ValidationError("invariant factors", "torsion coefficients must be at least 2")

    @classmethod
    def trivial(cls, coefficients: Coefficients) -> 'FgGroup':
        return cls(coefficients, 0)

    @classmethod
    def from_orders(cls, coefficients: Coefficients, orders: Sequence[int]) -> 'FgGroup':
        """Group presented by cyclic generators of the given orders (0 for infinite order)."""
        n = len(orders)
        relations = ExactMatrix(n, n, coefficients,
                                [[orders[i] if i == j else 0 for j in range(n)] for i in range(n)])
        snf = smith_normal_form(relations)
        diag = snf.diagonal()
        torsion = tuple(int(x) for x in diag if not coefficients.is_unit(x))
        return cls(coefficients, n - snf.rank, torsion)

    @property
    def ngens(self) -> int:
        return len(self.torsion) + self.free_rank

    @property
    def moduli(self) -> Tuple[int, ...]:
        """Order of each generator, 0 meaning infinite."""
        return self.torsion + (0,) * self.free_rank

    def is_trivial(self) -> bool:
        return self.ngens == 0

    def invariants(self) -> Tuple[int, Tuple[int, ...]]:
        return self.free_rank, self.torsion

    def direct_sum(self, other: 'FgGroup') -> 'FgGroup':
        return FgGroup.from_orders(self.coefficients, self.moduli + other.moduli)

    def relation_matrix(self) -> ExactMatrix:
        """Columns generate the relation lattice: t_i e_i for each torsion generator."""
        cols = [[t if i == k else 0 for i in range(self.ngens)] for k, t in enumerate(self.torsion)]
        if not cols:
            return ExactMatrix.zeros(self.ngens, 0, self.coefficients)
        return ExactMatrix.from_columns(cols, self.coefficients, self.ngens)

    def __str__(self) -> str:
        if self.is_trivial():
            return "0"
        tag = self.coefficients.name
        if self.coefficients.tag == "Zp" and self.coefficients.modulus != 2:
            tag = f"Z/{self.coefficients.modulus}"
        parts = []
        if self.free_rank:
            parts.append(tag if self.free_rank == 1 else f"{tag}^{self.free_rank}")
        parts.extend(f"Z/{t}" for t in self.torsion)
        return " ⊕ ".join(parts)


@dataclass(frozen=True)
class GroupHom:
    """Homomorphism given on generators; column j is the image of source generator j."""
    source: FgGroup
    target: FgGroup
    matrix: ExactMatrix

    def __post_init__(self):
        m = self.matrix
        if (m.rows, m.cols) != (self.target.ngens, self.source.ngens):
            raise ValidationError("homomorphism shape",
                                  f"{m.rows}x{m.cols} for {self.source} -> {self.target}")
        object.__setattr__(self, "matrix", m.reduce_rows(self.target.moduli))

    @classmethod
    def zero(cls, source: FgGroup, target: FgGroup) -> 'GroupHom':
        return cls(source, target, ExactMatrix.zeros(target.ngens, source.ngens, source.coefficients))

    @classmethod
    def identity(cls, group: FgGroup) -> 'GroupHom':
        return cls(group, group, ExactMatrix.identity(group.ngens, group.coefficients))

    def is_well_defined(self) -> bool:
        """Source relations land in the target relation lattice."""
        for k, t in enumerate(self.source.torsion):
            image = [t * x for x in self.matrix.column(k)]
            if any(m != 0 and x % m != 0 or m == 0 and x != 0 for x, m in zip(image, self.target.moduli)):
                return False
        return True

    def compose(self, inner: 'GroupHom') -> 'GroupHom':
        """self after inner."""
        if inner.target != self.source:
            raise ValidationError("composable homomorphisms", f"{inner.target} vs {self.source}")
        return GroupHom(inner.source, self.target, self.matrix @ inner.matrix)

    __matmul__ = compose

    def __add__(self, other: 'GroupHom') -> 'GroupHom':
        return GroupHom(self.source, self.target, self.matrix + other.matrix)

    def __sub__(self, other: 'GroupHom') -> 'GroupHom':
        return GroupHom(self.source, self.target, self.matrix - other.matrix)

    def __neg__(self) -> 'GroupHom':
        return GroupHom(self.source, self.target, -self.matrix)

    def is_zero(self) -> bool:
        return self.matrix.is_zero()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupHom):
            return NotImplemented
        return (self.source, self.target, self.matrix) == (other.source, other.target, other.matrix)

    def __hash__(self) -> int:
        return hash((self.source, self.target, self.matrix))


@dataclass(frozen=True)
class IsoDecision:
    is_iso: bool
    inverse: Optional[GroupHom] = None
    obstruction: str = ""

    def __bool__(self) -> bool:
        return self.is_iso


def _augmented(h: GroupHom) -> ExactMatrix:
    """[M | R_T]: images of the source generators next to the target relations."""
    rel = h.target.relation_matrix()
    return ExactMatrix.hstack([h.matrix, rel], h.target.ngens, h.matrix.coefficients)


def is_surjective(h: GroupHom) -> bool:
    aug = _augmented(h)
    snf = smith_normal_form(aug)
    ring = aug.coefficients
    return snf.rank == h.target.ngens and all(ring.is_unit(x) for x in snf.diagonal())


def is_isomorphism(h: GroupHom) -> IsoDecision:
    """Decide invertibility. Equal invariants plus surjectivity suffice (f.g. abelian groups are Hopfian)."""
    if h.source.invariants() != h.target.invariants():
        return IsoDecision(False, obstruction=f"invariants differ: {h.source} vs {h.target}")
    if not is_surjective(h):
        return IsoDecision(False, obstruction="cokernel is nonzero")
    aug = _augmented(h)
    ident = ExactMatrix.identity(h.target.ngens, aug.coefficients)
    x = solve(aug, ident)
    if isinstance(x, NoSolution):
        return IsoDecision(False, obstruction=x.reason)
    inv = x.submatrix(list(range(h.source.ngens)), list(range(h.target.ngens)))
    return IsoDecision(True, inverse=GroupHom(h.target, h.source, inv))


def _kernel_lattice(h: GroupHom) -> ExactMatrix:
    """Columns spanning {x in Z^src : h x lies in the target relations}."""
    aug = _augmented(h)
    k = kernel_basis(aug)
    return k.submatrix(list(range(h.source.ngens)), list(range(k.cols)))


def _contains(outer: ExactMatrix, inner: ExactMatrix) -> bool:
    if inner.cols == 0:
        return True
    if outer.cols == 0:
        return inner.is_zero()
    return not isinstance(solve(outer, inner), NoSolution)


def image_equals_kernel(f: GroupHom, g: GroupHom) -> bool:
    """Exactness of A -f-> B -g-> C at B, compared as sublattices of Z^B containing R_B."""
    if f.target != g.source:
        raise ValidationError("composable homomorphisms", f"{f.target} vs {g.source}")
    b = f.target
    image = ExactMatrix.hstack([f.matrix, b.relation_matrix()], b.ngens, f.matrix.coefficients)
    kernel = _kernel_lattice(g)
    return _contains(kernel, image) and _contains(image, kernel)


@dataclass(frozen=True)
class HomologyData:
    """H = ker d / im d with cycle representatives and the projection from cycles to classes."""
    group: FgGroup
    differential: ExactMatrix
    cycle_basis: ExactMatrix
    projection: ExactMatrix = field(repr=False)

    def project(self, cycles: ExactMatrix) -> ExactMatrix:
        """Class coordinates of the given cycle columns, reduced modulo the torsion."""
        return (self.projection @ cycles).reduce_rows(self.group.moduli)

    def is_boundary(self, cycles: ExactMatrix) -> List[int]:
        """Indices of columns whose class is nonzero."""
        coords = self.project(cycles)
        return [j for j in range(coords.cols) if any(x != 0 for x in coords.column(j))]


def homology(d: ExactMatrix) -> HomologyData:
    ring = d.coefficients
    if not d.is_square():
        raise NotADifferential(f"differential must be square, got {d.rows}x{d.cols}")
    if not (d @ d).is_zero():
        raise NotADifferential("d∘d is not zero")
    n = d.rows
    z = kernel_basis(d)
    if z.cols == 0:
        return HomologyData(FgGroup.trivial(ring), d, z, ExactMatrix.zeros(0, n, ring))
    relations = solve(z, d)
    if isinstance(relations, NoSolution):
        raise NotADifferential(f"image is not contained in the kernel ({relations.reason})")
    snf = smith_normal_form(relations)
    diag = [snf.d[i, i] if i < snf.rank else 0 for i in range(z.cols)]
    kept = [i for i in range(z.cols) if not ring.is_unit(diag[i])]
    torsion = tuple(int(diag[i]) for i in kept if diag[i] != 0)
    group = FgGroup(ring, len(kept) - len(torsion), torsion)
    cycle_basis = z @ snf.u_inv.submatrix(list(range(z.cols)), kept)
    projection = snf.u.submatrix(kept, list(range(z.cols))) @ left_inverse(z)
    logger.debug(f"Homology of a {n}-generator differential: {group}")
    return HomologyData(group, d, cycle_basis, projection)


def induced_hom(f: ExactMatrix, hc: HomologyData, ha: HomologyData, check: bool = True) -> GroupHom:
    """H(f) for a chain map f from the complex of hc to the complex of ha."""
    if check and ha.differential @ f != f @ hc.differential:
        raise NotAChainMap("d_A∘f differs from f∘d_C")
    return GroupHom(hc.group, ha.group, ha.projection @ f @ hc.cycle_basis)

