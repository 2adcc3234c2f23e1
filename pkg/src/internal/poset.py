"""
Finite posets, their down-set lattice O(P) and convex sets Co(P).

Subsets of a poset are bitmasks over the declared element order; bit i stands for the
i-th element. That order is also the order of grades in every block matrix downstream.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import BoundExceeded, NotADownSet, NotConvex, NotJoinIrreducible, ValidationError
from ..utils.logging_setup import get_logger

logger = get_logger('internal.poset')

DEFAULT_MAX_ELEMENTS = 20


def _bits(mask: int) -> Iterator[int]:
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def popcount(mask: int) -> int:
    return bin(mask).count("1")


class Poset:
    """A finite poset given by labels and an arbitrary generating relation.

    The reflexive-transitive closure of the relation is computed on construction;
    a cycle in the closure violates antisymmetry and is rejected.
    """

    def __init__(self, elements: Sequence[str], relations: Iterable[Tuple[str, str]] = ()):
        self.elements: Tuple[str, ...] = tuple(str(e) for e in elements)
        self._index: Dict[str, int] = {}
        for i, label in enumerate(self.elements):
            if label in self._index:
                raise ValidationError("unique labels", f"element {label!r} declared twice")
            self._index[label] = i

        n = len(self.elements)
        self.relations: Tuple[Tuple[str, str], ...] = tuple((str(a), str(b)) for a, b in relations)
        # _down[i]: mask of elements <= i
        down = [1 << i for i in range(n)]
        for a, b in self.relations:
            down[self.index(b)] |= 1 << self.index(a)
        changed = True
        while changed:
            changed = False
            for i in range(n):
                closure = down[i]
                for j in _bits(down[i]):
                    closure |= down[j]
                if closure != down[i]:
                    down[i] = closure
                    changed = True
        for i in range(n):
            for j in _bits(down[i]):
                if j != i and down[j] >> i & 1:
                    raise ValidationError(
                        "antisymmetric", f"{self.elements[i]!r} and {self.elements[j]!r} are mutually related")
        self._down: Tuple[int, ...] = tuple(down)
        up = [0] * n
        for i in range(n):
            for j in _bits(down[i]):
                up[j] |= 1 << i
        self._up: Tuple[int, ...] = tuple(up)
        self.full_mask: int = (1 << n) - 1
        depth = [0] * n
        for i in sorted(range(n), key=lambda k: popcount(down[k])):
            below = down[i] & ~(1 << i)
            depth[i] = 1 + max((depth[j] for j in _bits(below)), default=-1)
        self._depth: Tuple[int, ...] = tuple(depth)

    def __len__(self) -> int:
        return len(self.elements)

    def __repr__(self) -> str:
        return f"Poset({list(self.elements)!r}, {list(self.relations)!r})"

    def index(self, label: str) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise ValidationError("declared element", f"unknown element {label!r}") from None

    def leq(self, a: str, b: str) -> bool:
        return bool(self._down[self.index(b)] >> self.index(a) & 1)

    def leq_index(self, i: int, j: int) -> bool:
        return bool(self._down[j] >> i & 1)

    def lt_index(self, i: int, j: int) -> bool:
        return i != j and self.leq_index(i, j)

    def down_mask(self, i: int) -> int:
        return self._down[i]

    def mask_of(self, labels: Iterable[str]) -> int:
        mask = 0
        for label in labels:
            mask |= 1 << self.index(label)
        return mask

    def labels_of(self, mask: int) -> List[str]:
        return [self.elements[i] for i in _bits(mask)]

    def down_closure(self, mask: int) -> int:
        closure = 0
        for i in _bits(mask):
            closure |= self._down[i]
        return closure

    def is_down_set(self, mask: int) -> bool:
        return all(self._down[i] & ~mask == 0 for i in _bits(mask))

    def is_convex(self, mask: int) -> bool:
        # p, r in xi and p <= q <= r imply q in xi
        return all((self._up[p] & self._down[r]) & ~mask == 0
                   for p in _bits(mask) for r in _bits(mask) if self.leq_index(p, r))

    def maximal(self, mask: int) -> List[int]:
        return [i for i in _bits(mask) if self._up[i] & mask == 1 << i]

    def depth(self, i: int) -> int:
        """Length of the longest chain strictly below element i."""
        return self._depth[i]

    def linear_extension(self) -> List[int]:
        """Element indices sorted by (depth, declared position)."""
        return sorted(range(len(self)), key=lambda i: (self.depth(i), i))

    def subposet(self, mask: int) -> 'Poset':
        kept = list(_bits(mask))
        labels = [self.elements[i] for i in kept]
        relations = [(self.elements[i], self.elements[j]) for i in kept for j in kept if self.lt_index(i, j)]
        return Poset(labels, relations)

    def principal(self, label: str) -> 'DownSet':
        return DownSet(self, self._down[self.index(label)])

    def down_set(self, labels: Iterable[str]) -> 'DownSet':
        return DownSet.of(self, self.mask_of(labels))

    def convex_set(self, labels: Iterable[str]) -> 'ConvexSet':
        return ConvexSet.of(self, self.mask_of(labels))

    def empty(self) -> 'DownSet':
        return DownSet(self, 0)

    def top(self) -> 'DownSet':
        return DownSet(self, self.full_mask)


@dataclass(frozen=True)
class DownSet:
    poset: Poset
    mask: int

    @classmethod
    def of(cls, poset: Poset, mask: int) -> 'DownSet':
        if not poset.is_down_set(mask):
            raise NotADownSet(f"{poset.labels_of(mask)} is not downward closed")
        return cls(poset, mask)

    def __contains__(self, label: str) -> bool:
        return bool(self.mask >> self.poset.index(label) & 1)

    def __len__(self) -> int:
        return popcount(self.mask)

    def __or__(self, other: 'DownSet') -> 'DownSet':
        return DownSet(self.poset, self.mask | other.mask)

    def __and__(self, other: 'DownSet') -> 'DownSet':
        return DownSet(self.poset, self.mask & other.mask)

    def __sub__(self, other: 'DownSet') -> 'ConvexSet':
        return ConvexSet(self.poset, self.mask & ~other.mask)

    def labels(self) -> List[str]:
        return self.poset.labels_of(self.mask)

    def __str__(self) -> str:
        return "{" + ",".join(self.labels()) + "}"


@dataclass(frozen=True)
class ConvexSet:
    poset: Poset
    mask: int

    @classmethod
    def of(cls, poset: Poset, mask: int) -> 'ConvexSet':
        if not poset.is_convex(mask):
            raise NotConvex(f"{poset.labels_of(mask)} is not convex")
        return cls(poset, mask)

    def __len__(self) -> int:
        return popcount(self.mask)

    def __contains__(self, label: str) -> bool:
        return bool(self.mask >> self.poset.index(label) & 1)

    def indices(self) -> List[int]:
        return list(_bits(self.mask))

    def labels(self) -> List[str]:
        return self.poset.labels_of(self.mask)

    def __str__(self) -> str:
        return "{" + ",".join(self.labels()) + "}"


class ConvexRelation(Enum):
    ADJACENT = "Adjacent"
    INCOMPARABLE = "Incomparable"
    NEITHER = "Neither"


def _check_bound(poset: Poset, max_elements: Optional[int]) -> None:
    bound = DEFAULT_MAX_ELEMENTS if max_elements is None else max_elements
    if len(poset) > bound:
        raise BoundExceeded("down-set enumeration", len(poset), bound)


def down_set_masks(poset: Poset, max_elements: Optional[int] = None) -> List[int]:
    _check_bound(poset, max_elements)
    order = poset.linear_extension()
    found: List[int] = []

    def extend(position: int, mask: int) -> None:
        if position == len(order):
            found.append(mask)
            return
        i = order[position]
        extend(position + 1, mask)
        below = poset.down_mask(i) & ~(1 << i)
        if below & ~mask == 0:
            extend(position + 1, mask | 1 << i)

    extend(0, 0)
    found.sort(key=lambda m: (popcount(m), list(_bits(m))))
    return found


def down_sets(poset: Poset, max_elements: Optional[int] = None) -> List[DownSet]:
    """Every down-set exactly once, sorted by (cardinality, member indices)."""
    result = [DownSet(poset, mask) for mask in down_set_masks(poset, max_elements)]
    logger.debug(f"Enumerated {len(result)} down-sets of a {len(poset)}-element poset")
    return result


def convex_sets(poset: Poset, max_elements: Optional[int] = None) -> List[ConvexSet]:
    masks = down_set_masks(poset, max_elements)
    seen = {beta & ~alpha for alpha in masks for beta in masks if alpha & ~beta == 0}
    return [ConvexSet(poset, m) for m in sorted(seen, key=lambda m: (popcount(m), list(_bits(m))))]


def join_irreducible_decomposition(alpha: DownSet) -> List[DownSet]:
    """The irredundant principal down-sets whose union is alpha (one per maximal element)."""
    if not alpha.poset.is_down_set(alpha.mask):
        raise NotADownSet(f"{alpha.labels()} is not downward closed")
    poset = alpha.poset
    return [DownSet(poset, poset.down_mask(i)) for i in poset.maximal(alpha.mask)]


def immediate_predecessor(beta: DownSet) -> DownSet:
    tops = beta.poset.maximal(beta.mask)
    if len(tops) != 1:
        raise NotJoinIrreducible(f"{beta} has {len(tops)} maximal elements")
    return DownSet(beta.poset, beta.mask & ~(1 << tops[0]))


def convex_relation(xi: ConvexSet, eta: ConvexSet) -> ConvexRelation:
    poset = xi.poset
    for c in (xi, eta):
        if not poset.is_convex(c.mask):
            raise NotConvex(f"{c.labels()} is not convex")
    related = any(poset.leq_index(p, q) or poset.leq_index(q, p)
                  for p in _bits(xi.mask) for q in _bits(eta.mask))
    if not related:
        return ConvexRelation.INCOMPARABLE
    if adjacent_triple(xi, eta) is not None:
        return ConvexRelation.ADJACENT
    return ConvexRelation.NEITHER


def adjacent_triple(xi: ConvexSet, eta: ConvexSet) -> Optional[Tuple[DownSet, DownSet, DownSet]]:
    """Canonical (alpha, beta, gamma) with xi = beta - alpha and eta = gamma - beta, if any."""
    return _nested_chain(xi.poset, [xi.mask, eta.mask])


def adjacent_quadruple(xi: ConvexSet, eta: ConvexSet,
                       zeta: ConvexSet) -> Optional[Tuple[DownSet, DownSet, DownSet, DownSet]]:
    return _nested_chain(xi.poset, [xi.mask, eta.mask, zeta.mask])


def _nested_chain(poset: Poset, parts: List[int]) -> Optional[tuple]:
    union = 0
    for part in parts:
        if part & union:
            return None
        union |= part
    if not poset.is_convex(union):
        return None
    top = poset.down_closure(union)
    chain = [top & ~union]
    for part in parts:
        chain.append(chain[-1] | part)
    if not all(poset.is_down_set(m) for m in chain):
        return None
    return tuple(DownSet(poset, m) for m in chain)
