"""
Seeded random instances for tests and experiments.

Strict instances are built as d = f d0 f⁻¹ where d0 consists of disjoint elementary pairs
e_x -> c e_y with grade(y) < grade(x), so their E-terms are known in advance.
"""
import random
import string
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .connection_matrix import MorseSmaleGrading
from .errors import ValidationError
from .exact_linalg import Coefficients, ExactMatrix, inverse, kernel_basis
from .graded_diff import GradedDifferentialGroup
from .poset import Poset
from ..utils.logging_setup import get_logger

logger = get_logger('internal.instance_generator')


@dataclass(frozen=True)
class GeneratedInstance:
    group: GradedDifferentialGroup
    base: ExactMatrix
    conjugator: ExactMatrix
    pairs: Tuple[Tuple[int, int], ...]


class InstanceGenerator:

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)

    def random_poset(self, n: int, density: float = 0.4) -> Poset:
        labels = list(string.ascii_lowercase[:n]) if n <= 26 else [f"p{i}" for i in range(n)]
        relations = [(labels[i], labels[j]) for i in range(n) for j in range(i + 1, n) if self.rng.random() < density]
        order = list(range(n))
        self.rng.shuffle(order)
        return Poset([labels[i] for i in order], relations)

    def _coefficient(self, ring: Coefficients):
        if ring.tag == "Z":
            return self.rng.choice((1, 2, 3, -2))
        if ring.tag == "Q":
            return self.rng.choice((Fraction(1), Fraction(2), Fraction(-1), Fraction(1, 2)))
        return self.rng.randrange(1, ring.modulus)

    def _unit(self, ring: Coefficients):
        if ring.tag == "Z":
            return self.rng.choice((1, -1))
        if ring.tag == "Q":
            return self.rng.choice((Fraction(1), Fraction(-1), Fraction(2), Fraction(1, 3)))
        return self.rng.randrange(1, ring.modulus)

    def random_filtered_iso(self, c: GradedDifferentialGroup, steps: int = 4) -> ExactMatrix:
        """Filtered, degree-preserving (when degrees exist) automorphism of the generators of c."""
        ring = c.coefficients
        poset = c.poset
        n = c.size
        grades = c.grade_of()
        deg = c.degrees

        def compatible(r: int, s: int) -> bool:
            return deg is None or deg[r] == deg[s]

        data = ExactMatrix.identity(n, ring).to_lists()
        for r in range(n):
            data[r][r] = self._unit(ring)
        for _ in range(steps * n):
            r, s = self.rng.randrange(n), self.rng.randrange(n)
            if r == s or grades[r] != grades[s] or not compatible(r, s):
                continue
            factor = self.rng.randint(-2, 2)
            # row r += factor * row s, restricted to the grade keeps the diagonal block invertible
            for k in range(n):
                data[r][k] = data[r][k] + factor * data[s][k]
        for r in range(n):
            for s in range(n):
                if poset.lt_index(grades[r], grades[s]) and compatible(r, s):
                    data[r][s] = self.rng.randint(-2, 2)
        return ExactMatrix(n, n, ring, data)

    def strict_instance(self, poset: Poset, ring: Coefficients, max_rank: int = 3, degrees: bool = False,
                        min_pairs: int = 0) -> GeneratedInstance:
        ranks = [self.rng.randint(0, max_rank) for _ in range(len(poset))]
        if not any(ranks):
            ranks[self.rng.randrange(len(poset))] = 1
        grades = [i for i in range(len(poset)) for _ in range(ranks[i])]
        n = len(grades)
        used = set()
        pairs: List[Tuple[int, int]] = []
        order = list(range(n))
        self.rng.shuffle(order)
        for x in order:
            if x in used:
                continue
            below = [y for y in range(n) if y not in used and y != x and poset.lt_index(grades[y], grades[x])]
            if below and (self.rng.random() < 0.6 or len(pairs) < min_pairs):
                y = self.rng.choice(below)
                used.update((x, y))
                pairs.append((x, y))
        d0 = ExactMatrix.zeros(n, n, ring).to_lists()
        for x, y in pairs:
            d0[y][x] = self._coefficient(ring)
        degree_tuple: Optional[Tuple[int, ...]] = None
        if degrees:
            deg = [self.rng.randint(0, 2) for _ in range(n)]
            for x, y in pairs:
                deg[y] = deg[x] - 1
            degree_tuple = tuple(deg)
        base_group = GradedDifferentialGroup(poset, ring, tuple(ranks), ExactMatrix(n, n, ring, d0), degree_tuple, True)
        f = self.random_filtered_iso(base_group)
        group = base_group.with_differential(f @ base_group.differential @ inverse(f))
        logger.debug(f"Strict instance: ranks {ranks}, {len(pairs)} pair(s) over {ring.name}")
        return GeneratedInstance(group, base_group.differential, f, tuple(pairs))

    def acyclic_padding(self, c: GradedDifferentialGroup, count: int = 2) -> GradedDifferentialGroup:
        """c plus `count` cancelling pairs inside single grades, mixed by a filtered automorphism."""
        ring = c.coefficients
        poset = c.poset
        extra: Dict[int, int] = {}
        for _ in range(count):
            p = self.rng.randrange(len(poset))
            extra[p] = extra.get(p, 0) + 1
        ranks = tuple(c.ranks[i] + 2 * extra.get(i, 0) for i in range(len(poset)))
        n = sum(ranks)
        new_pos: List[int] = []
        pads: List[Tuple[int, int, int]] = []
        offset = 0
        for i in range(len(poset)):
            new_pos.extend(range(offset, offset + c.rank(i)))
            for k in range(extra.get(i, 0)):
                base = offset + c.rank(i) + 2 * k
                pads.append((base, base + 1, i))
            offset += ranks[i]
        d = ExactMatrix.zeros(n, n, ring).to_lists()
        for r, s, value in c.differential.nonzero_entries():
            d[new_pos[r]][new_pos[s]] = value
        deg: Optional[List[int]] = None
        if c.degrees is not None:
            deg = [0] * n
            for k, g in enumerate(new_pos):
                deg[g] = c.degrees[k]
        for u, v, _ in pads:
            d[u][v] = 1
            if deg is not None:
                deg[v] = self.rng.randint(0, 2)
                deg[u] = deg[v] - 1
        padded = GradedDifferentialGroup(poset, ring, ranks, ExactMatrix(n, n, ring, d),
                                         None if deg is None else tuple(deg))
        f = self.random_filtered_iso(padded)
        return padded.with_differential(f @ padded.differential @ inverse(f))

    def perturb(self, inst: GeneratedInstance) -> GradedDifferentialGroup:
        """Drop one elementary pair of d0 and conjugate back; the free rank of H(C) rises by 2."""
        if not inst.pairs:
            raise ValidationError("perturbable", "instance has no elementary pair to drop")
        x, y = self.rng.choice(inst.pairs)
        d0 = inst.base.with_block([y], [x], ExactMatrix.zeros(1, 1, inst.base.coefficients))
        f = inst.conjugator
        return inst.group.with_differential(f @ d0 @ inverse(f))

    def morse_smale_instance(self, poset: Poset) -> Tuple[GradedDifferentialGroup, MorseSmaleGrading]:
        """One Z2 generator per grade in degree depth(p); d e_q a random cycle over p < q one level down."""
        ring = Coefficients.parse("Z2")
        n = len(poset)
        mu = {poset.elements[i]: poset.depth(i) for i in range(n)}
        d = ExactMatrix.zeros(n, n, ring)
        for q in poset.linear_extension():
            candidates = [p for p in range(n) if poset.lt_index(p, q) and poset.depth(p) == poset.depth(q) - 1]
            if not candidates:
                continue
            images = d.submatrix(list(range(n)), candidates)
            kernel = kernel_basis(images)
            column = [0] * len(candidates)
            for k in range(kernel.cols):
                if self.rng.random() < 0.7:
                    column = [a + b for a, b in zip(column, kernel.column(k))]
            d = d.with_block(candidates, [q], ExactMatrix(len(candidates), 1, ring, [[v] for v in column]))
        degrees = tuple(poset.depth(i) for i in range(n))
        group = GradedDifferentialGroup(poset, ring, (1,) * n, d, degrees, True)
        return group, MorseSmaleGrading(mu)
