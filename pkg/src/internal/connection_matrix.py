"""
Connection matrices over fields by filtered cancellation, and the Morse-Smale uniqueness check.

A nonzero entry b = d[i][j] with i, j in the same grade lets the pair (e_j, d e_j) be split off
as an acyclic summand. The remaining generators carry d' = ε - γ b⁻¹ δ, where δ is row i,
γ is column j and ε the rest of d. Repeating until every diagonal block vanishes leaves a
strict group with the same Cartan-Eilenberg system.
"""
import itertools
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .ce_system import BudgetExceeded, CEIso, CESystem, Comparison, NotIsomorphic, ce_isomorphic_bruteforce
from .errors import CEIsoInconsistent, GradingMismatch, NotAField, ValidationError
from .exact_linalg import ExactMatrix, BINARY
from .fgab import GroupHom, homology, induced_hom
from .graded_diff import (ChainHomotopy, FilteredChainMap, GradedDifferentialGroup, compose, identity_map,
                          inverse_map, restrict_mask, validate, verify_homotopy)
from .iso_constructor import build_filtered_iso
from .poset import Poset
from ..utils.logging_setup import get_logger

logger = get_logger('internal.connection_matrix')


@dataclass(frozen=True)
class ReductionWitness:
    """a strict; f: a -> d and g: d -> a filtered chain maps with g f = id and f g - id = h d + d h."""
    d: GradedDifferentialGroup
    a: GradedDifferentialGroup
    f: FilteredChainMap
    g: FilteredChainMap
    h: ChainHomotopy
    kept: Tuple[int, ...] = ()
    pivots: Tuple[Tuple[int, int], ...] = ()

    def failures(self) -> List[str]:
        out = []
        if not self.a.is_strict():
            out.append("strict")
        for name, m in (("f", self.f), ("g", self.g)):
            if not m.is_filtered():
                out.append(f"{name} filtered")
            if not m.is_chain_map():
                out.append(f"{name} chain map")
            if m.is_degree_preserving() is False:
                out.append(f"{name} degree preserving")
        if not self.h.is_filtered():
            out.append("h filtered")
        if compose(self.g, self.f).matrix != ExactMatrix.identity(self.a.size, self.a.coefficients):
            out.append("g∘f = id")
        if not verify_homotopy(compose(self.f, self.g), identity_map(self.d), self.h):
            out.append("f∘g - id = hd + dh")
        return out

    def verify(self) -> bool:
        return not self.failures()


def _torsion_message(d: GradedDifferentialGroup) -> str:
    parts = []
    for i in range(len(d.poset)):
        group = homology(restrict_mask(d, 1 << i).differential).group
        if group.torsion:
            parts.append(f"{d.poset.elements[i]}: {group}")
    if parts:
        return f"connection matrices need field coefficients; singleton E-terms carry torsion ({'; '.join(parts)})"
    return f"connection matrices need field coefficients, got {d.coefficients.name}"


def _priority(n: int, pivot_order: Optional[Sequence[int]], seed: Optional[int]) -> List[int]:
    if pivot_order is not None:
        if sorted(pivot_order) != list(range(n)):
            raise ValidationError("pivot order", "pivot order must be a permutation of the generators")
        rank = [0] * n
        for k, g in enumerate(pivot_order):
            rank[g] = k
        return rank
    order = list(range(n))
    if seed is not None:
        random.Random(seed).shuffle(order)
        rank = [0] * n
        for k, g in enumerate(order):
            rank[g] = k
        return rank
    return order


def _choose_pivot(dm: ExactMatrix, kept: List[int], grades: List[int], position: Dict[int, int],
                  priority: List[int]) -> Optional[Tuple[int, int]]:
    best, best_key = None, None
    for i, j, _ in dm.nonzero_entries():
        if i == j or grades[kept[i]] != grades[kept[j]]:
            continue
        key = (position[grades[kept[j]]], priority[kept[j]], priority[kept[i]])
        if best_key is None or key < best_key:
            best, best_key = (i, j), key
    return best


def _cancel(dm: ExactMatrix, i: int, j: int) -> Tuple[ExactMatrix, ExactMatrix, ExactMatrix, ExactMatrix]:
    """One cancellation: (include, project, homotopy, reduced differential) in local coordinates."""
    ring = dm.coefficients
    m = dm.rows
    rest = [r for r in range(m) if r not in (i, j)]
    b_inv = ring.inverse(dm[i, j])
    delta = [dm[i, r] for r in rest]
    gamma = [dm[s, j] for s in rest]
    reduced = [[dm[s, r] - gamma[a] * b_inv * delta[b] for b, r in enumerate(rest)] for a, s in enumerate(rest)]
    include = ExactMatrix.zeros(m, len(rest), ring).to_lists()
    project = ExactMatrix.zeros(len(rest), m, ring).to_lists()
    for k, r in enumerate(rest):
        include[r][k] = 1
        include[j][k] = -b_inv * delta[k]
        project[k][r] = 1
        project[k][i] = -b_inv * gamma[k]
    homotopy = ExactMatrix.zeros(m, m, ring).to_lists()
    homotopy[j][i] = -b_inv
    n = len(rest)
    return (ExactMatrix(m, n, ring, include), ExactMatrix(n, m, ring, project),
            ExactMatrix(m, m, ring, homotopy), ExactMatrix(n, n, ring, reduced))


def reduce(d: GradedDifferentialGroup, pivot_order: Optional[Sequence[int]] = None,
           seed: Optional[int] = None) -> ReductionWitness:
    """Cancel same-grade pairs until the group is strict.

    Pivots are taken by (grade position in the linear extension, column, row); pivot_order
    (a permutation of the generators) or seed reorders the column and row tie-breaks.
    """
    ring = d.coefficients
    if not ring.is_field:
        raise NotAField(_torsion_message(d))
    report = validate(d)
    if not (report.d_squared_zero and report.filtered):
        raise ValidationError(report.failures[0], "reduction needs a filtered differential")
    poset = d.poset
    n = d.size
    grades = d.grade_of()
    position = {q: k for k, q in enumerate(poset.linear_extension())}
    priority = _priority(n, pivot_order, seed)

    current = d.differential
    kept = list(range(n))
    include = ExactMatrix.identity(n, ring)
    project = ExactMatrix.identity(n, ring)
    homotopy = ExactMatrix.zeros(n, n, ring)
    pivots: List[Tuple[int, int]] = []
    while True:
        pivot = _choose_pivot(current, kept, grades, position, priority)
        if pivot is None:
            break
        i, j = pivot
        f_s, g_s, h_s, current = _cancel(current, i, j)
        homotopy = homotopy + include @ h_s @ project
        include = include @ f_s
        project = g_s @ project
        pivots.append((kept[i], kept[j]))
        logger.debug(f"Cancelled generators {kept[j]} -> {kept[i]} in grade {poset.elements[grades[kept[j]]]!r}")
        kept = [g for k, g in enumerate(kept) if k not in (i, j)]

    ranks = tuple(sum(1 for g in kept if grades[g] == p) for p in range(len(poset)))
    degrees = None if d.degrees is None else tuple(d.degrees[g] for g in kept)
    a = GradedDifferentialGroup(poset, ring, ranks, current, degrees, True, d.support)
    witness = ReductionWitness(d, a, FilteredChainMap(a, d, include), FilteredChainMap(d, a, project),
                               ChainHomotopy(d, d, homotopy), tuple(kept), tuple(pivots))
    broken = witness.failures()
    if broken:
        raise ValidationError(broken[0], "reduction witness identities fail")
    logger.info(f"Reduced {n} generators to {a.size} with {len(pivots)} cancellation(s)")
    return witness


def connection_matrix(d: GradedDifferentialGroup) -> GradedDifferentialGroup:
    return reduce(d).a


# Morse-Smale


@dataclass(frozen=True)
class MorseSmaleGrading:
    mu: Dict[str, int] = field(default_factory=dict)

    def order_violations(self, poset: Poset) -> List[Tuple[str, str]]:
        """Pairs p < q with μ(p) >= μ(q)."""
        return [(p, q) for p in poset.elements for q in poset.elements
                if p != q and poset.leq(p, q) and p in self.mu and q in self.mu and self.mu[p] >= self.mu[q]]


@dataclass(frozen=True)
class MorseSmaleReport:
    ok: bool
    reasons: Tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def check_morse_smale(c: GradedDifferentialGroup, mu: MorseSmaleGrading) -> MorseSmaleReport:
    poset = c.poset
    reasons: List[str] = []
    if c.coefficients != BINARY:
        reasons.append(f"coefficients are {c.coefficients.name}, not Z2")
    if c.degrees is None:
        reasons.append("no degree map")
    missing = [p for p in poset.elements if p not in mu.mu]
    if missing:
        reasons.append(f"μ undefined on {','.join(missing)}")
    for i, p in enumerate(poset.elements):
        idx = c.grade_indices(i)
        if len(idx) != 1:
            reasons.append(f"grade {p} has rank {len(idx)}")
        elif c.degrees is not None and p in mu.mu and c.degrees[idx[0]] != mu.mu[p]:
            reasons.append(f"grade {p} has degree {c.degrees[idx[0]]}, μ = {mu.mu[p]}")
    for p, q in mu.order_violations(poset):
        reasons.append(f"{p} < {q} but μ({p}) >= μ({q})")
    for k, p in enumerate(poset.elements):
        for q in poset.elements[k + 1:]:
            if p in mu.mu and q in mu.mu and mu.mu[p] == mu.mu[q] \
                    and (poset.leq(p, q) or poset.leq(q, p)):
                reasons.append(f"μ({p}) = μ({q}) on comparable elements")
    return MorseSmaleReport(not reasons, tuple(reasons))


def relating_automorphisms(c1: GradedDifferentialGroup, c2: GradedDifferentialGroup) -> List[ExactMatrix]:
    """Every filtered, degree-preserving f over Z2 with unit diagonal and f d1 = d2 f.

    Free entries sit at generators r, s with grade(r) < grade(s) and equal degrees; a
    Morse-Smale grading leaves none, so the identity is the only candidate.
    """
    grades = c1.grade_of()
    poset = c1.poset
    free = [(r, s) for r in range(c1.size) for s in range(c1.size)
            if poset.lt_index(grades[r], grades[s])
            and (c1.degrees is None or c1.degrees[r] == c1.degrees[s])]
    found = []
    for values in itertools.product((0, 1), repeat=len(free)):
        data = ExactMatrix.identity(c1.size, c1.coefficients).to_lists()
        for (r, s), v in zip(free, values):
            data[r][s] = v
        f = ExactMatrix(c1.size, c1.size, c1.coefficients, data)
        if f @ c1.differential == c2.differential @ f:
            found.append(f)
    logger.debug(f"{len(found)} of {2 ** len(free)} filtered automorphisms relate the differentials")
    return found


def certify_unique_differential(c1: GradedDifferentialGroup, c2: GradedDifferentialGroup,
                                mu: MorseSmaleGrading, budget: int = 10000) -> bool:
    """E(c1) ≅ E(c2) iff d1 = d2 for Morse-Smale groups on the same (P, μ).

    The filtered chain automorphisms relating the two differentials are enumerated; only the
    identity can occur, so they are related exactly when d1 = d2. The brute-force comparison
    must agree, otherwise CEIsoInconsistent is raised.
    """
    if c1.poset.elements != c2.poset.elements or c1.degrees != c2.degrees:
        raise GradingMismatch("instances carry different posets or degree maps")
    for c in (c1, c2):
        report = check_morse_smale(c, mu)
        if not report:
            raise GradingMismatch("; ".join(report.reasons))
    related = relating_automorphisms(c1, c2)
    identity = ExactMatrix.identity(c1.size, c1.coefficients)
    if any(f != identity for f in related):
        raise CEIsoInconsistent("a filtered automorphism other than the identity relates the differentials")
    equal = bool(related)
    cross = ce_isomorphic_bruteforce(CESystem(c1), CESystem(c2), budget)
    if isinstance(cross, BudgetExceeded):
        logger.warning(f"Brute-force comparison gave up ({cross.reason}); relying on the enumeration")
    elif bool(cross) != equal:
        raise CEIsoInconsistent(f"enumeration says {equal} but the brute-force comparison says {bool(cross)}")
    return equal


# chain equivalence through the strict forms


def _restricted_hom(m: FilteredChainMap, xi: int, src: CESystem, tgt: CESystem) -> GroupHom:
    rows, cols = m.target.generator_indices(xi), m.source.generator_indices(xi)
    return induced_hom(m.matrix.submatrix(rows, cols), src.term_data(xi), tgt.term_data(xi), check=False)


def _transport(h: CEIso, into: ReductionWitness, out_of: ReductionWitness,
               sys_in: CESystem, sys_out: CESystem) -> CEIso:
    """The CE isomorphism between the strict forms: H(g_out) ∘ h ∘ H(f_in) on every convex set."""
    moved = CEIso(sys_in, sys_out)
    for xi in sys_in.convex_masks():
        hom = h.component(xi)
        if hom is None:
            continue
        left = _restricted_hom(into.f, xi, sys_in, h.source)
        right = _restricted_hom(out_of.g, xi, h.target, sys_out)
        moved.components[xi] = right @ hom @ left
    return moved


@dataclass(frozen=True)
class ChainEquivalence:
    """phi: D -> D', psi: D' -> D with psi phi ~ id via homotopy and phi psi ~ id via homotopy_prime."""
    phi: FilteredChainMap
    psi: FilteredChainMap
    homotopy: ChainHomotopy
    homotopy_prime: ChainHomotopy
    strict_iso: FilteredChainMap
    certified: bool


def chain_equivalence(d: GradedDifferentialGroup, d_prime: GradedDifferentialGroup, h_iso: CEIso) -> ChainEquivalence:
    w, w_prime = reduce(d), reduce(d_prime)
    sys_a, sys_a_prime = CESystem(w.a), CESystem(w_prime.a)
    strict = build_filtered_iso(_transport(h_iso, w, w_prime, sys_a, sys_a_prime))
    phi = compose(w_prime.f, compose(strict, w.g))
    psi = compose(w.f, compose(inverse_map(strict), w_prime.g))
    certified = (verify_homotopy(compose(psi, phi), identity_map(d), w.h)
                 and verify_homotopy(compose(phi, psi), identity_map(d_prime), w_prime.h))
    if not certified:
        logger.error("Composite maps fail the homotopy identities")
    return ChainEquivalence(phi, psi, w.h, w_prime.h, strict, certified)


def compare_via_reduction(sys_c: CESystem, sys_a: CESystem, budget: int = 10000,
                          seed: Optional[int] = None) -> Comparison:
    """Compare field instances through their connection matrices, mapping the answer back."""
    w_c, w_a = reduce(sys_c.base, seed=seed), reduce(sys_a.base, seed=seed)
    red_c, red_a = CESystem(w_c.a, sys_c.max_elements), CESystem(w_a.a, sys_a.max_elements)
    result = ce_isomorphic_bruteforce(red_c, red_a, budget, seed)
    if not isinstance(result, CEIso):
        return result
    lifted = CEIso(sys_c, sys_a)
    for xi in sys_c.convex_masks():
        into = _restricted_hom(w_c.g, xi, sys_c, red_c)
        out = _restricted_hom(w_a.f, xi, red_a, sys_a)
        lifted.components[xi] = out @ result.component(xi) @ into
    report = lifted.verify()
    if not report.ok:
        failure = report.first_failure()
        return NotIsomorphic(None, None, f"lifted family fails {failure.suite} at {failure.label}")
    logger.debug(f"Compared through strict forms of sizes {w_c.a.size} and {w_a.a.size}")
    return lifted
