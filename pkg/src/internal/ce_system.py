"""
The Cartan-Eilenberg system of a graded differential group.

E-terms are keyed by the convex set β∖α rather than by the pair, so excision holds by
construction and ℓ is the identity on the shared presentation. A triangle (α, β, γ) is
likewise determined by ξ = β∖α and η = γ∖β; its maps are cached under (ξ, η).
"""
import itertools
import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

from .errors import BoundExceeded, HypothesisViolated, NotNested, ValidationError
from .exact_linalg import Coefficients, ExactMatrix, determinant
from .fgab import FgGroup, GroupHom, HomologyData, homology, image_equals_kernel, induced_hom, is_isomorphism
from .graded_diff import FilteredChainMap, GradedDifferentialGroup, complete_chain_map, restrict_mask
from .poset import (ConvexRelation, ConvexSet, DownSet, Poset, adjacent_quadruple, adjacent_triple,
                    convex_relation, convex_sets, down_set_masks)
from ..utils.logging_setup import get_logger

logger = get_logger('internal.ce_system')

DEFAULT_MAX_DOWNSETS = 64

MaskLike = Union[DownSet, int]


def _mask(x: MaskLike) -> int:
    return x.mask if isinstance(x, DownSet) else int(x)


@dataclass(frozen=True)
class TriangleMaps:
    i: GroupHom
    j: GroupHom
    k: GroupHom


class CESystem:
    """E(C, d): memoized E-terms and triangle maps over one graded differential group."""

    def __init__(self, base: GradedDifferentialGroup, max_elements: Optional[int] = None):
        self.base = base
        self.poset: Poset = base.poset
        self.max_elements = max_elements
        self._terms: Dict[int, HomologyData] = {}
        self._maps: Dict[Tuple[str, int, int], GroupHom] = {}
        self._exact: Dict[Tuple[int, int], bool] = {}
        self._lock = threading.RLock()

    # E-terms

    def _check_nested(self, *masks: int) -> None:
        for a, b in zip(masks, masks[1:]):
            if a & ~b:
                raise NotNested(f"{self.poset.labels_of(a)} is not contained in {self.poset.labels_of(b)}")
        for m in masks:
            if not self.poset.is_down_set(m):
                raise NotNested(f"{self.poset.labels_of(m)} is not a down-set")

    def term_data(self, xi: int) -> HomologyData:
        """Homology data of G_ξ C for a convex mask ξ."""
        with self._lock:
            data = self._terms.get(xi)
            if data is None:
                logger.debug(f"Computing E-term for {self.poset.labels_of(xi)}")
                data = homology(restrict_mask(self.base, xi).differential)
                self._terms[xi] = data
            return data

    def e_term(self, alpha: MaskLike, beta: MaskLike) -> FgGroup:
        a, b = _mask(alpha), _mask(beta)
        self._check_nested(a, b)
        return self.term_data(b & ~a).group

    def convex_term(self, xi: ConvexSet) -> FgGroup:
        return self.term_data(xi.mask).group

    # maps

    def _local(self, outer: int, inner: int) -> List[int]:
        """Positions of the inner generators inside the generator list of outer."""
        return restrict_mask(self.base, outer).generator_indices(inner)

    def convex_maps(self, xi: int, eta: int) -> TriangleMaps:
        """i: E(ξ) -> E(ξ∪η), j: E(ξ∪η) -> E(η), k: E(η) -> E(ξ) for an adjacent pair."""
        with self._lock:
            key_i = ("i", xi, eta)
            if key_i not in self._maps:
                self._build_maps(xi, eta)
            return TriangleMaps(self._maps[("i", xi, eta)], self._maps[("j", xi, eta)], self._maps[("k", xi, eta)])

    def _build_maps(self, xi: int, eta: int) -> None:
        ring = self.base.coefficients
        zeta = xi | eta
        h1, h2, h3 = self.term_data(xi), self.term_data(zeta), self.term_data(eta)
        n1, n2, n3 = h1.differential.rows, h2.differential.rows, h3.differential.rows
        pos1, pos3 = self._local(zeta, xi), self._local(zeta, eta)
        incl_1 = ExactMatrix.identity(n1, ring).embed(n2, n1, pos1, range(n1))
        incl_3 = ExactMatrix.identity(n3, ring).embed(n2, n3, pos3, range(n3))
        proj_1 = incl_1.transpose()
        proj_3 = incl_3.transpose()
        i_map = GroupHom(h1.group, h2.group, h2.projection @ incl_1 @ h1.cycle_basis)
        j_map = GroupHom(h2.group, h3.group, h3.projection @ proj_3 @ h2.cycle_basis)
        # snake: lift the η-cycle by zero on ξ, apply d, read off the ξ part
        k_map = GroupHom(h3.group, h1.group, h1.projection @ proj_1 @ h2.differential @ incl_3 @ h3.cycle_basis)
        self._maps[("i", xi, eta)] = i_map
        self._maps[("j", xi, eta)] = j_map
        self._maps[("k", xi, eta)] = k_map

    def triangle_maps(self, alpha: MaskLike, beta: MaskLike, gamma: MaskLike) -> TriangleMaps:
        a, b, g = _mask(alpha), _mask(beta), _mask(gamma)
        self._check_nested(a, b, g)
        return self.convex_maps(b & ~a, g & ~b)

    # enumeration

    def down_set_masks(self, max_downsets: Optional[int] = None) -> List[int]:
        masks = down_set_masks(self.poset, self.max_elements)
        bound = DEFAULT_MAX_DOWNSETS if max_downsets is None else max_downsets
        if len(masks) > bound:
            raise BoundExceeded("down-set lattice", len(masks), bound)
        return masks

    def convex_masks(self) -> List[int]:
        return [c.mask for c in convex_sets(self.poset, self.max_elements)]

    def e_term_table(self) -> Dict[int, FgGroup]:
        return {xi: self.term_data(xi).group for xi in self.convex_masks()}


def e_term_table(sys: CESystem) -> Dict[int, FgGroup]:
    """All E-terms keyed by convex set."""
    return sys.e_term_table()


def singleton_terms_match_grades(sys: CESystem) -> bool:
    """For a strict group, H(G_p C) = G_p C for every p."""
    for i in range(len(sys.poset)):
        group = sys.term_data(1 << i).group
        if group.torsion or group.free_rank != sys.base.rank(i):
            return False
    return True


# verification


def verify_exact_triangle(sys: CESystem, alpha: MaskLike, beta: MaskLike, gamma: MaskLike) -> bool:
    a, b, g = _mask(alpha), _mask(beta), _mask(gamma)
    sys._check_nested(a, b, g)
    key = (b & ~a, g & ~b)
    cached = sys._exact.get(key)
    if cached is None:
        t = sys.convex_maps(*key)
        cached = image_equals_kernel(t.i, t.j) and image_equals_kernel(t.j, t.k) and image_equals_kernel(t.k, t.i)
        with sys._lock:
            sys._exact[key] = cached
    return cached


def verify_excision(sys: CESystem, alpha: MaskLike, beta: MaskLike) -> bool:
    """E^α_{α∩β} and E^{α∪β}_β, computed independently, are identified by the identity chain map."""
    a, b = _mask(alpha), _mask(beta)
    for m in (a, b):
        if not sys.poset.is_down_set(m):
            raise NotNested(f"{sys.poset.labels_of(m)} is not a down-set")
    left = restrict_mask(sys.base, a & ~(a & b))
    right = restrict_mask(sys.base, (a | b) & ~b)
    h_left, h_right = homology(left.differential), homology(right.differential)
    ell = induced_hom(ExactMatrix.identity(left.size, sys.base.coefficients), h_left, h_right)
    return bool(is_isomorphism(ell))


def verify_incomparable(sys: CESystem, alpha: MaskLike, beta: MaskLike, beta_prime: MaskLike,
                        gamma: MaskLike) -> bool:
    """j'∘i = id and j∘i' = id through ℓ, both triangles split, E^γ_α ≅ E^β_α ⊕ E^γ_β."""
    a, b, bp, g = (_mask(x) for x in (alpha, beta, beta_prime, gamma))
    sys._check_nested(a, b, g)
    sys._check_nested(a, bp, g)
    if b & ~a != g & ~bp or bp & ~a != g & ~b:
        raise HypothesisViolated("need β∖α = γ∖β′ and β′∖α = γ∖β")
    xi, eta = b & ~a, bp & ~a
    if xi & eta:
        raise HypothesisViolated("β∖α and β′∖α overlap")
    t = sys.convex_maps(xi, eta)
    t_prime = sys.convex_maps(eta, xi)
    e_xi, e_eta, e_all = sys.term_data(xi).group, sys.term_data(eta).group, sys.term_data(xi | eta).group
    ok = (t_prime.j @ t.i == GroupHom.identity(e_xi)
          and t.j @ t_prime.i == GroupHom.identity(e_eta)
          and t.k.is_zero() and t_prime.k.is_zero()
          and e_all.invariants() == e_xi.direct_sum(e_eta).invariants())
    if not ok:
        logger.debug(f"Incomparable identities fail for {sys.poset.labels_of(xi)} | {sys.poset.labels_of(eta)}")
    return ok


OCTAHEDRON_IDENTITIES = ("i∘i", "j∘j", "i∘j = j∘i", "j∘k", "k∘i", "i∘k = k∘j", "exact (β,γ,δ)")


def octahedron_failures(sys: CESystem, alpha: MaskLike, beta: MaskLike, gamma: MaskLike,
                        delta: MaskLike) -> List[str]:
    a, b, g, d = (_mask(x) for x in (alpha, beta, gamma, delta))
    sys._check_nested(a, b, g, d)
    abg = sys.convex_maps(b & ~a, g & ~b)
    abd = sys.convex_maps(b & ~a, d & ~b)
    agd = sys.convex_maps(g & ~a, d & ~g)
    bgd = sys.convex_maps(g & ~b, d & ~g)
    checks = (
        agd.i @ abg.i == abd.i,
        bgd.j @ abd.j == agd.j,
        bgd.i @ abg.j == abd.j @ agd.i,
        abg.j @ agd.k == bgd.k,
        abd.k @ bgd.i == abg.k,
        abg.i @ abd.k == agd.k @ bgd.j,
        verify_exact_triangle(sys, b, g, d),
    )
    return [name for name, passed in zip(OCTAHEDRON_IDENTITIES, checks) if not passed]


def verify_octahedron(sys: CESystem, alpha: MaskLike, beta: MaskLike, gamma: MaskLike, delta: MaskLike) -> bool:
    return not octahedron_failures(sys, alpha, beta, gamma, delta)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    label: str
    passed: bool
    detail: str = ""


@dataclass
class SuiteReport:
    results: List[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    def by_suite(self, suite: str) -> List[CheckResult]:
        return [r for r in self.results if r.suite == suite]

    def first_failure(self, suite: Optional[str] = None) -> Optional[CheckResult]:
        return next((r for r in self.results if not r.passed and (suite is None or r.suite == suite)), None)

    def summary(self) -> Dict[str, Tuple[int, int]]:
        out: Dict[str, Tuple[int, int]] = {}
        for r in self.results:
            passed, total = out.get(r.suite, (0, 0))
            out[r.suite] = (passed + int(r.passed), total + 1)
        return out


def format_masks(poset: Poset, *masks: int) -> str:
    return "(" + ",".join("{" + ",".join(poset.labels_of(m)) + "}" for m in masks) + ")"


def _run(jobs: int, tasks: List[Callable[[], CheckResult]]) -> List[CheckResult]:
    if jobs <= 1 or len(tasks) < 2:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: t(), tasks))


def _adjacent_pairs(sys: CESystem) -> List[Tuple[int, int, Tuple[DownSet, DownSet, DownSet]]]:
    poset = sys.poset
    out = []
    nonempty = [m for m in sys.convex_masks() if m]
    for xi in nonempty:
        for eta in nonempty:
            triple = adjacent_triple(ConvexSet(poset, xi), ConvexSet(poset, eta))
            if triple is not None:
                out.append((xi, eta, triple))
    return out


def verify_module_braid(sys: CESystem, max_downsets: Optional[int] = None, jobs: int = 1) -> SuiteReport:
    """(i) exact triangles of adjacent pairs, (ii) incomparable identities, (iii) braid diagrams of adjacent triples."""
    sys.down_set_masks(max_downsets)
    poset = sys.poset
    pairs = _adjacent_pairs(sys)
    tasks: List[Callable[[], CheckResult]] = []

    for xi, eta, (a, b, g) in pairs:
        label = format_masks(poset, a.mask, b.mask, g.mask)
        tasks.append(lambda a=a, b=b, g=g, label=label:
                     CheckResult("braid-exact", label, verify_exact_triangle(sys, a, b, g)))

    for xi, eta, (a, b, g) in pairs:
        if xi < eta and convex_relation(ConvexSet(poset, xi), ConvexSet(poset, eta)) is ConvexRelation.INCOMPARABLE:
            bp = a.mask | eta
            label = format_masks(poset, a.mask, b.mask, bp, g.mask)
            tasks.append(lambda a=a, b=b, bp=bp, g=g, label=label:
                         CheckResult("braid-incomparable", label, verify_incomparable(sys, a, b, bp, g)))

    seen = set()
    nonempty = [m for m in sys.convex_masks() if m]
    for xi, eta, _ in pairs:
        for zeta in nonempty:
            quad = adjacent_quadruple(ConvexSet(poset, xi), ConvexSet(poset, eta), ConvexSet(poset, zeta))
            if quad is None:
                continue
            masks = tuple(q.mask for q in quad)
            if masks in seen:
                continue
            seen.add(masks)
            label = format_masks(poset, *masks)

            def braid(masks=masks, label=label) -> CheckResult:
                failed = octahedron_failures(sys, *masks)
                return CheckResult("braid-commutes", label, not failed, ", ".join(failed))
            tasks.append(braid)

    _warm(sys)
    report = SuiteReport(_run(jobs, tasks))
    logger.info(f"Module braid: {sum(r.passed for r in report.results)}/{len(report.results)} checks pass")
    return report


def _warm(sys: CESystem) -> None:
    for xi in sys.convex_masks():
        sys.term_data(xi)


def _chains(masks: List[int], length: int) -> List[Tuple[int, ...]]:
    """Nested tuples m1 ⊆ m2 ⊆ ... of down-sets."""
    supersets = {m: [n for n in masks if m & ~n == 0] for m in masks}
    out: List[Tuple[int, ...]] = []

    def grow(chain: Tuple[int, ...]) -> None:
        if len(chain) == length:
            out.append(chain)
            return
        for n in supersets[chain[-1]]:
            grow(chain + (n,))

    for m in masks:
        grow((m,))
    return out


def verify_all(sys: CESystem, max_downsets: Optional[int] = None, jobs: int = 1) -> SuiteReport:
    """Every nested triple, excision pair and strictly nested quadruple of O(P), plus the module-braid axioms."""
    masks = sys.down_set_masks(max_downsets)
    poset = sys.poset
    tasks: List[Callable[[], CheckResult]] = []
    for a, b, g in _chains(masks, 3):
        label = format_masks(poset, a, b, g)
        tasks.append(lambda a=a, b=b, g=g, label=label:
                     CheckResult("exact-triangle", label, verify_exact_triangle(sys, a, b, g)))
    for a, b in itertools.combinations(masks, 2):
        label = format_masks(poset, a, b)
        tasks.append(lambda a=a, b=b, label=label: CheckResult("excision", label, verify_excision(sys, a, b)))
    for a in masks:
        label = format_masks(poset, a, a)
        tasks.append(lambda a=a, label=label:
                     CheckResult("vanishing", label, sys.e_term(a, a).is_trivial()))
    for quad in _chains(masks, 4):
        a, b, g, d = quad
        if a == b or b == g or g == d:
            continue
        label = format_masks(poset, *quad)

        def octa(quad=quad, label=label) -> CheckResult:
            failed = octahedron_failures(sys, *quad)
            return CheckResult("octahedron", label, not failed, ", ".join(failed))
        tasks.append(octa)
    _warm(sys)
    report = SuiteReport(_run(jobs, tasks))
    braid = verify_module_braid(sys, max_downsets, jobs)
    report.results.extend(braid.results)
    return report


# isomorphisms of CE systems


@dataclass
class CEIso:
    """Components h_ξ: E_C(ξ) -> E_A(ξ) keyed by convex mask."""
    source: CESystem
    target: CESystem
    components: Dict[int, GroupHom] = field(default_factory=dict)

    def component(self, xi: int) -> Optional[GroupHom]:
        hom = self.components.get(xi)
        if hom is None:
            src, tgt = self.source.term_data(xi).group, self.target.term_data(xi).group
            if src.is_trivial() and tgt.is_trivial():
                return GroupHom.zero(src, tgt)
        return hom

    def ladder_failures(self, xi: int, eta: int) -> List[str]:
        """Naturality squares of the triangle determined by (ξ, η); missing components are skipped."""
        h1, h2, h3 = self.component(xi), self.component(xi | eta), self.component(eta)
        t, tp = self.source.convex_maps(xi, eta), self.target.convex_maps(xi, eta)
        failures = []
        if h1 is not None and h2 is not None and h2 @ t.i != tp.i @ h1:
            failures.append("i")
        if h2 is not None and h3 is not None and h3 @ t.j != tp.j @ h2:
            failures.append("j")
        if h3 is not None and h1 is not None and h1 @ t.k != tp.k @ h3:
            failures.append("k")
        return failures

    def check_ladder(self, alpha: MaskLike, beta: MaskLike, gamma: MaskLike) -> bool:
        a, b, g = _mask(alpha), _mask(beta), _mask(gamma)
        self.source._check_nested(a, b, g)
        return not self.ladder_failures(b & ~a, g & ~b)

    def component_failures(self) -> List[int]:
        return [xi for xi, hom in sorted(self.components.items()) if not is_isomorphism(hom)]

    def verify(self) -> SuiteReport:
        """Every stored component is an isomorphism and every ladder commutes."""
        poset = self.source.poset
        report = SuiteReport()
        for xi, hom in sorted(self.components.items()):
            report.results.append(CheckResult("component-iso", format_masks(poset, xi), bool(is_isomorphism(hom))))
        for xi, eta, (a, b, g) in _adjacent_pairs(self.source):
            failed = self.ladder_failures(xi, eta)
            report.results.append(CheckResult("ladder", format_masks(poset, a.mask, b.mask, g.mask),
                                              not failed, ",".join(failed)))
        return report

    def check_five_lemma(self) -> bool:
        """Isomorphisms on every singleton with commuting ladders give isomorphisms on every stored term."""
        for i in range(len(self.source.poset)):
            hom = self.component(1 << i)
            if hom is None or not is_isomorphism(hom):
                return False
        if not self.verify().ok:
            return False
        return all(is_isomorphism(self.component(xi)) for xi in self.source.convex_masks()
                   if self.component(xi) is not None)


def induced_ce_iso(f: FilteredChainMap, source: CESystem, target: CESystem) -> CEIso:
    """Components of E(f) on every convex set."""
    iso = CEIso(source, target)
    for xi in source.convex_masks():
        rows = f.target.generator_indices(xi)
        cols = f.source.generator_indices(xi)
        iso.components[xi] = induced_hom(f.matrix.submatrix(rows, cols), source.term_data(xi),
                                         target.term_data(xi), check=False)
    return iso


# brute-force comparison


@dataclass(frozen=True)
class NotIsomorphic:
    alpha: Optional[DownSet]
    beta: Optional[DownSet]
    reason: str

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class BudgetExceeded:
    nodes: int
    reason: str = "search budget exhausted"

    def __bool__(self) -> bool:
        return False


Comparison = Union[CEIso, NotIsomorphic, BudgetExceeded]


def distinguishing_pair(sys_c: CESystem, sys_a: CESystem) -> Optional[Tuple[DownSet, DownSet, str]]:
    """First convex set (in enumeration order) whose E-terms differ, as a nested pair (α, β)."""
    poset = sys_c.poset
    for xi in sys_c.convex_masks():
        gc, ga = sys_c.term_data(xi).group, sys_a.term_data(xi).group
        if gc.invariants() != ga.invariants():
            beta = poset.down_closure(xi)
            return DownSet(poset, beta & ~xi), DownSet(poset, beta), f"{gc} vs {ga}"
    return None


def _general_linear(rank: int, ring: Coefficients, src_degrees: Optional[List[int]],
                    tgt_degrees: Optional[List[int]], rng: Optional[random.Random] = None) -> List[ExactMatrix]:
    """Candidate automorphisms of one grade, identity first; rng shuffles the rest."""
    if ring.tag == "Zp":
        entries = list(range(ring.modulus))
    else:
        entries = [0, 1, -1]
    identity = ExactMatrix.identity(rank, ring)
    if rank == 0:
        return [identity]
    out = []
    for values in itertools.product(entries, repeat=rank * rank):
        m = ExactMatrix(rank, rank, ring, [values[r * rank:(r + 1) * rank] for r in range(rank)])
        if src_degrees is not None and any(tgt_degrees[r] != src_degrees[s] for r, s, _ in m.nonzero_entries()):
            continue
        if ring.is_unit(determinant(m)):
            out.append(m)
    out.sort(key=lambda m: m != identity)
    if rng is not None and len(out) > 2:
        rest = out[1:]
        rng.shuffle(rest)
        out = out[:1] + rest
    return out


def _search_is_complete(c: GradedDifferentialGroup) -> bool:
    ring = c.coefficients
    if ring.tag == "Zp":
        return True
    return ring.tag == "Z" and all(r <= 1 for r in c.ranks)


def ce_isomorphic_bruteforce(sys_c: CESystem, sys_a: CESystem, budget: int = 10000,
                             seed: Optional[int] = None) -> Comparison:
    """Decide E(C) ≅ E(A) by refutation on E-term invariants, then search for a filtered chain isomorphism.

    For strict groups a CE isomorphism exists iff a filtered chain isomorphism does; the search
    enumerates diagonal automorphisms in linear-extension order and prunes every prefix whose
    off-diagonal blocks cannot be completed to a chain map. A seed reorders the non-identity
    candidates; the verdict does not depend on it.
    """
    c, a = sys_c.base, sys_a.base
    if c.poset.elements != a.poset.elements or c.coefficients != a.coefficients:
        raise ValidationError("same poset", "compared groups must share poset and coefficients")
    refutation = distinguishing_pair(sys_c, sys_a)
    if refutation is not None:
        alpha, beta, why = refutation
        logger.info(f"Refuted by E-term of {beta}∖{alpha}: {why}")
        return NotIsomorphic(alpha, beta, why)
    if c.ranks != a.ranks or (c.degrees is None) != (a.degrees is None):
        return NotIsomorphic(None, None, "grades carry different generator counts")

    if not (c.is_strict() and a.is_strict()):
        if c.coefficients.is_field:
            from .connection_matrix import compare_via_reduction
            return compare_via_reduction(sys_c, sys_a, budget, seed)
        return BudgetExceeded(0, "non-strict integer groups with matching E-terms are not decided")

    f = _search_chain_iso(c, a, budget, seed)
    if isinstance(f, BudgetExceeded):
        return f
    if f is None:
        if _search_is_complete(c):
            return NotIsomorphic(None, None, "no filtered chain isomorphism exists")
        return BudgetExceeded(0, "candidate automorphisms exhausted; search space is incomplete over this ring")
    iso = induced_ce_iso(f, sys_c, sys_a)
    report = iso.verify()
    if not report.ok:
        failure = report.first_failure()
        raise ValidationError("natural ladder", f"induced family fails at {failure.label}")
    return iso


def _search_chain_iso(c: GradedDifferentialGroup, a: GradedDifferentialGroup,
                      budget: int, seed: Optional[int] = None) -> Union[FilteredChainMap, None, BudgetExceeded]:
    poset = c.poset
    rng = None if seed is None else random.Random(seed)
    order = poset.linear_extension()
    candidates = {}
    for i in order:
        idx = c.grade_indices(i)
        src_deg = None if c.degrees is None else [c.degrees[g] for g in idx]
        tgt_deg = None if a.degrees is None else [a.degrees[g] for g in a.grade_indices(i)]
        candidates[i] = _general_linear(len(idx), c.coefficients, src_deg, tgt_deg, rng)
    nodes = 0

    def extend(position: int, chosen: Dict[int, ExactMatrix]):
        nonlocal nodes
        if position == len(order):
            return complete_chain_map(c, a, chosen)
        i = order[position]
        prefix = 0
        for k in order[:position + 1]:
            prefix |= 1 << k
        for m in candidates[i]:
            nodes += 1
            if nodes > budget:
                return BudgetExceeded(nodes)
            trial = dict(chosen)
            trial[i] = m
            if complete_chain_map(restrict_mask(c, prefix), restrict_mask(a, prefix), trial) is None:
                continue
            found = extend(position + 1, trial)
            if found is not None:
                return found
        return None

    return extend(0, {})
