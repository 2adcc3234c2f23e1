from typing import Dict, List, Optional

from ..internal.ce_system import BudgetExceeded, CEIso, CESystem, Comparison, NotIsomorphic, SuiteReport, TriangleMaps
from ..internal.connection_matrix import MorseSmaleReport, ReductionWitness
from ..internal.exact_linalg import ExactMatrix
from ..internal.fgab import FgGroup, GroupHom
from ..internal.graded_diff import FilteredChainMap, GradedDifferentialGroup, ValidationReport
from ..internal.poset import Poset
from ..utils.logging_setup import get_logger

logger = get_logger('ui.report_writer')


class ReportWriter:
    """Plain-text reports for the command line. Output depends only on its inputs."""

    def __init__(self):
        self.lines: List[str] = []

    def add(self, line: str = "") -> 'ReportWriter':
        self.lines.append(line)
        return self

    def text(self) -> str:
        return "\n".join(self.lines) + ("\n" if self.lines else "")

    # formatting

    @staticmethod
    def labels(poset: Poset, mask: int) -> str:
        return "{" + ",".join(poset.labels_of(mask)) + "}"

    @staticmethod
    def matrix(m: ExactMatrix) -> str:
        if m.rows == 0 or m.cols == 0:
            return f"[] ({m.rows}x{m.cols})"
        return "[" + "; ".join(" ".join(str(x) for x in m.row(i)) for i in range(m.rows)) + "]"

    def _blocks(self, title: str, poset: Poset, blocks) -> None:
        self.add(title)
        empty = True
        for p, q, blk in blocks:
            self.add(f"  {poset.elements[p]}<-{poset.elements[q]}: {self.matrix(blk)}")
            empty = False
        if empty:
            self.add("  (zero)")

    # commands

    def instance_summary(self, c: GradedDifferentialGroup) -> 'ReportWriter':
        poset = c.poset
        ranks = ", ".join(f"{label}:{c.rank(i)}" for i, label in enumerate(poset.elements))
        self.add(f"poset: {len(poset)} elements, coefficients {c.coefficients.name}")
        self.add(f"ranks: {ranks}")
        if c.degrees is not None:
            self.add("mode: chain complex (degrees present)")
        return self

    def validation(self, c: GradedDifferentialGroup, report: ValidationReport) -> 'ReportWriter':
        self.instance_summary(c)
        if report.ok:
            self.add("PASS validate")
            self.add(f"strict: {'yes' if c.is_strict() else 'no'}")
            return self
        for failure in report.failures:
            self.add(f"FAIL {failure}")
        for p, q in report.offending_blocks:
            self.add(f"  offending block {p}<-{q}")
        return self

    def homology(self, poset: Poset, mask: int, group: FgGroup) -> 'ReportWriter':
        return self.add(f"E{self.labels(poset, mask)} = {group}")

    def e_term(self, poset: Poset, alpha: int, beta: int, group: FgGroup) -> 'ReportWriter':
        return self.add(f"E^{self.labels(poset, beta)}_{self.labels(poset, alpha)} = {group}")

    def e_term_table(self, sys: CESystem, table: Dict[int, FgGroup]) -> 'ReportWriter':
        poset = sys.poset
        self.add(f"E-terms on {len(table)} convex sets")
        for xi, group in table.items():
            self.add(f"  {self.labels(poset, xi)}: {group}")
        return self

    def triangle(self, sys: CESystem, alpha: int, beta: int, gamma: int, maps: TriangleMaps) -> 'ReportWriter':
        poset = sys.poset
        for lo, hi in ((alpha, beta), (alpha, gamma), (beta, gamma)):
            self.e_term(poset, lo, hi, sys.e_term(lo, hi))
        for name, hom in (("i", maps.i), ("j", maps.j), ("k", maps.k)):
            self.add(f"  {name}: {hom.source} -> {hom.target} {self.matrix(hom.matrix)}")
        return self

    def suites(self, report: SuiteReport) -> 'ReportWriter':
        for r in report.results:
            tail = f" [{r.detail}]" if r.detail else ""
            self.add(f"{'PASS' if r.passed else 'FAIL'} {r.suite} triple={r.label}{tail}")
        self.add("summary:")
        for suite, (passed, total) in sorted(report.summary().items()):
            self.add(f"  {suite}: {passed}/{total}")
        self.add("PASS" if report.ok else "FAIL")
        return self

    def comparison(self, result: Comparison, poset: Poset) -> 'ReportWriter':
        if isinstance(result, CEIso):
            self.add(f"ISOMORPHIC: {len(result.components)} components, all ladders verified")
            for xi, hom in sorted(result.components.items()):
                if xi:
                    self.component(poset, xi, hom)
        elif isinstance(result, NotIsomorphic):
            if result.alpha is not None:
                self.add(f"NOT ISOMORPHIC: alpha={self.labels(poset, result.alpha.mask)} "
                         f"beta={self.labels(poset, result.beta.mask)}: {result.reason}")
            else:
                self.add(f"NOT ISOMORPHIC: {result.reason}")
        elif isinstance(result, BudgetExceeded):
            self.add(f"UNDECIDED after {result.nodes} nodes: {result.reason}")
        return self

    def chain_map(self, title: str, f: FilteredChainMap) -> 'ReportWriter':
        self._blocks(title, f.source.poset, f.nonzero_blocks())
        return self

    def certificate(self, report: SuiteReport) -> 'ReportWriter':
        for suite, (passed, total) in sorted(report.summary().items()):
            self.add(f"{'PASS' if passed == total else 'FAIL'} {suite} {passed}/{total}")
        return self

    def reduction(self, w: ReductionWitness) -> 'ReportWriter':
        poset = w.d.poset
        self.add(f"reduced {w.d.size} generators to {w.a.size} ({len(w.pivots)} cancellations)")
        self.add("ranks:")
        for i, label in enumerate(poset.elements):
            self.add(f"  {label}: {w.d.rank(i)} -> {w.a.rank(i)}")
        self._blocks("connection matrix:", poset, w.a.nonzero_blocks())
        self.add(f"witness: {'PASS' if w.verify() else 'FAIL'}")
        return self

    def morse_smale(self, report: MorseSmaleReport, unique: Optional[bool] = None) -> 'ReportWriter':
        if report.ok:
            self.add("PASS morse-smale")
        else:
            for reason in report.reasons:
                self.add(f"FAIL {reason}")
        if unique is not None:
            self.add("differentials equal: CE systems isomorphic" if unique
                     else "differentials differ: CE systems not isomorphic")
        return self

    def component(self, poset: Poset, xi: int, hom: GroupHom) -> 'ReportWriter':
        return self.add(f"  {self.labels(poset, xi)}: {hom.source} -> {hom.target} {self.matrix(hom.matrix)}")
