"""
Text format for instances, chain maps, CE isomorphisms and certificates.

All files are JSON. Blocks are keyed "p<-q" for the block from grade q to grade p and hold
row-major matrices; rational entries are strings "a/b". serialize_instance writes the
canonical form (4-space indentation, blocks in grade order, zero blocks omitted), which
parse_instance reads back unchanged.
"""
import json
import re
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from .ce_system import CEIso, CESystem, CheckResult, SuiteReport
from .errors import BoundExceeded, ParseError, ValidationError
from .exact_linalg import Coefficients, ExactMatrix
from .fgab import GroupHom
from .graded_diff import ChainHomotopy, FilteredChainMap, GradedDifferentialGroup, validate
from .poset import DEFAULT_MAX_ELEMENTS, Poset, _bits
from ..utils.logging_setup import get_logger

logger = get_logger('internal.instance_format')

BLOCK_KEY = re.compile(r"^\s*([^<\s]+)\s*<-\s*([^<\s]+)\s*$")
ENTRY = re.compile(r"^-?\d+(/\d+)?$")


def _line_of(text: str, token: str) -> int:
    pos = text.find(token)
    return text.count("\n", 0, pos) + 1 if pos >= 0 else 0


def _load(text: str) -> Dict[str, Any]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno, "JSON value") from None
    if not isinstance(data, dict):
        raise ParseError("top level must be an object", 1, 1, "{")
    return data


def _require(data: Dict[str, Any], key: str, kind: type, text: str) -> Any:
    if key not in data:
        raise ParseError(f"missing section {key!r}", 1, 1, f'"{key}"')
    value = data[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ParseError(f"section {key!r} has the wrong type", _line_of(text, f'"{key}"'), 1, kind.__name__)
    return value


def _optional(data: Dict[str, Any], key: str, kind: type, default: Any, text: str) -> Any:
    return _require(data, key, kind, text) if key in data else default


def _entry(x: Any, line: int) -> Any:
    if isinstance(x, int) and not isinstance(x, bool):
        return x
    if isinstance(x, str) and ENTRY.match(x.strip()):
        value = Fraction(x.strip())
        return value.numerator if value.denominator == 1 else value
    raise ParseError(f"bad matrix entry {x!r}", line, 1, 'integer or "a/b"')


def _matrix(rows: Any, shape: Tuple[int, int], ring: Coefficients, line: int, what: str) -> ExactMatrix:
    r, c = shape
    if not isinstance(rows, list) or any(not isinstance(row, list) for row in rows):
        raise ParseError(f"{what} must be a list of rows", line, 1, "[[...], ...]")
    if r == 0 and rows in ([], [[]]):
        return ExactMatrix.zeros(0, c, ring)
    if len(rows) != r or any(len(row) != c for row in rows):
        found = f"{len(rows)}x{len(rows[0]) if rows else 0}"
        raise ValidationError("block dimensions", f"{what} is {found}, expected {r}x{c}", line)
    return ExactMatrix(r, c, ring, [[_entry(x, line) for x in row] for row in rows])


def _format_entry(x: Any) -> Any:
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return x


def _rows(m: ExactMatrix) -> List[List[Any]]:
    return [[_format_entry(x) for x in m.row(i)] for i in range(m.rows)]


def _dump(obj: Dict[str, Any]) -> str:
    return json.dumps(obj, indent=4, ensure_ascii=False) + "\n"


def _parse_blocks(blocks: Dict[str, Any], poset: Poset, row_rank, col_rank, ring: Coefficients,
                  text: str) -> Dict[Tuple[int, int], ExactMatrix]:
    out: Dict[Tuple[int, int], ExactMatrix] = {}
    for key, rows in blocks.items():
        line = _line_of(text, f'"{key}"')
        match = BLOCK_KEY.match(key)
        if match is None:
            raise ParseError(f"bad block key {key!r}", line, 1, '"p<-q"')
        p, q = match.group(1), match.group(2)
        for label in (p, q):
            if label not in poset.elements:
                raise ValidationError("declared elements", f"block {key!r} names undeclared element {label!r}", line)
        ip, iq = poset.index(p), poset.index(q)
        out[(ip, iq)] = _matrix(rows, (row_rank(ip), col_rank(iq)), ring, line, f"block {key!r}")
    return out


def parse_instance(text: str, max_elements: Optional[int] = None, check: bool = True) -> GradedDifferentialGroup:
    """The instance in text; with check, one that passes validate (the first failure is raised)."""
    data = _load(text)
    poset_data = _require(data, "poset", dict, text)
    elements = _require(poset_data, "elements", list, text)
    if not elements or any(not isinstance(e, str) or not e or "," in e or "<" in e for e in elements):
        raise ParseError("elements must be non-empty names without ',' or '<'", _line_of(text, '"elements"'), 1,
                         "list of names")
    bound = DEFAULT_MAX_ELEMENTS if max_elements is None else max_elements
    if len(elements) > bound:
        raise BoundExceeded("poset elements", len(elements), bound)
    relations = _optional(poset_data, "relations", list, [], text)
    if any(not isinstance(r, list) or len(r) != 2 or not all(isinstance(x, str) for x in r) for r in relations):
        raise ParseError("relations must be pairs", _line_of(text, '"relations"'), 1, '["p", "q"]')
    for p, q in relations:
        if p not in elements or q not in elements:
            raise ValidationError("declared elements", f"relation {p!r} < {q!r} names an undeclared element",
                                  _line_of(text, '"relations"'))
    poset = Poset(elements, [tuple(r) for r in relations])

    tag = _require(data, "coefficients", str, text)
    try:
        ring = Coefficients.parse(tag)
    except ValidationError as e:
        raise ValidationError(e.invariant, f"unusable coefficient tag {tag!r}", _line_of(text, '"coefficients"')) from None

    ranks = _require(data, "ranks", dict, text)
    for label, r in ranks.items():
        if label not in poset.elements:
            raise ValidationError("declared elements", f"rank given for undeclared element {label!r}",
                                  _line_of(text, '"ranks"'))
        if not isinstance(r, int) or isinstance(r, bool) or r < 0:
            raise ParseError(f"rank of {label!r} must be a non-negative integer", _line_of(text, '"ranks"'), 1,
                             "integer")
    rank_tuple = tuple(int(ranks.get(label, 0)) for label in poset.elements)

    degrees = None
    if "degrees" in data:
        raw = _require(data, "degrees", dict, text)
        degrees = []
        for i, label in enumerate(poset.elements):
            values = raw.get(label, [])
            if not isinstance(values, list) or any(not isinstance(v, int) or isinstance(v, bool) for v in values):
                raise ParseError(f"degrees of {label!r} must be integers", _line_of(text, '"degrees"'), 1, "[k, ...]")
            if len(values) != rank_tuple[i]:
                raise ValidationError("degree map", f"{label!r} has {len(values)} degrees for rank {rank_tuple[i]}",
                                      _line_of(text, '"degrees"'))
            degrees.extend(values)
    strict = _optional(data, "strict", bool, False, text)

    raw_blocks = _optional(data, "blocks", dict, {}, text)
    blocks = _parse_blocks(raw_blocks, poset, lambda i: rank_tuple[i], lambda i: rank_tuple[i], ring, text)
    skeleton = GradedDifferentialGroup(poset, ring, rank_tuple, ExactMatrix.zeros(sum(rank_tuple), sum(rank_tuple), ring))
    d = skeleton.differential
    for (ip, iq), blk in blocks.items():
        d = d.with_block(skeleton.grade_indices(ip), skeleton.grade_indices(iq), blk)
    group = GradedDifferentialGroup(poset, ring, rank_tuple, d, None if degrees is None else tuple(degrees), strict)

    report = validate(group)
    if check and not report.ok:
        line = 0
        if report.offending_blocks:
            p, q = report.offending_blocks[0]
            line = _line_of(text, f'"{p}<-{q}"')
        raise ValidationError(report.failures[0], f"instance fails {', '.join(report.failures)}", line)
    logger.debug(f"Parsed instance on {len(poset)} elements with {group.size} generators over {ring.name}")
    return group


def _block_dict(matrix_of, poset: Poset) -> Dict[str, List[List[Any]]]:
    out = {}
    n = len(poset)
    for p in range(n):
        for q in range(n):
            blk = matrix_of(p, q)
            if blk is not None and blk.rows and blk.cols and not blk.is_zero():
                out[f"{poset.elements[p]}<-{poset.elements[q]}"] = _rows(blk)
    return out


def serialize_instance(c: GradedDifferentialGroup) -> str:
    poset = c.poset
    obj: Dict[str, Any] = {
        "poset": {"elements": list(poset.elements), "relations": [list(r) for r in poset.relations]},
        "coefficients": c.coefficients.name,
        "ranks": {label: c.rank(i) for i, label in enumerate(poset.elements)},
    }
    if c.degrees is not None:
        obj["degrees"] = {label: [c.degrees[g] for g in c.grade_indices(i)] for i, label in enumerate(poset.elements)}
    if c.strict_flag:
        obj["strict"] = True
    obj["blocks"] = _block_dict(lambda p, q: c.differential.submatrix(c.grade_indices(p), c.grade_indices(q)), poset)
    return _dump(obj)


# chain maps and homotopies


def serialize_chain_map(f, kind: str = "chain_map") -> str:
    """Blocks "p<-q" of a FilteredChainMap or ChainHomotopy."""
    src, tgt = f.source, f.target
    poset = src.poset
    blocks = _block_dict(lambda p, q: f.matrix.submatrix(tgt.grade_indices(p), src.grade_indices(q)), poset)
    return _dump({"kind": kind, "blocks": blocks})


def parse_chain_map(text: str, source: GradedDifferentialGroup, target: GradedDifferentialGroup,
                    kind: str = "chain_map") -> FilteredChainMap:
    data = _load(text)
    found = data.get("kind", kind)
    if found != kind:
        raise ParseError(f"expected a {kind} file, found {found!r}", _line_of(text, '"kind"'), 1, f'"{kind}"')
    ring = source.coefficients
    blocks = _parse_blocks(_require(data, "blocks", dict, text), source.poset, target.rank, source.rank, ring, text)
    m = ExactMatrix.zeros(target.size, source.size, ring)
    for (ip, iq), blk in blocks.items():
        m = m.with_block(target.grade_indices(ip), source.grade_indices(iq), blk)
    if kind == "homotopy":
        return ChainHomotopy(source, target, m)
    return FilteredChainMap(source, target, m)


# CE isomorphisms


def _convex_key(poset: Poset, mask: int) -> str:
    return ",".join(poset.elements[i] for i in _bits(mask))


def serialize_ce_iso(iso: CEIso) -> str:
    poset = iso.source.poset
    components = {_convex_key(poset, xi): _rows(hom.matrix) for xi, hom in sorted(iso.components.items()) if xi}
    return _dump({"kind": "ce_iso", "components": components})


def parse_ce_iso(text: str, source: CESystem, target: CESystem) -> CEIso:
    data = _load(text)
    if data.get("kind", "ce_iso") != "ce_iso":
        raise ParseError(f"expected a ce_iso file, found {data.get('kind')!r}", _line_of(text, '"kind"'), 1,
                         '"ce_iso"')
    poset = source.poset
    ring = source.base.coefficients
    iso = CEIso(source, target)
    for key, rows in _require(data, "components", dict, text).items():
        line = _line_of(text, f'"{key}"')
        labels = [s.strip() for s in key.split(",") if s.strip()]
        for label in labels:
            if label not in poset.elements:
                raise ValidationError("declared elements", f"component {key!r} names undeclared element {label!r}",
                                      line)
        mask = poset.mask_of(labels)
        if not poset.is_convex(mask):
            raise ValidationError("convex", f"component {key!r} is not a convex set", line)
        src, tgt = source.term_data(mask).group, target.term_data(mask).group
        iso.components[mask] = GroupHom(src, tgt, _matrix(rows, (tgt.ngens, src.ngens), ring, line,
                                                          f"component {key!r}"))
    return iso


# certificates


def serialize_certificate(report: SuiteReport) -> str:
    checks = []
    for r in report.results:
        entry: Dict[str, Any] = {"name": f"{r.suite} {r.label}", "passed": r.passed}
        if r.detail:
            entry["detail"] = r.detail
        checks.append(entry)
    return _dump({"kind": "certificate", "passed": report.ok, "checks": checks})


def parse_certificate(text: str) -> SuiteReport:
    data = _load(text)
    report = SuiteReport()
    for entry in _require(data, "checks", list, text):
        if not isinstance(entry, dict) or "name" not in entry or not isinstance(entry.get("passed"), bool):
            raise ParseError("check entries need a name and a boolean passed", _line_of(text, '"checks"'), 1,
                             '{"name": ..., "passed": ...}')
        suite, _, label = str(entry["name"]).partition(" ")
        report.results.append(CheckResult(suite, label, entry["passed"], str(entry.get("detail", ""))))
    return report
