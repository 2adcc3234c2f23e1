import argparse
import os
import sys
from typing import Callable, Dict, List, Optional

from .internal.ce_system import CEIso, CESystem, ce_isomorphic_bruteforce, verify_all
from .internal.connection_matrix import (MorseSmaleGrading, certify_unique_differential, check_morse_smale,
                                         reduce)
from .internal.errors import (BoundExceeded, CEForgeError, CEIsoInconsistent, GradingMismatch, HypothesisViolated,
                              NotAField, ParseError)
from .internal.graded_diff import GradedDifferentialGroup, validate
from .internal.instance_format import (parse_ce_iso, parse_instance, serialize_ce_iso, serialize_certificate,
                                       serialize_chain_map, serialize_instance)
from .internal.iso_constructor import build_filtered_iso, iso_certificate
from .ui.report_writer import ReportWriter
from .utils.config_manager import ConfigManager
from .utils.file_handler import FileHandler
from .utils.logging_setup import get_logger
from .utils.utils import Utils

logger = get_logger('main')

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ceforge", description="Exact Cartan-Eilenberg systems of P-graded differential groups")
    parser.add_argument("--max-elements", type=int, default=None, help="bound on poset size")
    parser.add_argument("--jobs", type=int, default=None, help="parallel checks for ce-verify")
    parser.add_argument("--out", default=None, help="directory for map and certificate files")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check d∘d = 0, filtration, strictness and degrees")
    p.add_argument("instance")

    p = sub.add_parser("homology", help="E-term of a convex set")
    p.add_argument("instance")
    p.add_argument("--convex", default=None, help="comma-separated elements (default: all)")

    p = sub.add_parser("ce", help="E-terms and triangle maps")
    p.add_argument("instance")
    p.add_argument("--alpha", default=None)
    p.add_argument("--beta", default=None)
    p.add_argument("--gamma", default=None)

    p = sub.add_parser("ce-verify", help="run the CE-system axiom suites")
    p.add_argument("instance")
    p.add_argument("--max-downsets", type=int, default=None)

    p = sub.add_parser("compare", help="decide whether two CE systems are isomorphic")
    p.add_argument("instance")
    p.add_argument("other")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="reorders the isomorphism search")

    p = sub.add_parser("build-iso", help="construct a filtered chain isomorphism")
    p.add_argument("instance")
    p.add_argument("other")
    p.add_argument("--ce-iso", default=None, help="CE isomorphism file (default: search for one)")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="reorders the isomorphism search")

    p = sub.add_parser("connect", help="reduce to a connection matrix over a field")
    p.add_argument("instance")
    p.add_argument("--seed", type=int, default=None, help="reorders pivot tie-breaks")

    p = sub.add_parser("morse-smale", help="check a Morse-Smale grading and compare differentials")
    p.add_argument("instance")
    p.add_argument("other", nargs="?", default=None)
    p.add_argument("--mu", required=True, help="grading as label=integer pairs, e.g. a=0,b=0,c=1")
    return parser


class CommandRunner:

    def __init__(self, args: argparse.Namespace, config: ConfigManager):
        self.args = args
        self.config = config
        self.file_handler = FileHandler()
        self.report = ReportWriter()
        self.max_elements = args.max_elements if args.max_elements is not None else config.max_elements
        self.jobs = args.jobs if args.jobs is not None else int(config.get("run.jobs", 1))

    def load(self, path: str, check: bool = True) -> GradedDifferentialGroup:
        return parse_instance(self.file_handler.read_text(path), self.max_elements, check)

    def system(self, c: GradedDifferentialGroup) -> CESystem:
        return CESystem(c, self.max_elements)

    def emit(self, name: str, text: str) -> None:
        if self.args.out:
            self.file_handler.write_text(os.path.join(self.args.out, name), text)
            self.report.add(f"wrote {name}")
        else:
            self.report.add(f"--- {name}")
            self.report.add(text.rstrip("\n"))

    def budget(self) -> int:
        return self.args.budget if self.args.budget is not None else self.config.budget

    # commands

    def validate(self) -> int:
        c = self.load(self.args.instance, check=False)
        report = validate(c)
        self.report.validation(c, report)
        return EXIT_OK if report.ok else EXIT_FAIL

    def homology(self) -> int:
        c = self.load(self.args.instance)
        sys_c = self.system(c)
        mask = c.poset.full_mask if self.args.convex is None else Utils.parse_convex(self.args.convex, c.poset)
        self.report.homology(c.poset, mask, sys_c.term_data(mask).group)
        return EXIT_OK

    def ce(self) -> int:
        c = self.load(self.args.instance)
        sys_c = self.system(c)
        poset = c.poset
        if self.args.beta is None:
            self.report.e_term_table(sys_c, sys_c.e_term_table())
            return EXIT_OK
        alpha = Utils.parse_down_set(self.args.alpha or "", poset)
        beta = Utils.parse_down_set(self.args.beta, poset)
        if self.args.gamma is None:
            self.report.e_term(poset, alpha, beta, sys_c.e_term(alpha, beta))
            return EXIT_OK
        gamma = Utils.parse_down_set(self.args.gamma, poset)
        self.report.triangle(sys_c, alpha, beta, gamma, sys_c.triangle_maps(alpha, beta, gamma))
        return EXIT_OK

    def ce_verify(self) -> int:
        c = self.load(self.args.instance)
        bound = self.args.max_downsets if self.args.max_downsets is not None else self.config.max_downsets
        report = verify_all(self.system(c), bound, self.jobs)
        self.report.suites(report)
        return EXIT_OK if report.ok else EXIT_FAIL

    def compare(self) -> int:
        c, a = self.load(self.args.instance), self.load(self.args.other)
        result = ce_isomorphic_bruteforce(self.system(c), self.system(a), self.budget(), self.args.seed)
        self.report.comparison(result, c.poset)
        return EXIT_OK if isinstance(result, CEIso) else EXIT_FAIL

    def build_iso(self) -> int:
        c, a = self.load(self.args.instance), self.load(self.args.other)
        sys_c, sys_a = self.system(c), self.system(a)
        if self.args.ce_iso:
            h = parse_ce_iso(self.file_handler.read_text(self.args.ce_iso), sys_c, sys_a)
        else:
            found = ce_isomorphic_bruteforce(sys_c, sys_a, self.budget(), self.args.seed)
            if not isinstance(found, CEIso):
                self.report.comparison(found, c.poset)
                return EXIT_FAIL
            h = found
        f = build_filtered_iso(h)
        certificate = iso_certificate(f, sys_c, sys_a, h)
        self.report.chain_map("filtered isomorphism:", f)
        self.report.certificate(certificate)
        self.emit("iso.json", serialize_chain_map(f))
        self.emit("certificate.json", serialize_certificate(certificate))
        if not self.args.ce_iso:
            self.emit("ce_iso.json", serialize_ce_iso(h))
        return EXIT_OK if certificate.ok else EXIT_FAIL

    def connect(self) -> int:
        c = self.load(self.args.instance)
        w = reduce(c, seed=self.args.seed)
        self.report.reduction(w)
        self.emit("reduced.json", serialize_instance(w.a))
        self.emit("f.json", serialize_chain_map(w.f))
        self.emit("g.json", serialize_chain_map(w.g))
        self.emit("h.json", serialize_chain_map(w.h, kind="homotopy"))
        return EXIT_OK

    def morse_smale(self) -> int:
        c = self.load(self.args.instance)
        mu = MorseSmaleGrading(Utils.parse_assignment(self.args.mu))
        report = check_morse_smale(c, mu)
        if not report.ok or self.args.other is None:
            self.report.morse_smale(report)
            return EXIT_OK if report.ok else EXIT_FAIL
        other = self.load(self.args.other)
        unique = certify_unique_differential(c, other, mu, self.config.budget)
        self.report.morse_smale(report, unique)
        return EXIT_OK if unique else EXIT_FAIL

    def dispatch(self) -> int:
        handlers: Dict[str, Callable[[], int]] = {
            "validate": self.validate,
            "homology": self.homology,
            "ce": self.ce,
            "ce-verify": self.ce_verify,
            "compare": self.compare,
            "build-iso": self.build_iso,
            "connect": self.connect,
            "morse-smale": self.morse_smale,
        }
        return handlers[self.args.command]()


def run(argv: Optional[List[str]] = None, config: Optional[ConfigManager] = None,
        stdout=None) -> int:
    """Run one command; the report goes to stdout and the exit code is returned."""
    out = stdout if stdout is not None else sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    config = config if config is not None else ConfigManager.default()
    logger.info(f"Running {args.command}")
    runner = CommandRunner(args, config)
    try:
        code = runner.dispatch()
    except (ParseError, BoundExceeded) as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CEIsoInconsistent, HypothesisViolated, NotAField, GradingMismatch) as e:
        logger.error(f"{args.command}: {e}")
        runner.report.add(f"FAIL {type(e).__name__}: {e}")
        out.write(runner.report.text())
        return EXIT_FAIL
    except CEForgeError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    out.write(runner.report.text())
    logger.info(f"Finished {args.command} with exit code {code}")
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
