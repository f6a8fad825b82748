"""Command-line surface: read map files, run the library, print a report.

Reports go to standard output, logs to standard error. Exit codes: 0 on
success, 1 on a definitive negative verdict, 2 on input errors, 3 on resource
limits or an inconclusive run.
"""

from __future__ import annotations

import argparse
import copy
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, TextIO, Tuple

import yaml

from .errors import MapFormatError, ResourceLimit
from .inverter import (
    InversionConfig,
    InversionStatus,
    build_sequence,
    extract_invariants,
    filtration_level,
    invert,
    is_quasi_translation,
    iteration_cap,
    max_inverse_degree,
    plan_back_substitution,
    untruncated_records,
    verify_inverse,
)
from .json_exporter import (
    certificate_payload,
    comment_block,
    druzkowski_payload,
    dumps,
    export_report,
    inversion_payload,
    map_payload,
    polynomial_payload,
    quasi_translation_payload,
    record_payload,
    render,
    summary_lines,
    with_envelope,
)
from .linalg import read_matrix_file
from .map_format import MapDocument, bind_parameters, parse_rational, read_map_file, resolve_bindings
from .polymap import PolynomialMap, druzkowski_construction, jacobian_determinant, normalize_affine
from .polyring import default_names
from .sampling import RationalSampler, SamplingConfig

LOGGER = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parent.parent
CONFIG_PATH = PROJECT_ROOT / "config.yaml"

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_RESOURCE = 3

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "inversion": {
        "max_terms": 250000,
        "workers": 1,
        "back_substitution": False,
        "exact_stop_indices": False,
        "truncation_ceiling": None,
        "max_iterations": None,
    },
    "binding": {"seed": 7, "value_range": 9, "nonzero": False},
    "filtration": {"cap": 10},
    "output": {"format": "json"},
}


def load_config(path: Optional[Path] = None) -> Dict[str, Dict[str, Any]]:
    """Load YAML configuration merged section by section over the defaults."""

    path = Path(path) if path is not None else CONFIG_PATH
    merged = copy.deepcopy(DEFAULTS)
    if not path.exists():
        LOGGER.warning("Configuration file %s not found. Using defaults.", path)
        return merged

    with path.open("r", encoding="utf-8") as handle:
        loaded = yaml.safe_load(handle) or {}
    if not isinstance(loaded, dict):
        raise ValueError(f"{path}: configuration must be a mapping of sections")
    for section, values in loaded.items():
        if section not in merged:
            LOGGER.warning("Ignoring unknown configuration section %r", section)
            continue
        if not isinstance(values, dict):
            raise ValueError(f"{path}: section {section!r} must be a mapping")
        unknown = set(values) - set(merged[section])
        if unknown:
            raise ValueError(f"{path}: unknown keys in {section!r}: {', '.join(sorted(unknown))}")
        merged[section].update(values)
    return merged


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s", stream=sys.stderr)
    logging.getLogger().setLevel(level)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="Path to config.yaml (default: repository root)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logs")
    common.add_argument("--format", choices=("json", "text"), default=None, help="Report format")
    common.add_argument("--bind", action="append", default=[], metavar="NAME=VALUE", help="Bind a parameter")
    common.add_argument("--random-bind", action="store_true", help="Draw values for still unbound parameters")
    common.add_argument("--seed", type=int, default=None, help="Seed for --random-bind")
    common.add_argument("--range", dest="value_range", type=int, default=None, help="Numerator/denominator range")
    common.add_argument("--nonzero", action="store_true", default=None, help="Random values are all nonzero")
    common.add_argument("--max-terms", type=int, default=None, help="Term ceiling per polynomial")
    common.add_argument("--label", default=None, help="Component label prefix in text output")
    common.add_argument("--output", default=None, metavar="PATH", help="Also write the JSON report to PATH")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="polyinv", description="Exact inversion of polynomial maps F = Id + H.")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = commands.add_parser("invert", parents=[common], help="Invert a map and verify the inverse")
    p.add_argument("file")
    p.add_argument("--expect-noninvertible", action="store_true", help="Exit 0 on a definitive NotInvertible")
    p.add_argument("--back-substitute", action="store_true", default=None, help="Solve eligible coordinates directly")
    p.add_argument("--exact-stops", action="store_true", default=None, help="Also record untruncated stop indices")
    p.add_argument("--workers", type=int, default=None, help="Processes for per-coordinate sequences")
    p.add_argument("--truncation-ceiling", type=int, default=None)
    p.add_argument("--max-iterations", type=int, default=None)

    p = commands.add_parser("check-keller", parents=[common], help="Is det J exactly 1?")
    p.add_argument("file")

    p = commands.add_parser("check-quasi", parents=[common], help="Quasi-translation criteria")
    p.add_argument("file")

    p = commands.add_parser("filtration", parents=[common], help="Smallest k with every P_k = 0")
    p.add_argument("file")
    p.add_argument("--cap", type=int, default=None)

    p = commands.add_parser("sequence", parents=[common], help="Dump one sequence record")
    p.add_argument("file")
    p.add_argument("--coord", type=int, required=True, help="Coordinate, counted from 1")
    p.add_argument("--truncate", type=int, default=None)
    p.add_argument("--cap", type=int, default=None)

    p = commands.add_parser("verify", parents=[common], help="Check that G inverts F")
    p.add_argument("file")
    p.add_argument("inverse_file")
    p.add_argument("--back-substitute", action="store_true", default=None)

    p = commands.add_parser("druzkowski", parents=[common], help="Build X + (AX)^3 from a matrix file")
    p.add_argument("--matrix", required=True)
    p.add_argument("--force", action="store_true", help="Build even when A^2 != 0")

    p = commands.add_parser("invariants", parents=[common], help="Invariant polynomials P_{m-1}")
    p.add_argument("file")
    p.add_argument("--cap", type=int, default=None)

    p = commands.add_parser("normalize", parents=[common], help="Bring a map to Id + H form")
    p.add_argument("file")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

class _Session:
    """Configuration resolved from the file and the flags of one invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = load_config(Path(args.config) if args.config else None)
        self.format = args.format or self.config["output"]["format"]
        if self.format not in ("json", "text"):
            raise ValueError(f"unknown output format {self.format!r}")

        binding = dict(self.config["binding"])
        for key in ("seed", "value_range", "nonzero"):
            if getattr(args, key, None) is not None:
                binding[key] = getattr(args, key)
        self.sampling = SamplingConfig(**binding)

        inversion = dict(self.config["inversion"])
        overrides = {
            "max_terms": args.max_terms,
            "workers": getattr(args, "workers", None),
            "back_substitution": getattr(args, "back_substitute", None),
            "exact_stop_indices": getattr(args, "exact_stops", None),
            "truncation_ceiling": getattr(args, "truncation_ceiling", None),
            "max_iterations": getattr(args, "max_iterations", None),
        }
        inversion.update({k: v for k, v in overrides.items() if v is not None})
        self.inversion = InversionConfig(**inversion)

    def explicit_bindings(self) -> Dict[str, Fraction]:
        found: Dict[str, Fraction] = {}
        for item in self.args.bind:
            name, sep, value = item.partition("=")
            if not sep or not name.strip():
                raise ValueError(f"--bind expects NAME=VALUE, got {item!r}")
            found[name.strip()] = parse_rational(value)
        return found

    def load(self, path: str) -> Tuple[MapDocument, PolynomialMap, Dict[str, Any]]:
        doc = read_map_file(Path(path))
        sampler = RationalSampler(self.sampling) if self.args.random_bind else None
        values = resolve_bindings(doc, self.explicit_bindings(), sampler)
        f = bind_parameters(doc, values)
        context: Dict[str, Any] = {"source": path, "bindings": dict(sorted(values.items()))}
        if sampler is not None:
            context["random_binding"] = {
                "seed": self.sampling.seed,
                "value_range": self.sampling.value_range,
                "nonzero": self.sampling.nonzero,
            }
        return doc, f, context


def _text_report(envelope: Dict[str, Any], body: str = "") -> str:
    return comment_block(summary_lines(envelope)) + body


CommandResult = Tuple[Dict[str, Any], str, int]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_invert(session: _Session) -> CommandResult:
    args = session.args
    doc, f, context = session.load(args.file)
    report = invert(f, session.inversion)
    envelope = with_envelope("invert", inversion_payload(report, doc.variables), context)

    body = ""
    if report.inverse is not None:
        body = render(report.inverse, "text", default_names(f.dimension, "Y"), args.label or "G")

    if report.status is InversionStatus.INVERTED:
        code = EXIT_NEGATIVE if args.expect_noninvertible else EXIT_OK
    elif report.status is InversionStatus.NOT_INVERTIBLE:
        code = EXIT_OK if args.expect_noninvertible else EXIT_NEGATIVE
    else:
        code = EXIT_RESOURCE
    return envelope, _text_report(envelope, body), code


def _cmd_check_keller(session: _Session) -> CommandResult:
    doc, f, context = session.load(session.args.file)
    det = jacobian_determinant(f)
    keller = det == 1
    payload = {
        "keller": keller,
        "constant_determinant": det.is_constant(),
        "jacobian_determinant": polynomial_payload(det, doc.variables),
    }
    envelope = with_envelope("check-keller", payload, context)
    body = f"det J = {render(det, 'text', doc.variables)}\n"
    return envelope, _text_report(envelope, body), EXIT_OK if keller else EXIT_NEGATIVE


def _cmd_check_quasi(session: _Session) -> CommandResult:
    _, f, context = session.load(session.args.file)
    report = is_quasi_translation(f)
    envelope = with_envelope("check-quasi", quasi_translation_payload(report), context)
    return envelope, _text_report(envelope), EXIT_OK if report.is_quasi_translation else EXIT_NEGATIVE


def _cmd_filtration(session: _Session) -> CommandResult:
    args = session.args
    _, f, context = session.load(args.file)
    cap = args.cap if args.cap is not None else session.config["filtration"]["cap"]
    level = filtration_level(f, cap, session.inversion.max_terms)
    payload = {"cap": cap, "level": level, "above_cap": level is None}
    envelope = with_envelope("filtration", payload, context)
    return envelope, _text_report(envelope), EXIT_OK if level is not None else EXIT_NEGATIVE


def _cmd_sequence(session: _Session) -> CommandResult:
    args = session.args
    doc, f, context = session.load(args.file)
    if not 1 <= args.coord <= f.dimension:
        raise ValueError(f"--coord must lie in 1..{f.dimension}, got {args.coord}")
    cap = args.cap
    if cap is None:
        cap = iteration_cap(f, args.truncate if args.truncate is not None else max_inverse_degree(f))
    record = build_sequence(f, args.coord - 1, args.truncate, cap, session.inversion.max_terms)
    envelope = with_envelope("sequence", record_payload(record, doc.variables), context)
    body = "".join(f"P{k} = {render(term, 'text', doc.variables)}\n" for k, term in enumerate(record.terms))
    return envelope, _text_report(envelope, body), EXIT_NEGATIVE if record.exhausted else EXIT_OK


def _cmd_verify(session: _Session) -> CommandResult:
    args = session.args
    _, f, context = session.load(args.file)
    _, g, inverse_context = session.load(args.inverse_file)
    plan = plan_back_substitution(f) if session.inversion.back_substitution else None
    verified = verify_inverse(f, g, plan)
    context["inverse_source"] = inverse_context["source"]
    envelope = with_envelope("verify", {"verified": verified}, context)
    return envelope, _text_report(envelope), EXIT_OK if verified else EXIT_NEGATIVE


def _cmd_druzkowski(session: _Session) -> CommandResult:
    args = session.args
    construction = druzkowski_construction(read_matrix_file(Path(args.matrix)), force=args.force)
    envelope = with_envelope("druzkowski", druzkowski_payload(construction), {"source": args.matrix})
    body = render(construction.map, "text", None, args.label or "F")
    return envelope, _text_report(envelope, body), EXIT_OK


def _cmd_invariants(session: _Session) -> CommandResult:
    args = session.args
    doc, f, context = session.load(args.file)
    cap = args.cap
    if cap is None:
        cap = iteration_cap(f, max_inverse_degree(f))
        if session.inversion.max_iterations is not None:
            cap = min(cap, session.inversion.max_iterations)
    records = untruncated_records(f, cap, session.inversion.max_terms)
    invariants = extract_invariants(f, records)
    payload = {
        "cap": cap,
        "stop_indices": [r.stop_index for r in records],
        "invariants": [polynomial_payload(p, doc.variables) for p in invariants],
    }
    envelope = with_envelope("invariants", payload, context)
    body = "".join(f"I{k + 1} = {render(p, 'text', doc.variables)}\n" for k, p in enumerate(invariants))
    return envelope, _text_report(envelope, body), EXIT_OK


def _cmd_normalize(session: _Session) -> CommandResult:
    args = session.args
    doc, f, context = session.load(args.file)
    normalized, certificate = normalize_affine(f)
    label = args.label or doc.label
    payload = {"map": map_payload(normalized, doc.variables, label), "certificate": certificate_payload(certificate)}
    envelope = with_envelope("normalize", payload, context)
    return envelope, _text_report(envelope, render(normalized, "text", doc.variables, label)), EXIT_OK


COMMANDS: Dict[str, Callable[[_Session], CommandResult]] = {
    "invert": _cmd_invert,
    "check-keller": _cmd_check_keller,
    "check-quasi": _cmd_check_quasi,
    "filtration": _cmd_filtration,
    "sequence": _cmd_sequence,
    "verify": _cmd_verify,
    "druzkowski": _cmd_druzkowski,
    "invariants": _cmd_invariants,
    "normalize": _cmd_normalize,
}


def run_command(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> int:
    """Run one command; the report is written to ``stdout`` and the exit code returned."""

    stdout = stdout or sys.stdout
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK

    configure_logging(args.verbose)
    try:
        session = _Session(args)
        envelope, text, code = COMMANDS[args.command](session)
        if args.output:
            LOGGER.info("Report written to %s", export_report(envelope, Path(args.output)))
    except ResourceLimit as exc:
        LOGGER.error("%s", exc)
        return EXIT_RESOURCE
    except (MapFormatError, ValueError, OSError) as exc:
        LOGGER.error("%s", exc)
        return EXIT_INPUT

    stdout.write(dumps(envelope) if session.format == "json" else text)
    return code


__all__ = ["DEFAULTS", "build_parser", "load_config", "parse_args", "run_command"]
