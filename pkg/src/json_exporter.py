"""Report payloads and their JSON / text rendering.

Every payload carries ``"schema": 1``. Coefficients are written as decimal
strings (numerator and denominator separately) so that no consumer rounds
them; indices, degrees and counts stay JSON numbers.
"""

from __future__ import annotations

import json
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from .inverter import (
    InversionReport,
    QuasiTranslationReport,
    SequenceRecord,
)
from .map_format import format_map
from .polymap import AffineCertificate, DruzkowskiConstruction, PolynomialMap
from .polyring import Polynomial, default_names, format_polynomial, sorted_terms

SCHEMA_VERSION = 1


def _to_plain_python(data: Any) -> Any:
    """Recursively convert exact and numpy objects to built-in Python types."""
    if isinstance(data, dict):
        return {str(key): _to_plain_python(value) for key, value in data.items()}
    if isinstance(data, (list, tuple, set, frozenset)):
        items = sorted(data) if isinstance(data, (set, frozenset)) else data
        return [_to_plain_python(value) for value in items]
    if isinstance(data, Fraction):
        return str(data)
    if isinstance(data, Enum):
        return data.value
    if isinstance(data, np.generic):
        return data.item()
    if isinstance(data, np.ndarray):
        return [_to_plain_python(value) for value in data.tolist()]
    if isinstance(data, Polynomial):
        return format_polynomial(data)
    return data


def polynomial_payload(p: Polynomial, names: Optional[Sequence[str]] = None) -> Dict[str, Any]:
    return {
        "text": format_polynomial(p, names),
        "terms": [
            {
                "exponents": list(exponents),
                "numerator": str(coefficient.numerator),
                "denominator": str(coefficient.denominator),
            }
            for exponents, coefficient in sorted_terms(p)
        ],
    }


def map_payload(f: PolynomialMap, names: Optional[Sequence[str]] = None, label: str = "F") -> Dict[str, Any]:
    names = list(names) if names is not None else default_names(f.dimension)
    return {
        "variables": names,
        "components": [
            {"label": f"{label}{i + 1}", **polynomial_payload(component, names)}
            for i, component in enumerate(f.components)
        ],
    }


def record_payload(record: SequenceRecord, names: Optional[Sequence[str]] = None) -> Dict[str, Any]:
    return {
        "coordinate": record.coordinate + 1,
        "truncation_degree": record.truncation_degree,
        "stop_index": record.stop_index,
        "exhausted": record.exhausted,
        "iteration_cap": record.iteration_cap,
        "terms": [
            {
                "index": k,
                "degree": step.degree,
                "lower_degree": step.lower_degree,
                "term_count": step.terms,
                "text": format_polynomial(term, names),
            }
            for k, (term, step) in enumerate(zip(record.terms, record.profile))
        ],
    }


def certificate_payload(certificate: AffineCertificate) -> Dict[str, Any]:
    return {"shift": list(certificate.shift), "linear": certificate.linear}


def inversion_payload(
    report: InversionReport,
    names: Optional[Sequence[str]] = None,
    inverse_names: Optional[Sequence[str]] = None,
) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "status": report.status,
        "reason": report.reason,
        "verification": report.verification,
        "stop_indices": list(report.stop_indices),
        "truncation_used": report.truncation_used,
        "jacobian_determinant": (
            None if report.jacobian_determinant is None else polynomial_payload(report.jacobian_determinant, names)
        ),
        "passes": [
            {
                "truncation_degree": p.truncation_degree,
                "iteration_cap": p.iteration_cap,
                "stop_indices": {str(i + 1): s for i, s in sorted(p.stop_indices.items())},
                "verified": p.verified,
            }
            for p in report.passes
        ],
        "diagnostics": [
            {
                "coordinate": d.coordinate + 1,
                "method": d.method,
                "inverse_degree": d.inverse_degree,
                "inverse_terms": d.inverse_terms,
                "stop_index": d.stop_index,
                "untruncated_stop_index": d.untruncated_stop_index,
                "profile": [list(step) for step in d.profile],
            }
            for d in report.diagnostics
        ],
    }
    if report.inverse is not None:
        inverse_names = inverse_names or default_names(report.inverse.dimension, "Y")
        payload["inverse"] = map_payload(report.inverse, inverse_names, "G")
    if report.normalization is not None:
        payload["normalization"] = certificate_payload(report.normalization)
    if report.plan is not None:
        payload["back_substitution"] = {
            "sequence_coordinates": [i + 1 for i in report.plan.sequence_coordinates],
            "resolution_order": [i + 1 for i in report.plan.resolution_order],
        }
    return payload


def quasi_translation_payload(report: QuasiTranslationReport) -> Dict[str, Any]:
    return {
        "quasi_translation": report.is_quasi_translation,
        "via_sequence": report.via_sequence,
        "via_jacobian": report.via_jacobian,
        "via_inverse": report.via_inverse,
        "agree": report.agree,
    }


def druzkowski_payload(construction: DruzkowskiConstruction, names: Optional[Sequence[str]] = None) -> Dict[str, Any]:
    return {
        "matrix": construction.matrix,
        "rank": construction.rank,
        "square_zero": construction.square_zero,
        "forced": construction.forced,
        "map": map_payload(construction.map, names),
    }


def with_envelope(command: str, payload: Mapping[str, Any], context: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    envelope: Dict[str, Any] = {"schema": SCHEMA_VERSION, "command": command}
    if context:
        envelope.update(context)
    envelope["result"] = dict(payload)
    return envelope


def dumps(payload: Mapping[str, Any]) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation, trailing newline."""

    return json.dumps(_to_plain_python(payload), indent=2, sort_keys=True) + "\n"


def render(obj: Any, fmt: str = "text", names: Optional[Sequence[str]] = None, label: str = "F") -> str:
    """Render a polynomial or a map as text (file syntax) or JSON."""

    if fmt not in ("text", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(obj, Polynomial):
        if fmt == "text":
            return format_polynomial(obj, names)
        return dumps(polynomial_payload(obj, names))
    if isinstance(obj, PolynomialMap):
        if fmt == "text":
            return format_map(obj, names, label)
        return dumps(map_payload(obj, names, label))
    raise TypeError(f"cannot render {type(obj).__name__}")


def comment_block(lines: Sequence[str]) -> str:
    return "".join(f"# {line}\n" for line in lines)


def summary_lines(envelope: Mapping[str, Any]) -> List[str]:
    """Flat ``key: value`` lines for text output of scalar report fields."""

    plain = _to_plain_python(envelope)
    lines = [f"command: {plain.get('command')}"]
    for key in ("source", "inverse_source", "bindings", "random_binding"):
        if key in plain:
            lines.append(f"{key}: {json.dumps(plain[key], sort_keys=True)}")
    for key, value in sorted(plain.get("result", {}).items()):
        if isinstance(value, (dict, list)) and key not in ("stop_indices",):
            continue
        lines.append(f"{key}: {json.dumps(value, sort_keys=True) if not isinstance(value, str) else value}")
    return lines


def export_report(envelope: Mapping[str, Any], output_path: Path) -> Path:
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8") as f:
        f.write(dumps(envelope))
    return output_path


__all__ = [
    "SCHEMA_VERSION",
    "certificate_payload",
    "comment_block",
    "druzkowski_payload",
    "dumps",
    "export_report",
    "inversion_payload",
    "map_payload",
    "polynomial_payload",
    "quasi_translation_payload",
    "record_payload",
    "render",
    "summary_lines",
    "with_envelope",
]
