"""Sequence-based inversion of polynomial maps F = Id + H.

For a polynomial P the sequence P_0 = P, P_k = P_{k-1}(F) - P_{k-1} vanishes
after finitely many steps whenever F is invertible, and the inverse is the
alternating sum of the terms before the first zero. Every inverse returned
here has been checked by exact composition.
"""

from __future__ import annotations

import concurrent.futures
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .errors import (
    ConstantMapError,
    InvariantCheckFailed,
    NotIdPlusH,
    QuasiTranslationDisagreement,
    ResourceLimit,
    SequenceExhaustedError,
    VariableIndexError,
)
from .polymap import (
    AffineCertificate,
    PolynomialMap,
    compose,
    decompose,
    identity_map,
    is_cubic_homogeneous,
    is_identity,
    jacobian,
    jacobian_determinant,
    normalization_inverse,
    normalize_affine,
    subtract_maps,
)
from .polyring import (
    Polynomial,
    PowerCache,
    add_all,
    degrees,
    neg,
    sub,
    substitute,
    total_degree,
    variable,
    variables_used,
    zero,
)

LOGGER = logging.getLogger(__name__)


@dataclass
class InversionConfig:
    """Knobs of the inversion pipeline; mirrors the ``inversion`` section of ``config.yaml``."""

    max_terms: Optional[int] = 250000
    workers: int = 1
    back_substitution: bool = False
    exact_stop_indices: bool = False
    truncation_ceiling: Optional[int] = None
    max_iterations: Optional[int] = None

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        if self.max_terms is not None and self.max_terms < 1:
            raise ValueError(f"max_terms must be positive, got {self.max_terms}")
        if self.truncation_ceiling is not None and self.truncation_ceiling < 1:
            raise ValueError(f"truncation_ceiling must be positive, got {self.truncation_ceiling}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError(f"max_iterations must be positive, got {self.max_iterations}")


class InversionStatus(Enum):
    INVERTED = "Inverted"
    NOT_INVERTIBLE = "NotInvertible"
    BOUND_EXHAUSTED = "BoundExhausted"


class NonInvertibleReason(Enum):
    NONCONSTANT_JACOBIAN = "NonconstantJacobian"
    ZERO_JACOBIAN_CONSTANT = "ZeroJacobianConstant"
    SEQUENCE_EXHAUSTED = "SequenceExhausted"
    CANDIDATE_REJECTED = "CandidateRejected"


class StepProfile(NamedTuple):
    degree: Optional[int]
    lower_degree: Optional[int]
    terms: int


def profile_of(p: Polynomial) -> StepProfile:
    found = degrees(p)
    if found is None:
        return StepProfile(None, None, 0)
    return StepProfile(found.total, found.lower, len(p))


@dataclass
class SequenceRecord:
    """Trace P_0, P_1, ... of one coordinate; ``stop_index`` is ``None`` when the cap was hit first."""

    coordinate: int
    truncation_degree: Optional[int]
    terms: List[Polynomial]
    stop_index: Optional[int]
    iteration_cap: int
    profile: List[StepProfile] = field(default_factory=list)

    @property
    def exhausted(self) -> bool:
        return self.stop_index is None

    def alternating_sum(self) -> Polynomial:
        if self.stop_index is None:
            raise SequenceExhaustedError(self.coordinate, self.iteration_cap)
        ring = self.terms[0].dimension
        return add_all(ring, (t if l % 2 == 0 else neg(t) for l, t in enumerate(self.terms[: self.stop_index])))


@dataclass(frozen=True)
class BackSubstitutionPlan:
    """Coordinates computed by sequences, then the order in which the rest are solved."""

    sequence_coordinates: Tuple[int, ...]
    resolution_order: Tuple[int, ...]

    @property
    def is_trivial(self) -> bool:
        return not self.resolution_order


@dataclass
class TruncationPass:
    truncation_degree: int
    iteration_cap: int
    stop_indices: Dict[int, Optional[int]]
    verified: bool


@dataclass
class CoordinateDiagnostics:
    coordinate: int
    method: str
    inverse_degree: Optional[int] = None
    inverse_terms: int = 0
    stop_index: Optional[int] = None
    untruncated_stop_index: Optional[int] = None
    profile: List[StepProfile] = field(default_factory=list)


@dataclass
class InversionReport:
    status: InversionStatus
    reason: Optional[NonInvertibleReason] = None
    inverse: Optional[PolynomialMap] = None
    stop_indices: Tuple[Optional[int], ...] = ()
    truncation_used: Optional[int] = None
    verification: bool = False
    jacobian_determinant: Optional[Polynomial] = None
    passes: List[TruncationPass] = field(default_factory=list)
    diagnostics: List[CoordinateDiagnostics] = field(default_factory=list)
    normalization: Optional[AffineCertificate] = None
    plan: Optional[BackSubstitutionPlan] = None
    records: List[SequenceRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.status is InversionStatus.INVERTED and not (self.verification and self.inverse is not None):
            raise InvariantCheckFailed("an inverted report must carry a verified inverse")
        if self.status is InversionStatus.NOT_INVERTIBLE and self.reason is None:
            raise ValueError("a NotInvertible report needs a reason")

    @property
    def is_inverted(self) -> bool:
        return self.status is InversionStatus.INVERTED


@dataclass
class QuasiTranslationReport:
    via_sequence: bool
    via_jacobian: bool
    via_inverse: Optional[bool] = None

    @property
    def agree(self) -> bool:
        return self.via_sequence == self.via_jacobian

    @property
    def is_quasi_translation(self) -> bool:
        return self.via_sequence and self.via_jacobian


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------

def max_inverse_degree(f: PolynomialMap) -> int:
    """(deg F)^(n-1), the classical bound on the degree of an inverse."""

    degree = f.degree
    if degree is None or degree < 1:
        raise ConstantMapError("the degree bound needs a map of degree at least one")
    return degree ** (f.dimension - 1)


def iteration_cap(f: PolynomialMap, target_degree: int) -> int:
    """Index by which every sequence of an invertible F with deg G_i <= target_degree has vanished."""

    decomposition = decompose(f)
    if decomposition.is_zero:
        return 1
    if target_degree < 1:
        raise ValueError(f"target degree must be positive, got {target_degree}")
    d = decomposition.min_lower_degree
    outer = f.degree
    cap = (outer * target_degree - d) // (d - 1) + 2
    if is_cubic_homogeneous(f):
        cap = min(cap, (3 * target_degree - 1) // 2 + 1)
    return cap


# ---------------------------------------------------------------------------
# Sequences
# ---------------------------------------------------------------------------

def _guard(p: Polynomial, max_terms: Optional[int], context: str) -> None:
    if max_terms is not None and len(p) > max_terms:
        raise ResourceLimit(max_terms, len(p), context)


def polynomial_sequence(
    f: PolynomialMap,
    p: Polynomial,
    steps: int,
    truncation: Optional[int] = None,
    max_terms: Optional[int] = None,
    cache: Optional[PowerCache] = None,
) -> List[Polynomial]:
    """P_0 = p, ..., P_steps; once a term vanishes the rest are zero."""

    if steps < 0:
        raise ValueError(f"steps must be non-negative, got {steps}")
    if cache is None:
        cache = PowerCache(f.components, truncation, max_terms)
    current = p
    out = [current]
    for k in range(1, steps + 1):
        if current:
            current = sub(substitute(current, f.components, truncation, cache), current)
            _guard(current, max_terms, f"computing P_{k}")
        out.append(current)
    return out


def build_sequence(
    f: PolynomialMap,
    coordinate: int,
    truncation: Optional[int],
    cap: int,
    max_terms: Optional[int] = None,
    cache: Optional[PowerCache] = None,
) -> SequenceRecord:
    decompose(f)
    n = f.dimension
    if not 0 <= coordinate < n:
        raise VariableIndexError(coordinate, n)
    if cache is None:
        cache = PowerCache(f.components, truncation, max_terms)

    current = variable(n, coordinate)
    terms = [current]
    profile = [profile_of(current)]
    for k in range(1, cap + 1):
        current = sub(substitute(current, f.components, truncation, cache), current)
        _guard(current, max_terms, f"computing P_{k} for coordinate {coordinate + 1}")
        terms.append(current)
        profile.append(profile_of(current))
        LOGGER.debug(
            "coordinate %d step %d: degree %s, lower degree %s, %d terms",
            coordinate + 1,
            k,
            profile[-1].degree,
            profile[-1].lower_degree,
            profile[-1].terms,
        )
        if current.is_zero:
            return SequenceRecord(coordinate, truncation, terms, k, cap, profile)
    return SequenceRecord(coordinate, truncation, terms, None, cap, profile)


def _build_record_task(
    coordinate: int, f: PolynomialMap, truncation: Optional[int], cap: int, max_terms: Optional[int]
) -> SequenceRecord:
    return build_sequence(f, coordinate, truncation, cap, max_terms)


def build_records(
    f: PolynomialMap,
    coordinates: Iterable[int],
    truncation: Optional[int],
    cap: int,
    max_terms: Optional[int] = None,
    workers: int = 1,
) -> List[SequenceRecord]:
    """One record per coordinate, optionally fanned out over worker processes."""

    coordinates = list(coordinates)
    if workers > 1 and len(coordinates) > 1:
        task = partial(_build_record_task, f=f, truncation=truncation, cap=cap, max_terms=max_terms)
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(task, coordinates, chunksize=1))
    cache = PowerCache(f.components, truncation, max_terms)
    return [build_sequence(f, i, truncation, cap, max_terms, cache) for i in coordinates]


def untruncated_records(
    f: PolynomialMap, cap: Optional[int] = None, max_terms: Optional[int] = None
) -> List[SequenceRecord]:
    if cap is None:
        cap = iteration_cap(f, max_inverse_degree(f))
    return build_records(f, range(f.dimension), None, cap, max_terms)


def assemble_inverse(records: Sequence[SequenceRecord]) -> PolynomialMap:
    """G_i = sum_{l < m_i} (-1)^l P_l^i, read in the Y variables."""

    ordered = sorted(records, key=lambda r: r.coordinate)
    if [r.coordinate for r in ordered] != list(range(len(ordered))):
        raise ValueError("records must cover every coordinate exactly once")
    return PolynomialMap(tuple(r.alternating_sum() for r in ordered))


# ---------------------------------------------------------------------------
# Back-substitution
# ---------------------------------------------------------------------------

def plan_back_substitution(f: PolynomialMap) -> BackSubstitutionPlan:
    """Split coordinates into those needing a sequence and those solvable as G_i = Y_i - H_i(G)."""

    h = decompose(f).h
    n = f.dimension
    depends = [variables_used(h_i) for h_i in h.components]
    sequence = {i for i in range(n) if i in depends[i]}
    resolved = set(sequence)
    pending = [i for i in range(n) if i not in sequence]
    order: List[int] = []
    while pending:
        ready = [i for i in pending if depends[i] <= resolved]
        if not ready:
            stalled = pending.pop(0)
            sequence.add(stalled)
            resolved.add(stalled)
            continue
        for i in ready:
            order.append(i)
            resolved.add(i)
            pending.remove(i)
    plan = BackSubstitutionPlan(tuple(sorted(sequence)), tuple(order))
    LOGGER.info(
        "Back-substitution plan: sequences for %s, then %s",
        [i + 1 for i in plan.sequence_coordinates],
        [i + 1 for i in plan.resolution_order],
    )
    return plan


def complete_by_back_substitution(
    f: PolynomialMap, partial_inverse: Dict[int, Polynomial], plan: BackSubstitutionPlan
) -> PolynomialMap:
    h = decompose(f).h
    n = f.dimension
    known = dict(partial_inverse)
    missing = [i for i in plan.sequence_coordinates if i not in known]
    if missing:
        raise ValueError(f"no sequence result for coordinates {[i + 1 for i in missing]}")
    for i in plan.resolution_order:
        images = [known.get(j, zero(n)) for j in range(n)]
        known[i] = sub(variable(n, i), substitute(h[i], images))
    return PolynomialMap(tuple(known[i] for i in range(n)))


def _left_composition(f: PolynomialMap, g: PolynomialMap, plan: BackSubstitutionPlan) -> PolynomialMap:
    # Valid once f o g = Id: then g_i o f = F_i - H_i(g o f) for every solved coordinate.
    h = decompose(f).h
    n = f.dimension
    cache = PowerCache(f.components)
    known = {i: substitute(g[i], f.components, cache=cache) for i in plan.sequence_coordinates}
    for i in plan.resolution_order:
        images = [known.get(j, zero(n)) for j in range(n)]
        known[i] = sub(f[i], substitute(h[i], images))
    return PolynomialMap(tuple(known[i] for i in range(n)))


def verify_inverse(f: PolynomialMap, g: PolynomialMap, plan: Optional[BackSubstitutionPlan] = None) -> bool:
    """Both compositions are the identity, checked exactly."""

    if f.dimension != g.dimension:
        return False
    if not is_identity(compose(f, g)):
        return False
    if plan is None or plan.is_trivial:
        return is_identity(compose(g, f))
    return is_identity(_left_composition(f, g, plan))


# ---------------------------------------------------------------------------
# The pipeline
# ---------------------------------------------------------------------------

def _diagnostics(
    g: PolynomialMap, records: Sequence[SequenceRecord], plan: Optional[BackSubstitutionPlan]
) -> List[CoordinateDiagnostics]:
    by_coordinate = {r.coordinate: r for r in records}
    out = []
    for i, component in enumerate(g.components):
        record = by_coordinate.get(i)
        out.append(
            CoordinateDiagnostics(
                coordinate=i,
                method="sequence" if record is not None else "back-substitution",
                inverse_degree=total_degree(component),
                inverse_terms=len(component),
                stop_index=record.stop_index if record is not None else None,
                profile=list(record.profile) if record is not None else [],
            )
        )
    return out


def _record_exact_stops(
    f: PolynomialMap, g: PolynomialMap, diagnostics: List[CoordinateDiagnostics], config: InversionConfig
) -> None:
    for entry in diagnostics:
        if entry.method != "sequence":
            continue
        target = max(total_degree(g[entry.coordinate]) or 1, 1)
        record = build_sequence(f, entry.coordinate, None, iteration_cap(f, target), config.max_terms)
        entry.untruncated_stop_index = record.stop_index
        if record.stop_index != entry.stop_index:
            LOGGER.warning(
                "coordinate %d: truncated stop index %s differs from untruncated %s",
                entry.coordinate + 1,
                entry.stop_index,
                record.stop_index,
            )


def invert(f: PolynomialMap, config: Optional[InversionConfig] = None) -> InversionReport:
    config = config or InversionConfig()
    n = f.dimension

    det = jacobian_determinant(f)
    if not det.is_constant():
        LOGGER.info("Jacobian determinant is not constant; map is not invertible")
        return InversionReport(
            InversionStatus.NOT_INVERTIBLE, NonInvertibleReason.NONCONSTANT_JACOBIAN, jacobian_determinant=det
        )
    if det.is_zero:
        LOGGER.info("Jacobian determinant vanishes identically")
        return InversionReport(
            InversionStatus.NOT_INVERTIBLE, NonInvertibleReason.ZERO_JACOBIAN_CONSTANT, jacobian_determinant=det
        )
    LOGGER.info("Jacobian determinant is the constant %s", det.constant_term())

    certificate: Optional[AffineCertificate] = None
    work = f
    try:
        decompose(f)
    except NotIdPlusH:
        work, certificate = normalize_affine(f)

    plan = plan_back_substitution(work) if config.back_substitution else None
    coordinates = plan.sequence_coordinates if plan is not None else tuple(range(n))

    bound = max_inverse_degree(work)
    ceiling = bound if config.truncation_ceiling is None else min(bound, config.truncation_ceiling)
    b = min(work.degree, ceiling)
    passes: List[TruncationPass] = []
    records: List[SequenceRecord] = []
    candidate: Optional[PolynomialMap] = None
    verified = False
    clamped = False

    while True:
        theoretical = iteration_cap(work, b)
        cap = theoretical if config.max_iterations is None else min(theoretical, config.max_iterations)
        clamped = cap < theoretical
        records = build_records(work, coordinates, b, cap, config.max_terms, config.workers)
        stops = {r.coordinate: r.stop_index for r in records}
        verified = False
        if not any(r.exhausted for r in records):
            partial_inverse = {r.coordinate: r.alternating_sum() for r in records}
            if plan is not None:
                candidate = complete_by_back_substitution(work, partial_inverse, plan)
            else:
                candidate = PolynomialMap(tuple(partial_inverse[i] for i in range(n)))
            verified = verify_inverse(work, candidate, plan)
        passes.append(TruncationPass(b, cap, stops, verified))
        LOGGER.info(
            "Truncation pass b=%d cap=%d: stop indices %s, verified %s",
            b,
            cap,
            [s for _, s in sorted(stops.items())],
            verified,
        )
        if verified or b >= ceiling:
            break
        b = min(2 * b, ceiling)

    stop_indices = tuple(next((r.stop_index for r in records if r.coordinate == i), None) for i in range(n))
    common = dict(
        stop_indices=stop_indices,
        truncation_used=b,
        jacobian_determinant=det,
        passes=passes,
        normalization=certificate,
        plan=plan,
        records=records,
    )

    if verified:
        diagnostics = _diagnostics(candidate, records, plan)
        if config.exact_stop_indices:
            _record_exact_stops(work, candidate, diagnostics, config)
        inverse = candidate
        if certificate is not None:
            inverse = compose(candidate, normalization_inverse(certificate))
        return InversionReport(
            InversionStatus.INVERTED, inverse=inverse, verification=True, diagnostics=diagnostics, **common
        )

    if ceiling < bound or clamped:
        LOGGER.warning("Stopped at truncation %d below the authoritative bound %d", b, bound)
        return InversionReport(InversionStatus.BOUND_EXHAUSTED, **common)
    if any(r.exhausted for r in records):
        return InversionReport(InversionStatus.NOT_INVERTIBLE, NonInvertibleReason.SEQUENCE_EXHAUSTED, **common)
    return InversionReport(InversionStatus.NOT_INVERTIBLE, NonInvertibleReason.CANDIDATE_REJECTED, **common)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def telescoping_check(f: PolynomialMap, p: Polynomial, m: int) -> bool:
    """p == sum_{l<m} (-1)^l P_l(F) + (-1)^m P_m with untruncated terms."""

    decompose(f)
    sequence = polynomial_sequence(f, p, m)
    cache = PowerCache(f.components)
    parts = []
    for l in range(m):
        image = substitute(sequence[l], f.components, cache=cache)
        parts.append(image if l % 2 == 0 else neg(image))
    parts.append(sequence[m] if m % 2 == 0 else neg(sequence[m]))
    return add_all(p.dimension, parts) == p


def extract_invariants(f: PolynomialMap, records: Sequence[SequenceRecord]) -> List[Polynomial]:
    """The last nonzero term P_{m-1} of every stopped record; each satisfies P(F) = P."""

    cache = PowerCache(f.components)
    found = []
    for record in records:
        if record.stop_index is None or record.stop_index < 1:
            continue
        candidate = record.terms[record.stop_index - 1]
        if substitute(candidate, f.components, cache=cache) != candidate:
            raise InvariantCheckFailed(
                f"P_{record.stop_index - 1} of coordinate {record.coordinate + 1} is not invariant "
                f"(truncation {record.truncation_degree})"
            )
        found.append(candidate)
    return found


def is_quasi_translation(f: PolynomialMap) -> QuasiTranslationReport:
    h = decompose(f).h
    n = f.dimension
    cache = PowerCache(f.components)
    via_sequence = all(not polynomial_sequence(f, variable(n, i), 2, cache=cache)[2] for i in range(n))
    via_jacobian = all(not entry for entry in jacobian(h).apply(h.components))
    report = QuasiTranslationReport(via_sequence, via_jacobian)
    if not report.agree:
        raise QuasiTranslationDisagreement(report)
    if report.is_quasi_translation:
        report.via_inverse = verify_inverse(f, subtract_maps(identity_map(n), h))
    return report


def filtration_level(f: PolynomialMap, cap: int, max_terms: Optional[int] = None) -> Optional[int]:
    """Smallest k <= cap with P_k^i = 0 for every i; ``None`` when above the cap.

    A finite level makes the alternating sums an inverse, so a map whose
    Jacobian determinant is not a nonzero constant is above every cap and no
    sequence is built for it.
    """

    decompose(f)
    det = jacobian_determinant(f)
    if det.is_zero or not det.is_constant():
        LOGGER.info("Jacobian determinant is not a nonzero constant; filtration level is infinite")
        return None
    n = f.dimension
    cache = PowerCache(f.components, max_terms=max_terms)
    current = [variable(n, i) for i in range(n)]
    for k in range(1, cap + 1):
        current = [sub(substitute(p, f.components, cache=cache), p) if p else p for p in current]
        for p in current:
            _guard(p, max_terms, f"filtration step {k}")
        if all(not p for p in current):
            return k
    return None


__all__ = [
    "BackSubstitutionPlan",
    "CoordinateDiagnostics",
    "InversionConfig",
    "InversionReport",
    "InversionStatus",
    "NonInvertibleReason",
    "QuasiTranslationReport",
    "SequenceRecord",
    "StepProfile",
    "TruncationPass",
    "assemble_inverse",
    "build_records",
    "build_sequence",
    "complete_by_back_substitution",
    "extract_invariants",
    "filtration_level",
    "invert",
    "is_quasi_translation",
    "iteration_cap",
    "max_inverse_degree",
    "plan_back_substitution",
    "polynomial_sequence",
    "profile_of",
    "telescoping_check",
    "untruncated_records",
    "verify_inverse",
]
