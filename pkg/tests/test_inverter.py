from fractions import Fraction

import pytest
from hypothesis import assume, given, settings

from src.errors import (
    ConstantMapError,
    InvariantCheckFailed,
    ResourceLimit,
    SequenceExhaustedError,
    VariableIndexError,
)
from src.inverter import (
    InversionConfig,
    InversionReport,
    InversionStatus,
    NonInvertibleReason,
    StepProfile,
    assemble_inverse,
    build_records,
    build_sequence,
    extract_invariants,
    filtration_level,
    invert,
    is_quasi_translation,
    iteration_cap,
    max_inverse_degree,
    plan_back_substitution,
    polynomial_sequence,
    telescoping_check,
    untruncated_records,
    verify_inverse,
)
from src.polymap import (
    PolynomialMap,
    compose,
    decompose,
    druzkowski,
    identity_map,
    is_identity,
    is_keller,
    subtract_maps,
)
from src.polyring import homogeneous_components, lower_degree, total_degree, variable, zero
from src.sampling import RationalSampler, SamplingConfig
from tests.strategies import cubic_maps, id_plus_h_maps

X1, X2 = variable(2, 0), variable(2, 1)
Z1, Z2, Z3 = (variable(3, i) for i in range(3))

WORKED_INVERSE = PolynomialMap(
    (
        X1 - X2 ** 2,
        X2 - X1 ** 3 + X2 ** 6 - 3 * X1 * X2 ** 4 + 3 * X1 ** 2 * X2 ** 2,
    )
)

# X + (X2^3, X3^3, 0): inverse of degree 9, stop indices (5, 2, 1).
TRIANGULAR_CUBIC = PolynomialMap((Z1 + Z2 ** 3, Z2 + Z3 ** 3, Z3))
TRIANGULAR_CUBIC_INVERSE = PolynomialMap((Z1 - (Z2 - Z3 ** 3) ** 3, Z2 - Z3 ** 3, Z3))


class TestBounds:
    def test_max_inverse_degree(self, worked_example):
        assert max_inverse_degree(worked_example) == 6
        assert max_inverse_degree(TRIANGULAR_CUBIC) == 9
        assert max_inverse_degree(identity_map(4)) == 1

    def test_constant_map_has_no_degree_bound(self):
        with pytest.raises(ConstantMapError):
            max_inverse_degree(PolynomialMap((zero(1),)))

    def test_iteration_cap_cubic_homogeneous(self):
        assert iteration_cap(PolynomialMap((X1 + X2 ** 3, X2)), 3) == 5

    def test_iteration_cap_identity(self):
        assert iteration_cap(identity_map(3), 7) == 1

    def test_iteration_cap_worked_example(self, worked_example):
        assert iteration_cap(worked_example, 6) == 36


class TestSequences:
    def test_first_coordinate_of_worked_example(self, worked_example):
        record = build_sequence(worked_example, 0, 6, iteration_cap(worked_example, 6))
        assert record.stop_index == 5
        assert record.terms[1] == (X2 + X1 ** 3) ** 2
        assert record.terms[2] == 3 * X1 ** 6 + 6 * X1 * X2 ** 5 + 6 * X1 ** 2 * X2 ** 3 + 2 * X1 ** 3 * X2
        assert record.terms[3] == 2 * X1 ** 6 + 18 * X1 * X2 ** 5 + 6 * X1 ** 2 * X2 ** 3
        assert record.terms[4] == 12 * X1 * X2 ** 5
        assert record.terms[5].is_zero
        assert len(record.terms) == 6

    def test_second_coordinate_of_worked_example(self, worked_example):
        record = build_sequence(worked_example, 1, 6, iteration_cap(worked_example, 6))
        assert record.stop_index == 5
        assert record.terms[1] == X1 ** 3
        assert record.terms[4] == 6 * X2 ** 6
        assert record.profile[4] == StepProfile(6, 6, 1)
        assert record.profile[5] == StepProfile(None, None, 0)

    def test_triangular_shear(self):
        f = PolynomialMap((X1 + X2 ** 3, X2))
        first, second = build_records(f, range(2), None, iteration_cap(f, 3))
        assert first.stop_index == 2
        assert first.terms[1] == X2 ** 3
        assert second.stop_index == 1
        assert assemble_inverse([second, first]) == PolynomialMap((X1 - X2 ** 3, X2))

    def test_exhausted_record(self, worked_example):
        record = build_sequence(worked_example, 0, 6, 2)
        assert record.exhausted
        assert record.iteration_cap == 2
        other = build_sequence(worked_example, 1, 6, 36)
        with pytest.raises(SequenceExhaustedError):
            assemble_inverse([record, other])

    def test_records_must_cover_every_coordinate(self, worked_example):
        record = build_sequence(worked_example, 1, 6, 36)
        with pytest.raises(ValueError):
            assemble_inverse([record])

    def test_coordinate_out_of_range(self, worked_example):
        with pytest.raises(VariableIndexError):
            build_sequence(worked_example, 2, 6, 10)

    def test_polynomial_sequence_stays_zero(self):
        f = PolynomialMap((X1 + X2 ** 2, X2))
        sequence = polynomial_sequence(f, X1, 4)
        assert sequence[:2] == [X1, X2 ** 2]
        assert all(term.is_zero for term in sequence[2:])
        assert polynomial_sequence(f, X1, 0) == [X1]

    def test_worker_pool_gives_same_records(self, worked_example):
        serial = build_records(worked_example, range(2), 6, 36)
        pooled = build_records(worked_example, range(2), 6, 36, workers=2)
        assert [r.terms for r in pooled] == [r.terms for r in serial]
        assert [r.stop_index for r in pooled] == [5, 5]


class TestVerifyInverse:
    def test_worked_example(self, worked_example):
        assert verify_inverse(worked_example, WORKED_INVERSE)

    def test_identity(self):
        assert verify_inverse(identity_map(3), identity_map(3))

    def test_wrong_inverse(self, worked_example):
        assert not verify_inverse(worked_example, identity_map(2))

    def test_dimension_mismatch_is_false(self):
        assert not verify_inverse(identity_map(2), identity_map(3))

    def test_structured_left_composition(self, worked_example):
        plan = plan_back_substitution(worked_example)
        assert verify_inverse(worked_example, WORKED_INVERSE, plan)
        assert not verify_inverse(worked_example, identity_map(2), plan)


class TestInvert:
    def test_worked_example(self, worked_example):
        report = invert(worked_example)
        assert report.status is InversionStatus.INVERTED
        assert report.inverse == WORKED_INVERSE
        assert report.stop_indices == (5, 5)
        assert report.verification
        assert report.truncation_used == 6
        assert report.jacobian_determinant == 1
        assert [d.inverse_degree for d in report.diagnostics] == [2, 6]

    def test_identity(self):
        report = invert(identity_map(3))
        assert report.is_inverted
        assert report.inverse == identity_map(3)
        assert report.stop_indices == (1, 1, 1)

    def test_adaptive_truncation_doubles(self):
        report = invert(TRIANGULAR_CUBIC)
        assert report.inverse == TRIANGULAR_CUBIC_INVERSE
        assert [p.truncation_degree for p in report.passes] == [3, 6, 9]
        assert [p.verified for p in report.passes] == [False, False, True]
        assert report.stop_indices == (5, 2, 1)

    def test_exact_stop_indices(self):
        report = invert(TRIANGULAR_CUBIC, InversionConfig(exact_stop_indices=True))
        assert [d.untruncated_stop_index for d in report.diagnostics] == [5, 2, 1]

    def test_nonconstant_jacobian(self):
        report = invert(PolynomialMap((X1 + X1 ** 2, X2)))
        assert report.status is InversionStatus.NOT_INVERTIBLE
        assert report.reason is NonInvertibleReason.NONCONSTANT_JACOBIAN
        assert report.jacobian_determinant == 1 + 2 * X1
        assert report.passes == []
        assert report.inverse is None

    def test_zero_jacobian(self):
        report = invert(PolynomialMap((X1 + X2, X1 + X2)))
        assert report.reason is NonInvertibleReason.ZERO_JACOBIAN_CONSTANT

    @pytest.mark.parametrize("seed", range(10))
    def test_nonconstant_jacobian_family_never_iterates(self, seed):
        sampler = RationalSampler(SamplingConfig(seed=seed))
        f = sampler.nonconstant_jacobian_map(2 + seed % 2)
        report = invert(f)
        assert report.reason is NonInvertibleReason.NONCONSTANT_JACOBIAN
        assert report.passes == []
        assert report.records == []

    def test_truncation_ceiling_below_bound(self, worked_example):
        report = invert(worked_example, InversionConfig(truncation_ceiling=3))
        assert report.status is InversionStatus.BOUND_EXHAUSTED
        assert report.reason is None
        assert report.truncation_used == 3

    def test_iteration_clamp(self, worked_example):
        report = invert(worked_example, InversionConfig(max_iterations=2))
        assert report.status is InversionStatus.BOUND_EXHAUSTED
        assert all(s is None for s in report.stop_indices)

    def test_affine_normalization(self):
        f = PolynomialMap((2 * X1 + X2 ** 3 + 1, X2))
        report = invert(f)
        assert report.is_inverted
        assert report.normalization is not None
        assert report.inverse == PolynomialMap(((X1 - 1 - X2 ** 3) * Fraction(1, 2), X2))
        assert verify_inverse(f, report.inverse)

    def test_affine_conjugate_of_worked_example(self, worked_example, sampler):
        f = sampler.affine_conjugate(worked_example)
        report = invert(f)
        assert report.is_inverted
        assert is_identity(compose(f, report.inverse))
        assert is_identity(compose(report.inverse, f))

    def test_workers(self, worked_example):
        report = invert(worked_example, InversionConfig(workers=2))
        assert report.inverse == WORKED_INVERSE

    def test_report_requires_verified_inverse(self):
        with pytest.raises(InvariantCheckFailed):
            InversionReport(InversionStatus.INVERTED)
        with pytest.raises(ValueError):
            InversionReport(InversionStatus.NOT_INVERTIBLE)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            InversionConfig(workers=0)
        with pytest.raises(ValueError):
            InversionConfig(max_terms=0)


class TestBackSubstitution:
    def test_triangular_plan_needs_no_sequence(self):
        plan = plan_back_substitution(PolynomialMap((Z1 + Z2 ** 2, Z2 + Z3 ** 3, Z3)))
        assert plan.sequence_coordinates == ()
        assert plan.resolution_order == (2, 1, 0)

    def test_triangular_inverse(self):
        f = PolynomialMap((Z1 + Z2 ** 2, Z2 + Z3 ** 3, Z3))
        report = invert(f, InversionConfig(back_substitution=True))
        assert report.inverse == PolynomialMap((Z1 - (Z2 - Z3 ** 3) ** 2, Z2 - Z3 ** 3, Z3))
        assert [d.method for d in report.diagnostics] == ["back-substitution"] * 3

    def test_worked_example(self, worked_example):
        plan = plan_back_substitution(worked_example)
        assert plan.sequence_coordinates == (0,)
        assert plan.resolution_order == (1,)
        report = invert(worked_example, InversionConfig(back_substitution=True))
        assert report.inverse == WORKED_INVERSE
        assert report.stop_indices == (5, None)

    def test_cycle_is_broken_by_a_sequence(self):
        f = PolynomialMap((X1 + X2 ** 3, X2))
        plan = plan_back_substitution(f)
        assert plan.sequence_coordinates == ()
        assert plan.resolution_order == (1, 0)
        g = PolynomialMap((X1 + X2 ** 2, X2 + X1 ** 2))
        cyclic = plan_back_substitution(g)
        assert cyclic.sequence_coordinates == (0,)
        assert cyclic.resolution_order == (1,)


class TestTelescoping:
    def test_identity(self):
        assert telescoping_check(identity_map(2), X1 ** 2 - 3 * X2, 1)

    def test_worked_example(self, worked_example):
        assert telescoping_check(worked_example, X1, 5)

    @settings(max_examples=40, deadline=None)
    @given(cubic_maps(2, max_terms=2))
    def test_random_cubic_maps(self, f):
        for m in range(1, 4):
            assert telescoping_check(f, X1, m)

    def test_seeded_suite(self):
        sampler = RationalSampler(SamplingConfig(seed=11))
        for k in range(200):
            n = 1 + k % 3
            f = sampler.cubic_map(n, n_terms=1)
            for m in range(1, 4):
                assert telescoping_check(f, variable(n, k % n), m)

    @pytest.mark.slow
    def test_seeded_suite_fourth_step(self):
        sampler = RationalSampler(SamplingConfig(seed=11))
        for k in range(200):
            n = 1 + k % 3
            f = sampler.cubic_map(n, n_terms=1)
            assert telescoping_check(f, variable(n, k % n), 4)


class TestInvariants:
    def test_identity(self):
        records = untruncated_records(identity_map(2))
        assert extract_invariants(identity_map(2), records) == [X1, X2]

    def test_shear(self):
        f = PolynomialMap((X1 + X2 ** 3, X2))
        assert extract_invariants(f, untruncated_records(f)) == [X2 ** 3, X2]

    def test_quasi_translation(self):
        f = PolynomialMap((X1 + X2 ** 2, X2))
        assert extract_invariants(f, untruncated_records(f)) == [X2 ** 2, X2]

    def test_truncated_record_is_caught(self, worked_example):
        record = build_sequence(worked_example, 0, 6, 36)
        with pytest.raises(InvariantCheckFailed):
            extract_invariants(worked_example, [record])


class TestQuasiTranslation:
    def test_positive(self):
        report = is_quasi_translation(PolynomialMap((X1 + X2 ** 2, X2)))
        assert report.via_sequence and report.via_jacobian
        assert report.is_quasi_translation
        assert report.via_inverse is True

    def test_negative(self):
        report = is_quasi_translation(PolynomialMap((X1 + X1 ** 3, X2)))
        assert not report.via_sequence and not report.via_jacobian
        assert report.agree
        assert report.via_inverse is None

    def test_seeded_oracle(self):
        sampler = RationalSampler(SamplingConfig(seed=5))
        positives = 0
        for k in range(100):
            n = 2 + k % 3
            f = sampler.quasi_translation(n) if k % 2 == 0 else sampler.id_plus_h(n, n_terms=1)
            report = is_quasi_translation(f)
            assert report.agree
            if report.is_quasi_translation:
                positives += 1
                h = decompose(f).h
                assert is_identity(compose(subtract_maps(identity_map(n), h), f))
        assert positives >= 50

    @settings(max_examples=40, deadline=None)
    @given(id_plus_h_maps(2, max_terms=1))
    def test_criteria_agree(self, f):
        assert is_quasi_translation(f).agree


class TestFiltration:
    def test_identity(self):
        assert filtration_level(identity_map(3), 10) == 1

    def test_quasi_translation(self):
        assert filtration_level(PolynomialMap((X1 + X2 ** 2, X2)), 10) == 2

    def test_triangular(self):
        assert filtration_level(TRIANGULAR_CUBIC, 10) == 5

    def test_above_cap(self):
        assert filtration_level(PolynomialMap((X1 + X1 ** 3, X2)), 4) is None

    def test_nonconstant_jacobian_is_above_any_cap(self):
        assert filtration_level(PolynomialMap((X1 + X1 ** 3, X2)), 10, 250000) is None
        assert filtration_level(PolynomialMap((X1 + X1 ** 3, X2)), 1000) is None

    def test_term_ceiling(self, worked_example):
        with pytest.raises(ResourceLimit):
            filtration_level(worked_example, 10, max_terms=50)


class TestDegreeStructure:
    @settings(max_examples=40, deadline=None)
    @given(id_plus_h_maps(2, max_degree=3, max_terms=2, min_degree=2))
    def test_lower_degree_grows_by_at_least_d_minus_one(self, f):
        d = decompose(f).min_lower_degree
        assume(d is not None)
        for i in range(2):
            terms = polynomial_sequence(f, variable(2, i), 3)
            for previous, current in zip(terms, terms[1:]):
                if current:
                    assert lower_degree(current) >= lower_degree(previous) + d - 1

    def test_quadratic_lower_degree_growth(self):
        f = PolynomialMap((X1 + X2 ** 2 + X1 * X2, X2 + X1 ** 2))
        terms = polynomial_sequence(f, X1, 4)
        assert [lower_degree(t) for t in terms[:3]] == [1, 2, 3]
        assert all(lower_degree(t) >= k + 1 for k, t in enumerate(terms) if t)

    def _check_cubic_record(self, record, inverse_degree):
        for k, term in enumerate(record.terms):
            if k == 0 or term.is_zero:
                continue
            assert all(d % 2 == 1 for d in homogeneous_components(term))
            if k >= 2:
                assert lower_degree(term) >= 2 * k + 1
            assert total_degree(term) <= 3 * inverse_degree

    def test_triangular_cubic(self):
        for record in untruncated_records(TRIANGULAR_CUBIC):
            self._check_cubic_record(record, total_degree(TRIANGULAR_CUBIC_INVERSE[record.coordinate]))

    @pytest.mark.parametrize("seed", range(10))
    def test_druzkowski_maps(self, seed):
        sampler = RationalSampler(SamplingConfig(seed=100 + seed))
        f = druzkowski(sampler.keller_square_zero_matrix(2 + seed % 3))
        report = invert(f)
        assert report.is_inverted
        for record in untruncated_records(f):
            self._check_cubic_record(record, total_degree(report.inverse[record.coordinate]) or 1)


class TestDruzkowskiRoundTrip:
    @pytest.mark.parametrize("seed", range(50))
    def test_invert_and_verify(self, seed):
        sampler = RationalSampler(SamplingConfig(seed=seed))
        n = 2 + seed % 3
        f = druzkowski(sampler.keller_square_zero_matrix(n))
        assert is_keller(f)
        report = invert(f)
        assert report.is_inverted
        assert verify_inverse(f, report.inverse)
        assert all((total_degree(g) or 0) <= 3 ** (n - 1) for g in report.inverse)
