"""Shipped parametric maps in dimensions 5 and 6 under seeded bindings."""

import pytest

from src.inverter import (
    InversionConfig,
    filtration_level,
    invert,
    is_quasi_translation,
    plan_back_substitution,
    polynomial_sequence,
    verify_inverse,
)
from src.polymap import is_keller
from src.polyring import variable
from tests.conftest import load_map

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_corrected_five_dimensional_map_is_a_quasi_translation(seed):
    f = load_map("ex32_corrected.map", seed=seed)
    assert is_keller(f)
    report = is_quasi_translation(f)
    assert report.via_sequence and report.via_jacobian
    assert report.via_inverse is True
    assert filtration_level(f, 3) == 2


@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_verbatim_five_dimensional_map_criteria_agree(seed):
    f = load_map("ex32_verbatim.map", seed=seed)
    assert is_quasi_translation(f).agree


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_six_dimensional_map(seed):
    f = load_map("ex33.map", seed=seed)
    assert is_keller(f)

    plan = plan_back_substitution(f)
    assert plan.sequence_coordinates == (0, 1)
    assert plan.resolution_order == (4, 5, 3, 2)

    report = invert(f, InversionConfig(back_substitution=True, exact_stop_indices=True))
    assert report.is_inverted
    assert verify_inverse(f, report.inverse, report.plan)
    # The orbits X_i o F^l, i = 1, 2, are degree-7 polynomials in l, so P_8 is the first zero.
    exact = {d.coordinate: d.untruncated_stop_index for d in report.diagnostics if d.method == "sequence"}
    assert exact == {0: 8, 1: 8}

    second = polynomial_sequence(f, variable(6, 1), 9)
    assert second[9].is_zero
