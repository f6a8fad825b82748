import io
import json

import pytest

from src.cli import DEFAULTS, EXIT_INPUT, EXIT_NEGATIVE, EXIT_OK, EXIT_RESOURCE, load_config, parse_args, run_command
from tests.conftest import MAPS_DIR

EX31 = str(MAPS_DIR / "ex31.map")
NOTINV = str(MAPS_DIR / "notinv.map")
CORRECTED = str(MAPS_DIR / "ex32_corrected.map")
MATRIX = str(MAPS_DIR / "nilpotent4.mat")


def run(*argv):
    out = io.StringIO()
    code = run_command(list(argv), stdout=out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv)
    return code, json.loads(text) if text else None


class TestInvertCommand:
    def test_worked_example(self):
        code, report = run_json("invert", EX31)
        assert code == EXIT_OK
        assert report["schema"] == 1
        assert report["command"] == "invert"
        result = report["result"]
        assert result["status"] == "Inverted"
        assert result["verification"] is True
        assert result["stop_indices"] == [5, 5]
        assert [c["text"] for c in result["inverse"]["components"]] == [
            "Y1 - Y2^2",
            "Y2 - Y1^3 + 3*Y1^2*Y2^2 - 3*Y1*Y2^4 + Y2^6",
        ]

    def test_coefficients_are_strings(self):
        _, report = run_json("invert", EX31)
        term = report["result"]["inverse"]["components"][1]["terms"][1]
        assert term == {"exponents": [3, 0], "numerator": "-1", "denominator": "1"}

    def test_not_invertible(self):
        code, report = run_json("invert", NOTINV)
        assert code == EXIT_NEGATIVE
        assert report["result"]["status"] == "NotInvertible"
        assert report["result"]["reason"] == "NonconstantJacobian"
        assert report["result"]["jacobian_determinant"]["text"] == "1 + 2*X1"

    def test_expect_noninvertible(self):
        code, _ = run("invert", NOTINV, "--expect-noninvertible")
        assert code == EXIT_OK

    def test_bound_exhausted_is_inconclusive(self):
        code, report = run_json("invert", EX31, "--truncation-ceiling", "3")
        assert code == EXIT_RESOURCE
        assert report["result"]["status"] == "BoundExhausted"

    def test_term_ceiling(self):
        code, text = run("invert", EX31, "--max-terms", "2")
        assert code == EXIT_RESOURCE
        assert text == ""

    def test_text_output_round_trips_through_verify(self, tmp_path):
        code, text = run("invert", EX31, "--format", "text")
        assert code == EXIT_OK
        assert text.startswith("# command: invert\n")
        inverse = tmp_path / "inverse.map"
        inverse.write_text(text, encoding="utf-8")
        code, report = run_json("verify", EX31, str(inverse))
        assert code == EXIT_OK
        assert report["result"]["verified"] is True
        assert report["inverse_source"] == str(inverse)

    def test_back_substitution_plan_is_reported(self):
        code, report = run_json("invert", EX31, "--back-substitute")
        assert code == EXIT_OK
        assert report["result"]["back_substitution"] == {"sequence_coordinates": [1], "resolution_order": [2]}


class TestOtherCommands:
    def test_check_keller(self):
        assert run("check-keller", EX31)[0] == EXIT_OK
        code, report = run_json("check-keller", NOTINV)
        assert code == EXIT_NEGATIVE
        assert report["result"]["constant_determinant"] is False

    def test_check_quasi_with_random_binding(self):
        code, report = run_json("check-quasi", CORRECTED, "--random-bind", "--seed", "7")
        assert code == EXIT_OK
        assert report["result"]["via_sequence"] is True
        assert report["result"]["via_jacobian"] is True
        assert report["random_binding"]["seed"] == 7
        assert set(report["bindings"]) == {"a1", "a2", "a3", "a4", "b1", "c1", "c2", "c5", "e2"}

    def test_unbound_parameters_are_input_errors(self):
        assert run("check-quasi", CORRECTED)[0] == EXIT_INPUT

    def test_zero_denominator_binding(self):
        assert run("check-quasi", CORRECTED, "--random-bind", "--bind", "c2=0")[0] == EXIT_INPUT

    def test_filtration(self):
        code, report = run_json("filtration", EX31, "--cap", "2")
        assert code == EXIT_NEGATIVE
        assert report["result"] == {"above_cap": True, "cap": 2, "level": None}

    def test_filtration_at_default_cap_rejects_non_keller_map(self):
        code, report = run_json("filtration", NOTINV)
        assert code == EXIT_NEGATIVE
        assert report["result"] == {"above_cap": True, "cap": 10, "level": None}

    def test_sequence(self):
        code, report = run_json("sequence", EX31, "--coord", "2", "--truncate", "6")
        assert code == EXIT_OK
        result = report["result"]
        assert result["coordinate"] == 2
        assert result["stop_index"] == 5
        assert result["terms"][4]["text"] == "6*X2^6"

    def test_sequence_coordinate_out_of_range(self):
        assert run("sequence", EX31, "--coord", "3")[0] == EXIT_INPUT

    def test_druzkowski(self):
        code, report = run_json("druzkowski", "--matrix", MATRIX)
        assert code == EXIT_OK
        assert report["result"]["rank"] == 2
        assert report["result"]["square_zero"] is True
        assert report["result"]["matrix"][0] == ["0", "0", "1", "2"]

    def test_invariants(self, tmp_path):
        shear = tmp_path / "shear.map"
        shear.write_text("vars X1 X2\nF1 = X1 + X2^3\nF2 = X2\n", encoding="utf-8")
        code, report = run_json("invariants", str(shear))
        assert code == EXIT_OK
        assert [p["text"] for p in report["result"]["invariants"]] == ["X2^3", "X2"]

    def test_normalize(self, tmp_path):
        affine = tmp_path / "affine.map"
        affine.write_text("vars X1 X2\nF1 = 2*X1 + X2^3 + 1\nF2 = X2\n", encoding="utf-8")
        code, text = run("normalize", str(affine), "--format", "text")
        assert code == EXIT_OK
        assert "F1 = X1 + 1/2*X2^3\n" in text


class TestSurface:
    def test_unknown_command(self):
        assert run("explode", EX31)[0] == EXIT_INPUT

    def test_unknown_flag(self):
        assert run("invert", EX31, "--frobnicate")[0] == EXIT_INPUT

    def test_missing_file(self, tmp_path):
        assert run("invert", str(tmp_path / "absent.map"))[0] == EXIT_INPUT

    def test_syntax_error(self, tmp_path):
        broken = tmp_path / "broken.map"
        broken.write_text("vars X1\nF1 = X1^2^3\n", encoding="utf-8")
        assert run("invert", str(broken))[0] == EXIT_INPUT

    def test_determinism(self):
        first = run("check-quasi", CORRECTED, "--random-bind", "--seed", "3", "--nonzero")
        second = run("check-quasi", CORRECTED, "--random-bind", "--seed", "3", "--nonzero")
        assert first == second

    def test_parse_args(self):
        args = parse_args(["sequence", EX31, "--coord", "1", "--cap", "4"])
        assert args.command == "sequence"
        assert args.coord == 1
        assert args.cap == 4


class TestConfig:
    def test_missing_file_gives_defaults(self, tmp_path):
        assert load_config(tmp_path / "none.yaml") == DEFAULTS

    def test_section_merge(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("binding:\n  seed: 3\n", encoding="utf-8")
        config = load_config(path)
        assert config["binding"] == {"seed": 3, "value_range": 9, "nonzero": False}
        assert config["inversion"] == DEFAULTS["inversion"]

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("inversion:\n  speed: 11\n", encoding="utf-8")
        with pytest.raises(ValueError):
            load_config(path)

    def test_config_file_drives_the_run(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("output:\n  format: text\n", encoding="utf-8")
        code, text = run("check-keller", EX31, "--config", str(path))
        assert code == EXIT_OK
        assert text.startswith("# command: check-keller\n")
