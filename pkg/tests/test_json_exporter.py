import json

import numpy as np
import pytest

from src.json_exporter import _to_plain_python, dumps, export_report, map_payload, render
from src.map_format import bind_parameters, parse_map, parse_polynomial
from src.polymap import PolynomialMap
from src.polyring import Polynomial, default_names, variable
from tests.test_cli import EX31, run

Y1, Y2 = variable(2, 0), variable(2, 1)
Y = default_names(2, "Y")


class TestRender:
    def test_inverse_component(self):
        assert render(Y1 - Y2 ** 2, "text", Y) == "Y1 - Y2^2"

    def test_zero(self):
        assert render(Polynomial(2)) == "0"

    def test_map_text_parses_back(self, sampler):
        for n in (1, 2, 3):
            f = sampler.id_plus_h(n)
            assert bind_parameters(parse_map(render(f, "text"))) == f

    def test_polynomial_text_parses_back(self, sampler):
        p = sampler.polynomial(2, 4, 5)
        assert parse_polynomial(render(p, "text", Y), Y) == p

    def test_json_form(self):
        f = PolynomialMap((Y1 - Y2 ** 2, Y2))
        payload = json.loads(render(f, "json", Y, "G"))
        assert payload == json.loads(dumps(map_payload(f, Y, "G")))
        assert [c["text"] for c in payload["components"]] == ["Y1 - Y2^2", "Y2"]

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            render(Y1, "latex")

    def test_unknown_object(self):
        with pytest.raises(TypeError):
            render(3)


class TestExport:
    def test_numpy_values_become_plain(self):
        data = {"rank": np.int64(2), "rows": np.array([[1, 0], [0, 1]])}
        assert _to_plain_python(data) == {"rank": 2, "rows": [[1, 0], [0, 1]]}

    def test_dumps_is_sorted(self):
        assert dumps({"b": 1, "a": 2}) == '{\n  "a": 2,\n  "b": 1\n}\n'

    def test_export_creates_directories(self, tmp_path):
        path = export_report({"command": "x"}, tmp_path / "nested" / "report.json")
        assert json.loads(path.read_text(encoding="utf-8")) == {"command": "x"}

    def test_cli_output_matches_stdout(self, tmp_path):
        target = tmp_path / "reports" / "ex31.json"
        code, text = run("invert", EX31, "--output", str(target))
        assert code == 0
        assert target.read_text(encoding="utf-8") == text
