import csv
import json
from fractions import Fraction

import pytest
from mpmath import mp

from resurgo import SCHEMA
from resurgo.cli import EXIT_MISMATCH, EXIT_NUMERIC, EXIT_OK, EXIT_PARSE, main
from resurgo.exact import GaussianRational, RatFunc
from resurgo.specfile import RunConfig, SpecFile, SpecParseError, parse_expression, parse_number

WORKED = {"order": 2, "coeffs": ["2*z^2", "-3*z", "1"], "forcing": ["z"], "series_order": 30}
EULER = {"order": 1, "coeffs": ["1", "1"], "forcing": ["0", "1"], "independent": "epsilon", "series_order": 60}


def _write(tmp_path, doc, name="spec.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def _run(tmp_path, doc, *args):
    out = tmp_path / "out"
    code = main([args[0], "--spec", _write(tmp_path, doc), "--out", str(out), *args[1:]])
    return code, out


def test_expression_grammar(z):
    assert parse_expression("2*z^2 - 3/4") == 2 * z ** 2 - RatFunc.const(Fraction(3, 4))
    assert parse_expression("1/((1-z)*(2-z))") == 1 / ((1 - z) * (2 - z))
    assert parse_expression("i*z^-1") == RatFunc.const(GaussianRational(0, 1)) / z


def test_round_trip():
    sf = SpecFile.loads(json.dumps(WORKED))
    again = SpecFile.loads(sf.dumps())
    assert again == sf
    assert json.loads(sf.dumps())["schema"] == SCHEMA


def test_parse_error_location():
    text = '{"order": 1,\n "coeffs": ["1", "z"],\n "forcing": ["3//4"]}'
    with pytest.raises(SpecParseError) as info:
        SpecFile.loads(text)
    assert (info.value.line, info.value.column) == (3, 17)
    assert info.value.field == "forcing[0]"


@pytest.mark.parametrize("text", ['{"coeffs": ', '[1, 2]', '{"order": 3, "coeffs": ["1", "z"]}',
                                  '{"coeffs": ["1", "0"]}', '{"coeffs": ["1", "z"], "precision_bits": 8}'])
def test_malformed_specs(text):
    with pytest.raises(SpecParseError):
        SpecFile.loads(text)


def test_exact_numbers():
    assert parse_number("1/20") == Fraction(1, 20)
    assert parse_number("0.05") == Fraction(1, 20)


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig("expand", precision=32)
    assert RunConfig("expand").comment().startswith("# {")


def test_cli_expand(tmp_path):
    code, out = _run(tmp_path, WORKED, "expand")
    assert code == EXIT_OK
    doc = json.loads((out / "series.json").read_text())
    assert doc["schema"] == SCHEMA and doc["command"] == "expand"
    assert doc["terms"][:3] == ["1/(2*z)", "-3/(4*z^3)", "23/(8*z^5)"]


def test_cli_parse_error_exit(tmp_path, capsys):
    code, _ = _run(tmp_path, '{"order": 1,\n "coeffs": ["1", "z"],\n "forcing": ["3//4"]}', "expand")
    assert code == EXIT_PARSE
    assert "line 3, column 17" in capsys.readouterr().err


def test_cli_bad_arguments(tmp_path):
    assert main(["nonsense", "--spec", _write(tmp_path, WORKED)]) == EXIT_PARSE
    assert main(["expand", "--spec", str(tmp_path / "missing.json")]) == EXIT_PARSE


def test_cli_pade(tmp_path):
    code, out = _run(tmp_path, WORKED, "pade", "--z", "-0.5,1", "--terms", "200")
    assert code == EXIT_OK
    doc = json.loads((out / "pade.json").read_text())
    kinds = {s["kind"]: s for s in doc["pade"][0]["singularities"]}
    pole = complex(*map(float, kinds["isolated-pole"]["chi"]))
    assert abs(pole - (0.375 + 0.5j)) < 1e-8
    with open(out / "pade_0.csv") as fh:
        assert fh.readline().startswith("# ")
        rows = list(csv.DictReader(fh))
    assert set(rows[0]) == {"re_w", "im_w", "abs_residue", "classification"}


def test_cli_boundary_layer_probe(tmp_path, capsys):
    code, _ = _run(tmp_path, WORKED, "pade", "--z", "0")
    assert code == EXIT_NUMERIC
    assert "boundary layer" in capsys.readouterr().err


def test_cli_transseries(tmp_path):
    code, out = _run(tmp_path, WORKED, "transseries", "--z", "0,1", "--terms", "60")
    assert code == EXIT_OK
    doc = json.loads((out / "transseries.json").read_text())
    comps = [c for c in doc["components"] if c["exponents"]["alpha"] == "2"]
    consts = [complex(*map(float, c["matched_constants"][0])) for c in comps]
    assert any(abs(c / (-mp.sqrt(2) / 8) - 1) < 1e-8 for c in consts)


def test_cli_validate_worked(tmp_path):
    code, out = _run(tmp_path, WORKED, "validate", "--z", "0,1", "--eps", "1/20")
    assert code == EXIT_OK
    doc = json.loads((out / "validate.json").read_text())
    assert doc["passed"] and doc["reports"][0]["method"] == "trans-series"


def test_cli_validate_euler(tmp_path):
    code, out = _run(tmp_path, EULER, "validate", "--eps", "-0.2")
    assert code == EXIT_OK
    assert json.loads((out / "validate.json").read_text())["passed"]


def test_cli_validate_mismatch(tmp_path):
    code, _ = _run(tmp_path, WORKED, "validate", "--z", "0,1", "--eps", "1/20", "--tol", "1e-12")
    assert code == EXIT_MISMATCH


def test_cli_noise_floor(tmp_path):
    code, _ = _run(tmp_path, EULER, "jump", "--eps", "-0.01", "--precision", "64")
    assert code == EXIT_NUMERIC


def test_cli_stokes(tmp_path):
    code, out = _run(tmp_path, WORKED, "stokes", "--z", "0,0.1")
    assert code == EXIT_OK
    doc = json.loads((out / "stokes.json").read_text())
    assert doc["schema"] == SCHEMA
