import io
import json
import math

import pytest

from thermalphi4.cli import PRESETS, SCHEMAS, config_to_ini, main, resolve_config
from thermalphi4.errors import ConfigError
from thermalphi4.io import (ResultDocument, ResultTable, body_lines, format_value, load_config,
                            parse_grid, parse_value, read_csv, write_csv, write_json)

SMALL_LINE = """[critical-line]
n_sites = 10
temperatures_latt = 0.5, 1.0
mu2_grid_latt = geom:1e-2:10:8
"""


def _run(argv, capsys):
    rc = main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


# --------------------------------------------------------------------------- io

@pytest.mark.parametrize("x", [0.1, 1 / 3, 2.0 ** -1074, 1.7976931348623157e308, -0.0, 123456789.0,
                               math.pi * 1e-300])
def test_float_format_roundtrip(x):
    s = format_value(x)
    assert float(s) == x
    assert format_value(parse_value(s)) == s


def test_csv_roundtrip_bit_identical():
    t = ResultTable("t", ("a_1", "b_latt", "s_str"))
    t.append(1, 0.1, "ok")
    t.append(2, math.nan, "broken-phase")
    t.append(3, 1e-310, "x")
    doc = ResultDocument({"version": "0"}, [t])
    buf = io.StringIO()
    write_csv(doc, buf)
    text = buf.getvalue()
    back = read_csv(io.StringIO(text))
    buf2 = io.StringIO()
    write_csv(back, buf2)
    assert buf2.getvalue() == text
    assert "\r" not in text


def test_table_validation():
    with pytest.raises(ValueError):
        ResultTable("t", ("nounit",))
    t = ResultTable("t", ("a_1",))
    with pytest.raises(ValueError):
        t.append(1, 2)
    with pytest.raises(ValueError):
        t.append("a,b")


def test_json_document_shape():
    t = ResultTable("t", ("a_1",))
    t.append(math.nan)
    buf = io.StringIO()
    write_json(ResultDocument({"k": "v"}, [t]), buf)
    doc = json.loads(buf.getvalue())
    assert doc == {"meta": {"k": "v"}, "rows": [{"table": "t", "a_1": None}]}


def test_grid_parsing():
    assert parse_grid("lin:0:1:3") == [0.0, 0.5, 1.0]
    assert parse_grid("1, 2.5") == [1.0, 2.5]
    assert parse_grid("geom:1:100:3") == pytest.approx([1.0, 10.0, 100.0])
    for bad in ("geom:0:1:3", "lin:0:1", "lin:a:b:c", "lin:0:1:0"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_config_strictness():
    schema = SCHEMAS["critical-line"]
    with pytest.raises(ConfigError):
        load_config("critical-line", schema, "[critical-line]\nbogus = 1\n")
    with pytest.raises(ConfigError):
        load_config("critical-line", schema, "[phase-map]\nn_sites = 4\n")
    with pytest.raises(ConfigError):
        load_config("critical-line", schema, "[critical-line]\nn_sites = four\n")
    with pytest.raises(ConfigError):
        load_config("critical-line", schema, "[critical-line]\ncrossings = maybe\n")
    with pytest.raises(ConfigError):
        load_config("critical-ratio", SCHEMAS["critical-ratio"],
                    "[critical-ratio]\nfit_models = cubic\n")


def test_every_schema_key_has_unit():
    for schema in SCHEMAS.values():
        for p in schema.values():
            assert p.unit


def test_digest_reproducible_from_printed_config():
    cfg = resolve_config("critical-line", None, SMALL_LINE)
    again = resolve_config("critical-line", None, config_to_ini(cfg))
    assert again.digest == cfg.digest
    other = resolve_config("critical-line", None, SMALL_LINE.replace("10\n", "12\n"))
    assert other.digest != cfg.digest


def test_presets_resolve():
    for name, (cmd, _) in PRESETS.items():
        cfg = resolve_config(cmd, name)
        assert cfg.command == cmd
    with pytest.raises(ConfigError):
        resolve_config("phase-map", "fig2")


# --------------------------------------------------------------------------- commands

def test_critical_line_command(tmp_path, capsys):
    cfgp = tmp_path / "c.ini"
    cfgp.write_text(SMALL_LINE)
    out = tmp_path / "o.csv"
    rc, _, _ = _run(["critical-line", "--config", str(cfgp), "--out", str(out)], capsys)
    assert rc == 0
    text = out.read_text()
    doc = read_csv(io.StringIO(text))
    assert doc.meta["command"] == "critical-line"
    assert len(doc.meta["config_digest"]) == 64
    tab = doc.table("critical_line")
    assert tab.columns == ("T_latt", "mu2_latt", "lambda0_latt", "m02_latt")
    assert len(tab.rows) == 16
    buf = io.StringIO()
    write_csv(doc, buf)
    assert buf.getvalue() == text


def test_json_output(tmp_path, capsys):
    cfgp = tmp_path / "c.ini"
    cfgp.write_text(SMALL_LINE)
    rc, out, _ = _run(["critical-line", "--config", str(cfgp), "--format", "json"], capsys)
    assert rc == 0
    doc = json.loads(out)
    assert doc["meta"]["command"] == "critical-line"
    assert doc["rows"][0]["table"] == "critical_line"


def test_print_config(capsys):
    rc, out, _ = _run(["phase-map", "--preset", "fig6", "--print-config"], capsys)
    assert rc == 0
    assert out.startswith("[phase-map]\n")
    assert "detuning_hz = 318000" in out


def test_exit_code_config_error(tmp_path, capsys):
    cfgp = tmp_path / "c.ini"
    cfgp.write_text("[critical-line]\nunknown_key = 3\n")
    rc, _, err = _run(["critical-line", "--config", str(cfgp)], capsys)
    assert rc == 2 and "unknown key" in err
    rc, _, _ = _run(["critical-line", "--config", str(tmp_path / "missing.ini")], capsys)
    assert rc == 2
    rc, _, _ = _run(["no-such-command"], capsys)
    assert rc == 2
    rc, _, _ = _run(["critical-line", "--threads", "0"], capsys)
    assert rc == 2


def test_exit_code_non_convergence(tmp_path, capsys):
    cfgp = tmp_path / "c.ini"
    cfgp.write_text("[mass-contour]\nn_sites = 10\nlambda0_latt = 1.0\n"
                    "temperatures_latt = 0.5\nmax_steps = 2\nmin_step_latt = 1e-3\n")
    rc, _, err = _run(["mass-contour", "--config", str(cfgp)], capsys)
    assert rc == 3 and "non-convergence" in err


def test_exit_code_physics_domain(tmp_path, capsys):
    cfgp = tmp_path / "c.ini"
    cfgp.write_text("[ion-couplings]\ntransverse_freq_z_hz = 1.2e6\n")
    rc, _, err = _run(["ion-couplings", "--config", str(cfgp)], capsys)
    assert rc == 4 and "InstabilityError" in err


def test_critical_line_rejects_non_positive_grid(tmp_path, capsys):
    cfgp = tmp_path / "c.ini"
    cfgp.write_text("[critical-line]\nn_sites = 10\nmu2_grid_latt = -1, 1\n")
    rc, _, err = _run(["critical-line", "--config", str(cfgp)], capsys)
    assert rc == 4


def test_mass_contour_command(tmp_path, capsys):
    cfgp = tmp_path / "c.ini"
    cfgp.write_text("[mass-contour]\nn_sites = 10\nlambda0_latt = 0.0\n"
                    "temperatures_latt = 0.5\nmu2_start_latt = 0.01\nmin_step_latt = 1e-3\n")
    rc, out, _ = _run(["mass-contour", "--config", str(cfgp)], capsys)
    assert rc == 0
    doc = read_csv(io.StringIO(out))
    (b,) = doc.table("boundary").rows
    assert b[1] == 0.0  # analytic boundary m0^2 = 0 in the free theory


def test_ion_couplings_renormalized_column(tmp_path, capsys):
    cfgp = tmp_path / "c.ini"
    cfgp.write_text("[ion-couplings]\naxial_freq_hz = 450e3\ntransverse_freq_y_hz = 6.5e6\n"
                    "transverse_freq_z_hz = 6.0e6\ndetuning_hz = 318e3\n"
                    "temperature_tbar = 5\nlamb_dicke_mode = matched\n")
    rc, out, _ = _run(["ion-couplings", "--config", str(cfgp)], capsys)
    assert rc == 0
    doc = read_csv(io.StringIO(out))
    cp = doc.table("couplings")
    assert "renormalized_hz" in cp.columns
    rows = {(r[0], r[1]): r for r in cp.rows}
    assert rows[(3, 7)][3] == rows[(7, 3)][3]


def test_body_lines_exclude_timestamps():
    text = "# wall_clock_s: 1\n# table: a\nx_1\n1\n"
    assert body_lines(text) == ["# table: a", "x_1", "1", ""]
