"""Config validation, canonical hashing, record emission, CLI exit codes."""

import csv
import json
import math

import pytest

from quadvar.cli import main as cli_main
from quadvar.config import ConfigError, canonical_hash, load_config, validate
from quadvar.runner import ResultRecord, assertions_pass, emit, run


def _config(**overrides) -> str:
    base = {
        "experiment": "quadform_var",
        "seed": 11,
        "model": {"name": "rademacher_iid"},
        "matrix": {"kind": "hollow_ones", "p": 2},
    }
    base.update(overrides)
    return json.dumps(base)


# ------------------------------------------------------------------ validation


def test_defaults_are_filled():
    cfg = validate(_config())
    assert cfg.replicates == 100000
    assert cfg.max_lag == 64
    assert cfg.tolerances["assert_sigmas"] == 4.0
    assert cfg.fmt == "csv"
    assert cfg.out is None


def test_unknown_top_level_key_is_rejected():
    with pytest.raises(ConfigError, match="bandwith"):
        validate(_config(bandwith=3))


def test_unknown_section_key_names_its_path():
    with pytest.raises(ConfigError, match=r"matrix\.shape"):
        validate(
            json.dumps(
                {
                    "experiment": "quadform_var",
                    "seed": 1,
                    "model": {"name": "rademacher_iid"},
                    "matrix": {"kind": "hollow_ones", "p": 2, "shape": "round"},
                }
            )
        )


def test_domain_violation_names_field_path():
    bad = _config(model={"name": "gaussian_ar1", "rho": 1.5})
    with pytest.raises(ConfigError, match=r"model\.rho"):
        validate(bad)


def test_spectral_weights_must_sum_to_one():
    with pytest.raises(ConfigError, match="spectral"):
        validate(
            json.dumps(
                {
                    "experiment": "stieltjes_grid",
                    "seed": 1,
                    "spectral": {"atoms": [[1.0, 0.7], [2.0, 0.7]], "c": 0.5},
                    "grid": {"re_min": 0.0, "re_max": 1.0, "points": 2, "im": 1.0},
                }
            )
        )


def test_parse_error_reports_line_and_column():
    with pytest.raises(ConfigError, match=r"line 2, column"):
        validate('{\n  "experiment": ,\n}')


def test_seed_is_mandatory():
    raw = json.loads(_config())
    del raw["seed"]
    with pytest.raises(ConfigError, match="seed"):
        validate(json.dumps(raw))


def test_tolerances_must_be_positive():
    with pytest.raises(ConfigError, match="assert_sigmas"):
        validate(_config(tolerances={"assert_sigmas": 0.0}))


def test_experiment_must_be_known():
    with pytest.raises(ConfigError, match="unknown experiment"):
        validate(_config(experiment="qaudform_var"))


def test_section_for_wrong_experiment_is_rejected():
    with pytest.raises(ConfigError, match="kernel"):
        validate(_config(kernel={"name": "bartlett"}))


# --------------------------------------------------------------------- hashing


def test_hash_is_stable_under_key_reordering():
    a = _config()
    raw = json.loads(a)
    b = json.dumps(dict(reversed(list(raw.items()))), indent=3)
    assert validate(a).config_hash == validate(b).config_hash


def test_hash_ignores_float_formatting_but_not_values():
    a = validate(_config(tolerances={"assert_sigmas": 4.0}))
    b = validate(_config(tolerances={"assert_sigmas": 4}))
    c = validate(_config(tolerances={"assert_sigmas": 4.5}))
    assert a.config_hash == b.config_hash
    assert a.config_hash != c.config_hash


def test_hash_covers_seed_but_not_output_routing():
    base = validate(_config())
    reseeded = validate(_config(), overrides={"seed": 99})
    rerouted = validate(_config(), overrides={"out": "x.csv", "format": "json"})
    assert reseeded.config_hash != base.config_hash
    assert rerouted.config_hash == base.config_hash
    assert rerouted.out == "x.csv"
    assert rerouted.fmt == "json"


def test_canonical_hash_handles_nesting():
    assert canonical_hash({"a": [1, 2.0, "x"], "b": {"c": True}}) == canonical_hash(
        {"b": {"c": True}, "a": [1, 2, "x"]}
    )


# ------------------------------------------------------------------ experiments


def test_quadform_var_example_record():
    records = run(validate(_config()))
    assert len(records) == 1
    m = records[0].metrics
    assert m["mc_variance"] == pytest.approx(4.0, abs=0.01)
    assert m["bound_value"] == pytest.approx(2.0)
    assert m["exact_variance"] == pytest.approx(4.0)
    assert assertions_pass(records)


def test_kernel_check_example_record():
    cfg = validate(json.dumps({"experiment": "kernel_check", "seed": 1, "kernel": {"name": "bartlett"}}))
    m = run(cfg)[0].metrics
    assert m["envelope_sq_integral"] == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert m["q"] == 1.0 and m["k_q"] == -1.0
    assert m["assert_bounded"] == m["assert_square_integrable"] == m["assert_curvature_limit"] == 1


def test_stieltjes_grid_example_matches_closed_form():
    cfg = validate(
        json.dumps(
            {
                "experiment": "stieltjes_grid",
                "seed": 1,
                "spectral": {"atoms": [[1.0, 1.0]], "c": 0.5},
                "grid": {"re_min": -2.0, "re_max": 6.0, "points": 25, "im": 1.0},
            }
        )
    )
    records = run(cfg)
    assert len(records) == 25
    assert all(r.metrics["closed_form_abs_err"] <= 1e-10 for r in records)
    assert assertions_pass(records)


def test_failed_assertion_is_recorded_not_raised():
    cfg = validate(
        json.dumps(
            {
                "experiment": "stieltjes_grid",
                "seed": 1,
                "spectral": {"atoms": [[1.0, 1.0]], "c": 0.5},
                "grid": {"re_min": 1.0, "re_max": 1.0, "points": 1, "im": 1.0},
                "tolerances": {"closed_form_atol": 1e-30},
            }
        )
    )
    records = run(cfg)
    assert records[0].metrics["assert_closed_form"] == 0
    assert not assertions_pass(records)


# -------------------------------------------------------------------- emission


def _toy_records() -> list[ResultRecord]:
    return [
        ResultRecord("demo", "abc123", {"n": 2, "value": 0.1, "q": math.inf, "name": "a,b"}, 0.0),
        ResultRecord("demo", "abc123", {"n": 3, "value": -0.2, "q": math.inf, "name": 'say "hi"'}, 0.0),
    ]


def test_emit_csv_has_header_and_quotes(tmp_path):
    path = tmp_path / "out.csv"
    emit(_toy_records(), "csv", path)
    raw = path.read_bytes()
    assert raw.count(b"\r\n") == 3  # header + 2 rows, RFC-4180 endings
    with open(path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert rows[0]["name"] == "a,b"
    assert rows[1]["name"] == 'say "hi"'
    assert rows[0]["q"] == "inf"
    assert float(rows[1]["value"]) == -0.2


def test_emit_single_record_is_two_lines(tmp_path):
    path = tmp_path / "one.csv"
    emit(_toy_records()[:1], "csv", path)
    assert path.read_bytes().count(b"\r\n") == 2


def test_emit_is_byte_stable(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit(_toy_records(), "csv", a)
    emit(_toy_records(), "csv", b)
    assert a.read_bytes() == b.read_bytes()


def test_emit_json_round_trips_doubles(tmp_path):
    records = [ResultRecord("demo", "h", {"x": 0.1 + 0.2, "k": 3}, 0.0)]
    path = tmp_path / "out.json"
    emit(records, "json", path)
    parsed = json.loads(path.read_text())
    assert parsed[0]["x"] == 0.1 + 0.2  # 17 significant digits round-trip
    assert parsed[0]["k"] == 3


def test_emit_formats_agree_after_parsing(tmp_path):
    records = _toy_records()
    emit(records, "csv", tmp_path / "r.csv")
    emit(records, "json", tmp_path / "r.json")
    with open(tmp_path / "r.csv", newline="") as handle:
        csv_rows = list(csv.DictReader(handle))
    json_rows = json.loads((tmp_path / "r.json").read_text())
    for crow, jrow in zip(csv_rows, json_rows):
        for key, jval in jrow.items():
            if isinstance(jval, (int, float)):
                assert float(crow[key]) == float(jval)
            else:
                assert crow[key] == jval


def test_emit_rejects_empty_and_ragged(tmp_path):
    with pytest.raises(ValueError):
        emit([], "csv", tmp_path / "x.csv")
    ragged = [
        ResultRecord("demo", "h", {"a": 1}, 0.0),
        ResultRecord("demo", "h", {"b": 2}, 0.0),
    ]
    with pytest.raises(ValueError):
        emit(ragged, "csv", tmp_path / "x.csv")


def test_wall_time_is_tracked_but_not_serialized(tmp_path):
    records = run(validate(_config(replicates=1000)))
    assert records[0].wall_time_s > 0.0
    path = tmp_path / "out.csv"
    emit(records, "csv", path)
    header = path.read_text().splitlines()[0]
    assert "wall_time" not in header


# ------------------------------------------------------------------------- CLI


def test_cli_pass_is_exit_zero(tmp_path, capsys):
    config = tmp_path / "ok.json"
    config.write_text(_config(replicates=1000))
    out = tmp_path / "records.csv"
    code = cli_main(["quadform_var", "--config", str(config), "--out", str(out)])
    assert code == 0
    assert out.exists()
    assert "pass" in capsys.readouterr().out


def test_cli_assertion_failure_is_exit_one(tmp_path, capsys):
    config = tmp_path / "fail.json"
    config.write_text(
        json.dumps(
            {
                "experiment": "stieltjes_grid",
                "seed": 1,
                "spectral": {"atoms": [[1.0, 1.0]], "c": 0.5},
                "grid": {"re_min": 1.0, "re_max": 1.0, "points": 1, "im": 1.0},
                "tolerances": {"closed_form_atol": 1e-30},
            }
        )
    )
    assert cli_main(["stieltjes_grid", "--config", str(config)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_cli_config_error_is_exit_two(tmp_path, capsys):
    config = tmp_path / "bad.json"
    config.write_text(_config(bandwith=1))
    assert cli_main(["quadform_var", "--config", str(config)]) == 2
    assert "bandwith" in capsys.readouterr().err


def test_cli_missing_file_is_exit_two(tmp_path):
    assert cli_main(["quadform_var", "--config", str(tmp_path / "nope.json")]) == 2


def test_cli_experiment_mismatch_is_exit_two(tmp_path, capsys):
    config = tmp_path / "ok.json"
    config.write_text(_config(replicates=1000))
    assert cli_main(["esd", "--config", str(config)]) == 2
    assert "declares" in capsys.readouterr().err


def test_cli_seed_override_changes_results(tmp_path):
    config = tmp_path / "ok.json"
    config.write_text(_config(model={"name": "gaussian_ar1", "rho": 0.5}, replicates=2000))
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    cli_main(["quadform_var", "--config", str(config), "--out", str(out1)])
    cli_main(["quadform_var", "--config", str(config), "--out", str(out2), "--seed", "77"])
    assert out1.read_bytes() != out2.read_bytes()
