import json
import math

import numpy as np
import pytest

from src.cli import COMMAND_HANDLERS, ETA_GRID, get_command_handler, main, run
from src.definitions import BZINFO_VERSION, ErrorKind, ExitCode
from src.operator_core import DensityOperator, save_state
from src.utils import write_json_file


def _state_file(tmp_path, vector, name="state.json"):
    path = tmp_path / name
    save_state(DensityOperator.from_vector(np.asarray(vector, dtype=np.complex128)), path)
    return str(path)


def _channel_file(tmp_path, *argv):
    path = tmp_path / "phi.json"
    result = run(["rand", "channel", *argv, "-o", str(path)])
    assert result.exit_code == ExitCode.ok, result.document
    return str(path)


def test_handler_registry():
    assert set(COMMAND_HANDLERS) == {"gen", "validate", "info", "identity-check", "channel", "rand", "probe"}
    assert get_command_handler("probe").name == "probe"
    assert get_command_handler("unknown") is None


def test_version(capsys):
    assert main(["--version"]) == ExitCode.ok
    assert json.loads(capsys.readouterr().out) == {"version": BZINFO_VERSION}


def test_missing_subcommand_is_usage_error():
    result = run([])
    assert result.exit_code == ExitCode.usage
    assert result.document["error"]["kind"] == ErrorKind.usage


def test_unknown_flag_is_usage_error(capsys):
    assert main(["gen", "mub", "-d", "3", "-o", "x.json", "--bogus"]) == ExitCode.usage
    assert json.loads(capsys.readouterr().out)["error"]["kind"] == ErrorKind.usage


def test_negative_seed_is_usage_error(tmp_path):
    result = run(["gen", "mub", "-d", "3", "--seed", "-1", "-o", str(tmp_path / "s.json")])
    assert result.exit_code == ExitCode.usage


def test_gen_then_validate(tmp_path):
    path = str(tmp_path / "mub3.json")
    generated = run(["gen", "mub", "-d", "3", "-o", path])
    assert generated.exit_code == ExitCode.ok
    assert generated.document["variant"] == "MubSet"
    assert generated.document["valid"] is True

    validated = run(["validate", path])
    assert validated.exit_code == ExitCode.ok
    assert validated.document["passed"] is True
    assert validated.document["failed"] == []


def test_gen_mum_reports_parameters(tmp_path):
    result = run(["gen", "mum", "-d", "4", "--t", "max", "-o", str(tmp_path / "mum.json")])
    assert result.exit_code == ExitCode.ok
    assert 0.25 < result.document["kappa"] <= 1 + 1e-12


def test_gen_infeasible_t_reports_max(tmp_path):
    result = run(["gen", "gsic", "-d", "3", "--t", "10", "-o", str(tmp_path / "g.json")])
    assert result.exit_code == ExitCode.check_failure
    assert result.document["error"]["kind"] == ErrorKind.range
    assert result.document["error"]["max_feasible"] > 0


def test_gen_unsupported_mub_dimension(tmp_path):
    result = run(["gen", "mub", "-d", "6", "-o", str(tmp_path / "m.json")])
    assert result.exit_code == ExitCode.check_failure
    assert result.document["error"]["kind"] == ErrorKind.unsupported


def test_validate_broken_scheme_fails(tmp_path):
    path = str(tmp_path / "mub2.json")
    run(["gen", "mub", "-d", "2", "-o", path])
    document = json.loads((tmp_path / "mub2.json").read_text(encoding="utf-8"))
    document["povms"][0][0]["entries"][0][0] *= 1.01
    write_json_file(path, document)
    result = run(["validate", path])
    assert result.exit_code == ExitCode.check_failure
    assert "completeness" in result.document["failed"]


def test_info_on_pure_qubit_state(tmp_path):
    scheme = str(tmp_path / "mub2.json")
    run(["gen", "mub", "-d", "2", "-o", scheme])
    state = _state_file(tmp_path, [1, 0])
    result = run(["info", "--scheme", scheme, "--state", state, "--sweep-eta"])
    assert result.exit_code == ExitCode.ok
    document = result.document
    assert [row["coincidence"] for row in document["per_povm"]] == pytest.approx([1.0, 0.5, 0.5])
    assert document["coincidence_sum"] == pytest.approx(2.0)
    assert document["coincidence_closed_form"] == pytest.approx(2.0)
    assert document["bz_total_measured"] == pytest.approx(0.5)
    assert document["bz_total_predicted"] == pytest.approx(0.5)

    sweep = {row["eta"]: row for row in document["eta_sweep"]}
    assert [row["eta"] for row in document["eta_sweep"]] == list(ETA_GRID)
    assert sweep[1.0]["legacy_total"] == pytest.approx(1.0)
    assert sweep[0.0]["legacy_total"] == pytest.approx(2.0)
    assert sweep[0.1]["legacy_total"] > 1.0
    for eta, row in sweep.items():
        assert row["corrected_total"] == pytest.approx(0.5 * eta**2, abs=1e-12)


def test_info_with_efficiency(tmp_path):
    scheme = str(tmp_path / "sic2.json")
    run(["gen", "sic", "-d", "2", "-o", scheme])
    state = _state_file(tmp_path, np.array([1, 1j]) / np.sqrt(2))
    result = run(["info", "--scheme", scheme, "--state", state, "--eta", "0.5"])
    assert result.exit_code == ExitCode.ok
    assert result.document["eta"] == 0.5
    assert "coincidence_closed_form" not in result.document
    assert result.document["bz_total_measured"] == pytest.approx(result.document["bz_total_predicted"], abs=1e-12)
    assert result.document["bz_total_predicted"] == pytest.approx(0.25 * 0.5 / 6, abs=1e-12)


def test_info_dimension_mismatch(tmp_path):
    scheme = str(tmp_path / "mub3.json")
    run(["gen", "mub", "-d", "3", "-o", scheme])
    result = run(["info", "--scheme", scheme, "--state", _state_file(tmp_path, [1, 0])])
    assert result.exit_code == ExitCode.check_failure
    assert result.document["error"]["kind"] == ErrorKind.dimension_mismatch


def test_malformed_state_file_exits_with_parse_error(tmp_path, capsys):
    scheme = str(tmp_path / "mub2.json")
    run(["gen", "mub", "-d", "2", "-o", scheme])
    bad = tmp_path / "bad.json"
    write_json_file(bad, {"d": 2, "entries": [[2, 0], [0, 0], [0, 0], [0, 0]]})
    assert main(["info", "--scheme", scheme, "--state", str(bad)]) == ExitCode.io_or_parse
    assert json.loads(capsys.readouterr().out)["error"]["kind"] == ErrorKind.parse

    (tmp_path / "garbage.json").write_text("{not json", encoding="utf-8")
    assert run(["info", "--scheme", scheme, "--state", str(tmp_path / "garbage.json")]).exit_code == 3


def test_missing_file_is_io_error(tmp_path):
    result = run(["validate", str(tmp_path / "nope.json")])
    assert result.exit_code == ExitCode.io_or_parse
    assert result.document["error"]["kind"] == ErrorKind.io


def test_identity_check_sic_qubit():
    result = run(["identity-check", "--variant", "sic", "-d", "2", "--trials", "100", "--seed", "7"])
    assert result.exit_code == ExitCode.ok
    assert result.document["passed"] is True
    assert result.document["max_deviation"] <= result.document["tolerance"]


@pytest.mark.parametrize("variant", ["mub", "mum", "gsic"])
def test_identity_check_with_efficiency(variant):
    result = run(["identity-check", "--variant", variant, "-d", "3", "--trials", "20", "--eta", "0.7"])
    assert result.exit_code == ExitCode.ok
    assert result.document["max_eta_deviation"] <= 1e-9


def test_identity_check_output_is_byte_identical(capsys):
    argv = ["identity-check", "--variant", "mum", "-d", "4", "--trials", "10", "--seed", "3"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_rand_and_channel_commands(tmp_path):
    phi = _channel_file(tmp_path, "-d", "3", "--kind", "contraction")
    checked = run(["channel", "check", "--channel", phi])
    assert checked.exit_code == ExitCode.ok
    assert checked.document["trace_preserving"] is True
    assert checked.document["unital"] is False

    norms = run(["channel", "norms", "--channel", phi])
    assert norms.exit_code == ExitCode.ok
    assert norms.document["d"] == 3
    assert norms.document["hs_norm"] == pytest.approx(math.sqrt(2 / 3), abs=1e-10)
    assert norms.document["saturated"] is True

    state = str(tmp_path / "rho.json")
    assert run(["rand", "state", "-d", "3", "--kind", "mixed", "--seed", "4", "-o", state]).exit_code == 0
    out = str(tmp_path / "out.json")
    applied = run(["channel", "apply", "--channel", phi, "--state", state, "-o", out])
    assert applied.exit_code == ExitCode.ok
    assert applied.document["purity"] == pytest.approx(1.0, abs=1e-12)

    rejected = run(["channel", "check", "--channel", phi, "--state", state])
    assert rejected.exit_code == ExitCode.usage


def test_channel_monotonicity_check(tmp_path):
    phi = _channel_file(tmp_path, "-d", "2", "--kind", "bistochastic", "--seed", "5")
    state = _state_file(tmp_path, [0.6, 0.8])
    result = run(["channel", "check", "--channel", phi, "--state", state])
    assert result.exit_code == ExitCode.ok
    assert result.document["bistochastic"] is True
    assert result.document["monotonicity"]["holds"] is True


def test_rand_rejects_unknown_kind(tmp_path):
    result = run(["rand", "channel", "-d", "2", "--kind", "amplitude", "-o", str(tmp_path / "c.json")])
    assert result.exit_code == ExitCode.usage


def test_probe_and_report_from_saved_shots(tmp_path):
    phi = _channel_file(tmp_path, "-d", "2", "--kind", "depolarizing", "--lam", "0.5")
    scheme = str(tmp_path / "sic2.json")
    run(["gen", "sic", "-d", "2", "-o", scheme])
    shots = str(tmp_path / "shots.json")
    probed = run(
        ["probe", "--channel", phi, "--scheme", scheme, "--shots", "20000", "--seed", "1",
         "--bootstrap", "50", "--save-shots", shots]
    )
    assert probed.exit_code == ExitCode.ok
    assert probed.document["shots"] == 20000
    assert abs(probed.document["purity_estimate"] - 0.5) < 0.05

    reported = run(["probe", "report", "--shots", shots, "--bootstrap", "50"])
    assert reported.exit_code == ExitCode.ok
    assert reported.document == probed.document


def test_probe_requires_channel_and_integer_shots(tmp_path):
    assert run(["probe", "--shots", "100"]).exit_code == ExitCode.usage
    phi = _channel_file(tmp_path, "-d", "2", "--kind", "unitary")
    scheme = str(tmp_path / "mub2.json")
    run(["gen", "mub", "-d", "2", "-o", scheme])
    assert run(["probe", "--channel", phi, "--scheme", scheme, "--shots", "many"]).exit_code == ExitCode.usage


def test_global_log_level_option(tmp_path):
    result = run(["--log-level", "ERROR", "gen", "mub", "-d", "2", "-o", str(tmp_path / "m.json")])
    assert result.exit_code == ExitCode.ok
    assert run(["--log-level", "LOUD", "--version"]).exit_code == ExitCode.usage


@pytest.mark.parametrize("kappa", [0.9, 1.0 / 3])
def test_report_command_rejects_tampered_scheme(tmp_path, kappa):
    phi = _channel_file(tmp_path, "-d", "3", "--kind", "generic", "--seed", "1")
    scheme = str(tmp_path / "mum3.json")
    run(["gen", "mum", "-d", "3", "-o", scheme])
    shots = tmp_path / "shots.json"
    probed = run(["probe", "--channel", phi, "--scheme", scheme, "--shots", "2000", "--bootstrap", "5",
                  "--save-shots", str(shots)])
    assert probed.exit_code == ExitCode.ok
    document = json.loads(shots.read_text(encoding="utf-8"))
    document["scheme"]["kappa"] = kappa
    write_json_file(shots, document)

    reported = run(["probe", "report", "--shots", str(shots)])
    assert reported.exit_code == ExitCode.io_or_parse
    assert reported.document["error"]["kind"] == ErrorKind.parse


def test_negative_bootstrap_on_command_line_is_range_error(tmp_path):
    phi = _channel_file(tmp_path, "-d", "2", "--kind", "unitary")
    scheme = str(tmp_path / "mub2.json")
    run(["gen", "mub", "-d", "2", "-o", scheme])
    shots = str(tmp_path / "shots.json")
    result = run(["probe", "--channel", phi, "--scheme", scheme, "--shots", "100", "--bootstrap", "-1"])
    assert result.exit_code == ExitCode.check_failure
    assert result.document["error"]["kind"] == ErrorKind.range

    assert run(["probe", "--channel", phi, "--scheme", scheme, "--shots", "100", "--save-shots", shots]).exit_code == 0
    reported = run(["probe", "report", "--shots", shots, "--bootstrap", "-1"])
    assert reported.exit_code == ExitCode.check_failure
    assert reported.document["error"]["kind"] == ErrorKind.range


def test_gen_searched_sic_is_valid(tmp_path):
    path = tmp_path / "sic6.json"
    result = run(["gen", "sic", "-d", "6", "--seed", "1", "-o", str(path)])
    assert result.exit_code == ExitCode.ok, result.document
    assert result.document["valid"] is True
    assert run(["validate", str(path)]).document["passed"] is True
