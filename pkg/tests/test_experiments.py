"""Config parsing, CSV determinism, metadata echoing, exit codes."""

import numpy as np
import pytest

from carleman_adr.cli import main
from carleman_adr.experiments import (
    _REQUIRED,
    Config,
    ConfigError,
    ToleranceError,
    format_cell,
    parse_grid,
    run_be_verify,
    run_convergence,
    run_p0_scan,
    run_pauli,
    thread_count,
    write_csv,
)


def write_config(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


BE_SMALL = """
experiment = beverify
seed = 3
be.l_sites = 2,4
be.l_draws = 3
be.l_states = 4
be.b_sites = 2
be.b_dts = 0.0,0.006
be.b_states = 4
"""

P0_SMALL = """
experiment = p0scan
scan.n_sites = 8
scan.gamma_adv = 0.0,0.5,1.99
scan.gamma_diff = 0.01,0.2
scan.gamma_re = 0.01
"""


# --- config parsing -------------------------------------------------------------------


def test_config_parses_comments_blank_lines_and_types(tmp_path):
    path = write_config(tmp_path, "a.cfg", """
# full-line comment
alpha = 3            # trailing comment
beta = 2.5
gamma = true
names = 1,2,3
""")
    config = Config.load(path)
    assert config.get_int("alpha") == 3
    assert config.get_float("beta") == 2.5
    assert config.get_bool("gamma") is True
    assert config.get_ints("names") == [1, 2, 3]
    config.reject_unknown()


def test_config_rejects_duplicates_and_malformed_lines(tmp_path):
    with pytest.raises(ConfigError, match="duplicate"):
        Config.load(write_config(tmp_path, "d.cfg", "x = 1\nx = 2\n"))
    with pytest.raises(ConfigError, match="key = value"):
        Config.load(write_config(tmp_path, "m.cfg", "just some words\n"))


def test_config_missing_file_and_missing_key(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        Config.load(tmp_path / "absent.cfg")
    config = Config({"a": "1"})
    with pytest.raises(ConfigError, match="required"):
        config.get_int("missing", default=_REQUIRED)


def test_config_unknown_keys_rejected(tmp_path):
    config = Config({"known": "1", "mystery": "2"})
    config.get_int("known")
    with pytest.raises(ConfigError, match="mystery"):
        config.reject_unknown()


def test_config_type_errors():
    config = Config({"x": "abc"})
    with pytest.raises(ConfigError):
        config.get_int("x")
    config2 = Config({"x": "maybe"})
    with pytest.raises(ConfigError):
        config2.get_bool("x")


def test_parse_grid_forms():
    assert parse_grid("1,2,3.5") == [1.0, 2.0, 3.5]
    assert parse_grid("linspace:0:1:3") == [0.0, 0.5, 1.0]
    with pytest.raises(ConfigError):
        parse_grid("linspace:0:1")
    with pytest.raises(ConfigError):
        parse_grid("one,two")


def test_format_cell_seventeen_digits():
    assert format_cell(0.1) == "0.10000000000000001"
    assert format_cell(1.0) == "1"
    assert format_cell(None) == ""
    assert format_cell(7) == "7"


def test_thread_count_env(monkeypatch):
    monkeypatch.delenv("CARLEMAN_ADR_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("CARLEMAN_ADR_THREADS", "5")
    assert thread_count() == 5
    monkeypatch.setenv("CARLEMAN_ADR_THREADS", "zero")
    with pytest.raises(ConfigError):
        thread_count()


def test_write_csv_layout(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, {"k": 1.5}, ["a", "b"], [(1, 2.0), (3, None)])
    assert path.read_text() == "# k = 1.5\na,b\n1,2\n3,\n"


# --- runners --------------------------------------------------------------------------


def test_beverify_is_byte_deterministic(tmp_path):
    config_path = write_config(tmp_path, "be.cfg", BE_SMALL)
    run_be_verify(Config.load(config_path), tmp_path / "one")
    run_be_verify(Config.load(config_path), tmp_path / "two")
    first = (tmp_path / "one" / "be_verify.csv").read_bytes()
    second = (tmp_path / "two" / "be_verify.csv").read_bytes()
    assert first == second


def test_metadata_echoes_every_config_key(tmp_path):
    config_path = write_config(tmp_path, "be.cfg", BE_SMALL)
    run_be_verify(Config.load(config_path), tmp_path / "out")
    header = [line for line in (tmp_path / "out" / "be_verify.csv").read_text().splitlines()
              if line.startswith("#")]
    keys = {line[2:].split(" = ")[0] for line in header}
    for config_key in Config.load(config_path).values:
        assert config_key in keys


def test_p0_scan_rows_flags_and_sim_columns(tmp_path):
    config_path = write_config(tmp_path, "p0.cfg", P0_SMALL)
    run_p0_scan(Config.load(config_path), tmp_path / "out")
    lines = [line for line in (tmp_path / "out" / "p0_scan.csv").read_text().splitlines()
             if not line.startswith("#")]
    header, rows = lines[0].split(","), [line.split(",") for line in lines[1:]]
    assert header[:5] == ["gamma_adv", "gamma_diff", "gamma_re", "p0_localized", "p0_uniform"]
    assert len(rows) == 6
    flagged = [row for row in rows if row[-1] == "0"]
    assert len(flagged) == 2  # gamma_adv = 1.99 exceeds the weight bound
    assert all(row[3] == "" and row[4] == "" for row in flagged)
    good = [row for row in rows if row[-1] == "1"]
    # N=8 is simulable: the cross-check columns are populated
    assert all(row[5] != "" and row[6] != "" for row in good)
    for row in good:
        assert abs(float(row[3]) - float(row[5])) < 1e-12


def test_p0_scan_threads_do_not_change_bytes(tmp_path, monkeypatch):
    config_path = write_config(tmp_path, "p0.cfg", P0_SMALL)
    monkeypatch.setenv("CARLEMAN_ADR_THREADS", "1")
    run_p0_scan(Config.load(config_path), tmp_path / "serial")
    monkeypatch.setenv("CARLEMAN_ADR_THREADS", "4")
    run_p0_scan(Config.load(config_path), tmp_path / "parallel")
    serial = (tmp_path / "serial" / "p0_scan.csv").read_text()
    parallel = (tmp_path / "parallel" / "p0_scan.csv").read_text()
    # the thread count is echoed in metadata; the body must be identical
    strip = lambda text: [l for l in text.splitlines() if not l.startswith("# threads")]
    assert strip(serial) == strip(parallel)


def test_convergence_outputs_and_budget(tmp_path):
    config_path = write_config(tmp_path, "c.cfg", """
experiment = convergence
adr.n_sites = 6
init.width = 3
run.n_steps = 40
run.truncations = 1,2
""")
    run_convergence(Config.load(config_path), tmp_path / "out")
    files = {p.name for p in (tmp_path / "out").iterdir()}
    assert files == {"convergence.csv", "trajectory_K1.csv", "trajectory_K2.csv"}
    body = [line for line in (tmp_path / "out" / "trajectory_K2.csv").read_text().splitlines()
            if not line.startswith("#")]
    assert body[0] == "t,rel_err,abs_err,logistic_rel_err,logistic_rel_err_series_k"
    assert len(body) == 42  # header + initial row + 40 steps

    tight = write_config(tmp_path, "tight.cfg", """
experiment = convergence
adr.n_sites = 6
init.width = 3
run.n_steps = 40
run.truncations = 1,2
run.max_rel_err_budget = 1e-9
""")
    with pytest.raises(ToleranceError):
        run_convergence(Config.load(tight), tmp_path / "out2")
    # the CSV outputs are still written before the budget check fires
    assert (tmp_path / "out2" / "convergence.csv").exists()


def test_convergence_without_logistic_reference(tmp_path):
    # R = b*phi_max/a >= 1 has no bounded closed form; columns stay empty
    config_path = write_config(tmp_path, "c.cfg", """
experiment = convergence
adr.n_sites = 4
adr.reaction_b = 1.5
init.width = 2
run.n_steps = 10
run.truncations = 2
""")
    run_convergence(Config.load(config_path), tmp_path / "out")
    text = (tmp_path / "out" / "trajectory_K2.csv").read_text()
    assert "# logistic_reference = unavailable (R >= 1)" in text
    data_row = [l for l in text.splitlines() if not l.startswith("#")][2]
    assert data_row.endswith(",,")


def test_pauli_runner_emits_both_families(tmp_path):
    config_path = write_config(tmp_path, "p.cfg", """
experiment = pauli
family = both
carleman.n_list = 2,3
carleman.truncation = 2
linear.q_list = 2
epsilons = 0.1
""")
    run_pauli(Config.load(config_path), tmp_path / "out")
    lines = [l for l in (tmp_path / "out" / "pauli_mstar.csv").read_text().splitlines()
             if not l.startswith("#")]
    assert lines[0] == "family,N,K,q,epsilon,m_star,n_terms,nnz"
    families = {line.split(",")[0] for line in lines[1:]}
    assert families == {"carleman", "linear"}


def test_pauli_runner_names_the_cap(tmp_path):
    config_path = write_config(tmp_path, "p.cfg", """
experiment = pauli
family = carleman
carleman.n_list = 11
carleman.truncation = 3
""")
    with pytest.raises(ConfigError, match="cap"):
        run_pauli(Config.load(config_path), tmp_path / "out")


def test_beverify_validates_site_lists(tmp_path):
    config_path = write_config(tmp_path, "be.cfg", """
experiment = beverify
be.l_sites = 6
""")
    with pytest.raises(ConfigError, match="powers of two"):
        run_be_verify(Config.load(config_path), tmp_path / "out")


def test_experiment_name_mismatch(tmp_path):
    config_path = write_config(tmp_path, "be.cfg", BE_SMALL)
    with pytest.raises(ConfigError, match="declares experiment"):
        run_convergence(Config.load(config_path), tmp_path / "out")


# --- CLI exit codes -------------------------------------------------------------------


def test_cli_success_exit_zero(tmp_path):
    config_path = write_config(tmp_path, "be.cfg", BE_SMALL)
    assert main(["beverify", "--config", str(config_path), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "be_verify.csv").exists()


def test_cli_invalid_config_exit_two(tmp_path, capsys):
    config_path = write_config(tmp_path, "bad.cfg", "experiment = beverify\nwat = 1\n")
    code = main(["beverify", "--config", str(config_path), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_cli_tolerance_failure_exit_one(tmp_path, capsys):
    config_path = write_config(tmp_path, "c.cfg", """
experiment = convergence
adr.n_sites = 4
init.width = 2
run.n_steps = 20
run.truncations = 1
run.max_rel_err_budget = 1e-12
""")
    code = main(["convergence", "--config", str(config_path), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "tolerance failure" in capsys.readouterr().err


def test_cli_rejects_unknown_subcommand():
    assert main(["frobnicate", "--config", "x", "--out", "y"]) == 2


def test_cli_missing_config_file(tmp_path):
    assert main(["pauli", "--config", str(tmp_path / "nope.cfg"),
                 "--out", str(tmp_path / "o")]) == 2
