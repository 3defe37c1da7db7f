import json

import pytest

from magframe.cli import main
from magframe.config import ConfigError, ExperimentConfig, parse_config


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_empty_config_gives_defaults(tmp_path):
    cfg = parse_config(write(tmp_path, ""))
    ref = ExperimentConfig().validate()
    assert cfg == ref
    assert cfg.M == 512 and cfg.K == 64


def test_unknown_key(tmp_path):
    with pytest.raises(ConfigError, match="foo"):
        parse_config(write(tmp_path, "foo = 1\n"))
    with pytest.raises(ConfigError, match="window.bar"):
        parse_config(write(tmp_path, "[window]\nbar = 1\n"))


def test_duplicate_key(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(write(tmp_path, "seed = 1\nseed = 2\n"))


def test_type_mismatch(tmp_path):
    with pytest.raises(ConfigError, match="M"):
        parse_config(write(tmp_path, 'M = "big"\n'))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.toml")


def test_odd_grid_exits_2(tmp_path, capsys):
    code = main(["verify-frame", "--config", str(write(tmp_path, "M = 511\n")), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "even" in capsys.readouterr().err


def test_bad_experiment_exits_2(tmp_path):
    assert main(["nonsense", "--config", str(write(tmp_path, ""))]) == 2


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("MAGFRAME_THREADS", "0")
    assert main(["verify-frame", "--config", str(write(tmp_path, "")), "--out", str(tmp_path / "o")]) == 2


SMALL = "L = 6.0\nM = 256\nN = 4\nK = 40\ntrials = 3\n[boxes]\nschur = [[1, 24], [1, 32]]\n"


def test_boundedness_identity_passes(tmp_path, capsys):
    cfg = write(tmp_path, SMALL + '[symbol]\nfamily = "constant"\n')
    code = main(["boundedness", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "7"])
    assert code == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["passed"] and rep["info"]["max_ratio"] == pytest.approx(1.0)
    assert rep["config"]["seed"] == 7
    assert (tmp_path / "o" / "ratios.csv").exists()
    assert "PASS" in capsys.readouterr().out


def test_failing_check_exits_1(tmp_path):
    cfg = write(tmp_path, "d = 2\nL = 4.0\nM = 48\nN = 3\nK = 6\ntrials = 2\n")
    assert main(["verify-frame", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_experiment_mismatch(tmp_path):
    cfg = write(tmp_path, 'experiment = "liouville"\n')
    assert main(["verify-frame", "--config", str(cfg)]) == 2


def test_csv_floats_17_digits(tmp_path):
    cfg = write(tmp_path, SMALL)
    assert main(["verify-frame", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    row = (tmp_path / "o" / "parseval.csv").read_text().splitlines()[1]
    assert len(row.split(",")[1].replace("e", " ").split()[0].replace(".", "").lstrip("-0")) <= 17
