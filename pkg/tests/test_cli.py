"""Config parsing, CSV contract, sweeps, and exit codes."""

import math

import numpy as np
import pytest

from qdarwin.cli import (
    CSV_HEADER,
    ConfigError,
    main,
    parse_config,
    run,
)
from qdarwin.collision import CollisionConfig
from qdarwin.lindblad import LindbladConfig


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def test_minimal_collision_document_gets_defaults():
    spec = parse_config("mode = collision\n")
    cfg = spec.config
    assert isinstance(cfg, CollisionConfig)
    assert cfg.n_accessible == 3
    assert cfg.j_sa_tau1 == pytest.approx(0.0075 * math.pi / 4)
    assert cfg.j_se_tau2 == pytest.approx(0.015 * math.pi / 2)
    assert cfg.beta == 0.0
    assert cfg.interaction == "dephasing"
    assert cfg.steps == 2000
    assert cfg.include_free_evolution is False
    assert spec.record_every == 1 and spec.output is None


def test_nonmarkov_document_defaults():
    spec = parse_config("mode = nonmarkov\ngamma = 0.1\njz = 1.0\n")
    cfg = spec.config
    assert isinstance(cfg, LindbladConfig)
    assert cfg.bath == "nonmarkov-dephasing"
    assert cfg.cal_j == 1.0  # kernel scale defaults to the coupling
    assert cfg.n_accessible == 3
    assert cfg.t_max == 4.0


def test_comments_blanks_and_whitespace():
    spec = parse_config("# run\n\n  mode = collision  \n steps=5\n")
    assert spec.config.steps == 5


def test_unknown_duplicate_and_misplaced_keys():
    with pytest.raises(ConfigError, match="bogus"):
        parse_config("mode = collision\nbogus = 1\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("mode = collision\nsteps = 1\nsteps = 2\n")
    with pytest.raises(ConfigError, match="jz"):
        parse_config("mode = collision\njz = 1.0\n")
    with pytest.raises(ConfigError, match="interaction"):
        parse_config("mode = lindblad\ninteraction = dephasing\n")


def test_constraint_violations_name_the_key():
    with pytest.raises(ConfigError, match="steps"):
        parse_config("mode = collision\nsteps = 0\n")
    with pytest.raises(ConfigError, match="steps"):
        parse_config("mode = collision\nsteps = many\n")
    with pytest.raises(ConfigError, match="record_every"):
        parse_config("mode = collision\nrecord_every = 0\n")


def test_mode_requirements():
    with pytest.raises(ConfigError, match="mode"):
        parse_config("steps = 3\n")
    with pytest.raises(ConfigError, match="mode"):
        parse_config("mode = lindblad\n", default_mode="collision")
    # subcommand alone is enough
    assert parse_config("", default_mode="lindblad").engine == "lindblad"


def test_lindblad_mode_rejects_memory_bath():
    with pytest.raises(ConfigError, match="nonmarkov"):
        parse_config("mode = lindblad\nbath = nonmarkov-dephasing\n")
    with pytest.raises(ConfigError, match="bath"):
        parse_config("mode = nonmarkov\nbath = dephasing\n")


def test_sweep_engine_inference():
    text = "mode = sweep\nsweep_key = beta\nsweep_values = 0,0.5,1\ninteraction = dephasing\nsteps = 3\n"
    spec = parse_config(text)
    assert spec.engine == "collision"
    assert spec.sweep_values == (0.0, 0.5, 1.0)

    text = "mode = sweep\nsweep_key = gamma\nsweep_values = 0.1,0.2\nbath = dephasing\n"
    assert parse_config(text).engine == "lindblad"

    with pytest.raises(ConfigError, match="mixes"):
        parse_config("mode = sweep\nsweep_key = beta\nsweep_values = 1\nbeta = 0\ngamma = 1\n")
    with pytest.raises(ConfigError, match="infer"):
        parse_config("mode = sweep\nsweep_key = beta\nsweep_values = 1\n")


def test_sweep_axis_validation():
    head = "mode = sweep\ninteraction = dephasing\nsteps = 3\n"
    with pytest.raises(ConfigError, match="sweep_key"):
        parse_config(head + "sweep_values = 1\n")
    with pytest.raises(ConfigError, match="numeric"):
        parse_config(head + "sweep_key = interaction\nsweep_values = 1\n")
    with pytest.raises(ConfigError, match="gamma"):
        parse_config(head + "sweep_key = gamma\nsweep_values = 1\n")
    with pytest.raises(ConfigError, match="integer"):
        parse_config(head + "sweep_key = steps\nsweep_values = 1.5\n")
    with pytest.raises(ConfigError, match="duplicates"):
        parse_config(head + "sweep_key = beta\nsweep_values = 1,1\n")
    with pytest.raises(ConfigError, match="rejected"):
        parse_config(head + "sweep_key = steps\nsweep_values = 0\n")
    with pytest.raises(ConfigError, match="sweep"):
        parse_config("mode = collision\nsweep_key = beta\n")


# ---------------------------------------------------------------------------
# CSV contract
# ---------------------------------------------------------------------------

def _read_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    return [line.split(",") for line in lines[1:]]


def test_csv_layout_and_determinism(tmp_path):
    spec = parse_config(
        "mode = collision\nsteps = 12\nn_accessible = 2\n",
    )
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    import dataclasses

    run(dataclasses.replace(spec, output=str(out_a)))
    run(dataclasses.replace(spec, output=str(out_b)))
    assert out_a.read_bytes() == out_b.read_bytes()  # byte-identical rerun

    rows = _read_rows(out_a)
    assert len(rows) == 12 * 2  # one row per (step, fragment size)
    assert rows[0][:3] == ["1", "1", "0.5"]
    assert rows[1][:3] == ["1", "2", "1"]
    for row in rows:
        mi_rescaled, entropy = row[4], float(row[5])
        assert 0.0 <= entropy <= 1.0 + 1e-9
        if mi_rescaled == "nan":
            assert entropy <= 1e-12  # undefined only while the system is pure
        else:
            assert float(mi_rescaled) >= -1e-9
        # 12 significant digits max in every float field
        for field in row[3:]:
            mantissa = field.lstrip("-").replace(".", "").replace("nan", "")
            mantissa = mantissa.split("e")[0].lstrip("0")
            assert len(mantissa) <= 12


def test_csv_time_axis_for_continuous_runs(tmp_path):
    spec = parse_config("mode = lindblad\nt_max = 0.01\ndt = 0.001\nrecord_every = 5\n")
    import dataclasses

    out = tmp_path / "l.csv"
    run(dataclasses.replace(spec, output=str(out)))
    rows = _read_rows(out)
    assert [r[0] for r in rows] == ["0", "0.005", "0.01"]
    assert all(r[1] == "1" for r in rows)


def test_sweep_writes_suffixed_files_matching_single_runs(tmp_path):
    sweep_text = (
        "mode = sweep\ninteraction = thermalising\nsteps = 9\n"
        "sweep_key = beta\nsweep_values = 0,0.5,1\n"
    )
    spec = parse_config(sweep_text)
    import dataclasses

    paths = run(dataclasses.replace(spec, output=str(tmp_path / "th.csv")))
    names = sorted(p.name for p in paths)
    assert names == ["th_beta0.5.csv", "th_beta0.csv", "th_beta1.csv"]

    single = parse_config("mode = collision\ninteraction = thermalising\nsteps = 9\nbeta = 0.5\n")
    single_out = tmp_path / "one.csv"
    run(dataclasses.replace(single, output=str(single_out)))
    assert single_out.read_bytes() == (tmp_path / "th_beta0.5.csv").read_bytes()


# ---------------------------------------------------------------------------
# entry point and exit codes
# ---------------------------------------------------------------------------

def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_main_happy_path_and_figure(tmp_path, capsys):
    cfg = _write(tmp_path, "run.cfg", "steps = 3\nn_accessible = 1\n")
    out = tmp_path / "run.csv"
    assert main(["collision", "--config", cfg, "--output", str(out), "--plot"]) == 0
    printed = capsys.readouterr().out
    assert str(out) in printed
    assert out.exists()
    png = out.with_suffix(".png")
    assert png.exists() and png.stat().st_size > 0


def test_main_exit_codes(tmp_path, capsys):
    assert main([]) == 1  # no mode
    assert main(["--help"]) == 0
    assert main(["collision", "--config", str(tmp_path / "missing.cfg")]) == 3
    bad = _write(tmp_path, "bad.cfg", "bogus = 1\n")
    assert main(["collision", "--config", bad]) == 1
    conflict = _write(tmp_path, "conflict.cfg", "mode = lindblad\n")
    assert main(["collision", "--config", conflict]) == 1
    # unstable integration surfaces as an invariant violation
    blowup = _write(tmp_path, "blow.cfg", "gamma = 50\nbath = thermalising\nt_max = 10\ndt = 0.5\n")
    assert main(["lindblad", "--config", blowup, "--output", str(tmp_path / "x.csv")]) == 2
    # unwritable destination
    small = _write(tmp_path, "small.cfg", "steps = 2\nn_accessible = 1\n")
    assert main(["collision", "--config", small, "--output", str(tmp_path / "no_dir" / "x.csv")]) == 3
    capsys.readouterr()


def test_main_check_flag(capsys):
    assert main(["--check"]) == 0
    assert "property checks passed" in capsys.readouterr().out
