import json
import subprocess
import sys

import pytest

from rdoa.cli import main

ULA16 = {"kind": "ula", "elements": 16, "spacing": 0.5}


def write_config(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


@pytest.mark.parametrize("sub, cfg", [
    ("spectrum", "four_sources"),
    ("characteristics", "characteristics_m10"),
    ("multipath", "multipath_power_grid"),
])
@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_subcommands_write_output(tmp_path, capsys, sub, cfg, fmt):
    assert main([sub, "--config", cfg, "--out", str(tmp_path), "--format", fmt]) == 0
    path = capsys.readouterr().out.strip()
    assert path.endswith("." + fmt)
    text = open(path).read()
    if fmt == "json":
        assert isinstance(json.loads(text), list)
    else:
        assert "," in text.splitlines()[0]


def test_sleeve_and_rmse_from_files(tmp_path, capsys):
    sleeve = write_config(tmp_path, {
        "kind": "sleeve", "trials": 3,
        "scenario": {"array": ULA16, "snapshots": 20,
                     "sources": [{"direction_deg": 30, "power_db": 5}]}}, "s.json")
    rmse = write_config(tmp_path, {
        "kind": "rmse_sweep", "trials": 3, "sweep": {"values": [10]},
        "scenario": {"array": ULA16, "snapshots": 20,
                     "sources": [{"direction_deg": 30, "power_db": 0},
                                 {"direction_deg": 60, "power_db": -15}]}}, "r.json")
    assert main(["sleeve", "--config", sleeve, "--out", str(tmp_path)]) == 0
    assert main(["rmse", "--config", rmse, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out.split()
    assert open(out[0]).readline().startswith("theta_deg,beamformer,p5_linear")
    assert open(out[1]).readline().startswith("swept_snr_db,beamformer,source_index")


def test_same_seed_gives_byte_identical_files(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["spectrum", "--config", "single_source_low_snr", "--out", str(d),
                     "--seed", "42"]) == 0
    assert (a / "single_source_low_snr_spectrum.csv").read_bytes() == (b / "single_source_low_snr_spectrum.csv").read_bytes()
    assert main(["spectrum", "--config", "single_source_low_snr", "--out", str(tmp_path / "c"),
                 "--seed", "43"]) == 0
    assert (tmp_path / "c" / "single_source_low_snr_spectrum.csv").read_bytes() != \
        (a / "single_source_low_snr_spectrum.csv").read_bytes()


def test_population_flag(tmp_path):
    outs = []
    for seed in ("1", "2"):
        d = tmp_path / seed
        main(["spectrum", "--config", "four_sources", "--out", str(d), "--seed", seed,
              "--population"])
        outs.append((d / "four_sources_spectrum.csv").read_bytes())
    assert outs[0] == outs[1]


def test_failure_emits_error_record(tmp_path, capsys):
    code = main(["spectrum", "--config", "multipath_power_grid", "--out", str(tmp_path)])
    assert code != 0
    rec = json.loads(capsys.readouterr().err)
    assert rec["error"] == "ValueError" and rec["subcommand"] == "spectrum"
    code = main(["spectrum", "--config", str(tmp_path / "nope.json")])
    assert code != 0
    assert json.loads(capsys.readouterr().err)["error"] == "FileNotFoundError"


def test_usage_error_is_machine_readable(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", "--format", "xml", "--config", "single_source_low_snr"])
    assert exc.value.code != 0
    assert json.loads(capsys.readouterr().err)["error"] == "UsageError"


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "rdoa.cli", "multipath",
                        "--config", "multipath_power_grid", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "rdoa.cli", "rmse",
                        "--config", "single_source_low_snr"],
                       capture_output=True, text=True)
    assert r.returncode == 1
    assert json.loads(r.stderr)["error"] == "ValueError"
