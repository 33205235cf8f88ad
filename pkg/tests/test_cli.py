import json
import math
import shutil
from pathlib import Path

import numpy as np
import pytest

from sgraphs.cli import EXPERIMENTS, build_parser, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
GOLDEN = (1 + math.sqrt(5)) / 2


def _read(path):
    return np.genfromtxt(path, delimiter=",", names=True)


def test_every_experiment_has_a_subcommand():
    parser = build_parser()
    for name in EXPERIMENTS:
        args = parser.parse_args([name, "--config", "x.toml", "--out", "o"])
        assert args.experiment == name
        assert args.threads >= 1


def test_spectrum_matches_analytic_levels(tmp_path):
    assert main(["spectrum", "--config", str(CONFIGS / "star.toml"), "--out", str(tmp_path), "--threads", "1"]) == 0
    data = _read(tmp_path / "spectrum.csv")
    n = np.arange(1, data.size + 1)
    np.testing.assert_allclose(data["k"], n * math.pi / (1 + GOLDEN), rtol=1e-9)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == 0
    assert manifest["checks"] == {"weyl_count": True}
    assert len(manifest["config_sha256"]) == 64
    assert set(manifest["versions"]) == {"python", "numpy", "scipy", "sgraphs"}
    assert manifest["wall_time_s"] >= 0


def test_kramers_report(tmp_path, capsys):
    cfg = tmp_path / "k.toml"
    cfg.write_text((CONFIGS / "kramers.toml").read_text().replace("k_max = 615.0", "k_max = 60.0"))
    before = cfg.read_text()
    assert main(["kramers", "--config", str(cfg), "--out", str(tmp_path / "o"), "--threads", "1"]) == 0
    assert "max doublet split / mean spacing" in capsys.readouterr().out
    assert cfg.read_text() == before


def test_rerun_is_byte_identical(tmp_path):
    cfg = tmp_path / "cb.toml"
    cfg.write_text((CONFIGS / "coupled_block.toml").read_text().replace("realizations = 2000", "realizations = 30"))
    for out in ("a", "b"):
        assert main(["coupled_block_sim", "--config", str(cfg), "--out", str(tmp_path / out), "--threads", "1"]) == 0
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_threads_do_not_change_results(tmp_path):
    cfg = tmp_path / "cb.toml"
    cfg.write_text((CONFIGS / "coupled_block.toml").read_text().replace("realizations = 2000", "realizations = 12"))
    main(["coupled_block_sim", "--config", str(cfg), "--out", str(tmp_path / "one"), "--threads", "1"])
    main(["coupled_block_sim", "--config", str(cfg), "--out", str(tmp_path / "two"), "--threads", "2"])
    assert (tmp_path / "one" / "spacings.csv").read_bytes() == (tmp_path / "two" / "spacings.csv").read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    cfg = tmp_path / "cb.toml"
    cfg.write_text((CONFIGS / "coupled_block.toml").read_text().replace("realizations = 2000", "realizations = 5")
                   .replace("seed = 1\n", ""))
    assert main(["coupled_block_sim", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    assert main(["coupled_block_sim", "--config", str(cfg), "--out", str(tmp_path / "x"), "--seed", "4",
                 "--threads", "1"]) == 0
    assert json.loads((tmp_path / "x" / "manifest.json").read_text())["seed"] == 4


def test_config_errors_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("seed = 1\n[solver]\nk_mni = 2.0\n")
    assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert f"{cfg}:3:1:" in capsys.readouterr().err
    cfg.write_text('experiment = "kramers"\n')
    assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_solver_failure_is_reported(tmp_path, capsys):
    cfg = tmp_path / "empty.toml"
    cfg.write_text((CONFIGS / "star.toml").read_text().replace("k_min = 0.5", "k_min = 0.1")
                   .replace("k_max = 250.0", "k_max = 0.2"))
    assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "o"), "--threads", "1"]) == 1
    assert "NoEigenvaluesError" in capsys.readouterr().err
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["status"] == 1 and "spectrum" in manifest["error"]


def test_transmission_map_layouts(tmp_path):
    cfg = tmp_path / "t.toml"
    cfg.write_text((CONFIGS / "transmission_map.toml").read_text().replace("k_max = 20.0", "k_max = 4.0")
                   .replace("delta_l = [0.0, 0.6, 61]", "delta_l = [0.0, 0.6, 7]"))
    assert main(["transmission_map", "--config", str(cfg), "--out", str(tmp_path / "l")]) == 0
    assert main(["transmission_map", "--config", str(cfg), "--out", str(tmp_path / "p"), "--remap-phase"]) == 0
    assert (tmp_path / "l" / "transmission_map.csv").read_text().startswith("delta_l,k,value")
    assert (tmp_path / "p" / "transmission_map.csv").read_text().startswith("delta_phi,k,value")


def test_theory_curves_without_config(tmp_path):
    assert main(["theory_curves", "--out", str(tmp_path)]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"theory_WignerGSE.csv", "theory_SinglePairBonds.csv", "coupling_density.csv"} <= names


def test_example_configs_parse():
    from sgraphs.config import load_config
    for path in CONFIGS.glob("*.toml"):
        cfg = load_config(path)
        assert cfg.data.get("experiment") in EXPERIMENTS
