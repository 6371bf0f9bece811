import subprocess
import sys

import pytest

from advscen.cli import _algo_name, main
from advscen.scenario import Scenario, load_scenario, save_scenario
from advscen.sensorsim import load_sweep
from advscen.toy import _actor, data_path, speed_profile_states, straight_road

SCENE = str(data_path("toy_suite/cut_in_left.yaml"))


def test_algo_aliases():
    assert _algo_name("bo") == "BO" and _algo_name("bandit") == "BanditTD" and _algo_name("nes") == "NES"


def test_attack_writes_record_scene_and_sweeps(tmp_path, capsys):
    rec, out, sweeps = tmp_path / "rec.csv", tmp_path / "adv.yaml", tmp_path / "sweeps"
    code = main(["--seed", "3", "attack", SCENE, "--algo", "rs", "--budget", "5", "--record", str(rec),
                 "--out", str(out), "--dump-sweeps", str(sweeps)])
    assert code == 0
    text = capsys.readouterr().out
    assert "# algorithm=RS stack=sensor mask=M3 seed=3 m=1" in text and "queries=5" in text
    lines = rec.read_text().splitlines()
    assert len(lines) == 6 and lines[0].startswith("query,value")
    adv = load_scenario(out)
    assert adv.name == load_scenario(SCENE).name
    files = sorted(sweeps.iterdir())
    assert len(files) == 2 and load_sweep(files[0]).n_rays == 720


def test_attack_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("algorithm: GA\nbudget: 4\nstack: ground_truth\n")
    assert main(["attack", SCENE, "--config", str(cfg), "--budget", "3"]) == 0
    text = capsys.readouterr().out
    assert "algorithm=GA stack=ground_truth" in text and "queries=3" in text


def test_benchmark_empty_list_exits_zero(tmp_path, capsys):
    assert main(["benchmark", "--out-dir", str(tmp_path)]) == 0
    assert capsys.readouterr().out.strip() == ""
    assert (tmp_path / "algorithms_table.csv").read_text() == ""


def test_benchmark_rows(capsys):
    assert main(["benchmark", SCENE, "--algorithms", "rs", "--budget", "3", "--stack", "ground_truth"]) == 0
    text = capsys.readouterr().out
    assert "cut_in_left,RS,ok" in text and "Original" in text


def test_transfer(tmp_path, capsys):
    assert main(["transfer", SCENE, "--algo", "rs", "--budget", "3", "--out-dir", str(tmp_path)]) == 0
    table = (tmp_path / "transfer_collision.csv").read_text().splitlines()
    assert table[0] == "source,ground_truth,sensor" and len(table) == 3


def test_curate(tmp_path, capsys):
    steps = 16
    sdv = speed_profile_states(0.0, 0.0, 10.0, n_history=1, n_future=steps - 1)
    truck = _actor(1, speed_profile_states(0.0, 3.5, 10.0, n_history=1, n_future=steps - 1), dims=(80.0, 2.0))
    log = Scenario(straight_road(), (truck,), sdv, n_history=2, n_future=steps - 2, name="log")
    src, out = tmp_path / "log.yaml", tmp_path / "win.yaml"
    save_scenario(log, src)
    assert main(["curate", str(src), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.startswith("start,score\n0,0.333333\n4,0.333333\n")
    assert "selected window start=0" in text
    assert load_scenario(out).horizon == 12


def test_plot(tmp_path):
    rec = tmp_path / "rs.csv"
    main(["attack", SCENE, "--algo", "rs", "--budget", "4", "--stack", "ground_truth", "--record", str(rec)])
    png = tmp_path / "scene.png"
    assert main(["plot", SCENE, "--out", str(png), "--curves", str(rec)]) == 0
    assert png.stat().st_size > 0 and (tmp_path / "scene_curves.png").stat().st_size > 0


def test_bad_arguments_exit_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["attack", SCENE, "--mask", "M9"])
    assert exc.value.code == 2


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "advscen.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "curate" in res.stdout and "transfer" in res.stdout
