import json

import numpy as np
import pytest

from smoco.cli import main
from smoco.config import bundled_config, read_kv


def _config(tmp_path, edit):
    raw = json.loads(bundled_config("benchmark").read_text())
    edit(raw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return str(path)


def test_augment(tmp_path, capsys):
    assert main(["augment", "--out", str(tmp_path)]) == 0
    kv = read_kv(tmp_path / "augmented.txt")
    np.testing.assert_array_equal(kv["B_f_plant"], [[0, 0], [0, 0], [-4, 0], [0, 1.25]])
    np.testing.assert_allclose(kv["E"][:4, 4:], [[0, 0], [0, 0], [-40, 0], [0, 125]])
    header = (tmp_path / "augmented.txt").read_text()
    assert "# config_hash = " in header and "# seed = 1" in header


def test_identity_phi(tmp_path):
    cfg = _config(tmp_path, lambda r: r.update(Phi=[[1, 0], [0, 1]]))
    assert main(["augment", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    kv = read_kv(tmp_path / "o" / "augmented.txt")
    np.testing.assert_array_equal(kv["E"][:4, 4:], kv["B_f_plant"])


def test_bad_phi_exit_2(tmp_path, capsys):
    cfg = _config(tmp_path, lambda r: r.update(Phi=[[1, 0], [0, -1]]))
    assert main(["augment", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["field"] == "Phi" and record["kind"] == "input"
    assert (tmp_path / "o" / "failure.txt").exists()


def test_unknown_flag_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--bogus"])
    assert info.value.code == 2


def test_certify_reference(tmp_path):
    assert main(["certify", "--out", str(tmp_path)]) == 0
    kv = read_kv(tmp_path / "certificate.txt")
    assert kv["smo.passed"] is True and kv["smo_co.passed"] is True
    assert kv["smo_co.margin.closed_loop"] < 0 and kv["smo_co.beta"] >= 1


def test_unstable_k_fails_certify(tmp_path):
    def flip(raw):
        K = np.array(raw["gains"]["supplied"]["K"])
        raw["gains"]["supplied"]["K"] = (-K).tolist()
    cfg = _config(tmp_path, flip)
    assert main(["certify", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_synthesize_roundtrip(tmp_path):
    cfg = str(bundled_config("synthesized_example"))
    assert main(["synthesize", "--config", cfg, "--out", str(tmp_path)]) == 0
    kv = read_kv(tmp_path / "gains.txt")
    from smoco.config import load_config
    from smoco.pipeline import build_gains
    gains = build_gains(load_config(cfg))
    for key, value in gains.as_dict().items():
        np.testing.assert_array_equal(kv[key], value)


def test_simulate_is_idempotent(tmp_path):
    args = ["simulate", "--mode", "both", "--seed", "7", "--t-end", "0.5"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("trajectory_smo.csv", "trajectory_smoco.csv"):
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes()
        assert b"seed=7" in a.splitlines()[0]


def test_compare_short_writes_outputs(tmp_path):
    code = main(["compare", "--t-end", "2", "--dt", "1e-3", "--out", str(tmp_path)])
    assert code in (0, 1)
    kv = read_kv(tmp_path / "report.txt")
    assert kv["orderings_pass"] is (code == 0)
    for f in ("disturbance.png", "estimation_error.png", "control_input.png"):
        assert (tmp_path / "figures" / f).stat().st_size > 0


@pytest.mark.slow
def test_compare_benchmark_exit_0(tmp_path):
    assert main(["compare", "--no-figures", "--out", str(tmp_path)]) == 0
    kv = read_kv(tmp_path / "report.txt")
    assert kv["error_ordering"] == "pass" and kv["input_ordering"] == "pass"
