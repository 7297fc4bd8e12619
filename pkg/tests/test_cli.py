import csv
import subprocess
import sys

import pytest

from gamc.cli import load_config, main
from gamc.errors import ConfigError
from gamc.frames import load_dataset


TRAIN_INI = """\
[pipeline]
q = 1
sizes = 8
train_fraction = 0.7

[aux]
n_estimators = 8

[cqi]
n_estimators = 8

[expert]
n_estimators = 8
"""


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    rc = main(["synth", "--out", str(root / "d.gamc"), "--schemes",
               "BPSK,QPSK", "--snrs=-4,8", "--frames", "12", "--seed", "3"])
    assert rc == 0
    (root / "train.ini").write_text(TRAIN_INI)
    rc = main(["train", "--config", str(root / "train.ini"), "--data",
               str(root / "d.gamc"), "--out", str(root / "m.gmcb")])
    assert rc == 0
    return root


class TestSynth:
    def test_dataset_contents(self, workdir):
        ds = load_dataset(workdir / "d.gamc")
        assert len(ds) == 2 * 2 * 12
        assert ds.frame_length == 128

    def test_scheme_groups(self, tmp_path):
        rc = main(["synth", "--out", str(tmp_path / "d.gamc"), "--schemes",
                   "digital", "--snrs", "0", "--frames", "1"])
        assert rc == 0
        ds = load_dataset(tmp_path / "d.gamc")
        assert len(ds) == 8

    def test_unknown_scheme_is_data_error(self, tmp_path):
        rc = main(["synth", "--out", str(tmp_path / "d.gamc"), "--schemes",
                   "QAM128", "--snrs", "0", "--frames", "1"])
        assert rc == 3


class TestTrainEvalPredict:
    def test_eval_exit_and_output(self, workdir, capsys):
        rc = main(["eval", "--bundle", str(workdir / "m.gmcb"), "--data",
                   str(workdir / "d.gamc")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "overall accuracy" in out
        assert "-4 dB" in out

    def test_predict_csv(self, workdir):
        out = workdir / "p.csv"
        rc = main(["predict", "--bundle", str(workdir / "m.gmcb"), "--data",
                   str(workdir / "d.gamc"), "--out", str(out)])
        assert rc == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 48
        assert {"label", "predicted", "p_BPSK", "p_QPSK"} <= set(rows[0])
        s = sum(float(rows[0][k]) for k in rows[0] if k.startswith("p_"))
        assert abs(s - 1.0) <= 1e-5  # CSV rounding

    def test_report(self, workdir, capsys):
        rc = main(["report", "--bundle", str(workdir / "m.gmcb")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "total" in out

    def test_extract_csv(self, workdir, tmp_path):
        out = tmp_path / "f.csv"
        rc = main(["extract", "--data", str(workdir / "d.gamc"), "--out",
                   str(out)])
        assert rc == 0
        header = out.open().readline().strip().split(",")
        assert header[0] == "label" and header[1] == "snr_db"
        assert len(header) == 2 + 371


class TestExitCodes:
    def test_missing_dataset_is_3(self, workdir):
        rc = main(["eval", "--bundle", str(workdir / "m.gmcb"), "--data",
                   "/nonexistent/x.gamc"])
        assert rc == 3

    def test_bad_config_key_is_2(self, workdir, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[pipeline]\nnot_a_key = 1\n")
        rc = main(["train", "--config", str(bad), "--data",
                   str(workdir / "d.gamc"), "--out", str(tmp_path / "m.gmcb")])
        assert rc == 2

    def test_bad_config_value_is_2(self, workdir, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[pipeline]\nq = 11\n")
        rc = main(["train", "--config", str(bad), "--data",
                   str(workdir / "d.gamc"), "--out", str(tmp_path / "m.gmcb")])
        assert rc == 2

    def test_corrupt_bundle_is_4(self, workdir, tmp_path):
        blob = bytearray((workdir / "m.gmcb").read_bytes())
        blob[-1] ^= 0xFF
        bad = tmp_path / "bad.gmcb"
        bad.write_bytes(bytes(blob))
        rc = main(["report", "--bundle", str(bad)])
        assert rc == 4

    def test_entry_point_runs(self):
        r = subprocess.run([sys.executable, "-m", "gamc.cli", "--help"],
                           capture_output=True, text=True)
        assert r.returncode == 0
        assert "synth" in r.stdout


class TestConfigFile:
    def test_sections_round_trip(self, tmp_path):
        ini = tmp_path / "c.ini"
        ini.write_text(
            "[pipeline]\n"
            "q = 3\n"
            "sizes = 16, 64\n"
            "feature_set = graph\n"
            "use_lnt = false\n"
            "[bands]\n"
            "band0 = -20, -8\n"
            "band1 = -6, 2\n"
            "band2 = 4, 18\n"
            "[expert]\n"
            "learning_rate = 0.2\n"
            "reg_lambda = 0.5\n"
            "[stat]\n"
            "amp_bins = 16\n")
        cfg = load_config(str(ini))
        assert cfg.q == 3
        assert cfg.sizes == (16, 64)
        assert cfg.feature_set == "graph"
        assert cfg.use_lnt is False
        assert tuple(cfg.resolved_bands()) == ((-20, -8), (-6, 2), (4, 18))
        assert cfg.expert_params.learning_rate == 0.2
        assert cfg.expert_params.reg_lambda == 0.5
        assert cfg.stat.amp_bins == 16

    def test_unknown_section_rejected(self, tmp_path):
        ini = tmp_path / "c.ini"
        ini.write_text("[nonsense]\nx = 1\n")
        with pytest.raises(ConfigError):
            load_config(str(ini))

    def test_recipe_section(self, tmp_path):
        ini = tmp_path / "c.ini"
        ini.write_text(
            "[recipe]\n"
            "schemes = BPSK, QPSK\n"
            "snrs_db = -10, 0, 10\n"
            "frames_per_cell = 7\n"
            "seed = 2\n")
        cfg = load_config(str(ini))
        assert cfg.recipe.frames_per_cell == 7
        assert cfg.recipe.snrs_db == (-10, 0, 10)
