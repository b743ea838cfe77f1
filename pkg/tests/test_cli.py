import json
import os

import numpy as np
import pytest

from fracgcl.cli import main
from fracgcl.data import SynthSpec, load_matrix, save_dataset, synth_sbm


@pytest.fixture()
def dataset_dir(tmp_path):
    ds = synth_sbm(
        SynthSpec(
            n=24,
            n_blocks=2,
            p_in=0.6,
            p_out=0.1,
            feature_dim=3,
            class_mean_separation=2.0,
            noise_sigma=0.4,
            seed=5,
        )
    )
    d = tmp_path / "data"
    d.mkdir()
    save_dataset(
        ds,
        str(d / "edges.csv"),
        str(d / "features.csv"),
        str(d / "labels.csv"),
        str(d / "splits.json"),
    )
    return d


def _write_config(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return str(path)


def _dataset_section(dataset_dir):
    return {
        "edges": str(dataset_dir / "edges.csv"),
        "features": str(dataset_dir / "features.csv"),
        "labels": str(dataset_dir / "labels.csv"),
        "splits": str(dataset_dir / "splits.json"),
    }


def _train_config(tmp_path, dataset_dir, out_name="run", **train_overrides):
    train = {"k_init": 2, "epochs_n": 3, "d_hid": 4, "horizon": 2.0}
    train.update(train_overrides)
    return _write_config(
        tmp_path,
        f"cfg_{out_name}.json",
        {
            "dataset": _dataset_section(dataset_dir),
            "train": train,
            "output_dir": str(tmp_path / out_name),
        },
    )


class TestConfigHandling:
    def test_unknown_top_level_key_exits_1(self, tmp_path, capsys):
        cfg = _write_config(tmp_path, "bad.json", {"trian": {}})
        rc = main(["probe", "--config", cfg])
        assert rc == 1
        assert "trian" in capsys.readouterr().err

    def test_unknown_section_key_exits_1(self, tmp_path, capsys):
        cfg = _write_config(tmp_path, "bad.json", {"train": {"lr": 0.1}})
        rc = main(["train", "--config", cfg])
        assert rc == 1
        assert "train.lr" in capsys.readouterr().err

    def test_set_flag_with_unknown_key_exits_1(self, tmp_path, capsys):
        rc = main(
            ["walk", "--out", str(tmp_path / "o"), "--set", "walk.speed=3"]
        )
        assert rc == 1
        assert "walk.speed" in capsys.readouterr().err

    def test_missing_dataset_paths_exit_1(self, tmp_path, capsys):
        rc = main(["probe", "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "missing" in capsys.readouterr().err

    def test_missing_feature_file_exits_1(self, tmp_path, dataset_dir, capsys):
        section = _dataset_section(dataset_dir)
        section["features"] = str(dataset_dir / "nope.csv")
        cfg = _write_config(
            tmp_path,
            "cfg.json",
            {"dataset": section, "output_dir": str(tmp_path / "o")},
        )
        rc = main(["probe", "--config", cfg])
        assert rc == 1

    def test_invalid_config_json_exits_1(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        rc = main(["synth", "--config", str(path), "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "JSON" in capsys.readouterr().err

    def test_help_exits_0(self, capsys):
        assert main(["--help"]) == 0
        assert "subcommand" in capsys.readouterr().out.lower() or True

    def test_bad_subcommand_exits_1(self, capsys):
        assert main(["frobnicate"]) == 1


class TestSynth:
    def test_writes_dataset_and_manifest(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["synth", "--out", str(out), "--seed", "3"])
        assert rc == 0
        for name in (
            "edges.csv",
            "features.csv",
            "labels.csv",
            "splits.json",
            "manifest.json",
        ):
            assert (out / name).exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["seed"] == 3
        assert manifest["wall_time_s"] >= 0

    def test_same_seed_identical_files(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["synth", "--out", str(a), "--seed", "9"]) == 0
        assert main(["synth", "--out", str(b), "--seed", "9"]) == 0
        for name in ("edges.csv", "features.csv", "labels.csv", "splits.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_set_flag_overrides_block_count(self, tmp_path):
        out = tmp_path / "out"
        rc = main(
            [
                "synth",
                "--out",
                str(out),
                "--set",
                "synth.n=40",
                "--set",
                "synth.n_blocks=2",
            ]
        )
        assert rc == 0
        features = load_matrix(str(out / "features.csv"))
        assert features.shape[0] == 40

    def test_no_writes_outside_output_dir(self, tmp_path, monkeypatch):
        workdir = tmp_path / "cwd"
        workdir.mkdir()
        monkeypatch.chdir(workdir)
        assert main(["synth", "--out", "result", "--seed", "1"]) == 0
        assert sorted(os.listdir(workdir)) == ["result"]


class TestTrainEmbedProbe:
    def test_train_twice_seed7_byte_identical_report(self, tmp_path, dataset_dir):
        cfg_a = _train_config(tmp_path, dataset_dir, "a")
        cfg_b = _train_config(tmp_path, dataset_dir, "b")
        assert main(["train", "--config", cfg_a, "--seed", "7"]) == 0
        assert main(["train", "--config", cfg_b, "--seed", "7"]) == 0
        rep_a = (tmp_path / "a" / "report.json").read_bytes()
        rep_b = (tmp_path / "b" / "report.json").read_bytes()
        assert rep_a == rep_b
        w_a = load_matrix(str(tmp_path / "a" / "w0.fdmv"))
        w_b = load_matrix(str(tmp_path / "b" / "w0.fdmv"))
        assert np.array_equal(w_a, w_b)

    def test_train_then_embed_then_probe(self, tmp_path, dataset_dir):
        cfg = _train_config(tmp_path, dataset_dir, "run")
        assert main(["train", "--config", cfg, "--seed", "2"]) == 0
        out = tmp_path / "run"
        bank = json.loads((out / "bank.json").read_text())
        assert len(bank["alphas"]) >= 2
        assert main(["embed", "--config", cfg, "--seed", "2"]) == 0
        combined = load_matrix(str(out / "combined.fdmv"))
        assert combined.shape[0] == 24
        assert (out / "view0.fdmv").exists()
        probe_cfg = _write_config(
            tmp_path,
            "probe.json",
            {
                "dataset": _dataset_section(dataset_dir),
                "probe": {"embedding": str(out / "combined.fdmv"), "epochs": 50},
                "output_dir": str(tmp_path / "probe_out"),
            },
        )
        assert main(["probe", "--config", probe_cfg]) == 0
        acc = json.loads((tmp_path / "probe_out" / "accuracy.json").read_text())
        assert set(acc) == {"train", "val", "test"}
        assert 0.0 <= acc["test"] <= 1.0

    def test_probe_on_raw_features(self, tmp_path, dataset_dir):
        cfg = _write_config(
            tmp_path,
            "probe.json",
            {
                "dataset": _dataset_section(dataset_dir),
                "probe": {"epochs": 50},
                "output_dir": str(tmp_path / "o"),
            },
        )
        assert main(["probe", "--config", cfg]) == 0
        acc = json.loads((tmp_path / "o" / "accuracy.json").read_text())
        assert acc["train"] > 0.5

    def test_avla_trace_reports_merges(self, tmp_path, dataset_dir):
        cfg = _train_config(tmp_path, dataset_dir, "trace", k_init=3)
        assert main(["avla-trace", "--config", cfg, "--seed", "4"]) == 0
        trace = json.loads((tmp_path / "trace" / "trace.json").read_text())
        assert "merge_events" in trace and "alpha_traces" in trace
        assert trace["k_final"] >= 2

    def test_forced_collapse_exits_2(self, tmp_path, dataset_dir, capsys):
        cfg = _train_config(tmp_path, dataset_dir, "bad", merge_delta=10.0)
        rc = main(["train", "--config", cfg, "--seed", "2"])
        assert rc == 2
        assert "merged" in capsys.readouterr().err


class TestDiagnose:
    def test_pca_report(self, tmp_path, dataset_dir):
        cfg = _write_config(
            tmp_path,
            "d.json",
            {
                "dataset": _dataset_section(dataset_dir),
                "output_dir": str(tmp_path / "o"),
            },
        )
        assert main(["diagnose", "--config", cfg, "--which", "pca"]) == 0
        rep = json.loads((tmp_path / "o" / "diagnose_pca.json").read_text())
        assert rep["effective_rank"] >= 1
        assert len(rep["energy_spectrum"]) == 3

    def test_rc_report(self, tmp_path, dataset_dir):
        cfg = _write_config(
            tmp_path,
            "d.json",
            {
                "dataset": _dataset_section(dataset_dir),
                "output_dir": str(tmp_path / "o"),
            },
        )
        assert main(["diagnose", "--config", cfg, "--which", "rc"]) == 0
        rep = json.loads((tmp_path / "o" / "diagnose_rc.json").read_text())
        assert rep["0"]["flag"] == "ok"
        assert rep["0"]["ratio"] > 1.0

    def test_fourier_report(self, tmp_path, dataset_dir):
        cfg = _write_config(
            tmp_path,
            "d.json",
            {
                "dataset": _dataset_section(dataset_dir),
                "output_dir": str(tmp_path / "o"),
            },
        )
        assert main(["diagnose", "--config", cfg, "--which", "fourier"]) == 0
        rep = json.loads((tmp_path / "o" / "diagnose_fourier.json").read_text())
        assert len(rep["eigenvalues"]) == 24
        assert len(rep["spread"]) == 24

    def test_theorem_on_inline_cycle(self, tmp_path, capsys):
        cfg = _write_config(
            tmp_path,
            "d.json",
            {
                "diagnose": {"topology": "cycle", "n": 20},
                "output_dir": str(tmp_path / "o"),
            },
        )
        assert main(["diagnose", "--config", cfg, "--which", "theorem"]) == 0
        rep = json.loads((tmp_path / "o" / "diagnose_theorem.json").read_text())
        assert set(rep["verdicts"]) == {
            "positivity",
            "decreasing_in_i",
            "local_dominates",
            "agreement_10pct",
        }
        out = capsys.readouterr().out
        assert "positivity" in out and ("PASS" in out or "FAIL" in out)

    def test_diagnose_requires_which(self, tmp_path):
        assert main(["diagnose", "--out", str(tmp_path / "o")]) == 1


class TestWalkAndStability:
    def test_walk_inline_cycle(self, tmp_path):
        cfg = _write_config(
            tmp_path,
            "w.json",
            {
                "walk": {
                    "topology": "cycle",
                    "n": 6,
                    "alpha": 0.5,
                    "t_end": 0.5,
                    "delta_tau": 0.02,
                    "n_walkers": 2000,
                },
                "output_dir": str(tmp_path / "o"),
            },
        )
        assert main(["walk", "--config", cfg, "--seed", "1"]) == 0
        dist = load_matrix(str(tmp_path / "o" / "distribution.csv"))
        assert dist.shape == (6, 1)
        assert abs(dist.sum() - 1.0) < 1e-12
        rep = json.loads((tmp_path / "o" / "walk.json").read_text())
        assert 0.0 <= rep["tv_vs_spectral"] <= 1.0

    def test_walk_alpha_one_uses_markov_simulator(self, tmp_path):
        cfg = _write_config(
            tmp_path,
            "w.json",
            {
                "walk": {
                    "topology": "cycle",
                    "n": 6,
                    "alpha": 1.0,
                    "t_end": 0.5,
                    "n_walkers": 2000,
                },
                "output_dir": str(tmp_path / "o"),
            },
        )
        assert main(["walk", "--config", cfg, "--seed", "1"]) == 0
        rep = json.loads((tmp_path / "o" / "walk.json").read_text())
        assert rep["alpha"] == 1.0

    def test_stability_inline_cycle(self, tmp_path):
        cfg = _write_config(
            tmp_path,
            "s.json",
            {
                "stability": {
                    "topology": "cycle",
                    "n": 8,
                    "alpha": 0.8,
                    "direction_index": 7,
                    "t_grid": [1.0, 2.0, 5.0],
                },
                "output_dir": str(tmp_path / "o"),
            },
        )
        assert main(["stability", "--config", cfg]) == 0
        table = load_matrix(str(tmp_path / "o" / "discrepancy.csv"))
        assert table.shape == (3, 2)
        rep = json.loads((tmp_path / "o" / "stability.json").read_text())
        assert isinstance(rep["holds"], bool)
        assert rep["c_fit"] > 0


class TestManifestHash:
    def _hash(self, tmp_path, name, extra_args=()):
        out = tmp_path / name
        rc = main(["synth", "--out", str(out), *extra_args])
        assert rc == 0
        return json.loads((out / "manifest.json").read_text())["config_hash"]

    def test_repeat_run_same_hash(self, tmp_path):
        h1 = self._hash(tmp_path, "r1", ("--seed", "5"))
        h2 = self._hash(tmp_path, "r2", ("--seed", "5"))
        assert h1 == h2

    def test_seed_changes_hash(self, tmp_path):
        h1 = self._hash(tmp_path, "r1", ("--seed", "5"))
        h2 = self._hash(tmp_path, "r2", ("--seed", "6"))
        assert h1 != h2

    def test_semantic_field_changes_hash(self, tmp_path):
        h1 = self._hash(tmp_path, "r1", ("--set", "synth.p_in=0.5"))
        h2 = self._hash(tmp_path, "r2", ("--set", "synth.p_in=0.6"))
        assert h1 != h2

    def test_output_dir_and_threads_do_not_change_hash(self, tmp_path):
        h1 = self._hash(tmp_path, "r1", ("--seed", "5", "--threads", "1"))
        h2 = self._hash(tmp_path, "r2", ("--seed", "5", "--threads", "2"))
        assert h1 == h2
