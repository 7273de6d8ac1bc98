"""End-to-end command-line tests: exit codes, artifact schemas, resume."""
import json
import subprocess
import sys

import pytest

from qamol import cli, optim
from qamol.cli import entry
from qamol.optim import AdamState, RunRecord, TrainConfig, snap_bond
from qamol.runio import (
    HamiltonianLibrary,
    PEC_COLUMNS,
    RECORD_COLUMNS,
    load_checkpoint,
    read_csv,
)

from conftest import H2_DATASET

DATASET = str(H2_DATASET)


@pytest.fixture(scope="module")
def lib():
    return HamiltonianLibrary.scan(H2_DATASET)


def write_config(tmp_path, **doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


CLASSICAL_DOC = {
    "iterations": 3,
    "kind": "classical",
    "seed": 7,
    "bond_range": [1.0, 1.2],
}


class TestExitCodes:
    def test_no_command_is_usage(self, capsys):
        assert entry([]) == 2
        capsys.readouterr()

    def test_unknown_command_is_usage(self, capsys):
        assert entry(["frobnicate"]) == 2
        capsys.readouterr()

    def test_help_is_ok(self, capsys):
        assert entry(["--help"]) == 0
        capsys.readouterr()

    def test_missing_dataset_dir_is_usage(self, tmp_path, capsys):
        code = entry(["oracle", "--dataset", str(tmp_path / "void"), "--out", str(tmp_path)])
        assert code == 2
        assert "does not exist" in capsys.readouterr().err

    def test_empty_dataset_dir_is_usage(self, tmp_path, capsys):
        (tmp_path / "empty").mkdir()
        code = entry(["oracle", "--dataset", str(tmp_path / "empty"), "--out", str(tmp_path)])
        assert code == 2
        assert "no dataset files" in capsys.readouterr().err

    def test_unknown_config_key_named(self, tmp_path, capsys):
        cfg = write_config(tmp_path, learning_rte=0.1)
        code = entry(
            ["train", "--config", cfg, "--dataset", DATASET, "--out", str(tmp_path / "o")]
        )
        assert code == 2
        assert "learning_rte" in capsys.readouterr().err

    def test_bad_grad_mode_flag_is_usage(self, tmp_path, capsys):
        code = entry(
            ["train", "--grad-mode", "adjoint", "--dataset", DATASET, "--out", str(tmp_path)]
        )
        assert code == 2
        capsys.readouterr()

    def test_corrupt_dataset_file_is_data_error(self, tmp_path, capsys):
        d = tmp_path / "ds"
        d.mkdir()
        (d / "H2_r1.40.json").write_text("{broken")
        code = entry(["oracle", "--dataset", str(d), "--out", str(tmp_path / "o")])
        assert code == 3
        capsys.readouterr()

    def test_garbage_checkpoint_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"not a checkpoint\n")
        code = entry(
            [
                "sweep", "--dataset", DATASET, "--out", str(tmp_path / "o"),
                "--checkpoint", str(bad),
            ]
        )
        assert code == 3
        capsys.readouterr()

    def test_zero_trials_is_usage(self, tmp_path, capsys):
        code = entry(
            [
                "compare", "--dataset", DATASET, "--out", str(tmp_path / "o"),
                "--trials", "0",
            ]
        )
        assert code == 2
        capsys.readouterr()

    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "qamol.cli", "--help"], capture_output=True, text=True
        )
        assert proc.returncode == 0
        assert "oracle" in proc.stdout and "compare" in proc.stdout


class TestOracle:
    def test_reference_csv(self, tmp_path, lib, capsys):
        out = tmp_path / "oracle"
        assert entry(["oracle", "--dataset", DATASET, "--out", str(out)]) == 0
        capsys.readouterr()
        cols, rows = read_csv(out / "reference_H2.csv")
        assert cols == ["r_bohr", "energy_exact_hartree"]
        assert len(rows) == 100
        # values reproduce the datasets' reference energies
        for r_s, e_s in rows[::25]:
            h = lib.hamiltonian("H2", float(r_s))
            assert abs(float(e_s) - h.reference_energy_hartree) < 1e-6
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "oracle"
        assert len(manifest["datasets"]["h2"]["files"]) == 100


@pytest.fixture(scope="module")
def train_out(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("train")
    cfg = write_config(tmp, **CLASSICAL_DOC)
    code = entry(["train", "--config", cfg, "--dataset", DATASET, "--out", str(tmp / "o")])
    assert code == 0
    return tmp / "o"


class TestTrain:
    def test_artifacts_present(self, train_out):
        for name in ("manifest.json", "record.csv", "model.ckpt", "model.ckpt.txt"):
            assert (train_out / name).is_file()

    def test_record_schema_and_hf_start(self, train_out, lib):
        cols, rows = read_csv(train_out / "record.csv")
        assert cols == list(RECORD_COLUMNS)
        assert len(rows) == 3
        first = rows[0]
        h = lib.hamiltonian("H2", float(first[3]))
        assert abs(float(first[4]) - h.hf_energy_hartree) < 1e-9

    def test_checkpoint_meta(self, train_out):
        store, extra, meta = load_checkpoint(train_out / "model.ckpt")
        assert meta["command"] == "train"
        assert meta["iteration"] == 3
        assert meta["config"]["kind"] == "classical"
        assert any(k.startswith("adam.m.") for k in extra)

    def test_manifest_snapshot(self, train_out):
        doc = json.loads((train_out / "manifest.json").read_text())
        assert doc["command"] == "train"
        assert doc["config"]["iterations"] == 3
        assert doc["seed"] == 7
        assert doc["outputs"] == ["record.csv", "model.ckpt"]

    def test_completed_run_is_noop(self, train_out, capsys):
        cfg = write_config(train_out.parent, **CLASSICAL_DOC)
        code = entry(
            ["train", "--config", cfg, "--dataset", DATASET, "--out", str(train_out)]
        )
        assert code == 0
        assert "nothing to do" in capsys.readouterr().out
        _, _, meta = load_checkpoint(train_out / "model.ckpt")
        assert meta["iteration"] == 3

    def test_other_config_same_dir_rejected(self, train_out, capsys):
        doc = dict(CLASSICAL_DOC, iterations=5)
        cfg = write_config(train_out.parent, **doc)
        code = entry(
            ["train", "--config", cfg, "--dataset", DATASET, "--out", str(train_out)]
        )
        assert code == 2
        assert "different configuration" in capsys.readouterr().err


class TestResume:
    def test_interrupted_run_continues_identically(self, tmp_path, capsys):
        doc = dict(CLASSICAL_DOC, iterations=4)
        cfg_path = write_config(tmp_path, **doc)
        ref_out = tmp_path / "full"
        assert entry(
            ["train", "--config", cfg_path, "--dataset", DATASET, "--out", str(ref_out)]
        ) == 0

        # simulate a crash after two completed iterations: run the training
        # loop with a hook that checkpoints and aborts, as a signal would
        cfg = optim.config_from_dict(doc)
        lib = HamiltonianLibrary.scan(H2_DATASET)
        out = tmp_path / "crashed"
        out.mkdir()

        class Interrupted(Exception):
            pass

        def crash_hook(it, store, adam, record):
            if it == 1:
                cli._flush_run(out, "train", cfg, store, adam, record, it + 1)
                raise Interrupted

        with pytest.raises(Interrupted):
            optim.train_plain("H2", cfg, lib, on_iteration=crash_hook)

        code = entry(
            ["train", "--config", cfg_path, "--dataset", DATASET, "--out", str(out)]
        )
        assert code == 0
        assert "resuming" in capsys.readouterr().out
        resumed = cli._read_record(out / "record.csv")
        full = cli._read_record(ref_out / "record.csv")
        assert len(resumed.rows) == 4
        assert resumed.stable_bytes() == full.stable_bytes()
        _, _, meta_a = load_checkpoint(out / "model.ckpt")
        _, _, meta_b = load_checkpoint(ref_out / "model.ckpt")
        assert meta_a["iteration"] == meta_b["iteration"] == 4
        store_a, _, _ = load_checkpoint(out / "model.ckpt")
        store_b, _, _ = load_checkpoint(ref_out / "model.ckpt")
        assert store_a.checksum() == store_b.checksum()


class TestSweep:
    def test_fresh_init_traces_hartree_fock(self, tmp_path, lib, capsys):
        cfg = write_config(tmp_path, kind="classical", seed=0)
        out = tmp_path / "sweep"
        assert entry(["sweep", "--config", cfg, "--dataset", DATASET, "--out", str(out)]) == 0
        capsys.readouterr()
        cols, rows = read_csv(out / "pec.csv")
        assert cols == list(PEC_COLUMNS)
        assert len(rows) == 49
        for r_s, e_s, _, d_s in rows:
            h = lib.hamiltonian("H2", snap_bond(float(r_s)))
            assert abs(float(e_s) - h.hf_energy_hartree) < 1e-9
            assert float(d_s) >= 0.0

    def test_zero_iteration_checkpoint_traces_hartree_fock(self, tmp_path, lib, capsys):
        # train for zero iterations, then sweep from that checkpoint
        doc = dict(CLASSICAL_DOC, iterations=0)
        cfg = write_config(tmp_path, **doc)
        t_out = tmp_path / "t"
        assert entry(["train", "--config", cfg, "--dataset", DATASET, "--out", str(t_out)]) == 0
        out = tmp_path / "sweep"
        code = entry(
            [
                "sweep", "--config", cfg, "--dataset", DATASET, "--out", str(out),
                "--checkpoint", str(t_out / "model.ckpt"),
            ]
        )
        assert code == 0
        capsys.readouterr()
        _, rows = read_csv(out / "pec.csv")
        for r_s, e_s, _, _ in rows[::12]:
            h = lib.hamiltonian("H2", snap_bond(float(r_s)))
            assert abs(float(e_s) - h.hf_energy_hartree) < 1e-9


class TestFinetune:
    def test_requires_fewshot_bonds(self, tmp_path, capsys):
        cfg = write_config(tmp_path, iterations=1, kind="classical")
        code = entry(
            [
                "finetune", "--config", cfg, "--dataset", DATASET,
                "--out", str(tmp_path / "o"), "--checkpoint", str(tmp_path / "x.ckpt"),
            ]
        )
        assert code == 2
        assert "fewshot" in capsys.readouterr().err

    def test_samples_only_listed_bonds(self, tmp_path, capsys):
        base_doc = {
            "iterations": 0, "kind": "quantum", "seed": 1, "grad_mode": "spsa",
            "fd_step": 0.05, "max_branches": 1,
        }
        cfg0 = write_config(tmp_path, **base_doc)
        t_out = tmp_path / "pre"
        assert entry(["train", "--config", cfg0, "--dataset", DATASET, "--out", str(t_out)]) == 0

        doc = dict(base_doc, iterations=3, fewshot_bonds=[1.0, 2.0])
        cfg = (tmp_path / "ft.json")
        cfg.write_text(json.dumps(doc))
        out = tmp_path / "ft"
        code = entry(
            [
                "finetune", "--config", str(cfg), "--dataset", DATASET, "--out", str(out),
                "--checkpoint", str(t_out / "model.ckpt"), "--bond-shift", "0.5",
            ]
        )
        assert code == 0
        capsys.readouterr()
        _, rows = read_csv(out / "record.csv")
        assert len(rows) == 3
        for row in rows:
            assert float(row[2]) in (1.0, 2.0)
            assert float(row[3]) == snap_bond(float(row[2]) + 0.5)


class TestCompare:
    def test_two_row_table(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            iterations=1, seed=0, grad_mode="spsa", fd_step=0.05,
            max_branches=1, bond_range=[1.0, 2.0],
        )
        out = tmp_path / "cmp"
        code = entry(
            [
                "compare", "--config", cfg, "--dataset", DATASET, "--out", str(out),
                "--trials", "1",
            ]
        )
        assert code == 0
        stdout = capsys.readouterr().out
        assert "classical" in stdout and "quantum" in stdout
        cols, rows = read_csv(out / "compare.csv")
        assert cols == ["model", "molecule", "trials", "mean_abs_delta_e_hartree"]
        assert [(r[0], r[1]) for r in rows] == [("classical", "H2"), ("quantum", "H2")]
        assert all(int(r[2]) == 1 for r in rows)
        assert all(float(r[3]) > 0 for r in rows)
        tcols, trows = read_csv(out / "compare_trials.csv")
        assert tcols == ["model", "molecule", "seed", "mean_abs_delta_e_hartree"]
        assert len(trows) == 2
        # single trial: the table entry equals the trial value
        assert float(rows[0][3]) == float(trows[0][3])
