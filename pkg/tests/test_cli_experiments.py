import csv
import json

import pytest

import experiments.cli_experiments as cli
import utils.utils_config as config
from experiments.cli_experiments import main
from experiments.db_sqlite_results import fetch_records
from graphs.generators import LabeledInstance, read_dataset, write_dataset
from graphs.graph_model import ConflictGraph
from learning.ppo_train import TrainingDivergedError


@pytest.fixture(autouse=True)
def isolated_data(tmp_path, monkeypatch):
    monkeypatch.setenv("BASE_DATA_DIR", str(tmp_path / "data"))
    monkeypatch.setenv("EXACT_BUDGET", "100000")
    monkeypatch.setenv("EPISODE_BUDGET", "4")
    monkeypatch.setenv("BEST_OF_N", "2")
    monkeypatch.setenv("PPO_ITERATIONS", "2")
    monkeypatch.setenv("ROLLOUT_PARALLELISM", "2")
    monkeypatch.setenv("HIDDEN_DIM", "8")


def _rows(path):
    with path.open() as f:
        return list(csv.DictReader(f))


def _cycle_dataset(path):
    c5 = ConflictGraph(5, frozenset({(i, (i + 1) % 5) for i in range(5)}))
    c7 = ConflictGraph(7, frozenset({(i, (i + 1) % 7) for i in range(7)}))
    write_dataset(path, [LabeledInstance("c5", "cycle", 0, c5, 3), LabeledInstance("c7", "cycle", 1, c7, 3)])


def test_gen_label_baseline_verify(tmp_path):
    raw = tmp_path / "er.jsonl"
    main(["gen", "--family", "ER", "--size", "6", "6", "--param", "p=0.4", "--q", "0.5", "--count", "4", "--seed", "3", "--out", str(raw)])
    records = read_dataset(raw)
    assert len(records) == 4
    assert all(r.chi is None for r in records)

    labeled = tmp_path / "er_labeled.jsonl"
    main(["label", "--in", str(raw), "--out", str(labeled)])
    assert all(r.labeled for r in read_dataset(labeled))

    out = tmp_path / "sli.csv"
    schemes = tmp_path / "schemes"
    main(["baseline", "--algo", "sli", "--in", str(labeled), "--out", str(out), "--scheme-dir", str(schemes)])
    rows = _rows(out)
    assert len(rows) == 4
    assert all(r["method"] == "SLI" and r["success"] == "1" for r in rows)
    assert out.with_suffix(".summary.json").exists()
    stored = fetch_records(config.get_sqlite_path(), dataset="er_labeled", method="SLI")
    assert [r["instance_id"] for r in stored] == [r["instance_id"] for r in rows]

    main(["verify", "--scheme-dir", str(schemes)])

    victim = sorted(schemes.glob("*.json"))[0]
    data = json.loads(victim.read_text())
    data["certified"] = False
    victim.write_text(json.dumps(data))
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--scheme-dir", str(schemes)])
    assert exc.value.code == 5


def test_gen_is_reproducible(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for path in (a, b):
        main(["gen", "--family", "GEO", "--size", "12", "--param", "radius=0.3", "--count", "3", "--seed", "9", "--label", "--out", str(path)])
    assert a.read_text() == b.read_text()


def test_solve_local_mode_with_reference_policy(tmp_path):
    data = tmp_path / "cycles.jsonl"
    _cycle_dataset(data)
    out = tmp_path / "osia.csv"
    main(["solve", "--mode", "local", "--policy", "greedy_defer", "--in", str(data), "--out", str(out), "--scheme-dir", str(tmp_path / "s")])
    rows = _rows(out)
    assert [r["method"] for r in rows] == ["OSIA", "OSIA"]
    assert all(r["success"] == "1" for r in rows)


def test_train_then_eval(tmp_path):
    data = tmp_path / "cycles.jsonl"
    _cycle_dataset(data)
    ckpt = tmp_path / "policy.ckpt"
    main(["train", "--in", str(data), "--checkpoint", str(ckpt), "--seed", "1"])
    assert ckpt.exists()
    assert ckpt.with_suffix(".curve.csv").exists()

    out = tmp_path / "lcg.csv"
    main(["eval", "--checkpoint", str(ckpt), "--in", str(data), "--out", str(out), "--scheme-dir", str(tmp_path / "s")])
    assert [r["method"] for r in _rows(out)] == ["LCG", "LCG"]


def test_missing_input_exits_with_input_code(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["baseline", "--algo", "sli", "--in", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


def test_eval_without_checkpoint_exits_with_input_code(tmp_path):
    data = tmp_path / "cycles.jsonl"
    _cycle_dataset(data)
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--in", str(data), "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


def test_bad_family_params_exit_with_run_code(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--family", "ER", "--size", "6", "6", "--count", "1", "--out", str(tmp_path / "x.jsonl")])
    assert exc.value.code == 3


def test_train_rejects_mixed_chromatic_numbers(tmp_path):
    data = tmp_path / "mixed.jsonl"
    edge = ConflictGraph(2, frozenset({(0, 1)}))
    c5 = ConflictGraph(5, frozenset({(i, (i + 1) % 5) for i in range(5)}))
    write_dataset(data, [LabeledInstance("e", "t", 0, edge, 2), LabeledInstance("c", "t", 1, c5, 3)])
    with pytest.raises(SystemExit) as exc:
        main(["train", "--in", str(data), "--checkpoint", str(tmp_path / "p.ckpt")])
    assert exc.value.code == 3


def test_gen_accepts_lowercase_family_and_nxm_size(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["gen", "--family", "ER", "--size", "6", "6", "--param", "p=0.3", "--count", "2", "--seed", "4", "--out", str(a)])
    main(["gen", "--family", "er", "--size", "6x6", "--p", "0.3", "--count", "2", "--seed", "4", "--out", str(b)])
    assert a.read_text() == b.read_text()


def test_gen_rejects_malformed_size(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--family", "er", "--size", "6by6", "--p", "0.3", "--count", "1", "--out", str(tmp_path / "x.jsonl")])
    assert exc.value.code == 3


def test_unknown_family_is_an_argument_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--family", "lattice", "--size", "6", "--count", "1", "--out", str(tmp_path / "x.jsonl")])
    assert exc.value.code == 2


def test_diverged_training_exits_with_code_one(tmp_path, monkeypatch):
    data = tmp_path / "cycles.jsonl"
    _cycle_dataset(data)

    def diverge(*args, **kwargs):
        raise TrainingDivergedError("non-finite policy loss")

    monkeypatch.setattr(cli, "train", diverge)
    with pytest.raises(SystemExit) as exc:
        main(["train", "--in", str(data), "--checkpoint", str(tmp_path / "p.ckpt")])
    assert exc.value.code == 1
