import json

import pytest

from diffeval import io as dio
from diffeval.cli import main


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    """One small simulated pipeline shared by the read-only CLI tests."""
    out = tmp_path_factory.mktemp("sim") / "tree"
    code = main([
        "simulate", "--seed", "3", "--n-instances", "250", "--n-candidates", "8",
        "--replicates", "2", "--budget-pcts", "5,10", "--k-low", "20", "--k-high", "20",
        "--output-dir", str(out),
    ])
    assert code == 0
    return out


class TestManifestCommand:
    def test_writes_default_manifest(self, tmp_path, capsys):
        path = tmp_path / "m.json"
        assert main(["manifest", "--output", str(path)]) == 0
        m = dio.read_manifest(path)
        assert m.n_models == 120
        assert "120-entry" in capsys.readouterr().out

    def test_custom_schedule(self, tmp_path):
        path = tmp_path / "m.json"
        main([
            "manifest", "--data-fractions", "50,25", "--corruption-fractions", "10",
            "--epochs", "3", "--output", str(path),
        ])
        assert dio.read_manifest(path).n_models == 9

    def test_bad_fraction_exit_code(self, tmp_path):
        code = main(["manifest", "--data-fractions", "150", "--output",
                     str(tmp_path / "m.json")])
        assert code == 7


class TestScoreCommand:
    def test_score_round_trip(self, sim_dir, tmp_path):
        out = tmp_path / "d.csv"
        code = main([
            "score", "--log", str(sim_dir / "ensemble_log.jsonl"),
            "--manifest", str(sim_dir / "manifest.json"),
            "--strict", "--output", str(out),
        ])
        assert code == 0
        d = dio.read_difficulty_csv(out)
        assert len(d) == 250
        assert set(d.n_models.tolist()) == {120}
        assert out.with_suffix(".csv.provenance.json").exists() or (
            tmp_path / "d.csv.provenance.json"
        ).exists()

    def test_missing_file_exit_code(self, tmp_path):
        code = main(["score", "--log", str(tmp_path / "nope.jsonl"),
                     "--output", str(tmp_path / "d.csv")])
        assert code == 10

    def test_corrupt_log_exit_code(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{not json\n", encoding="utf-8")
        code = main(["score", "--log", str(bad), "--output", str(tmp_path / "d.csv")])
        assert code == 3


class TestSelectCommand:
    def test_banded_select(self, sim_dir, tmp_path):
        out = tmp_path / "plan.json"
        code = main([
            "select", "--difficulty", str(sim_dir / "difficulty.csv"),
            "--policy", "banded", "--budget", "30", "--seed", "5",
            "--output", str(out),
        ])
        assert code == 0
        plan = dio.read_selection_plan(out)
        assert plan.n_selected == 30
        assert plan.policy.seed == 5

    def test_budget_pct(self, sim_dir, tmp_path):
        out = tmp_path / "plan.json"
        main([
            "select", "--difficulty", str(sim_dir / "difficulty.csv"),
            "--policy", "random", "--budget-pct", "10", "--output", str(out),
        ])
        assert dio.read_selection_plan(out).n_selected == 25

    def test_zero_budget_pct_exit_code(self, sim_dir, tmp_path):
        code = main([
            "select", "--difficulty", str(sim_dir / "difficulty.csv"),
            "--policy", "random", "--budget-pct", "0.1",
            "--output", str(tmp_path / "p.json"),
        ])
        assert code == 6

    def test_conflicting_budget_flags(self, sim_dir, tmp_path):
        code = main([
            "select", "--difficulty", str(sim_dir / "difficulty.csv"),
            "--policy", "random", "--budget", "5", "--budget-pct", "5",
            "--output", str(tmp_path / "p.json"),
        ])
        assert code == 3

    def test_length_heuristic_needs_instances(self, sim_dir, tmp_path):
        code = main([
            "select", "--difficulty", str(sim_dir / "difficulty.csv"),
            "--policy", "length_heuristic", "--budget", "10",
            "--output", str(tmp_path / "p.json"),
        ])
        assert code == 3
        ok = main([
            "select", "--difficulty", str(sim_dir / "difficulty.csv"),
            "--policy", "length_heuristic", "--budget", "10",
            "--instances", str(sim_dir / "instances.jsonl"),
            "--output", str(tmp_path / "p.json"),
        ])
        assert ok == 0


class TestConfigPrecedence:
    def test_flags_beat_config(self, sim_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"budget": 10, "policy": "random"}), encoding="utf-8")
        out = tmp_path / "plan.json"
        main([
            "select", "--config", str(cfg),
            "--difficulty", str(sim_dir / "difficulty.csv"),
            "--budget", "20", "--output", str(out),
        ])
        plan = dio.read_selection_plan(out)
        assert plan.budget_requested == 20  # flag wins
        assert plan.policy.kind == "random"  # config fills the gap

    def test_unknown_config_key_rejected(self, sim_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus_key": 1}), encoding="utf-8")
        code = main([
            "select", "--config", str(cfg),
            "--difficulty", str(sim_dir / "difficulty.csv"),
            "--policy", "random", "--budget", "5",
            "--output", str(tmp_path / "p.json"),
        ])
        assert code == 3


class TestFlagCommand:
    def test_flag_output(self, sim_dir, tmp_path):
        out = tmp_path / "flags.json"
        code = main([
            "flag", "--difficulty", str(sim_dir / "difficulty.csv"),
            "--k-low", "10", "--k-high", "15", "--output", str(out),
        ])
        assert code == 0
        flags = dio.read_flagset(out)
        assert len(flags.trivial_ids) == 10
        assert len(flags.erroneous_candidate_ids) == 15

    def test_overflow_exit_code(self, sim_dir, tmp_path):
        code = main([
            "flag", "--difficulty", str(sim_dir / "difficulty.csv"),
            "--k-low", "200", "--k-high", "200", "--output", str(tmp_path / "f.json"),
        ])
        assert code == 8


class TestFidelityCommand:
    def test_grid_shape_matches_policy_budget_matrix(self, sim_dir, tmp_path):
        out = tmp_path / "grid.json"
        csv = tmp_path / "grid.csv"
        code = main([
            "fidelity", "--candidate-log", str(sim_dir / "candidate_log.jsonl"),
            "--difficulty", str(sim_dir / "difficulty.csv"),
            "--policies", "banded,random", "--budget-pcts", "1,5,10",
            "--replicates", "3", "--seed", "1",
            "--output", str(out), "--csv", str(csv),
        ])
        assert code == 0
        doc = dio.read_json_document(out)
        assert len(doc["grid"]) == 6
        budgets = {(c["policy"], c["budget_pct"]) for c in doc["grid"]}
        assert ("banded", 1.0) in budgets and ("random", 10.0) in budgets
        for cell in doc["grid"]:
            assert cell["n_replicates"] == 3
            assert -1.0 <= cell["mean_tau"] <= 1.0
        lines = csv.read_text().strip().splitlines()
        assert lines[0] == "policy,budget_pct,budget,mean_tau,std_tau,n_replicates"
        assert len(lines) == 7

    def test_zero_budget_cells_are_null(self, sim_dir, tmp_path):
        out = tmp_path / "grid.json"
        # 0.1% of 250 instances floors to zero selected
        code = main([
            "fidelity", "--candidate-log", str(sim_dir / "candidate_log.jsonl"),
            "--difficulty", str(sim_dir / "difficulty.csv"),
            "--policies", "random", "--budget-pcts", "0.1",
            "--replicates", "2", "--output", str(out),
        ])
        assert code == 0
        cell = dio.read_json_document(out)["grid"][0]
        assert cell["mean_tau"] is None
        assert cell["note"] == "0 selected instances"

    def test_worker_count_does_not_change_bytes(self, sim_dir, tmp_path):
        outs = []
        for workers in ("1", "3"):
            out = tmp_path / f"grid_w{workers}.json"
            main([
                "fidelity", "--candidate-log", str(sim_dir / "candidate_log.jsonl"),
                "--difficulty", str(sim_dir / "difficulty.csv"),
                "--policies", "banded,random", "--budget-pcts", "5,10",
                "--replicates", "2", "--workers", workers, "--output", str(out),
            ])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestReports:
    def test_regions(self, sim_dir, tmp_path):
        out = tmp_path / "regions.json"
        code = main([
            "report", "regions", "--candidate-log", str(sim_dir / "candidate_log.jsonl"),
            "--difficulty", str(sim_dir / "difficulty.csv"),
            "--bins", "5", "--output", str(out),
        ])
        assert code == 0
        doc = dio.read_json_document(out)
        assert sum(doc["counts"]) == 250
        assert len(doc["accuracies"]) == 8

    def test_labels(self, sim_dir, tmp_path):
        out = tmp_path / "labels.json"
        code = main([
            "report", "labels", "--instances", str(sim_dir / "instances.jsonl"),
            "--difficulty", str(sim_dir / "difficulty.csv"), "--output", str(out),
        ])
        assert code == 0
        doc = dio.read_json_document(out)
        assert sum(row["count"] for row in doc["labels"]) == 250

    def test_ood(self, sim_dir, tmp_path):
        cand = dio.read_prediction_log(sim_dir / "candidate_log.jsonl").correctness
        acc_csv = tmp_path / "ood.csv"
        rows = ["candidate_id,accuracy"] + [
            f"{cid},{acc:.6f}"
            for cid, acc in zip(cand.candidate_ids, cand.correct.mean(axis=1))
        ]
        acc_csv.write_text("\n".join(rows) + "\n", encoding="utf-8")
        out = tmp_path / "ood.json"
        code = main([
            "report", "ood", "--candidate-log", str(sim_dir / "candidate_log.jsonl"),
            "--difficulty", str(sim_dir / "difficulty.csv"),
            "--ood-accuracies", str(acc_csv), "--mu-grid", "0,1",
            "--output", str(out),
        ])
        assert code == 0
        doc = dio.read_json_document(out)
        assert len(doc["sweep"]) == 2
        mu0 = next(r for r in doc["sweep"] if r["mu"] == 0)
        assert mu0["tau_unweighted"] == mu0["tau_weighted"] == 1.0

    def test_repair(self, sim_dir, tmp_path):
        out = tmp_path / "repair.json"
        code = main([
            "report", "repair",
            "--before-log", str(sim_dir / "candidate_log.jsonl"),
            "--after-log", str(sim_dir / "candidate_log.jsonl"),
            "--flags", str(sim_dir / "flags.json"),
            "--output", str(out),
        ])
        assert code == 0
        doc = dio.read_json_document(out)
        assert doc["trivial"]["delta"] == 0.0


class TestSimulateDeterminism:
    def test_identical_trees(self, tmp_path):
        trees = []
        for name in ("a", "b"):
            out = tmp_path / name
            main([
                "simulate", "--seed", "11", "--n-instances", "120",
                "--n-candidates", "6", "--replicates", "2",
                "--budget-pcts", "5,10", "--k-low", "10", "--k-high", "10",
                "--output-dir", str(out),
            ])
            trees.append({
                p.name: p.read_bytes() for p in sorted(out.iterdir())
            })
        assert trees[0] == trees[1]


class TestHelp:
    @pytest.mark.parametrize(
        "argv",
        [
            ["manifest"], ["score"], ["select"], ["fidelity"], ["flag"],
            ["simulate"], ["serve"],
            ["report", "regions"], ["report", "labels"],
            ["report", "ood"], ["report", "repair"],
        ],
    )
    def test_help_exits_zero(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            main(argv + ["--help"])
        assert exc.value.code == 0
        assert "--" in capsys.readouterr().out
