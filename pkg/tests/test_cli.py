import json

import pytest
from click.testing import CliRunner

from datarena.bundles import load_bundle, write_bundle
from datarena.cli import main
from datarena.evaluators import eval_training_set
from datarena.forge import ForgeSpec, forge_selection_problem
from datarena.problems import TrainingSetProblem

SMALL = ["--num-classes", "3", "--per-class-count", "30", "--dim", "4",
         "--cluster-spread", "0.5"]


def run(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


class TestForge:
    def test_deterministic_manifest_hash(self, tmp_path):
        r1 = run("forge", "selection", "--seed", "7",
                 "--out", str(tmp_path / "a"), *SMALL)
        r2 = run("forge", "selection", "--seed", "7",
                 "--out", str(tmp_path / "b"), *SMALL)
        assert r1.exit_code == r2.exit_code == 0
        h1 = json.loads(r1.output)["manifest_hash"]
        h2 = json.loads(r2.output)["manifest_hash"]
        assert h1 == h2

    def test_invalid_splits_exit_1(self, tmp_path):
        r = run("forge", "selection", "--out", str(tmp_path / "x"),
                "--splits", "0.9", "0.9", "0.9", *SMALL)
        assert r.exit_code == 1

    def test_forged_bundle_loadable(self, tmp_path):
        out = tmp_path / "dbg"
        r = run("forge", "debugging", "--seed", "2", "--out", str(out),
                "--rate", "0.2", *SMALL)
        assert r.exit_code == 0
        problem = load_bundle(out)
        assert problem.task_type == "debugging"


class TestEval:
    @pytest.fixture
    def selection_bundle(self, tmp_path, small_spec):
        problem = forge_selection_problem(small_spec, budget=10**6)
        root = tmp_path / "sel"
        write_bundle(problem, root)
        return root, problem

    def test_full_pool_matches_training_set_eval(self, tmp_path,
                                                 selection_bundle):
        root, problem = selection_bundle
        sub_path = tmp_path / "sub.json"
        sub_path.write_text(json.dumps({
            "task_id": "t", "division": "open",
            "payload": {"selected_ids": list(problem.pool.example_ids)}}))
        r = run("eval", str(root), str(sub_path))
        assert r.exit_code == 0
        value = json.loads(r.output)[0]["value"]
        tsp = TrainingSetProblem("t", problem.seed, problem.suite, 10**6,
                                 problem.pool, problem.probe,
                                 problem.hidden_test, 0.0)
        assert value == eval_training_set(problem.pool, tsp).value

    def test_byte_identical_stdout(self, tmp_path, selection_bundle):
        root, problem = selection_bundle
        sub_path = tmp_path / "sub.json"
        sub_path.write_text(json.dumps({
            "task_id": "t", "division": "open",
            "payload": {"selected_ids": list(problem.pool.example_ids[:9])}}))
        r1 = run("eval", str(root), str(sub_path))
        r2 = run("eval", str(root), str(sub_path))
        assert r1.output == r2.output

    def test_over_budget_exit_2(self, tmp_path, small_spec):
        problem = forge_selection_problem(small_spec, budget=3)
        root = tmp_path / "sel3"
        write_bundle(problem, root)
        sub_path = tmp_path / "sub.json"
        sub_path.write_text(json.dumps({
            "task_id": "t", "division": "open",
            "payload": {"selected_ids": list(problem.pool.example_ids[:5])}}))
        r = run("eval", str(root), str(sub_path))
        assert r.exit_code == 2
        assert "BudgetExceeded" in r.output

    def test_validate_ok_exit_0(self, tmp_path, selection_bundle):
        root, problem = selection_bundle
        sub_path = tmp_path / "sub.json"
        sub_path.write_text(json.dumps({
            "task_id": "t", "division": "open",
            "payload": {"selected_ids": list(problem.pool.example_ids[:2])}}))
        r = run("validate", str(root), str(sub_path))
        assert r.exit_code == 0
        assert json.loads(r.output)["ok"]


class TestService:
    def test_submit_then_leaderboard(self, tmp_path, small_spec,
                                     live_arena_factory):
        problem = forge_selection_problem(small_spec, budget=20)
        write_bundle(problem, tmp_path / "data" / "tasks" / "sel")
        url, arena = live_arena_factory(tmp_path / "data")
        sub_path = tmp_path / "sub.json"
        sub_path.write_text(json.dumps({
            "task_id": "sel", "division": "open", "submitter": "carol",
            "payload": {"selected_ids": list(problem.pool.example_ids[:20])}}))
        r = run("submit", "--url", url, "sel", str(sub_path))
        assert r.exit_code == 0
        assert json.loads(r.output)["status"] == "queued"
        arena.drain()
        board = run("leaderboard", "--url", url, "sel")
        assert board.exit_code == 0
        body = json.loads(board.output)
        assert body["entries"][0]["submitter"] == "carol"
        text = run("--format", "text", "leaderboard", "--url", url, "sel")
        assert "carol" in text.output

    def test_unknown_task_exit_1(self, tmp_path, live_arena_factory):
        url, _ = live_arena_factory(tmp_path / "data")
        r = run("leaderboard", "--url", url, "ghost")
        assert r.exit_code == 1
        assert "404" in r.output
