"""SDK tests. The service side is set up with the harness package, but the
code under test talks to it only over HTTP and through public bundle files."""

import numpy as np
import pytest

from datarena.bundles import write_bundle
from datarena.forge import ForgeSpec, forge_debugging_problem, forge_selection_problem

from datarena_sdk import (
    ArenaAPIError,
    ArenaClient,
    BudgetExceedsPool,
    ClientConfig,
    ProbeModel,
    PublicBundle,
    baseline_random_selection,
    baseline_smallloss_debug_priority,
    baseline_uncertainty_selection,
    train_probe,
)


class TestRandomSelection:
    def test_full_pool(self):
        ids = [f"e{i}" for i in range(5)]
        assert sorted(baseline_random_selection(ids, 5, 0)) == ids

    def test_deterministic(self):
        ids = [f"e{i}" for i in range(50)]
        assert baseline_random_selection(ids, 10, 7) == \
            baseline_random_selection(ids, 10, 7)

    def test_budget_zero_and_exceeds(self):
        ids = ["a", "b"]
        assert baseline_random_selection(ids, 0, 0) == []
        with pytest.raises(BudgetExceedsPool):
            baseline_random_selection(ids, 3, 0)


class TestUncertaintySelection:
    def test_binary_fixture(self):
        ids = ["a", "b", "c", "d"]
        picked = baseline_uncertainty_selection(ids, [0.9, 0.5, 0.1, 0.6], 2)
        assert sorted(picked) == ["b", "d"]

    def test_budget_one_most_uncertain(self):
        ids = ["a", "b", "c"]
        probs = np.array([[0.8, 0.1, 0.1], [0.4, 0.35, 0.25],
                          [0.6, 0.3, 0.1]])
        assert baseline_uncertainty_selection(ids, probs, 1) == ["b"]

    def test_tie_break_ascending_id(self):
        ids = ["z", "a"]
        assert baseline_uncertainty_selection(ids, [0.5, 0.5], 1) == ["a"]


class TestSmallLossPriority:
    def test_flipped_far_example_ranks_first(self):
        from datarena_sdk.bundles import PublicDataset

        rng = np.random.default_rng(0)
        X = np.vstack([rng.normal(-3, 0.2, size=(10, 2)),
                       rng.normal(3, 0.2, size=(10, 2))])
        labels = ["neg"] * 10 + ["pos"] * 10
        labels[3] = "pos"  # far into the negative cluster, label flipped
        ids = tuple(f"e{i:02d}" for i in range(20))
        ds = PublicDataset("d", ("neg", "pos"), ids, X, tuple(labels))
        clean = PublicDataset("c", ("neg", "pos"), ids, X,
                              tuple(["neg"] * 10 + ["pos"] * 10))
        probe = train_probe(clean, {"kind": "logreg", "learning_rate": 0.1,
                                    "iterations": 200, "l2_lambda": 1e-3})
        priority = baseline_smallloss_debug_priority(ds, probe)
        assert priority[0] == "e03"
        assert baseline_smallloss_debug_priority(ds, probe) == priority
        # clean data: still a valid total ranking
        assert sorted(baseline_smallloss_debug_priority(clean, probe)) == \
            sorted(ids)


class TestClientConfig:
    def test_timeout_positive(self):
        with pytest.raises(ValueError):
            ClientConfig("http://x", timeout=0)


@pytest.fixture(scope="module")
def served(tmp_path_factory, live_arena_factory):
    root = tmp_path_factory.mktemp("arena")
    spec = ForgeSpec(seed=0)
    sel = forge_selection_problem(spec, budget=50)
    dbg = forge_debugging_problem(spec, rate=0.3, eval_mode="inspection",
                                  step=25)
    write_bundle(sel, root / "tasks" / "sel")
    write_bundle(dbg, root / "tasks" / "dbg")
    url, arena = live_arena_factory(root)
    client = ArenaClient(ClientConfig(url))
    yield client, root, arena
    client.close()


class TestEndToEnd:
    def test_fetch_task_public_only(self, served):
        client, root, _ = served
        task = client.fetch_task("sel")
        assert task["benchmark_type"] == "selection"
        assert "hidden" not in str(task["manifest"]["files"])
        with pytest.raises(ArenaAPIError) as exc:
            client.fetch_task("ghost")
        assert exc.value.status_code == 404

    def test_every_baseline_scores_end_to_end(self, served):
        client, root, _ = served
        sel_bundle = PublicBundle.load(root / "tasks" / "sel")
        pool = sel_bundle.datasets["pool"]
        budget = sel_bundle.params["budget"]

        random_ids = baseline_random_selection(pool.example_ids, budget, 0)
        probe = train_probe(sel_bundle.datasets["probe"],
                            sel_bundle.suite["members"][0])
        unc_ids = baseline_uncertainty_selection(
            pool.example_ids, probe.probabilities(pool.X), budget)

        dbg_bundle = PublicBundle.load(root / "tasks" / "dbg")
        dirty = dbg_bundle.datasets["dirty_train"]
        dbg_probe = train_probe(dirty, dbg_bundle.suite["members"][0])
        priority = baseline_smallloss_debug_priority(dirty, dbg_probe)

        jobs = [("sel", {"selected_ids": random_ids}, "rand"),
                ("sel", {"selected_ids": unc_ids}, "unc"),
                ("dbg", {"priority": priority}, "smallloss")]
        for task_id, payload, submitter in jobs:
            receipt = client.submit(task_id, payload, submitter=submitter)
            assert receipt["status"] == "queued"
            status = client.poll_score(receipt, timeout=120)
            assert status["status"] == "scored"
            assert status["records"][0]["value"] is not None

    def test_rejected_submission_is_terminal(self, served):
        client, root, _ = served
        sel_bundle = PublicBundle.load(root / "tasks" / "sel")
        pool_ids = sel_bundle.datasets["pool"].example_ids
        receipt = client.submit("sel", {"selected_ids": list(pool_ids[:51])})
        assert receipt["status"] == "rejected"
        final = client.poll_score(receipt)
        codes = {v["code"] for v in final["report"]["violations"]}
        assert "BudgetExceeded" in codes


def test_uncertainty_beats_random_over_http(tmp_path, live_arena_factory):
    root = tmp_path / "arena"
    budget = 50
    for seed in range(20):
        problem = forge_selection_problem(ForgeSpec(seed=seed),
                                          budget=budget)
        write_bundle(problem, root / "tasks" / f"sel{seed:02d}")
    url, arena = live_arena_factory(root)
    wins = 0
    with ArenaClient(ClientConfig(url)) as client:
        for seed in range(20):
            task_id = f"sel{seed:02d}"
            bundle = PublicBundle.load(root / "tasks" / task_id)
            pool = bundle.datasets["pool"]
            probe = train_probe(bundle.datasets["probe"],
                                bundle.suite["members"][0])
            unc = client.submit(task_id, {
                "selected_ids": baseline_uncertainty_selection(
                    pool.example_ids, probe.probabilities(pool.X), budget)},
                submitter="unc")
            rnd = client.submit(task_id, {
                "selected_ids": baseline_random_selection(
                    pool.example_ids, budget, seed)}, submitter="rand")
            unc_value = client.poll_score(unc, timeout=120)["records"][0]["value"]
            rnd_value = client.poll_score(rnd, timeout=120)["records"][0]["value"]
            wins += unc_value >= rnd_value
    assert wins >= 16, f"uncertainty won only {wins}/20 seeds"
