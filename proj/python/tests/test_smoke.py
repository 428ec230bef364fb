import json
from pathlib import Path

import pytest

import prelude

DATA = Path(__file__).resolve().parents[2] / "data"
CONFIG = DATA / "experiment.json"


def test_tokenize_round_trips_the_text():
    text = "Hello, world!\n  ok"
    assert "".join(surface for _, surface in prelude.tokenize(text)) == text


def test_edit_distance():
    assert prelude.edit_distance("a b c", "a b c") == (0, 0.0)
    assert prelude.edit_distance("a b", "a c") == (1, pytest.approx(1 / 3))
    assert prelude.levenshtein([1, 2, 3], [1, 3]) == 1


def test_embedding_dimension():
    assert len(prelude.embed("river rises", 64)) == 64
    assert not any(prelude.embed("", 16))


def test_generation_prompt_contains_the_inputs():
    prompt = prelude.generation_prompt("summarization", "Some article.", "be brief")
    assert "Some article." in prompt and "be brief" in prompt


def test_schedule_is_seeded():
    a = prelude.schedule(CONFIG, rounds=12, seed=1)
    assert len(a) == 12 == len(set(a))
    assert prelude.schedule(CONFIG, rounds=12, seed=1) == a


def test_run_experiment_and_metrics(tmp_path):
    summary, logs = prelude.run_experiment(CONFIG, policy={"kind": "oracle"}, rounds=20, log_path=tmp_path / "l.jsonl")
    assert summary["total_cost"] == 0
    assert len(logs) == 20
    assert len((tmp_path / "l.jsonl").read_text().splitlines()) == 20

    summary, logs = prelude.run_experiment(CONFIG, policy={"kind": "no-learning"}, rounds=20)
    assert summary["total_cost"] == sum(log["cost"] for log in logs) > 0
    cum = prelude.cumulative_cost(logs)
    assert cum[-1] == (20, float(summary["total_cost"]))
    assert [r for r, _ in prelude.binned_normalized(logs, 8)] == [8, 16, 20]


def test_config_errors_name_the_field():
    with pytest.raises(prelude.ConfigError, match="policy.k"):
        prelude.run_experiment(CONFIG, policy={"kind": "cipher", "k": 0}, rounds=4)
    assert issubclass(prelude.ConfigError, prelude.PreludeError)
