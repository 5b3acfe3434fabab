"""End-to-end simulation: targets, determinism, replay, validation."""

import json

import pytest

from cxrstudy.orchestrator.engine import StudyEngine
from cxrstudy.simulate import ArmProfile, SimulationConfig, simulate_study

ARTIFACTS = ("events.jsonl", "export.json", "stats.json", "stats.txt",
             "state_digest.txt")


def small_config(**overrides):
    base = dict(seed=3, n_cases=8, block_size=4, n_readers=4, n_raters=2,
                study_id="sim-test",
                ai=ArmProfile(120.6, 45.6, 5),
                standard=ArmProfile(147.6, 51.1, 3))
    base.update(overrides)
    return SimulationConfig(**base)


def test_small_run_hits_configured_targets_exactly():
    result = simulate_study(small_config())
    stats = result["stats"]
    assert result["allocation_counts"] == {"ai-assisted": 4, "standard-care": 4}
    assert sum(result["reader_counts"].values()) == 4
    assert stats["n_cases_paired"] == 8

    rt = stats["reading_time_s"]
    # moment matching makes the sample mean and SD land on the profile
    assert rt["ai-assisted"]["display"] == "120.60±45.60"
    assert rt["standard-care"]["display"] == "147.60±51.10"
    assert rt["reduction_percent"] == pytest.approx(18.3)

    positivity = stats["pneumonia_positivity"]
    assert positivity["ai-assisted"]["positive"] == 5
    assert positivity["standard-care"]["positive"] == 3

    assert set(result["batch_ids"]) == {"likert_quality", "radpeer_agreement",
                                        "pairwise_preference", "source_guess"}
    assert set(result["header"]) == {"config", "seed", "versions"}
    assert result["header"]["seed"] == 3


def test_full_simulation_reproduces_trial_profile():
    result = simulate_study(SimulationConfig())
    stats = result["stats"]
    rt = stats["reading_time_s"]
    assert stats["allocation_counts"] == {"ai-assisted": 148, "standard-care": 148}
    assert stats["n_cases_paired"] == 296
    assert rt["ai-assisted"]["display"] == "120.60±45.60"
    assert rt["standard-care"]["display"] == "147.60±51.10"
    assert rt["reduction_percent"] == pytest.approx(18.3)
    assert rt["paired_t"]["p"] < 0.001
    assert rt["paired_t"]["df"] == 295

    positivity = stats["pneumonia_positivity"]
    assert positivity["ai-assisted"] == {"n": 296, "positive": 155,
                                         "rate_percent": 52.4}
    assert positivity["standard-care"] == {"n": 296, "positive": 107,
                                           "rate_percent": 36.1}


def test_artifacts_byte_identical_across_runs(tmp_path):
    first = tmp_path / "run-a"
    second = tmp_path / "run-b"
    result_a = simulate_study(small_config(), outdir=first)
    result_b = simulate_study(small_config(), outdir=second)
    assert result_a["state_digest"] == result_b["state_digest"]
    for name in ARTIFACTS:
        a = (first / name).read_bytes()
        b = (second / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"


def test_event_log_replays_to_published_digest(tmp_path):
    result = simulate_study(small_config(), outdir=tmp_path)
    digest_file = (tmp_path / "state_digest.txt").read_text(encoding="utf-8").strip()
    assert digest_file == result["state_digest"]

    rebuilt = StudyEngine.from_event_log(tmp_path / "events.jsonl")
    assert rebuilt.state_digest() == result["state_digest"]

    with open(tmp_path / "events.jsonl", encoding="utf-8") as fh:
        n_lines = sum(1 for _ in fh)
    assert n_lines == result["n_events"] + 1  # header line

    export = json.loads((tmp_path / "export.json").read_text(encoding="utf-8"))
    assert export["header"] == result["header"]
    assert export["export"]["n_cases"] == 8


def test_rerun_over_stale_artifacts_is_clean(tmp_path):
    simulate_study(small_config(), outdir=tmp_path)
    first = (tmp_path / "events.jsonl").read_bytes()
    # a second run into the same directory must replace, not append
    simulate_study(small_config(), outdir=tmp_path)
    assert (tmp_path / "events.jsonl").read_bytes() == first


def test_identical_profiles_show_no_effect():
    flat = ArmProfile(140.0, 40.0, 4)
    result = simulate_study(small_config(ai=flat, standard=flat))
    rt = result["stats"]["reading_time_s"]
    assert rt["reduction_percent"] == pytest.approx(0.0, abs=0.05)
    assert rt["paired_t"]["p"] > 0.5


def test_config_validation():
    bad_configs = [
        small_config(n_cases=1),
        small_config(block_size=3),
        small_config(n_readers=6),   # not a multiple of block_size
        small_config(n_raters=0),
        small_config(ai=ArmProfile(-5.0, 4.0, 1)),
        small_config(ai=ArmProfile(120.0, -1.0, 1)),
        small_config(standard=ArmProfile(140.0, 40.0, 9)),  # count > n_cases
    ]
    for config in bad_configs:
        with pytest.raises(ValueError):
            simulate_study(config)
