import json
import os
from pathlib import Path

import pytest

import subtext_arena as sa

ROOT = Path(os.environ.get("ARENA_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def test_va_scoring_just_right_clue():
    # Storyteller seat 0 plays card 10; seat 1 finds it, seats 2 and 3 do not.
    played = {1: 11, 2: 12, 3: 13}
    votes = {1: 10, 2: 11, 3: 11}
    points = sa.score_round(0, 10, played, votes)
    assert points[0] == 3
    assert points[1] == 3 + 2  # correct guess plus two votes on card 11
    assert sa.classify_clue(votes, 10) == "just_right"
    assert sa.classify_clue({1: 10, 2: 10, 3: 10}, 10) == "obvious"


def test_attuned_rings():
    assert sa.score_attuned(50, 50, 80) == (4, 0)
    assert sa.score_attuned(50, 63, 62) == (0, 2)
    assert sa.score_attuned(50, 90, 80) == (0, 1)
    assert sa.ring_points(7.5) == 3
    assert sa.aggregate_guess(50, 51) == 51


def test_aesopian_outcomes():
    assert sa.classify_outcome("banned", "celebrated") == "contested"
    assert sa.classify_outcome("celebrated", "banned") == "success"
    assert sa.classify_outcome("neither", "neither") == "conform"


def test_statistics_worked_examples():
    r = sa.mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert r.statistic == 0
    assert r.p_value == pytest.approx(0.0809, abs=1e-4)
    assert sa.chi2_2x2([[5, 5], [5, 5]]).p_value == 1.0
    assert sa.chi2_2x2([[3, 0], [0, 0]]).degenerate
    assert sa.paired_t([0, 1, 1, 0, 1], [1, 1, 1, 0, 1]).p_value == pytest.approx(0.3739, abs=1e-4)


def test_hidden_clues_are_stripped():
    text, clues = sa.strip_hidden_clues("The <hc>salt</hc> road.")
    assert text == "The salt road."
    assert clues == ["salt"]


def test_schedule_is_balanced():
    schedule = sa.schedule_games(7, 100, 4)
    counts = [sum(seat in game for game in schedule) for seat in range(7)]
    assert max(counts) - min(counts) <= 2


def test_tournament_and_report_agree(tmp_path):
    live = sa.run_tournament(ROOT / "configs" / "va_tournament.json", tmp_path / "va", games=3)
    assert live["completed"] + live["aborted"] == 3
    again = sa.recompute_report(tmp_path / "va")
    assert again == live
    names = [t["name"] for t in live["tables"]]
    assert "va_scores" in names
    first = sorted((tmp_path / "va").glob("*.jsonl"))[0]
    header = json.loads(sa.read_transcript(first).splitlines()[0])
    assert header["environment"] == "va"


def test_bad_config_raises(tmp_path):
    with pytest.raises(sa.ConfigError):
        sa.run_tournament(tmp_path / "missing.json", tmp_path / "out")
