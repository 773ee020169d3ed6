"""Scoring, statistics and tournament runs for the subtext games.

Seats are 0-based. Report tables come back as plain dicts.
"""

from ._core import (
    ConfigError,
    TestResult,
    TranscriptError,
    aggregate_guess,
    chi2_2x2,
    classify_clue,
    classify_outcome,
    mann_whitney_u,
    paired_t,
    read_transcript,
    recompute_report,
    ring_points,
    run_tournament,
    schedule_games,
    score_attuned,
    score_round,
    strip_hidden_clues,
)

__all__ = [
    "ConfigError",
    "TestResult",
    "TranscriptError",
    "aggregate_guess",
    "chi2_2x2",
    "classify_clue",
    "classify_outcome",
    "mann_whitney_u",
    "paired_t",
    "read_transcript",
    "recompute_report",
    "ring_points",
    "run_tournament",
    "schedule_games",
    "score_attuned",
    "score_round",
    "strip_hidden_clues",
]
