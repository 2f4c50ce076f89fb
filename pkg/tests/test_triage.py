import pytest

from flameward.errors import IdentificationError, ScoringError
from flameward.gateway import ModelSpec
from flameward.triage import (
    FlameScore,
    TargetPair,
    identify_target_pair,
    retain_by_threshold,
    score_post,
    scores_csv,
)

from conftest import make_tree

SPEC = ModelSpec(provider_id="mock", model_name="scorer")


def flame_tree():
    return make_tree([("c1", "alice", None), ("c2", "bob", "c1"), ("c3", "alice", "c2")])


class TestScorePost:
    def test_tagged_score_parsed(self, mock_gateway):
        gw, spec = mock_gateway([("#task:flame_score", "score: 8")])
        assert score_post(flame_tree(), spec, gw).score == 8

    def test_no_digit_fails_after_reprompt(self, mock_gateway):
        gw, spec = mock_gateway([("#task:flame_score", "extremely hostile")])
        with pytest.raises(ScoringError):
            score_post(flame_tree(), spec, gw)

    def test_out_of_range_fails(self, mock_gateway):
        gw, spec = mock_gateway([("#task:flame_score", "11")])
        with pytest.raises(ScoringError):
            score_post(flame_tree(), spec, gw)

    def test_decimal_floored(self, mock_gateway):
        gw, spec = mock_gateway([("#task:flame_score", "SCORE: 7.8")])
        assert score_post(flame_tree(), spec, gw).score == 7

    def test_reprompt_repairs(self, mock_gateway):
        gw, spec = mock_gateway(
            [
                ("exactly one line", "SCORE: 6"),  # reprompt marker appears only on retry
                ("#task:flame_score", "no number here"),
            ]
        )
        assert score_post(flame_tree(), spec, gw).score == 6

    def test_empty_tree_rejected(self, mock_gateway):
        gw, spec = mock_gateway([("x", "y")])
        with pytest.raises(ValueError):
            score_post(make_tree([]), spec, gw)

    def test_score_bounds_enforced_on_type(self):
        with pytest.raises(ValueError):
            FlameScore(post_id="p", score=11, rationale_text=None, model_used=SPEC)


class TestRetain:
    def test_window_keeps_seven_to_ten(self):
        scores = [
            FlameScore("p1", 7, None, SPEC),
            FlameScore("p2", 6, None, SPEC),
            FlameScore("p3", 10, None, SPEC),
        ]
        assert retain_by_threshold(scores) == {"p1", "p3"}

    def test_empty_input(self):
        assert retain_by_threshold([]) == set()

    def test_all_zero(self):
        scores = [FlameScore(f"p{i}", 0, None, SPEC) for i in range(5)]
        assert retain_by_threshold(scores) == set()

    def test_exhaustive_window(self):
        scores = [FlameScore(f"p{v}", v, None, SPEC) for v in range(11)]
        kept = retain_by_threshold(scores)
        assert kept == {f"p{v}" for v in range(7, 11)}

    def test_monotone_in_lower_threshold(self):
        scores = [FlameScore(f"p{v}", v, None, SPEC) for v in range(11)]
        previous = retain_by_threshold(scores, 0, 10)
        for lo in range(1, 11):
            current = retain_by_threshold(scores, lo, 10)
            assert current <= previous
            previous = current


class TestTargets:
    def test_valid_pair(self, mock_gateway):
        gw, spec = mock_gateway([("#task:target_users", "USER_A: alice\nUSER_B: bob")])
        pair = identify_target_pair(flame_tree(), spec, gw)
        assert (pair.user_a, pair.user_b) == ("alice", "bob")
        assert set(pair.evidence_comment_ids) == {"c1", "c2", "c3"}

    def test_reprompt_with_roster_repairs(self, mock_gateway):
        gw, spec = mock_gateway(
            [
                ("Choose handles from this roster", "USER_A: alice\nUSER_B: bob"),
                ("#task:target_users", "USER_A: alice\nUSER_B: stranger"),
            ]
        )
        pair = identify_target_pair(flame_tree(), spec, gw)
        assert pair.user_b == "bob"

    def test_unknown_handle_twice_fails(self, mock_gateway):
        gw, spec = mock_gateway([("#task:target_users", "USER_A: ghost\nUSER_B: phantom")])
        with pytest.raises(IdentificationError):
            identify_target_pair(flame_tree(), spec, gw)

    def test_single_author_rejected(self, mock_gateway):
        gw, spec = mock_gateway([("x", "y")])
        tree = make_tree([("c1", "solo", None), ("c2", "solo", "c1")])
        with pytest.raises(ValueError):
            identify_target_pair(tree, spec, gw)

    def test_pair_type_rejects_same_user(self):
        with pytest.raises(ValueError):
            TargetPair(post_id="p", user_a="x", user_b="x")


def test_scores_csv_columns():
    text = scores_csv([FlameScore("p1", 8, None, SPEC)], "2026-01-01T00:00:00Z")
    lines = text.strip().splitlines()
    assert lines[0] == "post_id,score,model,timestamp"
    assert lines[1] == "p1,8,scorer,2026-01-01T00:00:00Z"
