import random

import pytest

from flameward.gateway import Gateway, ModelSpec
from flameward.mediation import SteeringMessage
from flameward.prompts import END_MARKER
from flameward.simulation import (
    DeltaReport,
    SimulationSkip,
    choose_injection_point,
    compare,
    pair_turns,
    simulate_continuation,
)
from flameward.textmetrics import builtin_lexicons
from flameward.threads import extract_pair_subthreads

from conftest import make_tree

LEX = builtin_lexicons()


def extraction_with_bodies(bodies: list[str]):
    """Alternating a/b chain with the given comment bodies."""
    comments = []
    for i, body in enumerate(bodies):
        author = "a" if i % 2 == 0 else "b"
        parent = None if i == 0 else f"c{i}"
        comments.append((f"c{i + 1}", author, parent, body))
    tree = make_tree(comments)
    return extract_pair_subthreads(tree, "a", "b")


def steering_for(ex) -> SteeringMessage:
    return SteeringMessage(
        conversation_id=ex.source_post_id,
        message_text="Let us all take a breath.",
        addressed_users=ex.target_users,
        conditioned_on_judgment=False,
    )


class TestInjectionPoint:
    def test_peak_toxicity_wins(self):
        ex = extraction_with_bodies(["calm start", "you idiot clown", "an idiot reply"])
        # toxic counts [0, 2, 1] -> peak at turn 1 -> insert right after it
        assert choose_injection_point(ex, LEX) == 2

    def test_all_calm_injects_after_final(self):
        ex = extraction_with_bodies(["fine", "sure", "whatever then"])
        assert choose_injection_point(ex, LEX) == 3

    def test_tie_goes_to_later_turn(self):
        ex = extraction_with_bodies(["idiot", "calm", "idiot again"])
        assert choose_injection_point(ex, LEX) == 3

    def test_single_turn_is_typed_skip(self):
        tree = make_tree([("c1", "a", None), ("c2", "x", "c1"), ("c3", "b", "c1")])
        ex = extract_pair_subthreads(tree, "a", "b")
        # two pair turns here; shrink to one by targeting a user with one comment
        solo = extraction_with_bodies(["only turn"])
        result = choose_injection_point(solo, LEX)
        assert isinstance(result, SimulationSkip)
        assert "turns" in result.reason


class TestContinuation:
    def test_alternating_turns_to_max(self, mock_gateway):
        gw, spec = mock_gateway([("#task:simulate", "okay, fair point")])
        ex = extraction_with_bodies(["you idiot", "no you", "stop it"])
        run = simulate_continuation(ex, steering_for(ex), spec, gw, seed=7, max_turns=4,
                                    lexicons=LEX)
        assert len(run.continuation_turns) == 4
        authors = [a for a, _ in run.continuation_turns]
        assert authors[0] != authors[1] and authors[1] != authors[2]
        assert set(authors) == {"a", "b"}

    def test_end_marker_stops(self, mock_gateway):
        gw, spec = mock_gateway(
            [
                ("#turn:2", END_MARKER),
                ("#task:simulate", "still talking"),
            ]
        )
        ex = extraction_with_bodies(["you idiot", "no you"])
        run = simulate_continuation(ex, steering_for(ex), spec, gw, seed=1, max_turns=6,
                                    lexicons=LEX)
        assert len(run.continuation_turns) == 2

    def test_same_seed_identical(self, mock_gateway):
        ex = extraction_with_bodies(["you idiot", "no you"])
        gw1, spec = mock_gateway([("never", "x")], seed=5)
        gw2, _ = mock_gateway([("never", "x")], seed=5)
        r1 = simulate_continuation(ex, steering_for(ex), spec, gw1, seed=3, max_turns=3, lexicons=LEX)
        r2 = simulate_continuation(ex, steering_for(ex), spec, gw2, seed=3, max_turns=3, lexicons=LEX)
        assert r1 == r2

    def test_different_seed_differs(self, mock_gateway):
        ex = extraction_with_bodies(["you idiot", "no you"])
        gw, spec = mock_gateway([("never", "x")], seed=5)
        r1 = simulate_continuation(ex, steering_for(ex), spec, gw, seed=3, max_turns=3, lexicons=LEX)
        r2 = simulate_continuation(ex, steering_for(ex), spec, gw, seed=4, max_turns=3, lexicons=LEX)
        assert r1.continuation_turns != r2.continuation_turns

    def test_wrong_conversation_rejected(self, mock_gateway):
        gw, spec = mock_gateway([("x", "y")])
        ex = extraction_with_bodies(["a", "b"])
        other = SteeringMessage(
            conversation_id="elsewhere", message_text="hi", addressed_users=("a", "b"),
            conditioned_on_judgment=False,
        )
        with pytest.raises(ValueError):
            simulate_continuation(ex, other, spec, gw, seed=1, lexicons=LEX)

    def test_responder_is_not_last_speaker(self, mock_gateway):
        gw, spec = mock_gateway([("#task:simulate", "reply text")])
        ex = extraction_with_bodies(["you idiot total clown", "mild reply"])
        run = simulate_continuation(ex, steering_for(ex), spec, gw, seed=1, max_turns=1,
                                    lexicons=LEX)
        # peak toxicity is turn 0 (author a), injection after it -> b replies first
        assert run.injection_index == 1
        assert run.continuation_turns[0][0] == "b"


class TestCompare:
    def test_identity_zero_deltas(self):
        ex = extraction_with_bodies(["you idiot", "no you"])
        turns = [t for _, t in pair_turns(ex)]
        run_like = simulate_run_from(ex, [("a", turns[0]), ("b", turns[1])])
        report = compare(turns, run_like, LEX)
        assert isinstance(report, DeltaReport)
        assert all(d == pytest.approx(0.0) for d in report.deltas.values())

    def test_toxicity_drop(self):
        ex = extraction_with_bodies(["you idiot", "fine"])
        run_like = simulate_run_from(ex, [("b", "thanks, that helps"), ("a", "agreed")])
        report = compare(["you idiot", "trash take"], run_like, LEX)
        assert report.deltas["toxicity_rate"] == pytest.approx(-100.0)

    def test_empty_tail_skips(self):
        ex = extraction_with_bodies(["you idiot", "fine"])
        run_like = simulate_run_from(ex, [("b", "ok")])
        assert isinstance(compare([], run_like, LEX), SimulationSkip)


def simulate_run_from(ex, turns):
    from flameward.simulation import SimulationRun

    return SimulationRun(
        conversation_id=ex.source_post_id,
        injection_index=1,
        mediation_task="steering",
        continuation_turns=tuple(turns),
        simulator_model="test",
        seed=0,
    )


class ScrubbingSimulator:
    """Mock simulator echoing the last turn with toxic-lexicon tokens removed."""

    def __init__(self, toxic: frozenset[str]):
        self.toxic = toxic

    def generate(self, spec, messages):
        text = ""
        for m in messages:
            for line in m["content"].splitlines():
                if line.startswith("LAST_TURN: "):
                    text = line.removeprefix("LAST_TURN: ")
        kept = [t for t in text.split() if t.lower().strip(".,!?") not in self.toxic]
        return " ".join(kept) if kept else "okay"


class TestScrubbingProperty:
    def test_toxicity_delta_never_positive(self):
        rng = random.Random(2024)
        toxic_words = sorted(LEX.toxic.entries)[:20]
        gw = Gateway({"scrub": ScrubbingSimulator(LEX.toxic.entries)}, backoff_base_s=0.0)
        spec = ModelSpec(provider_id="scrub", model_name="scrubber")
        for _ in range(30):
            n_turns = rng.randrange(2, 6)
            bodies = []
            for _ in range(n_turns):
                words = [rng.choice(["so", "what", "then", "fine"]) for _ in range(3)]
                for _ in range(rng.randrange(0, 3)):
                    words.insert(rng.randrange(len(words)), rng.choice(toxic_words))
                bodies.append(" ".join(words))
            ex = extraction_with_bodies(bodies)
            injection = choose_injection_point(ex, LEX)
            assert not isinstance(injection, SimulationSkip)
            run = simulate_continuation(
                ex, steering_for(ex), spec, gw, seed=1, max_turns=3,
                injection_index=injection,
            )
            tail = [t for _, t in pair_turns(ex)[injection:]] or [pair_turns(ex)[-1][1]]
            report = compare(tail, run, LEX)
            assert isinstance(report, DeltaReport)
            assert report.deltas["toxicity_rate"] <= 1e-9
