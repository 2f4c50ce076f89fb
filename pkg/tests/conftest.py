import random

import pytest

from flameward.gateway import Gateway, ModelSpec, mock_program
from flameward.threads import ThreadTree, ingest_thread

DOMAINS = ("Games", "Lifestyle", "Religions", "SocialJustice", "Sports", "Technologies")


def random_thread_doc(rng: random.Random, max_nodes: int = 30, n_authors: int = 4) -> dict:
    """A random well-formed normalized-thread document."""
    n = rng.randrange(1, max_nodes + 1)
    authors = [f"user{k}" for k in range(1, n_authors + 1)]
    comments = []
    for i in range(n):
        parent = None if i == 0 or rng.random() < 0.25 else f"c{rng.randrange(1, i + 1)}"
        comments.append(
            {
                "id": f"c{i + 1}",
                "author": rng.choice(authors),
                "body": " ".join(rng.choice(["ok", "sure", "no", "why", "stop"])
                                 for _ in range(rng.randrange(1, 6))),
                "parent_id": parent,
                "created_at": 1700000000 + i,
            }
        )
    return {
        "post_id": f"post{rng.randrange(1, 10_000)}",
        "title": "random thread",
        "post_body": "generated",
        "subreddit": "r/test",
        "domain_tag": rng.choice(DOMAINS),
        "comments": comments,
    }


def make_tree(comments: list[tuple], post_id: str = "p", domain: str = "Games") -> ThreadTree:
    """Shorthand: comments as (id, author, parent_id[, body])."""
    return ingest_thread(
        {
            "post_id": post_id,
            "title": "t",
            "post_body": "b",
            "subreddit": "r/x",
            "domain_tag": domain,
            "comments": [
                {
                    "id": c[0],
                    "author": c[1],
                    "body": c[3] if len(c) > 3 else f"body of {c[0]}",
                    "parent_id": c[2],
                    "created_at": i,
                }
                for i, c in enumerate(comments)
            ],
        }
    )


def random_text(rng: random.Random, max_words: int = 60) -> str:
    """Random ASCII text mixing words, punctuation, case, and abbreviations."""
    vocab = [
        "you", "we", "the", "cat", "dog", "STOP", "NOW", "ok", "don't", "it's",
        "idea", "cake", "little", "why", "really", "dr", "mr", "e.g", "a",
        "argue", "calm", "please", "no", "never", "maybe", "x9z", "42",
    ]
    parts = []
    for _ in range(rng.randrange(0, max_words)):
        word = rng.choice(vocab)
        if rng.random() < 0.2:
            word = word.capitalize()
        parts.append(word)
        roll = rng.random()
        if roll < 0.12:
            parts.append(rng.choice([".", "!", "?", "...", ".."]))
        elif roll < 0.2:
            parts.append(rng.choice([",", ";", ":", " - "]))
    text = " ".join(parts)
    if rng.random() < 0.5:
        text += rng.choice([".", "!", "?", ""])
    return text


@pytest.fixture
def mock_gateway():
    """Gateway factory over a rules table with no backoff delay."""

    def build(rules: list[tuple[str, str]], seed: int = 7, **kwargs) -> tuple[Gateway, ModelSpec]:
        gw = Gateway(
            {"mock": mock_program(rules, seed)}, backoff_base_s=0.0, **kwargs
        )
        return gw, ModelSpec(provider_id="mock", model_name="mock-model")

    return build
