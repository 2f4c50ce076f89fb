import random

import pytest

import reference_extraction
from flameward.errors import ParseError, StructuralError
from flameward.threads import (
    canonical_json,
    compute_corpus_stats,
    export_thread,
    export_thread_json,
    extract_pair_subthreads,
    ingest_thread,
    round2,
)

from conftest import make_tree, random_thread_doc


def minimal_doc():
    return {
        "post_id": "p1",
        "title": "t",
        "post_body": "b",
        "subreddit": "r/x",
        "domain_tag": "Games",
        "comments": [
            {"id": "c1", "author": "a", "body": "hi", "parent_id": None, "created_at": 1},
            {"id": "c2", "author": "b", "body": "yo", "parent_id": "c1", "created_at": 2},
        ],
    }


class TestIngest:
    def test_minimal_tree(self):
        tree = ingest_thread(minimal_doc())
        assert tree.comment_count == 2
        assert tree.root_ids == ("c1",)
        assert tree.comments["c1"].children == ("c2",)

    def test_dangling_parent(self):
        doc = minimal_doc()
        doc["comments"][1]["parent_id"] = "missing"
        with pytest.raises(StructuralError):
            ingest_thread(doc)

    def test_duplicate_id(self):
        doc = minimal_doc()
        doc["comments"][1]["id"] = "c1"
        with pytest.raises(StructuralError):
            ingest_thread(doc)

    def test_parent_cycle(self):
        doc = minimal_doc()
        doc["comments"][0]["parent_id"] = "c2"
        with pytest.raises(StructuralError):
            ingest_thread(doc)

    def test_missing_field_names_offender(self):
        doc = minimal_doc()
        del doc["comments"][0]["author"]
        with pytest.raises(ParseError) as err:
            ingest_thread(doc)
        assert err.value.field == "author"

    def test_bad_domain_tag(self):
        doc = minimal_doc()
        doc["domain_tag"] = "Cooking"
        with pytest.raises(ParseError):
            ingest_thread(doc)

    def test_wrong_type(self):
        doc = minimal_doc()
        doc["comments"][0]["created_at"] = "yesterday"
        with pytest.raises(ParseError) as err:
            ingest_thread(doc)
        assert err.value.field == "created_at"

    def test_removed_comment_flagged_not_dropped(self):
        doc = minimal_doc()
        doc["comments"][0]["body"] = "[deleted]"
        tree = ingest_thread(doc)
        assert tree.comments["c1"].is_removed
        assert tree.comment_count == 2

    def test_round_trip_random_trees(self):
        rng = random.Random(42)
        for _ in range(200):
            doc = random_thread_doc(rng)
            tree = ingest_thread(doc)
            exported = export_thread(tree)
            assert canonical_json(exported) == canonical_json(doc)
            again = ingest_thread(exported)
            assert export_thread_json(again) == export_thread_json(tree)

    def test_children_preserve_document_order(self):
        doc = minimal_doc()
        doc["comments"].append(
            {"id": "c3", "author": "c", "body": "x", "parent_id": "c1", "created_at": 0}
        )
        tree = ingest_thread(doc)
        assert tree.comments["c1"].children == ("c2", "c3")


class TestExtraction:
    def test_chain_keeps_bystander_reply(self):
        # r -> c1(a) -> c2(b) -> c3(x): the subtree at r contains both users,
        # so all of r's subtree is kept, x's reply included.
        tree = make_tree([("r", "z", None), ("c1", "a", "r"), ("c2", "b", "c1"), ("c3", "x", "c2")])
        result = extract_pair_subthreads(tree, "a", "b")
        assert result.kept_comment_ids == frozenset({"r", "c1", "c2", "c3"})

    def test_sibling_subtree_excluded(self):
        tree = make_tree(
            [
                ("s1", "a", None), ("s1c", "b", "s1"),
                ("s2", "a", None), ("s2c", "x", "s2"),
            ]
        )
        result = extract_pair_subthreads(tree, "a", "b")
        assert result.kept_comment_ids == frozenset({"s1", "s1c"})

    def test_same_user_rejected(self):
        tree = make_tree([("c1", "a", None)])
        with pytest.raises(ValueError):
            extract_pair_subthreads(tree, "a", "a")

    def test_absent_users_empty_result(self):
        tree = make_tree([("c1", "a", None), ("c2", "b", "c1")])
        result = extract_pair_subthreads(tree, "nope", "also-nope")
        assert result.is_empty
        assert result.kept_forest.comment_count == 0

    def test_case_sensitive_handles(self):
        tree = make_tree([("c1", "Alice", None), ("c2", "bob", "c1")])
        assert extract_pair_subthreads(tree, "alice", "bob").is_empty
        assert not extract_pair_subthreads(tree, "Alice", "bob").is_empty

    def test_nested_qualifying_subsumed_by_outermost(self):
        tree = make_tree(
            [("c1", "a", None), ("c2", "b", "c1"), ("c3", "a", "c2"), ("c4", "b", "c3")]
        )
        result = extract_pair_subthreads(tree, "a", "b")
        assert result.kept_forest.root_ids == ("c1",)
        assert result.kept_comment_ids == frozenset({"c1", "c2", "c3", "c4"})

    def test_kept_set_closed_under_children(self):
        rng = random.Random(7)
        for _ in range(50):
            doc = random_thread_doc(rng, max_nodes=25)
            tree = ingest_thread(doc)
            result = extract_pair_subthreads(tree, "user1", "user2")
            for cid in result.kept_comment_ids:
                for child in tree.comments[cid].children:
                    assert child in result.kept_comment_ids

    def test_matches_exhaustive_oracle(self):
        rng = random.Random(11)
        for _ in range(100):
            doc = random_thread_doc(rng, max_nodes=30)
            tree = ingest_thread(doc)
            got = extract_pair_subthreads(tree, "user1", "user2").kept_comment_ids
            want = reference_extraction.kept_ids(doc, "user1", "user2")
            assert got == frozenset(want)

    def test_forest_roots_relabeled_as_top_level(self):
        # Qualification starts at the outermost ancestor whose subtree holds
        # both users; here that is r itself even though z wrote it.
        tree = make_tree([("r", "z", None), ("c1", "a", "r"), ("c2", "b", "c1")])
        result = extract_pair_subthreads(tree, "a", "b")
        assert result.kept_forest.root_ids == ("r",)
        assert result.kept_forest.comments["r"].parent_id is None
        assert result.kept_forest.comments["c2"].parent_id == "c1"


def synthetic_domain(domain: str, thread_count: int, total_comments: int) -> list:
    """thread_count trees whose comment counts sum to total_comments."""
    base = total_comments // thread_count
    extra = total_comments - base * thread_count
    trees = []
    for t in range(thread_count):
        n = base + (1 if t < extra else 0)
        comments = [(f"c{i}", f"u{i % 3}", None if i == 0 else "c0") for i in range(n)]
        trees.append(make_tree(comments, post_id=f"{domain}-{t}", domain=domain))
    return trees


class TestCorpusStats:
    def test_reference_games_and_lifestyle_averages(self):
        corpus = synthetic_domain("Games", 66, 2696) + synthetic_domain("Lifestyle", 160, 2033)
        stats = compute_corpus_stats(corpus)
        assert round2(stats.row("Games").avg_comments_per_thread) == 40.85
        assert round2(stats.row("Lifestyle").avg_comments_per_thread) == 12.71

    def test_single_thread(self):
        stats = compute_corpus_stats([make_tree([("c1", "solo", None)])])
        row = stats.rows[0]
        assert row.total_users == 1
        assert round2(row.avg_users_per_thread) == 1.00
        assert round2(row.avg_comments_per_thread) == 1.00

    def test_empty_corpus(self):
        assert compute_corpus_stats([]).rows == ()

    def test_product_identity_exact(self):
        rng = random.Random(3)
        corpus = [ingest_thread(random_thread_doc(rng)) for _ in range(40)]
        stats = compute_corpus_stats(corpus)
        for row in stats.rows:
            assert row.avg_comments_per_thread * row.thread_count == pytest.approx(
                row.total_comments, abs=1e-9
            )

    def test_total_users_deduplicates_across_threads(self):
        t1 = make_tree([("c1", "shared", None), ("c2", "only1", "c1")], post_id="a")
        t2 = make_tree([("c1", "shared", None), ("c2", "only2", "c1")], post_id="b")
        stats = compute_corpus_stats([t1, t2])
        row = stats.rows[0]
        assert row.total_users == 3
        assert row.total_users <= 2 + 2
        assert row.avg_users_per_thread == 2.0
