from flameward.prompts import serialize_exchange, serialize_thread

from conftest import make_tree


def test_serialize_thread_depth_indents_and_prefixes_authors():
    tree = make_tree([("c1", "alice", None), ("c2", "bob", "c1"), ("c3", "alice", "c2")])
    text = serialize_thread(tree)
    lines = text.splitlines()
    assert lines[0].startswith("POST p")
    assert "[c1] alice:" in text
    assert "\n  [c2] bob:" in text
    assert "\n    [c3] alice:" in text


def test_serialize_thread_truncates_oldest_first():
    comments = [("c1", "u", None, "word " * 30)]
    comments += [(f"c{i}", "u", f"c{i-1}", f"turn {i} " + "word " * 10) for i in range(2, 12)]
    tree = make_tree(comments)
    text = serialize_thread(tree, max_tokens=60)
    assert "[earlier turns truncated]" in text
    assert "turn 11" in text  # newest survives
    assert "POST" not in text  # oldest dropped


def test_serialize_thread_small_budget_keeps_last_line():
    tree = make_tree([("c1", "alice", None, "a rather long single comment body here")])
    text = serialize_thread(tree, max_tokens=1)
    assert "[c1] alice:" in text.splitlines()[-1]


def test_serialize_exchange_author_tags():
    text = serialize_exchange([("alice", "hi"), ("bob", "bye")])
    assert text == "alice: hi\nbob: bye"
