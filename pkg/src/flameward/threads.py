"""Discussion-thread data model, subtree extraction, and corpus statistics.

A thread is a post plus a forest of comments. All types are frozen after
construction and every operation here is a pure function, so values can be
shared freely across worker threads.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable

from .errors import ParseError, StructuralError

logger = logging.getLogger(__name__)

DOMAIN_TAGS = (
    "Games",
    "Lifestyle",
    "Religions",
    "SocialJustice",
    "Sports",
    "Technologies",
    "Other",
)

REMOVED_BODIES = frozenset({"[deleted]", "[removed]"})


@dataclass(frozen=True)
class Comment:
    """One comment: author, body, parent link, and ordered child ids."""

    id: str
    author: str
    body: str
    parent_id: str | None
    created_at: int
    children: tuple[str, ...] = ()

    @property
    def is_removed(self) -> bool:
        """Deleted/removed comments stay in the tree so children keep parents."""
        return self.body in REMOVED_BODIES


@dataclass(frozen=True)
class ThreadTree:
    """A post with its comment forest, indexed by comment id."""

    post_id: str
    title: str
    post_body: str
    subreddit_label: str
    domain_tag: str
    comments: dict[str, Comment]
    root_ids: tuple[str, ...]

    @property
    def comment_count(self) -> int:
        return len(self.comments)

    @property
    def authors(self) -> set[str]:
        return {c.author for c in self.comments.values()}

    def subtree_ids(self, root: str) -> list[str]:
        """All comment ids in the subtree rooted at ``root``, preorder."""
        out: list[str] = []
        stack = [root]
        while stack:
            cid = stack.pop()
            out.append(cid)
            stack.extend(reversed(self.comments[cid].children))
        return out

    def linearize(self) -> list[Comment]:
        """Comments in document order (depth-first over the root forest)."""
        out: list[Comment] = []
        for rid in self.root_ids:
            for cid in self.subtree_ids(rid):
                out.append(self.comments[cid])
        return out

    def depth_of(self, comment_id: str) -> int:
        depth = 0
        cur = self.comments[comment_id].parent_id
        while cur is not None:
            depth += 1
            cur = self.comments[cur].parent_id
        return depth


@dataclass(frozen=True)
class ExtractionResult:
    """Union of maximal subtrees in which both target users appear."""

    source_post_id: str
    target_users: tuple[str, str]
    kept_comment_ids: frozenset[str]
    kept_forest: ThreadTree

    @property
    def is_empty(self) -> bool:
        return not self.kept_comment_ids


@dataclass(frozen=True)
class DomainRow:
    """Per-domain aggregate row. Values stay exact; round only for display."""

    domain_tag: str
    thread_count: int
    total_comments: int
    total_users: int
    avg_users_per_thread: float
    avg_comments_per_thread: float


@dataclass(frozen=True)
class CorpusStats:
    rows: tuple[DomainRow, ...]

    def row(self, domain_tag: str) -> DomainRow:
        for r in self.rows:
            if r.domain_tag == domain_tag:
                return r
        raise KeyError(domain_tag)


def round2(value: float) -> float:
    """Presentation rounding: two decimals, halves away from zero."""
    return float(Decimal(str(value)).quantize(Decimal("0.01"), ROUND_HALF_UP))


def _require(doc: dict, key: str, kind: type, where: str) -> object:
    if key not in doc:
        raise ParseError(f"{where}: missing field '{key}'", field=key)
    value = doc[key]
    if not isinstance(value, kind):
        raise ParseError(
            f"{where}: field '{key}' must be {kind.__name__}, got {type(value).__name__}",
            field=key,
        )
    return value


def ingest_thread(raw: dict) -> ThreadTree:
    """Build a validated ThreadTree from a normalized-thread document.

    Child order under each parent preserves document order. Raises
    ParseError on malformed fields and StructuralError on dangling
    parent_ids, duplicate ids, or parent cycles.
    """
    post_id = _require(raw, "post_id", str, "thread")
    title = _require(raw, "title", str, "thread")
    post_body = _require(raw, "post_body", str, "thread")
    subreddit = _require(raw, "subreddit", str, "thread")
    domain_tag = _require(raw, "domain_tag", str, "thread")
    if domain_tag not in DOMAIN_TAGS:
        raise ParseError(
            f"thread {post_id}: unknown domain_tag '{domain_tag}'", field="domain_tag"
        )
    raw_comments = _require(raw, "comments", list, f"thread {post_id}")

    parsed: dict[str, dict] = {}
    order: list[str] = []
    for i, c in enumerate(raw_comments):
        where = f"comment[{i}]"
        if not isinstance(c, dict):
            raise ParseError(f"{where}: must be an object", field="comments")
        cid = _require(c, "id", str, where)
        author = _require(c, "author", str, where)
        body = _require(c, "body", str, where)
        created_at = _require(c, "created_at", int, where)
        parent_id = c.get("parent_id")
        if parent_id is not None and not isinstance(parent_id, str):
            raise ParseError(f"{where}: parent_id must be string or null", field="parent_id")
        if cid in parsed:
            raise StructuralError(f"duplicate comment id '{cid}'")
        parsed[cid] = {
            "author": author,
            "body": body,
            "parent_id": parent_id,
            "created_at": created_at,
        }
        order.append(cid)

    children: dict[str, list[str]] = {cid: [] for cid in order}
    root_ids: list[str] = []
    for cid in order:
        pid = parsed[cid]["parent_id"]
        if pid is None:
            root_ids.append(cid)
        elif pid not in parsed:
            raise StructuralError(f"comment '{cid}' has dangling parent_id '{pid}'")
        else:
            children[pid].append(cid)

    # A parent cycle leaves some comment unreachable from any root.
    reachable = 0
    stack = list(root_ids)
    while stack:
        reachable += 1
        stack.extend(children[stack.pop()])
    if reachable != len(order):
        raise StructuralError("comment graph contains a parent cycle")

    comments = {
        cid: Comment(
            id=cid,
            author=parsed[cid]["author"],
            body=parsed[cid]["body"],
            parent_id=parsed[cid]["parent_id"],
            created_at=parsed[cid]["created_at"],
            children=tuple(children[cid]),
        )
        for cid in order
    }
    return ThreadTree(
        post_id=post_id,
        title=title,
        post_body=post_body,
        subreddit_label=subreddit,
        domain_tag=domain_tag,
        comments=comments,
        root_ids=tuple(root_ids),
    )


def export_thread(tree: ThreadTree) -> dict:
    """Inverse of ingest_thread: emit the normalized-thread document."""
    return {
        "post_id": tree.post_id,
        "title": tree.title,
        "post_body": tree.post_body,
        "subreddit": tree.subreddit_label,
        "domain_tag": tree.domain_tag,
        "comments": [
            {
                "id": c.id,
                "author": c.author,
                "body": c.body,
                "parent_id": c.parent_id,
                "created_at": c.created_at,
            }
            for c in tree.comments.values()
        ],
    }


def canonical_json(doc: object) -> str:
    """Byte-stable encoding: sorted keys, fixed separators, real unicode."""
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def export_thread_json(tree: ThreadTree) -> str:
    return canonical_json(export_thread(tree))


def extract_pair_subthreads(tree: ThreadTree, user_a: str, user_b: str) -> ExtractionResult:
    """Keep every maximal subtree in which both users author a comment.

    A subtree qualifies when user_a and user_b each wrote at least one
    comment inside it; nested qualifying subtrees are subsumed by their
    outermost qualifying ancestor, and the whole subtree is kept so the
    surrounding dialogue survives. Handles compare case-sensitively.
    """
    if user_a == user_b:
        raise ValueError("target users must differ")

    # Bottom-up presence flags per comment subtree (iterative: threads nest deep).
    has_a: dict[str, bool] = {}
    has_b: dict[str, bool] = {}
    for rid in tree.root_ids:
        stack: list[tuple[str, bool]] = [(rid, False)]
        while stack:
            cid, expanded = stack.pop()
            c = tree.comments[cid]
            if not expanded:
                stack.append((cid, True))
                stack.extend((child, False) for child in c.children)
            else:
                a = c.author == user_a
                b = c.author == user_b
                for child in c.children:
                    a = a or has_a[child]
                    b = b or has_b[child]
                has_a[cid] = a
                has_b[cid] = b

    # Top-down: the outermost qualifying ancestor wins; its descendants are
    # subsumed and never re-qualify on their own.
    kept: set[str] = set()
    maximal_roots: list[str] = []
    frontier = list(reversed(tree.root_ids))
    while frontier:
        cid = frontier.pop()
        if has_a[cid] and has_b[cid]:
            maximal_roots.append(cid)
            kept.update(tree.subtree_ids(cid))
        else:
            frontier.extend(reversed(tree.comments[cid].children))

    forest_comments: dict[str, Comment] = {}
    for root in maximal_roots:
        for cid in tree.subtree_ids(root):
            c = tree.comments[cid]
            # The subtree root becomes a top-level node in the kept forest.
            parent = c.parent_id if cid != root else None
            forest_comments[cid] = Comment(
                id=c.id,
                author=c.author,
                body=c.body,
                parent_id=parent,
                created_at=c.created_at,
                children=c.children,
            )
    kept_forest = ThreadTree(
        post_id=tree.post_id,
        title=tree.title,
        post_body=tree.post_body,
        subreddit_label=tree.subreddit_label,
        domain_tag=tree.domain_tag,
        comments=forest_comments,
        root_ids=tuple(maximal_roots),
    )
    return ExtractionResult(
        source_post_id=tree.post_id,
        target_users=(user_a, user_b),
        kept_comment_ids=frozenset(kept),
        kept_forest=kept_forest,
    )


def compute_corpus_stats(corpus: Iterable[ThreadTree]) -> CorpusStats:
    """Per-domain thread/comment/user aggregates.

    total_users deduplicates handles across threads within a domain;
    avg_users_per_thread averages the per-thread distinct author counts.
    Values are exact here; callers round with round2 for display.
    """
    by_domain: dict[str, list[ThreadTree]] = {}
    for tree in corpus:
        by_domain.setdefault(tree.domain_tag, []).append(tree)

    rows = []
    for domain in sorted(by_domain):
        trees = by_domain[domain]
        n = len(trees)
        total_comments = sum(t.comment_count for t in trees)
        all_users: set[str] = set()
        per_thread_users = []
        for t in trees:
            authors = t.authors
            all_users.update(authors)
            per_thread_users.append(len(authors))
        rows.append(
            DomainRow(
                domain_tag=domain,
                thread_count=n,
                total_comments=total_comments,
                total_users=len(all_users),
                avg_users_per_thread=sum(per_thread_users) / n,
                avg_comments_per_thread=total_comments / n,
            )
        )
    return CorpusStats(rows=tuple(rows))


def stats_csv(stats: CorpusStats) -> str:
    lines = [
        "domain_tag,thread_count,total_comments,total_users,avg_users_per_thread,avg_comments_per_thread"
    ]
    for r in stats.rows:
        lines.append(
            f"{r.domain_tag},{r.thread_count},{r.total_comments},{r.total_users},"
            f"{round2(r.avg_users_per_thread):.2f},{round2(r.avg_comments_per_thread):.2f}"
        )
    return "\n".join(lines) + "\n"
