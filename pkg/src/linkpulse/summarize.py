"""Extractive summaries restricted to a site's popular pages.

Only pages holding a top-k layout slot are read.  Sentences are scored by a
weighted PageRank over their cosine-similarity graph and picked greedily,
skipping near-duplicates of sentences already chosen.
"""

from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from linkpulse.counters import CounterSnapshot, link_id, site_id
from linkpulse.errors import EmptyQuery, NoContent, UnknownSite
from linkpulse.popularity import DEFAULT_K, top_k_links
from linkpulse.ranker import DAMPING, EPSILON, MAX_ITER, power_iteration

log = logging.getLogger(__name__)

SIMILARITY_THRESHOLD = 0.1
REDUNDANCY_CAP = 0.7
GENERIC = "generic"
QUERY = "query"

_SENTENCE_END = re.compile(r"(?<=[.!?])(?:\s+|$)")
_NON_ALNUM = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    return [t for t in _NON_ALNUM.split(text.lower()) if t]


def split_sentences(text: str) -> list[str]:
    text = " ".join(text.split())
    return [s for s in (p.strip() for p in _SENTENCE_END.split(text)) if s]


@dataclass(frozen=True)
class PageDoc:
    site: str
    link: str
    text: str

    def __post_init__(self):
        object.__setattr__(self, "site", site_id(self.site))
        object.__setattr__(self, "link", link_id(self.link))
        if not self.text.split():
            raise ValueError(f"empty document for {self.site}{self.link}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.site, self.link)


@dataclass(frozen=True)
class Sentence:
    site: str
    link: str
    index: int
    text: str
    tokens: tuple[str, ...]

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.site, self.link, self.index)

    def to_dict(self) -> dict:
        return {"site": self.site, "link": self.link, "index": self.index, "text": self.text}


def sentences_of(doc: PageDoc) -> list[Sentence]:
    out = []
    for text in split_sentences(doc.text):
        tokens = tuple(tokenize(text))
        if tokens:
            out.append(Sentence(doc.site, doc.link, len(out), text, tokens))
    return out


def cosine(a: Counter, b: Counter) -> float:
    if len(a) > len(b):
        a, b = b, a
    dot = sum(v * b[t] for t, v in a.items() if t in b)
    if not dot:
        return 0.0
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    return dot / (na * nb)


def similarity_matrix(sentences: Sequence[Sentence]) -> list[list[float]]:
    vecs = [Counter(s.tokens) for s in sentences]
    n = len(vecs)
    sim = [[0.0] * n for _ in range(n)]
    for i in range(n):
        sim[i][i] = 1.0
        for j in range(i + 1, n):
            sim[i][j] = sim[j][i] = cosine(vecs[i], vecs[j])
    return sim


def sentence_scores(
    sim: Sequence[Sequence[float]],
    threshold: float = SIMILARITY_THRESHOLD,
    damping: float = DAMPING,
) -> list[float]:
    n = len(sim)
    out = [
        [(j, sim[i][j]) for j in range(n) if j != i and sim[i][j] >= threshold and sim[i][j] > 0]
        for i in range(n)
    ]
    scores, _ = power_iteration(out, damping, EPSILON, MAX_ITER)
    return scores


def popular_links(snapshot: CounterSnapshot, sites: Iterable[str], k: int = DEFAULT_K) -> set[tuple[str, str]]:
    keep = set()
    for site in sites:
        try:
            keep.update((site, link) for link, _ in top_k_links(snapshot, site, k))
        except UnknownSite:
            continue
    return keep


def prune_popular(
    snapshot: CounterSnapshot,
    sites: str | Iterable[str],
    docs: Iterable[PageDoc],
    k: int = DEFAULT_K,
) -> list[PageDoc]:
    """Keep docs whose page holds one of its site's top-k slots."""
    sites = [site_id(sites)] if isinstance(sites, str) else [site_id(s) for s in sites]
    keep = popular_links(snapshot, sites, k)
    docs = list(docs)
    missing = keep - {d.key for d in docs}
    if missing:
        log.warning("no document for popular page(s): %s", ", ".join(s + l for s, l in sorted(missing)))
    return [d for d in docs if d.key in keep]


def filter_by_query(docs: Iterable[PageDoc], query: str | Sequence[str]) -> list[PageDoc]:
    terms = set(tokenize(query if isinstance(query, str) else " ".join(query)))
    if not terms:
        raise EmptyQuery("query mode needs at least one query term")
    return [d for d in docs if terms & set(tokenize(d.text))]


@dataclass(frozen=True)
class Summary:
    sentences: tuple[Sentence, ...]
    budget: int
    mode: str
    scope: str

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "scope": self.scope,
            "budget": self.budget,
            "sentences": [s.to_dict() for s in self.sentences],
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def select_sentences(
    scores: Sequence[float],
    sim: Sequence[Sequence[float]],
    budget: int,
    redundancy_cap: float = REDUNDANCY_CAP,
) -> list[int]:
    """Greedy pick by score; index order breaks ties (inputs are pre-sorted)."""
    chosen: list[int] = []
    for i in sorted(range(len(scores)), key=lambda i: (-scores[i], i)):
        if len(chosen) == budget:
            break
        if all(sim[i][j] <= redundancy_cap for j in chosen):
            chosen.append(i)
    return sorted(chosen)


def summarize(
    docs: Iterable[PageDoc],
    budget: int,
    mode: str = GENERIC,
    query: str | Sequence[str] | None = None,
    threshold: float = SIMILARITY_THRESHOLD,
    redundancy_cap: float = REDUNDANCY_CAP,
) -> Summary:
    """Summarize already-pruned docs.

    In query mode docs without a query term are dropped first.  Output
    sentences keep document order: by (site, link), then sentence index.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if mode not in (GENERIC, QUERY):
        raise ValueError(f"mode must be {GENERIC!r} or {QUERY!r}")
    docs = sorted(docs, key=lambda d: d.key)
    if mode == QUERY:
        docs = filter_by_query(docs, query or "")
    sentences = [s for d in docs for s in sentences_of(d)]
    if not sentences:
        raise NoContent("nothing left to summarize after pruning/filtering")
    sim = similarity_matrix(sentences)
    scores = sentence_scores(sim, threshold)
    picked = select_sentences(scores, sim, budget, redundancy_cap)
    scope = "multi-site" if len({d.site for d in docs}) > 1 else "single-site"
    return Summary(tuple(sentences[i] for i in picked), budget, mode, scope)


def representative_pages(
    snapshot: CounterSnapshot,
    site: str,
    k: int = DEFAULT_K,
    docs: Iterable[PageDoc] = (),
) -> list[tuple[str, PageDoc | None]]:
    """The site's top-k pages paired with their documents, None where missing."""
    site = site_id(site)
    by_key = {d.key: d for d in docs}
    return [(link, by_key.get((site, link))) for link, _ in top_k_links(snapshot, site, k)]


def load_corpus(directory: str | Path, manifest: str | Path) -> list[PageDoc]:
    """Read ``{filename: {"site": ..., "link": ...}}`` and the files it names."""
    directory = Path(directory)
    entries = json.loads(Path(manifest).read_text(encoding="utf-8"))
    docs = []
    for name, ref in sorted(entries.items()):
        text = (directory / name).read_text(encoding="utf-8")
        docs.append(PageDoc(ref["site"], ref["link"], text))
    return docs


def corpus_filename(site: str, link: str) -> str:
    return f"{site}__{re.sub(r'[^A-Za-z0-9._-]+', '_', link).strip('_') or 'root'}.txt"
