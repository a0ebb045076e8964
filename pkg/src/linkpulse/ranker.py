"""Global link-graph rank blended with local (in-site) popularity."""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from linkpulse.counters import CounterSnapshot, link_id, site_id
from linkpulse.errors import EmptyGraph, UnknownLink
from linkpulse.popularity import DEFAULT_K, site_scores, top_k_links

DAMPING = 0.85
EPSILON = 1e-10
MAX_ITER = 200
LAMBDA = 1.0
BETA = 0.25


class PageRef(NamedTuple):
    site: str
    link: str

    @classmethod
    def of(cls, site: str, link: str) -> "PageRef":
        return cls(site_id(site), link_id(link))

    @classmethod
    def from_dict(cls, obj: dict) -> "PageRef":
        return cls.of(obj["site"], obj["link"])

    def to_dict(self) -> dict:
        return {"site": self.site, "link": self.link}


class LinkGraph:
    """Directed page graph; duplicate edges collapse and self-loops are dropped."""

    def __init__(self, edges: Iterable[tuple[PageRef, PageRef]] = (), nodes: Iterable[PageRef] = ()):
        self._out: dict[PageRef, set[PageRef]] = {}
        self._in: dict[PageRef, set[PageRef]] = {}
        for node in nodes:
            self.add_node(node)
        for src, dst in edges:
            self.add_edge(src, dst)

    def add_node(self, node: PageRef) -> None:
        self._out.setdefault(node, set())
        self._in.setdefault(node, set())

    def add_edge(self, src: PageRef, dst: PageRef) -> None:
        self.add_node(src)
        self.add_node(dst)
        if src != dst:
            self._out[src].add(dst)
            self._in[dst].add(src)

    @property
    def nodes(self) -> list[PageRef]:
        return sorted(self._out)

    @property
    def edges(self) -> list[tuple[PageRef, PageRef]]:
        return sorted((s, d) for s, outs in self._out.items() for d in outs)

    def successors(self, node: PageRef) -> list[PageRef]:
        return sorted(self._out[node])

    def predecessors(self, node: PageRef) -> list[PageRef]:
        return sorted(self._in[node])

    def __contains__(self, node) -> bool:
        return node in self._out

    def __len__(self) -> int:
        return len(self._out)

    @classmethod
    def from_jsonl(cls, lines: Iterable[str], source: str = "<graph>") -> "LinkGraph":
        """Parse edge lines ``{"from": ref, "to": ref}`` and node lines ``{"node": ref}``."""
        graph = cls()
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                if "node" in obj:
                    graph.add_node(PageRef.from_dict(obj["node"]))
                else:
                    graph.add_edge(PageRef.from_dict(obj["from"]), PageRef.from_dict(obj["to"]))
            except (ValueError, KeyError, TypeError, AttributeError) as exc:
                raise ValueError(f"{source}:{lineno}: malformed graph line: {exc}") from None
        return graph

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"from": s.to_dict(), "to": d.to_dict()}) for s, d in self.edges
        ]
        isolated = [n for n in self.nodes if not self._out[n] and not self._in[n]]
        lines += [json.dumps({"node": n.to_dict()}) for n in isolated]
        return "".join(line + "\n" for line in lines)


def power_iteration(
    out_weights: Sequence[Sequence[tuple[int, float]]],
    damping: float = DAMPING,
    epsilon: float = EPSILON,
    max_iter: int = MAX_ITER,
) -> tuple[list[float], int]:
    """Weighted PageRank over nodes ``0..n-1``.

    ``out_weights[u]`` lists ``(v, w)`` pairs with ``w > 0``; each row is
    normalized to a transition distribution.  Rows with no weight are
    dangling and spread their mass uniformly.  Teleport is uniform.
    Returns ``(scores, iterations)``.
    """
    n = len(out_weights)
    if n == 0:
        raise EmptyGraph("cannot rank an empty graph")
    rows = []
    for row in out_weights:
        total = sum(w for _, w in row)
        rows.append([(v, w / total) for v, w in row] if total > 0 else None)
    x = [1.0 / n] * n
    iterations = 0
    for iterations in range(1, max_iter + 1):
        dangling = sum(x[u] for u in range(n) if rows[u] is None)
        base = (1.0 - damping) / n + damping * dangling / n
        nxt = [base] * n
        for u, row in enumerate(rows):
            if row is None:
                continue
            mass = damping * x[u]
            for v, p in row:
                nxt[v] += mass * p
        s = sum(nxt)
        nxt = [v / s for v in nxt]
        delta = sum(abs(a - b) for a, b in zip(nxt, x))
        x = nxt
        if delta < epsilon:
            break
    return x, iterations


@dataclass(frozen=True)
class GlobalRank:
    scores: dict[PageRef, float]
    damping: float
    iterations_used: int

    def __getitem__(self, node: PageRef) -> float:
        return self.scores[node]

    def ordering(self) -> list[PageRef]:
        return sorted(self.scores, key=lambda n: (-self.scores[n], n))


def pagerank(
    graph: LinkGraph,
    damping: float = DAMPING,
    epsilon: float = EPSILON,
    max_iter: int = MAX_ITER,
) -> GlobalRank:
    nodes = graph.nodes
    index = {node: i for i, node in enumerate(nodes)}
    out = [[(index[v], 1.0) for v in graph.successors(u)] for u in nodes]
    scores, used = power_iteration(out, damping, epsilon, max_iter)
    return GlobalRank(dict(zip(nodes, scores)), damping, used)


def local_factors(snapshot: CounterSnapshot, site: str) -> dict[str, float]:
    """HI*CI per link normalized by the site maximum.

    Links whose HI or CI is degenerate take the median of the defined raw
    values in the site (0 if there are none).
    """
    scores = site_scores(snapshot, site)
    raw = {
        link: s.hi * s.ci for link, s in scores.items() if s.hi is not None and s.ci is not None
    }
    fallback = statistics.median(raw.values()) if raw else 0.0
    raw = {link: raw.get(link, fallback) for link in scores}
    top = max(raw.values(), default=0.0)
    if top <= 0:
        return {link: 0.0 for link in raw}
    return {link: value / top for link, value in raw.items()}


def local_factor(snapshot: CounterSnapshot, site: str, link: str) -> float:
    snapshot.counts(site, link)
    return local_factors(snapshot, site)[link]


def combined_score(
    base: float, local: float, topleft: bool, lam: float = LAMBDA, beta: float = BETA
) -> float:
    score = base * (1.0 + lam * local)
    if topleft:
        score *= 1.0 + beta
    return score


@dataclass(frozen=True)
class CombinedScore:
    base: float
    local: float
    topleft: bool
    combined: float


@dataclass(frozen=True)
class RankedPage:
    page: PageRef
    score: CombinedScore

    def to_dict(self) -> dict:
        return {
            "site": self.page.site,
            "link": self.page.link,
            "base": self.score.base,
            "local": self.score.local,
            "topleft": self.score.topleft,
            "combined": self.score.combined,
        }


def rank_results(
    graph: LinkGraph,
    snapshot: CounterSnapshot,
    candidates: Iterable[PageRef] | None = None,
    lam: float = LAMBDA,
    beta: float = BETA,
    k_topleft: int = DEFAULT_K,
    damping: float = DAMPING,
    epsilon: float = EPSILON,
    max_iter: int = MAX_ITER,
) -> list[RankedPage]:
    """Order ``candidates`` (default: every graph node) by the blended score.

    Pages of sites absent from ``snapshot`` get local factor 0 and no boost.
    """
    rank = pagerank(graph, damping, epsilon, max_iter)
    pages = sorted(set(graph.nodes if candidates is None else candidates))
    for page in pages:
        if page not in graph:
            raise UnknownLink(f"candidate {page.site}{page.link} is not in the graph")

    factors: dict[str, dict[str, float]] = {}
    topleft: dict[str, set[str]] = {}
    for site in sorted({p.site for p in pages}):
        if site in snapshot:
            factors[site] = local_factors(snapshot, site)
            topleft[site] = {link for link, _ in top_k_links(snapshot, site, k_topleft)}

    ranked = []
    for page in pages:
        local = factors.get(page.site, {}).get(page.link, 0.0)
        boosted = page.link in topleft.get(page.site, ())
        base = rank[page]
        ranked.append(
            RankedPage(page, CombinedScore(base, local, boosted, combined_score(base, local, boosted, lam, beta)))
        )
    ranked.sort(key=lambda r: (-r.score.combined, -r.score.base, r.page))
    return ranked


def ranked_to_json(ranked: Sequence[RankedPage], indent: int | None = 2) -> str:
    return json.dumps([r.to_dict() for r in ranked], indent=indent)

