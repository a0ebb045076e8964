"""Seeded synthetic click traffic and the scenario harness built on it."""

from __future__ import annotations

import bisect
import json
import random
from collections import Counter
from dataclasses import asdict, dataclass, field
from itertools import accumulate
from typing import Iterator, Sequence

from linkpulse.counters import ClickEvent, CounterStore, link_id, site_id
from linkpulse.errors import InvalidConfig
from linkpulse.popularity import DEFAULT_K, PageLayout, page_layout
from linkpulse.ranker import BETA, LAMBDA, LinkGraph, PageRef, pagerank, rank_results

ZIPF_S = 1.2


def zipf_weights(n: int, s: float = ZIPF_S) -> list[float]:
    """Unnormalized Zipf weights ``r ** -s`` for ranks 1..n."""
    return [r ** -s for r in range(1, n + 1)]


@dataclass
class SiteSpec:
    site: str
    links: list[str]
    weight: float = 1.0
    attractiveness: list[float] | None = None
    zipf_s: float | None = None
    satisfaction: list[float] | None = None

    def __post_init__(self):
        self.site = site_id(self.site)
        self.links = [link_id(link) for link in self.links]
        if not self.links:
            raise InvalidConfig(f"site {self.site!r} has no links")
        if len(set(self.links)) != len(self.links):
            raise InvalidConfig(f"site {self.site!r} lists a link twice")
        if not self.weight > 0:
            raise InvalidConfig(f"site {self.site!r} weight must be positive")
        if self.attractiveness is None:
            self.attractiveness = zipf_weights(len(self.links), self.zipf_s or ZIPF_S)
        if len(self.attractiveness) != len(self.links):
            raise InvalidConfig(f"site {self.site!r}: attractiveness/links length mismatch")
        if any(not a > 0 for a in self.attractiveness):
            raise InvalidConfig(f"site {self.site!r}: attractiveness must be positive")
        if self.satisfaction is not None and (
            len(self.satisfaction) != len(self.links)
            or any(not 0.0 <= v <= 1.0 for v in self.satisfaction)
        ):
            raise InvalidConfig(f"site {self.site!r}: satisfaction must be in [0, 1] per link")

    def probabilities(self) -> list[float]:
        total = sum(self.attractiveness)
        return [a / total for a in self.attractiveness]


@dataclass
class SimConfig:
    seed: int
    sites: list[SiteSpec]
    total_clicks: int
    now_start: int = 0
    inter_event_gap: int = 60

    def __post_init__(self):
        if not self.sites:
            raise InvalidConfig("no sites configured")
        if self.total_clicks < 1:
            raise InvalidConfig("total_clicks must be >= 1")
        if self.now_start < 0 or self.inter_event_gap < 0:
            raise InvalidConfig("now_start and inter_event_gap must be non-negative")
        if len({s.site for s in self.sites}) != len(self.sites):
            raise InvalidConfig("duplicate site in config")

    @classmethod
    def from_dict(cls, obj: dict) -> "SimConfig":
        try:
            sites = [SiteSpec(**spec) for spec in obj["sites"]]
            rest = {k: v for k, v in obj.items() if k != "sites"}
            return cls(sites=sites, **rest)
        except (KeyError, TypeError) as exc:
            raise InvalidConfig(f"bad simulation config: {exc}") from None

    def to_dict(self) -> dict:
        return asdict(self)


def _cumulative(weights: Sequence[float]) -> list[float]:
    return list(accumulate(weights))


def _draw(rng: random.Random, cum: list[float]) -> int:
    # clamp: float round-off may leave cum[-1] a hair below the drawn value
    return min(bisect.bisect_right(cum, rng.random() * cum[-1]), len(cum) - 1)


def generate_events(config: SimConfig) -> Iterator[ClickEvent]:
    rng = random.Random(config.seed)
    site_cum = _cumulative([s.weight for s in config.sites])
    link_cums = [_cumulative(s.attractiveness) for s in config.sites]
    for n in range(config.total_clicks):
        i = _draw(rng, site_cum)
        spec = config.sites[i]
        j = _draw(rng, link_cums[i])
        yield ClickEvent(spec.site, spec.links[j], config.now_start + n * config.inter_event_gap)


@dataclass
class SimResult:
    events: list[ClickEvent]
    site_counts: dict[str, int]
    link_counts: dict[str, dict[str, int]]

    def to_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.events)

    def summary(self) -> dict:
        return {
            "total": len(self.events),
            "first_ts": self.events[0].timestamp,
            "last_ts": self.events[-1].timestamp,
            "sites": {
                site: {"clicks": n, "links": dict(sorted(self.link_counts[site].items()))}
                for site, n in sorted(self.site_counts.items())
            },
        }


def run_simulation(config: SimConfig) -> SimResult:
    events = list(generate_events(config))
    per_link = Counter((e.site, e.link) for e in events)
    site_counts = Counter(e.site for e in events)
    link_counts: dict[str, dict[str, int]] = {s.site: {} for s in config.sites}
    for (site, link), n in per_link.items():
        link_counts[site][link] = n
    return SimResult(events, {s.site: site_counts[s.site] for s in config.sites}, link_counts)


def display_positions(spec: SiteSpec, layout: PageLayout | Sequence[str] | None = None) -> list[int]:
    """Position of each link's first appearance in display order.

    Hoisted links occupy 0..k-1, then the rest follow in native order; a
    hoisted link's native copy is shadowed by its earlier slot.
    """
    hoisted = list(layout.links if isinstance(layout, PageLayout) else (layout or []))
    shadowed = set(hoisted)
    order = hoisted + [link for link in spec.links if link not in shadowed]
    first = {}
    for pos, link in enumerate(order):
        first.setdefault(link, pos)
    return [first[link] for link in spec.links]


def expected_position(spec: SiteSpec, layout: PageLayout | Sequence[str] | None = None) -> float:
    """Mean display index of the clicked link; lower means less scanning."""
    return sum(p * pos for p, pos in zip(spec.probabilities(), display_positions(spec, layout)))


def monte_carlo_position(
    spec: SiteSpec,
    layout: PageLayout | Sequence[str] | None = None,
    draws: int = 100_000,
    seed: int = 0,
) -> float:
    rng = random.Random(seed)
    cum = _cumulative(spec.attractiveness)
    positions = display_positions(spec, layout)
    return sum(positions[_draw(rng, cum)] for _ in range(draws)) / draws


# Scenario: a popular site A whose new page a is weak locally versus an
# unpopular site B whose new page b attracts most of B's own traffic.

SITE_A = "site-a.example"
SITE_B = "site-b.example"
PAGE_A = PageRef(SITE_A, "/a")
PAGE_B = PageRef(SITE_B, "/b")
_A_OTHERS = [f"/a{i}" for i in range(1, 6)]
_B_OTHERS = [f"/b{i}" for i in range(1, 6)]


def scenario_graph() -> LinkGraph:
    """Twelve pages, six per site; ``a`` has 8 inbound edges and ``b`` has 2.

    a's referrers are eight directory-style pages that all cross-link, so
    each passes on only a slice of its rank; b's two referrers link to b
    alone.
    """
    a_others = [PageRef(SITE_A, p) for p in _A_OTHERS]
    b_others = [PageRef(SITE_B, p) for p in _B_OTHERS]
    hubs = a_others + b_others[2:]
    edges = [(h, PAGE_A) for h in hubs]
    edges += [(h, t) for h in hubs for t in hubs if h != t]
    edges += [(p, PAGE_B) for p in b_others[:2]]
    edges += [(PAGE_A, p) for p in a_others]
    edges += [(PAGE_B, p) for p in b_others]
    return LinkGraph(edges)


@dataclass
class ScenarioParams:
    seed: int = 7
    total_clicks: int = 10_000
    weight_a: float = 0.8
    weight_b: float = 0.2
    share_a: float = 0.05
    share_b: float = 0.60
    lam: float = LAMBDA
    beta: float = BETA
    k: int = DEFAULT_K
    now_start: int = 0
    inter_event_gap: int = 60

    def __post_init__(self):
        for name in ("share_a", "share_b"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise InvalidConfig(f"{name} must lie in (0, 1)")
        if self.k < 1 or self.total_clicks < 1:
            raise InvalidConfig("k and total_clicks must be >= 1")
        if self.lam < 0 or self.beta < 0:
            raise InvalidConfig("lam and beta must be non-negative")

    def sim_config(self) -> SimConfig:
        # the remaining in-site traffic is split evenly over the five siblings
        rest_a = (1.0 - self.share_a) / len(_A_OTHERS)
        rest_b = (1.0 - self.share_b) / len(_B_OTHERS)
        return SimConfig(
            seed=self.seed,
            total_clicks=self.total_clicks,
            now_start=self.now_start,
            inter_event_gap=self.inter_event_gap,
            sites=[
                SiteSpec(SITE_A, [PAGE_A.link, *_A_OTHERS], self.weight_a, [self.share_a] + [rest_a] * 5),
                SiteSpec(SITE_B, [PAGE_B.link, *_B_OTHERS], self.weight_b, [self.share_b] + [rest_b] * 5),
            ],
        )


@dataclass
class ScenarioReport:
    baseline_order: list[str]
    combined_order: list[str]
    flipped: bool
    pages: dict[str, dict]
    counts: dict
    params: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "flip" if self.flipped else "no-flip"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "baseline_order": self.baseline_order,
            "combined_order": self.combined_order,
            "pages": self.pages,
            "counts": self.counts,
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def scenario_ab(params: ScenarioParams | None = None) -> ScenarioReport:
    params = params or ScenarioParams()
    graph = scenario_graph()
    sim = run_simulation(params.sim_config())
    store = CounterStore()
    for event in sim.events:
        store.record_click(event)
    snapshot = store.snapshot()

    base = pagerank(graph)
    ranked = rank_results(graph, snapshot, [PAGE_A, PAGE_B], params.lam, params.beta, params.k)
    names = {PAGE_A: "a", PAGE_B: "b"}
    baseline = sorted(names, key=lambda p: (-base[p], p))
    combined = [names[r.page] for r in ranked]
    pages = {}
    for r in ranked:
        history, recent = snapshot.counts(r.page.site, r.page.link)
        pages[names[r.page]] = {
            **r.to_dict(),
            "history": history,
            "recent": recent,
            "inbound": len(graph.predecessors(r.page)),
        }
    layouts = {s: page_layout(snapshot, s, params.k).links for s in (SITE_A, SITE_B)}
    return ScenarioReport(
        baseline_order=[names[p] for p in baseline],
        combined_order=combined,
        flipped=[names[p] for p in baseline] != combined,
        pages=pages,
        counts={**sim.summary(), "layouts": layouts},
        params=asdict(params),
    )
