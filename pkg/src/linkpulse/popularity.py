"""Local importance of a link inside its own site and the top-k layout slot.

Historical importance is a link's history count over the summed history
counts of the *other* links in the site; current importance is the same
ratio over recent counts.  Both can exceed 1.  The layout slot is filled by
the raw product ``history * recent``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from linkpulse.counters import CounterSnapshot
from linkpulse.errors import DegenerateDenominator

DEFAULT_K = 5


def _share(own: int, total: int) -> float | None:
    return own / (total - own) if total - own else None


def _importance(snapshot: CounterSnapshot, site: str, link: str, idx: int) -> float:
    own = snapshot.counts(site, link)[idx]
    total = sum(v[idx] for v in snapshot.site_table(site).values())
    value = _share(own, total)
    if value is None:
        raise DegenerateDenominator(f"no activity on {site!r} besides {link!r}")
    return value


def historical_importance(snapshot: CounterSnapshot, site: str, link: str) -> float:
    return _importance(snapshot, site, link, 0)


def current_importance(snapshot: CounterSnapshot, site: str, link: str) -> float:
    return _importance(snapshot, site, link, 1)


def product_score(snapshot: CounterSnapshot, site: str, link: str) -> int:
    history, recent = snapshot.counts(site, link)
    return history * recent


@dataclass(frozen=True)
class LocalScore:
    """Scores of one link; ``hi``/``ci`` are None when degenerate."""

    history: int
    recent: int
    hi: float | None
    ci: float | None

    @property
    def product(self) -> int:
        return self.history * self.recent


def local_score(snapshot: CounterSnapshot, site: str, link: str) -> LocalScore:
    snapshot.counts(site, link)
    return site_scores(snapshot, site)[link]


def site_scores(snapshot: CounterSnapshot, site: str) -> dict[str, LocalScore]:
    table = snapshot.site_table(site)
    total_h = sum(h for h, _ in table.values())
    total_r = sum(r for _, r in table.values())
    return {
        link: LocalScore(h, r, _share(h, total_h), _share(r, total_r))
        for link, (h, r) in table.items()
    }


def _rank_key(item: tuple[str, LocalScore]):
    link, score = item
    return (-score.product, -score.recent, link)


def top_k_links(snapshot: CounterSnapshot, site: str, k: int = DEFAULT_K) -> list[tuple[str, LocalScore]]:
    """Links with a positive product, best first, at most ``k`` of them.

    Ties on product go to the higher recent count, then to the smaller link id.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    active = [(link, s) for link, s in site_scores(snapshot, site).items() if s.product > 0]
    active.sort(key=_rank_key)
    return active[:k]


@dataclass(frozen=True)
class PageLayout:
    site: str
    k: int
    generated_at: int
    slots: tuple[tuple[str, LocalScore], ...] = field(default_factory=tuple)

    @property
    def links(self) -> list[str]:
        return [link for link, _ in self.slots]

    def to_dict(self) -> dict:
        return {
            "site": self.site,
            "k": self.k,
            "generated_at": self.generated_at,
            "slots": [slot_dict(link, score) for link, score in self.slots],
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, obj: dict) -> "PageLayout":
        slots = tuple(
            (s["link"], LocalScore(s["history"], s["recent"], s["hi"], s["ci"]))
            for s in obj["slots"]
        )
        return cls(obj["site"], obj["k"], obj["generated_at"], slots)

    @classmethod
    def from_json(cls, text: str) -> "PageLayout":
        return cls.from_dict(json.loads(text))


def slot_dict(link: str, score: LocalScore) -> dict:
    return {
        "link": link,
        "history": score.history,
        "recent": score.recent,
        "product": score.product,
        "hi": score.hi,
        "ci": score.ci,
    }


def page_layout(snapshot: CounterSnapshot, site: str, k: int = DEFAULT_K) -> PageLayout:
    slots = top_k_links(snapshot, site, k)
    return PageLayout(site, k, snapshot.site_now(site), tuple(slots))
