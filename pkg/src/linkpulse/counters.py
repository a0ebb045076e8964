"""Per-site click counters.

Every (site, link) pair carries an all-time history count and a ring of
fixed-width time buckets holding the recent count.  Buckets are aligned to
absolute time (bucket id = ``ts // bucket_width``); the recent window at
``now`` is the ring's worth of buckets ending with the one containing ``now``.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from linkpulse.errors import (
    InvalidConfig,
    InvalidId,
    TimestampRegression,
    UnknownLink,
    UnknownSite,
)

DEFAULT_WINDOW = 7 * 24 * 3600
DEFAULT_BUCKET_WIDTH = 3600
COUNT_MAX = 2**64 - 1

_WS = re.compile(r"\s")


def site_id(value: str) -> str:
    """Validate and lowercase a site identifier."""
    if not isinstance(value, str) or not value or _WS.search(value):
        raise InvalidId(f"invalid site id: {value!r}")
    return value.lower()


def link_id(value: str) -> str:
    if not isinstance(value, str) or not value or _WS.search(value):
        raise InvalidId(f"invalid link id: {value!r}")
    return value


@dataclass(frozen=True)
class ClickEvent:
    site: str
    link: str
    timestamp: int

    def __post_init__(self):
        object.__setattr__(self, "site", site_id(self.site))
        object.__setattr__(self, "link", link_id(self.link))
        ts = self.timestamp
        if isinstance(ts, bool) or not isinstance(ts, int) or ts < 0:
            raise ValueError(f"timestamp must be a non-negative integer, got {ts!r}")

    def to_json(self) -> str:
        return json.dumps({"ts": self.timestamp, "site": self.site, "link": self.link})

    @classmethod
    def from_json(cls, line: str, default_site: str | None = None) -> "ClickEvent":
        obj = json.loads(line)
        if not isinstance(obj, dict):
            raise ValueError("event must be a JSON object")
        missing = [f for f in ("ts", "site", "link") if f not in obj]
        if missing == ["site"] and default_site is not None:
            obj["site"] = default_site
        elif missing:
            raise ValueError(f"missing field(s): {', '.join(missing)}")
        return cls(site=obj["site"], link=obj["link"], timestamp=obj["ts"])


def check_window(window_length: int, bucket_width: int) -> int:
    """Return the ring length, rejecting windows that are not whole buckets."""
    if bucket_width <= 0 or window_length <= 0:
        raise InvalidConfig("window_length and bucket_width must be positive")
    if window_length % bucket_width:
        raise InvalidConfig(
            f"window_length {window_length} is not a multiple of bucket_width {bucket_width}"
        )
    return window_length // bucket_width


class LinkCounters:
    """History count plus a ring of recency buckets for one link.

    Not thread-safe on its own; CounterStore serializes access.
    """

    __slots__ = ("history", "bucket_width", "window_length", "_counts", "_ids", "_newest")

    def __init__(self, window_length: int = DEFAULT_WINDOW, bucket_width: int = DEFAULT_BUCKET_WIDTH):
        n = check_window(window_length, bucket_width)
        self.history = 0
        self.bucket_width = bucket_width
        self.window_length = window_length
        self._counts = [0] * n
        self._ids = [-1] * n
        self._newest = -1

    @property
    def ring_length(self) -> int:
        return len(self._counts)

    @property
    def newest_bucket_start(self) -> int | None:
        return None if self._newest < 0 else self._newest * self.bucket_width

    @property
    def buckets(self) -> list[int]:
        """Live bucket counts, oldest first, zero for expired slots."""
        n = self.ring_length
        if self._newest < 0:
            return [0] * n
        out = []
        for b in range(self._newest - n + 1, self._newest + 1):
            slot = b % n
            out.append(self._counts[slot] if self._ids[slot] == b else 0)
        return out

    def record(self, timestamp: int) -> int:
        start = self.newest_bucket_start
        if start is not None and start - timestamp > self.window_length:
            raise TimestampRegression(
                f"timestamp {timestamp} precedes newest bucket start {start} "
                f"by more than one window ({self.window_length}s)"
            )
        n = self.ring_length
        b = timestamp // self.bucket_width
        if b > self._newest:
            self._newest = b
        if b > self._newest - n:
            slot = b % n
            if self._ids[slot] != b:
                self._ids[slot] = b
                self._counts[slot] = 0
            self._counts[slot] += 1
        # late events older than the ring still count towards history
        if self.history < COUNT_MAX:
            self.history += 1
        return self.history

    def recent(self, now: int) -> int:
        n = self.ring_length
        cur = now // self.bucket_width
        lo = cur - n
        return sum(c for c, b in zip(self._counts, self._ids) if lo < b <= cur)


class CounterSnapshot:
    """Immutable (history, recent) table resolved at query time ``now``.

    Snapshots merged from several sources keep each site's own ``now``.
    """

    def __init__(
        self,
        sites: Mapping[str, Mapping[str, tuple[int, int]]],
        now: int,
        site_now: Mapping[str, int] | None = None,
    ):
        self._sites = MappingProxyType(
            {s: MappingProxyType(dict(links)) for s, links in sites.items()}
        )
        self.now = now
        site_now = dict(site_now or {})
        self._site_now = MappingProxyType({s: site_now.get(s, now) for s in self._sites})

    def sites(self) -> list[str]:
        return sorted(self._sites)

    def __contains__(self, site: str) -> bool:
        return site in self._sites

    def links(self, site: str) -> list[str]:
        return sorted(self._site(site))

    def site_table(self, site: str) -> Mapping[str, tuple[int, int]]:
        return self._site(site)

    def site_now(self, site: str) -> int:
        self._site(site)
        return self._site_now[site]

    def counts(self, site: str, link: str) -> tuple[int, int]:
        links = self._site(site)
        try:
            return links[link]
        except KeyError:
            raise UnknownLink(f"unknown link {link!r} in site {site!r}") from None

    def history(self, site: str, link: str) -> int:
        return self.counts(site, link)[0]

    def recent(self, site: str, link: str) -> int:
        return self.counts(site, link)[1]

    def _site(self, site: str) -> Mapping[str, tuple[int, int]]:
        try:
            return self._sites[site]
        except KeyError:
            raise UnknownSite(f"unknown site {site!r}") from None

    def fragment(self, site: str) -> "CounterSnapshot":
        """Snapshot restricted to a single site."""
        return CounterSnapshot({site: self._site(site)}, self._site_now[site])

    def merge(self, *others: "CounterSnapshot") -> "CounterSnapshot":
        """Union of snapshots; a site present in several inputs is taken from the last."""
        sites = dict(self._sites)
        site_now = dict(self._site_now)
        now = self.now
        for other in others:
            for s in other.sites():
                sites[s] = other._sites[s]
                site_now[s] = other._site_now[s]
            now = max(now, other.now)
        return CounterSnapshot(sites, now, site_now)

    def to_dict(self) -> dict:
        return {
            "now": self.now,
            "sites": {
                s: {
                    "now": self._site_now[s],
                    "links": {
                        link: {"history": h, "recent": r}
                        for link, (h, r) in sorted(self._sites[s].items())
                    },
                }
                for s in self.sites()
            },
        }

    def __eq__(self, other):
        if not isinstance(other, CounterSnapshot):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self):
        n = sum(len(v) for v in self._sites.values())
        return f"CounterSnapshot(now={self.now}, sites={len(self._sites)}, links={n})"


class CounterStore:
    """Thread-safe in-memory table of LinkCounters keyed by site then link."""

    def __init__(
        self,
        window_length: int = DEFAULT_WINDOW,
        bucket_width: int = DEFAULT_BUCKET_WIDTH,
        site_windows: Mapping[str, int] | None = None,
    ):
        check_window(window_length, bucket_width)
        self.window_length = window_length
        self.bucket_width = bucket_width
        self._site_windows: dict[str, int] = {}
        self._sites: dict[str, dict[str, LinkCounters]] = {}
        self._launch: dict[str, int] = {}
        self._latest: int | None = None
        self._lock = threading.Lock()
        for site, w in (site_windows or {}).items():
            self.set_site_window(site, w)

    def set_site_window(self, site: str, window_length: int) -> None:
        site = site_id(site)
        check_window(window_length, self.bucket_width)
        with self._lock:
            if self._sites.get(site):
                raise InvalidConfig(f"site {site!r} already has counters; window is fixed")
            self._site_windows[site] = window_length

    def site_window(self, site: str) -> int:
        return self._site_windows.get(site_id(site), self.window_length)

    def record_click(self, event: ClickEvent) -> int:
        """Count one visit; returns the link's new history count."""
        with self._lock:
            links = self._sites.get(event.site)
            counters = links.get(event.link) if links is not None else None
            if counters is None:
                counters = LinkCounters(
                    self._site_windows.get(event.site, self.window_length), self.bucket_width
                )
            hist = counters.record(event.timestamp)
            if links is None:
                links = self._sites[event.site] = {}
                self._launch[event.site] = event.timestamp
            links.setdefault(event.link, counters)
            if event.timestamp < self._launch[event.site]:
                self._launch[event.site] = event.timestamp
            if self._latest is None or event.timestamp > self._latest:
                self._latest = event.timestamp
            return hist

    def record(self, site: str, link: str, timestamp: int) -> int:
        return self.record_click(ClickEvent(site, link, timestamp))

    def _counters(self, site: str, link: str) -> LinkCounters:
        links = self._sites.get(site_id(site))
        if links is None:
            raise UnknownSite(f"unknown site {site!r}")
        try:
            return links[link]
        except KeyError:
            raise UnknownLink(f"unknown link {link!r} in site {site!r}") from None

    def history_count(self, site: str, link: str) -> int:
        with self._lock:
            return self._counters(site, link).history

    def recent_count(self, site: str, link: str, now: int) -> int:
        with self._lock:
            return self._counters(site, link).recent(now)

    def link_counters(self, site: str, link: str) -> LinkCounters:
        """The live counters object; callers must not mutate it."""
        return self._counters(site, link)

    def snapshot(self, now: int | None = None) -> CounterSnapshot:
        """Point-in-time view; ``now`` defaults to the latest event seen (0 if none)."""
        with self._lock:
            if now is None:
                now = self._latest or 0
            table = {
                site: {link: (c.history, c.recent(now)) for link, c in links.items()}
                for site, links in self._sites.items()
            }
        return CounterSnapshot(table, now)

    def sites(self) -> list[str]:
        with self._lock:
            return sorted(self._sites)

    def links(self, site: str) -> list[str]:
        with self._lock:
            links = self._sites.get(site_id(site))
            if links is None:
                raise UnknownSite(f"unknown site {site!r}")
            return sorted(links)

    def site_total(self, site: str) -> int:
        with self._lock:
            links = self._sites.get(site_id(site))
            if links is None:
                raise UnknownSite(f"unknown site {site!r}")
            return sum(c.history for c in links.values())

    def launch_timestamp(self, site: str) -> int:
        with self._lock:
            try:
                return self._launch[site_id(site)]
            except KeyError:
                raise UnknownSite(f"unknown site {site!r}") from None

    @property
    def latest_timestamp(self) -> int | None:
        return self._latest


@dataclass(frozen=True)
class LineError:
    line: int
    message: str

    def to_dict(self) -> dict:
        return {"line": self.line, "message": self.message}


def parse_events(
    lines: Iterable[str], default_site: str | None = None
) -> Iterator[tuple[int, ClickEvent | None, str | None]]:
    """Yield ``(lineno, event, error)`` for every non-blank line."""
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            yield lineno, ClickEvent.from_json(line, default_site), None
        except (ValueError, TypeError) as exc:
            yield lineno, None, str(exc)


def load_events(
    store: CounterStore,
    lines: Iterable[str],
    slack: int = 0,
    default_site: str | None = None,
) -> tuple[int, list[LineError]]:
    """Replay a JSONL click log into ``store``.

    Lines that fail to parse, or whose timestamp falls more than ``slack``
    seconds behind the newest timestamp already read, are reported and
    skipped.  Returns ``(ingested, errors)``.
    """
    ingested = 0
    errors: list[LineError] = []
    high = None
    for lineno, event, err in parse_events(lines, default_site):
        if event is None:
            errors.append(LineError(lineno, err))
            continue
        if high is not None and event.timestamp < high - slack:
            errors.append(
                LineError(lineno, f"timestamp {event.timestamp} regresses behind {high}")
            )
            continue
        try:
            store.record_click(event)
        except TimestampRegression as exc:
            errors.append(LineError(lineno, str(exc)))
            continue
        high = event.timestamp if high is None else max(high, event.timestamp)
        ingested += 1
    return ingested, errors
