"""Local link popularity: per-site visit counters, dynamic link layouts and
popularity-aware re-ranking."""

from linkpulse.counters import ClickEvent, CounterSnapshot, CounterStore, load_events
from linkpulse.errors import LinkpulseError
from linkpulse.popularity import LocalScore, PageLayout, page_layout, top_k_links
from linkpulse.ranker import LinkGraph, PageRef, pagerank, rank_results

__version__ = "0.1.0"

__all__ = [
    "ClickEvent",
    "CounterSnapshot",
    "CounterStore",
    "LinkGraph",
    "LinkpulseError",
    "LocalScore",
    "PageLayout",
    "PageRef",
    "load_events",
    "page_layout",
    "pagerank",
    "rank_results",
    "top_k_links",
]
