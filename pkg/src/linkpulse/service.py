"""HTTP/JSON facade over a CounterStore, and the client that federates it."""

from __future__ import annotations

import json
import logging
import socket
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Iterable
from urllib.parse import parse_qs, quote, unquote, urlsplit

from linkpulse.counters import CounterSnapshot, CounterStore, LineError, parse_events, site_id
from linkpulse.errors import (
    BindFailure,
    FetchTimeout,
    InvalidId,
    MalformedResponse,
    TimestampRegression,
    UnknownLink,
    UnknownSite,
)
from linkpulse.popularity import DEFAULT_K, page_layout, slot_dict, top_k_links

log = logging.getLogger(__name__)

Clock = Callable[[], int]


def wall_clock() -> int:
    return int(time.time())


class _HTTPError(Exception):
    def __init__(self, status: HTTPStatus, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code


class _Handler(BaseHTTPRequestHandler):
    server: "_Server"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.debug("%s - " + fmt, self.address_string(), *args)

    def _send(self, status: int, payload, content_type: str = "application/json") -> None:
        body = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, code: str, message: str) -> None:
        self._send(status, {"error": code, "message": message})

    def _route(self, method: str) -> None:
        url = urlsplit(self.path)
        # split before unquoting so encoded slashes stay inside one segment
        parts = [unquote(p) for p in url.path.split("/") if p]
        query = parse_qs(url.query)
        try:
            if method == "GET" and parts == ["healthz"]:
                self._send(200, b"ok", "text/plain")
                return
            if len(parts) < 3 or parts[0] != "sites":
                raise _HTTPError(HTTPStatus.NOT_FOUND, "not_found", f"no route for {url.path}")
            site = site_id(parts[1])
            rest = parts[2:]
            if method == "POST" and rest == ["events"]:
                self._post_events(site)
            elif method == "GET" and len(rest) == 3 and rest[0] == "links" and rest[2] == "counters":
                self._get_link_counters(site, rest[1], query)
            elif method == "GET" and rest == ["counters"]:
                self._get_site_counters(site, query)
            elif method == "GET" and rest == ["popular"]:
                snap = self._snapshot(query)
                slots = top_k_links(snap, site, _int_param(query, "k", self.server.k))
                self._send(200, [slot_dict(link, score) for link, score in slots])
            elif method == "GET" and rest == ["layout"]:
                snap = self._snapshot(query)
                self._send(200, page_layout(snap, site, _int_param(query, "k", self.server.k)).to_dict())
            else:
                raise _HTTPError(HTTPStatus.NOT_FOUND, "not_found", f"no route for {method} {url.path}")
        except _HTTPError as exc:
            self._error(exc.status, exc.code, str(exc))
        except (UnknownSite, UnknownLink) as exc:
            self._error(404, exc.code, str(exc))
        except InvalidId as exc:
            self._error(400, exc.code, str(exc))
        except ValueError as exc:
            self._error(400, "bad_request", str(exc))
        except Exception as exc:  # pragma: no cover - last-resort guard
            log.exception("request failed")
            self._error(500, "internal", str(exc))

    def do_GET(self):
        self._route("GET")

    def do_POST(self):
        self._route("POST")

    def _now(self, query) -> int:
        if "now" in query:
            return _int_param(query, "now", 0, minimum=0)
        return self.server.clock()

    def _snapshot(self, query) -> CounterSnapshot:
        return self.server.store.snapshot(self._now(query))

    def _post_events(self, site: str) -> None:
        length = int(self.headers.get("Content-Length") or 0)
        text = self.rfile.read(length).decode("utf-8")
        accepted = 0
        errors: list[LineError] = []
        for lineno, event, err in parse_events(text.splitlines(), default_site=site):
            if event is not None and event.site != site:
                err, event = f"event site {event.site!r} does not match {site!r}", None
            if event is None:
                errors.append(LineError(lineno, err))
                continue
            try:
                self.server.store.record_click(event)
            except TimestampRegression as exc:
                errors.append(LineError(lineno, str(exc)))
                continue
            accepted += 1
        body = {"accepted": accepted, "errors": [e.to_dict() for e in errors]}
        if accepted == 0 and errors:
            body.update(error="invalid_events", message="no event accepted")
            self._send(400, body)
        else:
            self._send(202, body)

    def _get_link_counters(self, site: str, link: str, query) -> None:
        now = self._now(query)
        snap = self.server.store.snapshot(now)
        history, recent = snap.counts(site, link)
        self._send(200, {"history": history, "recent": recent, "now": now})

    def _get_site_counters(self, site: str, query) -> None:
        snap = self._snapshot(query)
        table = snap.site_table(site)
        self._send(
            200,
            {
                "site": site,
                "now": snap.now,
                "links": {
                    link: {"history": h, "recent": r} for link, (h, r) in sorted(table.items())
                },
            },
        )


def _int_param(query, name: str, default: int, minimum: int = 1) -> int:
    values = query.get(name)
    if not values:
        return default
    try:
        value = int(values[-1])
    except ValueError:
        raise ValueError(f"{name} must be an integer") from None
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}")
    return value


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, store: CounterStore, clock: Clock, k: int):
        self.store = store
        self.clock = clock
        self.k = k
        super().__init__(address, _Handler)


class ServiceHandle:
    """A running service; use as a context manager or call ``shutdown``."""

    def __init__(self, server: _Server, thread: threading.Thread | None):
        self._server = server
        self._thread = thread

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def shutdown(self) -> None:
        if self._thread is not None:
            self._server.shutdown()
            self._thread.join()
        self._server.server_close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()


def parse_bind(bind: str) -> tuple[str, int]:
    host, sep, port = bind.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"bind address must be HOST:PORT, got {bind!r}")
    return host or "127.0.0.1", int(port)


def serve(
    store: CounterStore,
    bind_address: str | tuple[str, int] = "127.0.0.1:0",
    clock: Clock | None = None,
    k: int = DEFAULT_K,
    background: bool = True,
) -> ServiceHandle:
    """Start serving ``store``.

    With ``background`` the server runs on a daemon thread and the handle is
    returned immediately; otherwise the caller drives ``serve_forever``.
    """
    address = parse_bind(bind_address) if isinstance(bind_address, str) else bind_address
    try:
        server = _Server(address, store, clock or wall_clock, k)
    except OSError as exc:
        raise BindFailure(f"cannot bind {address[0]}:{address[1]}: {exc}") from exc
    thread = None
    if background:
        thread = threading.Thread(
            target=server.serve_forever, args=(0.05,), name="linkpulse-http", daemon=True
        )
        thread.start()
    return ServiceHandle(server, thread)


@dataclass(frozen=True)
class RemoteSiteEndpoint:
    base_url: str
    site: str
    timeout: int = 5000  # milliseconds

    def __post_init__(self):
        parts = urlsplit(self.base_url)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise ValueError(f"invalid base_url {self.base_url!r}")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        object.__setattr__(self, "site", site_id(self.site))

    @property
    def counters_url(self) -> str:
        return f"{self.base_url.rstrip('/')}/sites/{quote(self.site, safe='')}/counters"


def fetch_remote_counters(endpoint: RemoteSiteEndpoint) -> CounterSnapshot:
    """Fetch one site's counters as a single-site snapshot fragment.

    Recent counts are those the remote resolved at its own clock; the
    fragment carries that ``now``.
    """
    name = endpoint.counters_url
    try:
        with urllib.request.urlopen(name, timeout=endpoint.timeout / 1000) as resp:
            raw = resp.read()
    except urllib.error.HTTPError as exc:
        raise MalformedResponse(name, f"HTTP {exc.code}") from exc
    except (urllib.error.URLError, socket.timeout, TimeoutError, ConnectionError) as exc:
        raise FetchTimeout(name, f"unreachable: {exc}") from exc
    try:
        obj = json.loads(raw)
        if obj["site"] != endpoint.site:
            raise ValueError(f"site mismatch: {obj['site']!r}")
        now = obj["now"]
        links = {}
        for link, c in obj["links"].items():
            h, r = c["history"], c["recent"]
            if not all(isinstance(v, int) and v >= 0 for v in (h, r, now)) or r > h:
                raise ValueError(f"bad counts for {link!r}")
            links[link] = (h, r)
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise MalformedResponse(name, str(exc)) from exc
    return CounterSnapshot({endpoint.site: links}, now)


def federate(endpoints: Iterable[RemoteSiteEndpoint]) -> CounterSnapshot:
    """Fetch every endpoint, then merge; any failure aborts before merging."""
    fragments = [fetch_remote_counters(ep) for ep in endpoints]
    if not fragments:
        return CounterSnapshot({}, 0)
    return fragments[0].merge(*fragments[1:])

