"""Brute-force reference computations used to check the fast paths.

Nothing here imports the code under test's algorithms; inputs are plain
Python values.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict

import numpy as np


def window_count(timestamps, now, window_length, bucket_width):
    """Re-bucket every event and sum the ring's worth of buckets ending at now."""
    n = window_length // bucket_width
    cur = now // bucket_width
    return sum(1 for ts in timestamps if cur - n < ts // bucket_width <= cur)


def tally(events):
    """events: iterable of (site, link, ts) -> {(site, link): count}."""
    return Counter((s, l) for s, l, _ in events)


def per_link_timestamps(events):
    out = defaultdict(list)
    for s, l, ts in events:
        out[(s, l)].append(ts)
    return out


def importance(counts: dict, link):
    """Direct evaluation: own count over the sum of every other link's count."""
    denom = 0
    for other, c in counts.items():
        if other != link:
            denom += c
    return None if denom == 0 else counts[link] / denom


def full_sort(table: dict):
    """table: link -> (history, recent); all active links in documented order."""
    active = [(l, h, r) for l, (h, r) in table.items() if h * r > 0]
    return [l for l, h, r in sorted(active, key=lambda x: (-(x[1] * x[2]), -x[2], x[0]))]


def dense_pagerank(n, edges, damping=0.85, tol=1e-14, max_iter=10_000):
    """Dense Google-matrix power iteration; edges are (u, v) index pairs."""
    adj = np.zeros((n, n))
    for u, v in set(edges):
        if u != v:
            adj[u, v] = 1.0
    out = adj.sum(axis=1, keepdims=True)
    trans = np.where(out > 0, adj / np.where(out > 0, out, 1.0), 1.0 / n)
    google = damping * trans + (1.0 - damping) / n
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = x @ google
        if np.abs(nxt - x).sum() < tol:
            x = nxt
            break
        x = nxt
    return x / x.sum()


def eigen_pagerank(n, edges, damping=0.85):
    """Stationary vector of the Google matrix via a linear solve."""
    adj = np.zeros((n, n))
    for u, v in set(edges):
        if u != v:
            adj[u, v] = 1.0
    out = adj.sum(axis=1, keepdims=True)
    trans = np.where(out > 0, adj / np.where(out > 0, out, 1.0), 1.0 / n)
    google = damping * trans + (1.0 - damping) / n
    a = google.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(a, b)


def best_subset(scores, sim, budget, cap):
    """Exhaustive: the largest feasible subsets (size <= budget) with maximal
    total score; pairwise similarity must not exceed cap.  Returns every
    optimal subset so callers can check membership under float ties."""
    n = len(scores)
    for size in range(min(budget, n), 0, -1):
        best, winners = -math.inf, []
        for combo in itertools.combinations(range(n), size):
            if any(sim[i][j] > cap for i, j in itertools.combinations(combo, 2)):
                continue
            total = sum(scores[i] for i in combo)
            if total > best + 1e-12:
                best, winners = total, [combo]
            elif abs(total - best) <= 1e-12:
                winners.append(combo)
        if winners:
            return winners
    return [()]


def cosine_tf(a_tokens, b_tokens):
    a, b = Counter(a_tokens), Counter(b_tokens)
    dot = sum(a[t] * b[t] for t in a)
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    return 0.0 if dot == 0 else dot / (na * nb)


def dense_weighted_pagerank(weights, damping=0.85, tol=1e-14, max_iter=10_000):
    """weights: n x n non-negative matrix (row = source); zero rows are dangling."""
    w = np.asarray(weights, dtype=float)
    n = len(w)
    out = w.sum(axis=1, keepdims=True)
    trans = np.where(out > 0, w / np.where(out > 0, out, 1.0), 1.0 / n)
    google = damping * trans + (1.0 - damping) / n
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = x @ google
        done = np.abs(nxt - x).sum() < tol
        x = nxt
        if done:
            break
    return x / x.sum()


def sentence_oracle(token_lists, budget, threshold=0.1, cap=0.7, damping=0.85):
    """Score sentences from scratch and return every optimal index subset."""
    n = len(token_lists)
    sim = [[cosine_tf(token_lists[i], token_lists[j]) for j in range(n)] for i in range(n)]
    weights = [
        [sim[i][j] if i != j and sim[i][j] >= threshold and sim[i][j] > 0 else 0.0 for j in range(n)]
        for i in range(n)
    ]
    scores = dense_weighted_pagerank(weights, damping)
    return best_subset(list(scores), sim, budget, cap), scores
