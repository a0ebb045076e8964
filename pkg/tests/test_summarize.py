import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linkpulse.counters import CounterSnapshot, CounterStore
from linkpulse.errors import EmptyQuery, NoContent, UnknownSite
from linkpulse.popularity import top_k_links
from linkpulse.summarize import (
    PageDoc,
    corpus_filename,
    filter_by_query,
    load_corpus,
    prune_popular,
    representative_pages,
    sentence_scores,
    sentences_of,
    similarity_matrix,
    split_sentences,
    summarize,
    tokenize,
)
from oracles import sentence_oracle

VISITS = {"/admissions": 40, "/research": 25, "/campus": 18, "/archive": 2}


@pytest.fixture
def corpus(data_dir):
    return load_corpus(data_dir / "corpus", data_dir / "corpus_manifest.json")


@pytest.fixture
def uni_snapshot():
    store = CounterStore()
    t = 0
    for link, n in VISITS.items():
        for _ in range(n):
            store.record("uni.example", link, t)
            t += 1
    return store.snapshot()


def test_tokenize_and_split():
    assert tokenize("Hello, World! it's 2024.") == ["hello", "world", "it", "s", "2024"]
    assert split_sentences("One. Two!  Three?\nFour") == ["One.", "Two!", "Three?", "Four"]
    assert split_sentences("v1.2 is out. Done.") == ["v1.2 is out.", "Done."]


def test_empty_doc_rejected():
    with pytest.raises(ValueError):
        PageDoc("s", "/a", "   \n ")


def test_prune_keeps_top_k(corpus, uni_snapshot):
    kept = prune_popular(uni_snapshot, "uni.example", corpus, 2)
    assert sorted(d.link for d in kept) == ["/admissions", "/research"]
    everything = prune_popular(uni_snapshot, "uni.example", corpus, 10)
    assert {d.key for d in everything} == {d.key for d in corpus}


def test_prune_multi_site_union():
    snap = CounterSnapshot({"a": {"/x": (5, 5), "/y": (1, 1)}, "b": {"/p": (2, 2), "/q": (9, 9)}}, 0)
    docs = [PageDoc(s, l, "Some text here.") for s, l in [("a", "/x"), ("a", "/y"), ("b", "/p"), ("b", "/q")]]
    kept = prune_popular(snap, ["a", "b"], docs, 1)
    assert sorted(d.key for d in kept) == [("a", "/x"), ("b", "/q")]
    assert prune_popular(snap, ["missing"], docs, 3) == []


def test_prune_reports_missing_docs(uni_snapshot, caplog):
    docs = [PageDoc("uni.example", "/admissions", "Apply now.")]
    with caplog.at_level("WARNING"):
        prune_popular(uni_snapshot, "uni.example", docs, 2)
    assert "uni.example/research" in caplog.text


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.sampled_from("abcdefgh"), st.integers(1, 30), min_size=1), st.integers(1, 8))
def test_prune_monotone_in_k(counts, k):
    snap = CounterSnapshot({"s": {f"/{c}": (n, n) for c, n in counts.items()}}, 0)
    docs = [PageDoc("s", f"/{c}", "text.") for c in counts]
    small = {d.key for d in prune_popular(snap, "s", docs, k)}
    large = {d.key for d in prune_popular(snap, "s", docs, k + 1)}
    assert small <= large


def test_filter_by_query(corpus):
    assert filter_by_query(corpus, "zeppelin") == []
    assert [d.link for d in filter_by_query(corpus, "observatory")] == ["/archive"]
    got = {d.link for d in filter_by_query(corpus, ["observatory", "HOUSING"])}
    expected = {d.link for d in corpus if {"observatory", "housing"} & set(tokenize(d.text))}
    assert got == expected == {"/archive", "/campus"}
    with pytest.raises(EmptyQuery):
        filter_by_query(corpus, "  ,, ")


def test_whole_token_match_only():
    docs = [PageDoc("s", "/a", "Researchers met.")]
    assert filter_by_query(docs, "research") == []


def test_single_sentence():
    doc = PageDoc("s", "/a", "Only one sentence here.")
    assert [s.text for s in summarize([doc], 1).sentences] == ["Only one sentence here."]


def test_duplicate_sentence_selected_once():
    docs = [
        PageDoc("s", "/a", "The cat sat on the mat. Dogs bark at night."),
        PageDoc("s", "/b", "The cat sat on the mat. Birds sing at dawn."),
    ]
    texts = [s.text for s in summarize(docs, 2).sentences]
    assert texts.count("The cat sat on the mat.") == 1
    assert len(texts) == 2


def test_no_content():
    with pytest.raises(NoContent):
        summarize([], 3)
    docs = [PageDoc("s", "/a", "Nothing relevant.")]
    with pytest.raises(NoContent):
        summarize(docs, 3, mode="query", query="zeppelin")


def test_scores_are_a_distribution(corpus):
    sents = [s for d in corpus for s in sentences_of(d)]
    scores = sentence_scores(similarity_matrix(sents))
    assert abs(sum(scores) - 1.0) <= 1e-9


@pytest.mark.parametrize("budget", [1, 2, 3, 4])
def test_fixture_matches_exhaustive_oracle(corpus, uni_snapshot, budget):
    pruned = prune_popular(uni_snapshot, "uni.example", corpus, 3)
    assert len(pruned) == 3
    summary = summarize(pruned, budget)
    sents = [s for d in sorted(pruned, key=lambda d: d.key) for s in sentences_of(d)]
    assert len(sents) <= 30
    optimal, scores = sentence_oracle([list(s.tokens) for s in sents], budget)
    picked = tuple(sents.index(s) for s in summary.sentences)
    assert picked in optimal


def test_query_mode_provenance(corpus, uni_snapshot):
    pruned = prune_popular(uni_snapshot, "uni.example", corpus, 3)
    summary = summarize(pruned, 3, mode="query", query="library")
    assert summary.mode == "query" and summary.sentences
    for s in summary.sentences:
        page = next(d for d in pruned if d.key == (s.site, s.link))
        assert "library" in tokenize(page.text)


def test_representative_pages(corpus, uni_snapshot):
    reps = representative_pages(uni_snapshot, "uni.example", 3, corpus[:1])
    assert [l for l, _ in reps] == [l for l, _ in top_k_links(uni_snapshot, "uni.example", 3)]
    docs = dict(reps)
    assert docs["/admissions"] is not None and docs["/research"] is None
    assert [l for l, _ in representative_pages(uni_snapshot, "uni.example", 1)] == ["/admissions"]
    with pytest.raises(UnknownSite):
        representative_pages(uni_snapshot, "nope.example", 1)


def test_corpus_filename():
    assert corpus_filename("uni.example", "/a/b c") == "uni.example__a_b_c.txt"


WORDS = "alpha beta gamma delta river stone light cloud maple sound".split()


def random_corpus(rng):
    sites = ["s1", "s2"]
    docs, table = [], {}
    for site in sites:
        for i in range(rng.randint(1, 4)):
            n_sent = rng.randint(1, 4)
            text = " ".join(
                " ".join(rng.choice(WORDS) for _ in range(rng.randint(2, 6))).capitalize() + "."
                for _ in range(n_sent)
            )
            docs.append(PageDoc(site, f"/p{i}", text))
            table.setdefault(site, {})[f"/p{i}"] = (rng.randint(0, 9), rng.randint(0, 9))
    table = {s: {l: (max(h, r), min(h, r)) for l, (h, r) in t.items()} for s, t in table.items()}
    return docs, CounterSnapshot(table, 0)


def test_random_corpora_invariants():
    rng = random.Random(8)
    for trial in range(100):
        docs, snap = random_corpus(rng)
        k, budget = rng.randint(1, 3), rng.randint(1, 5)
        pruned = prune_popular(snap, ["s1", "s2"], docs, k)
        allowed = {d.key for d in pruned}
        mode = "query" if trial % 2 else "generic"
        query = rng.choice(WORDS)
        try:
            summary = summarize(pruned, budget, mode, query)
        except NoContent:
            candidates = pruned if mode == "generic" else filter_by_query(pruned, query)
            assert not candidates
            continue
        assert len(summary.sentences) <= budget
        for s in summary.sentences:
            assert (s.site, s.link) in allowed
            if mode == "query":
                page = next(d for d in pruned if d.key == (s.site, s.link))
                assert query in tokenize(page.text)
        if len(summary.sentences) < budget:
            # every unpicked sentence must be blocked by the redundancy cap
            pool = pruned if mode == "generic" else filter_by_query(pruned, query)
            sents = [x for d in sorted(pool, key=lambda d: d.key) for x in sentences_of(d)]
            sim = similarity_matrix(sents)
            chosen = [sents.index(x) for x in summary.sentences]
            for i in range(len(sents)):
                if i not in chosen:
                    assert any(sim[i][j] > 0.7 for j in chosen)


def test_deterministic(corpus, uni_snapshot):
    pruned = prune_popular(uni_snapshot, "uni.example", corpus, 3)
    assert summarize(pruned, 3).to_json() == summarize(list(reversed(pruned)), 3).to_json()
