import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pixiefds.data import (
    FilterMode,
    FilterPolicy,
    Predicate,
    Pos,
    RawTriple,
    Vocabulary,
    build_vocabulary,
    filter_triples,
    load_raw_triples,
    load_triples,
    save_triples,
)
from pixiefds.errors import DataError, FormatError


def raw(a1, ev, a2, img="i0", base=0):
    return RawTriple(img, a1, ev, a2, base, base + 1, base + 2)


def small_vocab():
    return Vocabulary(
        [
            Predicate(0, "dog", Pos.NOUN, 2, 1, 0),
            Predicate(1, "cat", Pos.NOUN, 1, 2, 0),
            Predicate(2, "near", Pos.EVENT, 0, 0, 3),
        ]
    )


def write_triple_file(path, rows, header="# fds-triples v1"):
    lines = [header] + [
        "\t".join(
            [t.image_id, t.arg1_lemma, t.event_lemma, t.arg2_lemma,
             str(t.arg1_row), str(t.event_row), str(t.arg2_row)]
        )
        for t in rows
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_load_triples_identity_order(tmp_path):
    rows = [raw("dog", "near", "cat", base=3 * i) for i in range(3)]
    path = tmp_path / "t.tsv"
    write_triple_file(path, rows)
    triples, rejected = load_triples(path, small_vocab())
    assert rejected == 0
    assert [t.arg1_feat for t in triples] == [0, 3, 6]
    assert [t.arg1_pred for t in triples] == [0, 0, 0]


def test_load_triples_unknown_lemma_rejected(tmp_path):
    path = tmp_path / "t.tsv"
    write_triple_file(path, [raw("dog", "near", "unicorn")])
    triples, rejected = load_triples(path, small_vocab())
    assert triples == [] and rejected == 1


def test_load_triples_bad_header(tmp_path):
    path = tmp_path / "t.tsv"
    write_triple_file(path, [raw("dog", "near", "cat")], header="# wrong v9")
    with pytest.raises(FormatError):
        load_raw_triples(path)


def test_load_triples_empty_file(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("# fds-triples v1\n")
    with pytest.raises(DataError):
        load_raw_triples(path)


def test_save_load_round_trip(tmp_path):
    rows = [raw("dog", "near", "cat"), raw("cat", "near", "dog", base=3)]
    path = tmp_path / "t.tsv"
    save_triples(path, rows)
    assert load_raw_triples(path) == rows


def make_corpus(counts):
    """counts: list of (a1, ev, a2, n) row templates repeated n times."""
    rows = []
    for a1, ev, a2, n in counts:
        rows.extend(raw(a1, ev, a2, base=3 * len(rows)) for _ in range(n))
    return rows


def test_strict_requires_both_directions():
    # "solo" appears 100 times as ARG1 but never as ARG2: excluded.
    rows = make_corpus(
        [("solo", "near", "dog", 100), ("dog", "near", "dog", 100)]
    )
    vocab = build_vocabulary(rows, FilterPolicy(FilterMode.STRICT))
    assert "dog" in vocab and "near" in vocab
    assert "solo" not in vocab


def test_loose_accepts_one_direction():
    rows = make_corpus(
        [("solo", "near", "dog", 10), ("dog", "near", "dog", 10)]
    )
    vocab = build_vocabulary(rows, FilterPolicy(FilterMode.LOOSE))
    assert "solo" in vocab


def test_event_threshold():
    rows = make_corpus(
        [("dog", "rare_event", "dog", 5), ("dog", "near", "dog", 100)]
    )
    vocab = build_vocabulary(rows, FilterPolicy(FilterMode.STRICT))
    assert "near" in vocab and "rare_event" not in vocab


def test_filter_triples_identity_and_drop():
    vocab = small_vocab()
    keep = raw("dog", "near", "cat")
    drop = raw("dog", "near", "unicorn")
    assert filter_triples([keep], vocab) == [keep]
    assert filter_triples([keep, drop], vocab) == [keep]
    assert filter_triples([], vocab) == []


def test_vocab_tsv_round_trip(tmp_path):
    vocab = small_vocab()
    path = tmp_path / "v.tsv"
    vocab.save(path)
    back = Vocabulary.load(path)
    assert back.lookup == vocab.lookup
    assert [p.pos for p in back] == [p.pos for p in vocab]


def test_multiword_lemma_normalized(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text(
        "# fds-triples v1\nimg\tbig  Dog\tnear\tcat\t0\t1\t2\n", encoding="utf-8"
    )
    t = load_raw_triples(path)[0]
    assert t.arg1_lemma == "big_dog"


lemma_st = st.sampled_from(["a", "b", "c", "d", "e", "ev1", "ev2"])
triple_st = st.builds(
    lambda a1, ev, a2: raw(a1, ev, a2),
    lemma_st,
    st.sampled_from(["ev1", "ev2"]),
    lemma_st,
)


@settings(max_examples=50, deadline=None)
@given(st.lists(triple_st, min_size=1, max_size=60))
def test_vocabulary_idempotent_and_filter_in_vocab(rows):
    policy = FilterPolicy(FilterMode.LOOSE, loose_threshold=2)
    try:
        vocab = build_vocabulary(rows, policy)
    except DataError:
        return  # every predicate filtered out
    kept = filter_triples(rows, vocab)
    for t in kept:
        assert t.arg1_lemma in vocab
        assert t.event_lemma in vocab
        assert t.arg2_lemma in vocab
    if kept:
        try:
            vocab2 = build_vocabulary(kept, policy)
        except DataError:
            return
        assert set(vocab2.lookup) <= set(vocab.lookup)


@settings(max_examples=30, deadline=None)
@given(st.lists(triple_st, min_size=5, max_size=80))
def test_strict_subset_of_loose(rows):
    strict = FilterPolicy(FilterMode.STRICT, strict_threshold=4)
    loose = FilterPolicy(FilterMode.LOOSE, loose_threshold=2)
    try:
        vs = build_vocabulary(rows, strict)
    except DataError:
        return
    vl = build_vocabulary(rows, loose)
    assert set(vs.lookup) <= set(vl.lookup)
