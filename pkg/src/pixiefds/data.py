"""Domain types and ingestion of relation-triple annotations.

Triple TSV format: a header line ``# fds-triples v1`` followed by rows
``image_id  arg1_lemma  event_lemma  arg2_lemma  arg1_row  event_row
arg2_row`` (tab-separated, UTF-8). Row indices point into a feature
file: ARG1 and ARG2 rows hold bounding-box features, the event row
holds whole-image features.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .errors import DataError, FormatError

log = logging.getLogger(__name__)

TRIPLE_HEADER = "# fds-triples v1"


class Pos(str, Enum):
    NOUN = "NOUN"
    EVENT = "EVENT"


class FilterMode(str, Enum):
    STRICT = "STRICT"
    LOOSE = "LOOSE"


@dataclass(frozen=True)
class Predicate:
    id: int
    lemma: str
    pos: Pos
    freq_arg1: int = 0
    freq_arg2: int = 0
    freq_event: int = 0

    def __post_init__(self):
        if not self.lemma:
            raise DataError("predicate lemma must be nonempty")
        if min(self.freq_arg1, self.freq_arg2, self.freq_event) < 0:
            raise DataError("predicate frequencies must be >= 0")


class Vocabulary:
    """An ordered predicate list with a lemma -> id lookup.

    Iteration order is the construction order, stable across runs.
    """

    def __init__(self, predicates):
        self.predicates = list(predicates)
        self.lookup = {}
        for i, p in enumerate(self.predicates):
            if p.id != i:
                raise DataError("predicate ids must be consecutive from 0")
            if p.lemma in self.lookup:
                raise DataError(f"duplicate lemma {p.lemma!r} in vocabulary")
            self.lookup[p.lemma] = p.id

    def __len__(self):
        return len(self.predicates)

    def __iter__(self):
        return iter(self.predicates)

    def __contains__(self, lemma):
        return lemma in self.lookup

    def id_of(self, lemma):
        try:
            return self.lookup[lemma]
        except KeyError:
            raise DataError(f"unknown lemma {lemma!r}") from None

    def __getitem__(self, pred_id):
        return self.predicates[pred_id]

    def lemma_of(self, pred_id):
        return self.predicates[pred_id].lemma

    def to_tsv_lines(self):
        return [
            f"{p.lemma}\t{p.pos.value}\t{p.freq_arg1}\t{p.freq_arg2}\t{p.freq_event}"
            for p in self.predicates
        ]

    @classmethod
    def from_tsv_lines(cls, lines):
        preds = []
        for i, line in enumerate(lines):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 5:
                raise FormatError(f"vocabulary line {i}: expected 5 fields")
            lemma, pos, f1, f2, fe = parts
            preds.append(
                Predicate(i, lemma, Pos(pos), int(f1), int(f2), int(fe))
            )
        return cls(preds)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for line in self.to_tsv_lines():
                f.write(line + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_tsv_lines(f.readlines())


@dataclass(frozen=True)
class RawTriple:
    """A parsed triple row before vocabulary resolution."""

    image_id: str
    arg1_lemma: str
    event_lemma: str
    arg2_lemma: str
    arg1_row: int
    event_row: int
    arg2_row: int


@dataclass(frozen=True)
class LabeledTriple:
    """A triple with predicates resolved to vocabulary ids."""

    image_id: str
    arg1_pred: int
    event_pred: int
    arg2_pred: int
    arg1_feat: int
    event_feat: int
    arg2_feat: int


@dataclass(frozen=True)
class FilterPolicy:
    mode: FilterMode = FilterMode.STRICT
    strict_threshold: int = 100
    loose_threshold: int = 10

    def __post_init__(self):
        if self.strict_threshold < 1 or self.loose_threshold < 1:
            raise DataError("filter thresholds must be >= 1")


def normalize_lemma(lemma):
    """Multi-word predicates become single symbols (spaces -> underscores)."""
    return "_".join(lemma.strip().lower().split())


def _parse_row(line, lineno):
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 7:
        raise DataError(f"line {lineno}: expected 7 tab-separated fields")
    image_id, a1, ev, a2, r1, re_, r2 = parts
    rows = []
    for v in (r1, re_, r2):
        iv = int(v)
        if iv < 0:
            raise DataError(f"line {lineno}: negative feature row index")
        rows.append(iv)
    return RawTriple(
        image_id,
        normalize_lemma(a1),
        normalize_lemma(ev),
        normalize_lemma(a2),
        *rows,
    )


def load_raw_triples(path):
    """Parse a triple TSV without resolving predicates."""
    triples = []
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != TRIPLE_HEADER:
            raise FormatError(f"bad triple file header: {header!r}")
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            triples.append(_parse_row(line, lineno))
    if not triples:
        raise DataError(f"no triples in {path}")
    return triples


def load_triples(path, vocab):
    """Load a triple TSV, resolving lemmas against ``vocab``.

    Rows whose lemmas are not all in the vocabulary are dropped and
    counted. Returns ``(triples, n_rejected)``.
    """
    raw = load_raw_triples(path)
    triples, rejected = [], 0
    for t in raw:
        if (
            t.arg1_lemma in vocab
            and t.event_lemma in vocab
            and t.arg2_lemma in vocab
        ):
            triples.append(
                LabeledTriple(
                    t.image_id,
                    vocab.id_of(t.arg1_lemma),
                    vocab.id_of(t.event_lemma),
                    vocab.id_of(t.arg2_lemma),
                    t.arg1_row,
                    t.event_row,
                    t.arg2_row,
                )
            )
        else:
            rejected += 1
    if rejected:
        log.warning("load_triples: rejected %d rows with unknown lemmas", rejected)
    return triples, rejected


def save_triples(path, triples, vocab=None):
    """Write triples back out in the TSV format.

    ``triples`` may be RawTriple or LabeledTriple (then ``vocab`` is
    required to recover lemmas).
    """
    with open(path, "w", encoding="utf-8") as f:
        f.write(TRIPLE_HEADER + "\n")
        for t in triples:
            if isinstance(t, RawTriple):
                a1, ev, a2 = t.arg1_lemma, t.event_lemma, t.arg2_lemma
                r1, re_, r2 = t.arg1_row, t.event_row, t.arg2_row
            else:
                a1 = vocab.lemma_of(t.arg1_pred)
                ev = vocab.lemma_of(t.event_pred)
                a2 = vocab.lemma_of(t.arg2_pred)
                r1, re_, r2 = t.arg1_feat, t.event_feat, t.arg2_feat
            f.write(f"{t.image_id}\t{a1}\t{ev}\t{a2}\t{r1}\t{re_}\t{r2}\n")


def count_frequencies(raw_triples):
    """Single-pass frequency counts on the raw corpus."""
    arg1, arg2, event = Counter(), Counter(), Counter()
    for t in raw_triples:
        arg1[t.arg1_lemma] += 1
        arg2[t.arg2_lemma] += 1
        event[t.event_lemma] += 1
    return arg1, arg2, event


def build_vocabulary(raw_triples, policy: FilterPolicy):
    """Count predicate frequencies, apply the policy, return a Vocabulary.

    STRICT keeps a noun only if it clears the threshold in both the ARG1
    and ARG2 directions; LOOSE keeps it if either direction clears the
    (lower) threshold. Event predicates are held to the same numeric
    threshold on their own frequency. A lemma seen in both argument and
    event positions is kept if either rule passes; its POS reflects its
    majority position.
    """
    if not raw_triples:
        raise DataError("cannot build a vocabulary from zero triples")
    arg1, arg2, event = count_frequencies(raw_triples)
    lemmas = sorted(set(arg1) | set(arg2) | set(event))

    kept = []
    for lemma in lemmas:
        f1, f2, fe = arg1[lemma], arg2[lemma], event[lemma]
        if policy.mode is FilterMode.STRICT:
            t = policy.strict_threshold
            noun_ok = f1 >= t and f2 >= t
            event_ok = fe >= t
        else:
            t = policy.loose_threshold
            noun_ok = max(f1, f2) >= t
            event_ok = fe >= t
        if not (noun_ok or event_ok):
            continue
        pos = Pos.NOUN if (f1 + f2) >= fe else Pos.EVENT
        kept.append((lemma, pos, f1, f2, fe))

    if not kept:
        raise DataError("filter policy removed every predicate")
    return Vocabulary(
        Predicate(i, lemma, pos, f1, f2, fe)
        for i, (lemma, pos, f1, f2, fe) in enumerate(kept)
    )


def filter_triples(triples, vocab):
    """Keep exactly the triples whose three predicates are in ``vocab``.

    Accepts RawTriple (lemma membership) or LabeledTriple (id validity).
    Order is preserved; the result may be empty.
    """
    out = []
    for t in triples:
        if isinstance(t, RawTriple):
            ok = (
                t.arg1_lemma in vocab
                and t.event_lemma in vocab
                and t.arg2_lemma in vocab
            )
        else:
            ok = all(
                0 <= p < len(vocab)
                for p in (t.arg1_pred, t.event_pred, t.arg2_pred)
            )
        if ok:
            out.append(t)
    return out
