"""Extrinsic evaluation: rank-based similarity scoring and metrics.

A pair is scored by inferring a posterior from its first predicate (or
triple), applying every candidate's semantic function to the inferred
pixie, and taking the rank of the second predicate among the dataset's
candidates. Smaller rank means more similar; correlations use the
negated rank so larger means more similar.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .data import Pos
from .errors import DataError
from .inference import (
    InferenceConfig,
    ObservationPattern,
    infer_posterior,
    node_truths,
)
from .validation import check_matrix


@dataclass(frozen=True)
class WordPairItem:
    w1: str
    w2: str
    gold: float


@dataclass(frozen=True)
class TriplePairItem:
    subject: str
    verb1: str
    object: str
    verb2: str
    gold: float


@dataclass(frozen=True)
class RelpronProperty:
    head_noun: str
    event: str
    other_noun: str
    clause_type: str  # SUBJECT | OBJECT
    relevant: bool = False


@dataclass(frozen=True)
class RelpronItem:
    term: str
    properties: tuple


@dataclass
class EvalResult:
    dataset: str
    metric: str
    value: float
    n_items: int
    model_scores: np.ndarray
    gold_scores: np.ndarray


def spearman(x, y):
    """Spearman rank correlation with midrank tie correction."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 3:
        raise DataError("spearman needs two equal-length lists of >= 3 values")
    rx, ry = rankdata(x), rankdata(y)
    if np.all(rx == rx[0]) or np.all(ry == ry[0]):
        raise DataError("spearman is undefined for a constant input list")
    return float(np.corrcoef(rx, ry)[0, 1])


def average_precision(relevance):
    """AP of one ranked binary relevance list."""
    relevance = np.asarray(relevance, dtype=bool)
    if not relevance.any():
        raise DataError("average precision needs at least one relevant item")
    hits = np.cumsum(relevance)
    precisions = hits[relevance] / (np.flatnonzero(relevance) + 1)
    return float(precisions.mean())


def mean_average_precision(relevance_lists):
    """MAP over queries, each a ranked binary relevance list."""
    if not relevance_lists:
        raise DataError("MAP needs at least one query")
    return float(np.mean([average_precision(r) for r in relevance_lists]))


def rank_of(target, candidates, q, node, lexicon):
    """Midrank of the target among candidates, by descending truth."""
    candidates = list(candidates)
    if target not in candidates:
        raise DataError("target predicate must be among the candidates")
    truths = node_truths(q, node, lexicon)
    scores = np.array([truths[c] for c in candidates])
    # rank 1 = highest truth; midranks for ties.
    ranks = rankdata(-scores)
    return float(ranks[candidates.index(target)])


def _infer(pattern_dict, lexicon, world, config):
    pattern = ObservationPattern(
        {node: lexicon.vocab.id_of(lemma) for node, lemma in pattern_dict.items()}
    )
    q, _ = infer_posterior(pattern, lexicon, world, config)
    return q


def eval_word_pairs(dataset, lexicon, world, config=None, node="X"):
    """Spearman of -rank(w2 | inferred w1) against gold, over word pairs."""
    config = config or InferenceConfig()
    if not dataset:
        raise DataError("empty word-pair dataset")
    candidates = sorted({item.w2 for item in dataset})
    cand_ids = [lexicon.vocab.id_of(w) for w in candidates]
    scores, golds = [], []
    for item in dataset:
        q = _infer({node: item.w1}, lexicon, world, config)
        scores.append(-rank_of(lexicon.vocab.id_of(item.w2), cand_ids, q, node, lexicon))
        golds.append(item.gold)
    scores = np.array(scores)
    golds = np.array(golds)
    return EvalResult(
        dataset="word-pairs",
        metric="spearman",
        value=spearman(scores, golds),
        n_items=len(dataset),
        model_scores=scores,
        gold_scores=golds,
    )


def eval_triple_pairs(dataset, lexicon, world, config=None):
    """Spearman over judgment records: infer from the first triple, rank
    the second verb at node Y among the dataset's verb2 candidates."""
    config = config or InferenceConfig()
    if not dataset:
        raise DataError("empty triple-pair dataset")
    candidates = sorted({item.verb2 for item in dataset})
    cand_ids = [lexicon.vocab.id_of(v) for v in candidates]
    scores, golds = [], []
    cache = {}
    for item in dataset:
        key = (item.subject, item.verb1, item.object)
        if key not in cache:
            cache[key] = _infer(
                {"X": item.subject, "Y": item.verb1, "Z": item.object},
                lexicon,
                world,
                config,
            )
        q = cache[key]
        scores.append(
            -rank_of(lexicon.vocab.id_of(item.verb2), cand_ids, q, "Y", lexicon)
        )
        golds.append(item.gold)
    scores = np.array(scores)
    golds = np.array(golds)
    return EvalResult(
        dataset="triple-pairs",
        metric="spearman",
        value=spearman(scores, golds),
        n_items=len(dataset),
        model_scores=scores,
        gold_scores=golds,
    )


def eval_relpron(dataset, lexicon, world, config=None):
    """MAP of ranking each term's properties by the term's expected truth
    at the property's head node.

    SUBJECT clauses put the head noun at X ({X: head, Y: event,
    Z: other}); OBJECT clauses put it at Z ({X: other, Y: event,
    Z: head}).
    """
    config = config or InferenceConfig()
    if not dataset:
        raise DataError("empty RELPRON dataset")
    qcache = {}

    def posterior_and_node(prop):
        if prop.clause_type == "SUBJECT":
            pat = {"X": prop.head_noun, "Y": prop.event, "Z": prop.other_noun}
            node = "X"
        elif prop.clause_type == "OBJECT":
            pat = {"X": prop.other_noun, "Y": prop.event, "Z": prop.head_noun}
            node = "Z"
        else:
            raise DataError(f"invalid clause type {prop.clause_type!r}")
        key = tuple(sorted(pat.items()))
        if key not in qcache:
            qcache[key] = _infer(pat, lexicon, world, config)
        return qcache[key], node

    relevance_lists = []
    per_term_ap = {}
    for item in dataset:
        if not any(p.relevant for p in item.properties):
            raise DataError(f"term {item.term!r} has no relevant property")
        term_id = lexicon.vocab.id_of(item.term)
        scored = []
        for prop in item.properties:
            q, node = posterior_and_node(prop)
            truths = node_truths(q, node, lexicon)
            scored.append((float(truths[term_id]), prop.relevant))
        scored.sort(key=lambda t: -t[0])
        rel = [r for _, r in scored]
        relevance_lists.append(rel)
        per_term_ap[item.term] = average_precision(rel)

    value = mean_average_precision(relevance_lists)
    return EvalResult(
        dataset="relpron",
        metric="map",
        value=value,
        n_items=len(dataset),
        model_scores=np.array(list(per_term_ap.values())),
        gold_scores=np.ones(len(per_term_ap)),
    )


def filter_dataset(dataset, vocab, mode="loose"):
    """Keep items whose required lemmas all resolve in the vocabulary.

    ``strict`` additionally requires every resolved lemma to be a noun
    predicate (the strict-vocabulary protocol covers nouns only);
    ``loose`` accepts any POS. Returns (filtered, kept, total).
    """

    def in_vocab(lemma):
        if lemma not in vocab:
            return False
        if mode == "strict":
            return vocab[vocab.id_of(lemma)].pos is Pos.NOUN
        return True

    def required(item):
        if isinstance(item, WordPairItem):
            return [item.w1, item.w2]
        if isinstance(item, TriplePairItem):
            return [item.subject, item.verb1, item.object, item.verb2]
        if isinstance(item, RelpronItem):
            return [item.term] + [
                lemma
                for p in item.properties
                for lemma in (p.head_noun, p.event, p.other_noun)
            ]
        raise DataError(f"unsupported dataset item {type(item).__name__}")

    total = len(dataset)
    filtered = []
    for item in dataset:
        if isinstance(item, RelpronItem):
            props = tuple(
                p
                for p in item.properties
                if all(in_vocab(x) for x in (p.head_noun, p.event, p.other_noun))
            )
            if in_vocab(item.term) and any(p.relevant for p in props):
                filtered.append(RelpronItem(item.term, props))
        elif all(in_vocab(x) for x in required(item)):
            filtered.append(item)
    return filtered, len(filtered), total


def retrieval_baseline(pred, triples, pixies):
    """Mean pixie over occurrences of a predicate (position respected)."""
    pixies = check_matrix(pixies, "pixies")
    rows = []
    for t in triples:
        if t.arg1_pred == pred:
            rows.append(t.arg1_feat)
        if t.event_pred == pred:
            rows.append(t.event_feat)
        if t.arg2_pred == pred:
            rows.append(t.arg2_feat)
    if not rows:
        raise DataError(f"predicate {pred} never occurs in the triples")
    return pixies[np.array(rows)].mean(axis=0)


def cosine(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))


def bootstrap_test(scores_a, scores_b, gold, metric, samples=1000, seed=0):
    """Two-tailed paired bootstrap p-value for metric(a) - metric(b).

    Items are resampled with replacement; the p-value is the fraction of
    resampled differences at least as extreme (in absolute value) as the
    observed difference, with sign flipped around zero.
    """
    scores_a = np.asarray(scores_a, dtype=np.float64)
    scores_b = np.asarray(scores_b, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if not (scores_a.shape == scores_b.shape == gold.shape):
        raise DataError("bootstrap inputs must be paired and equal-length")
    if np.array_equal(scores_a, scores_b):
        return 1.0
    observed = metric(scores_a, gold) - metric(scores_b, gold)
    rng = np.random.default_rng(seed)
    n = gold.shape[0]
    extreme = 0
    valid = 0
    for _ in range(samples):
        idx = rng.integers(0, n, size=n)
        try:
            diff = metric(scores_a[idx], gold[idx]) - metric(scores_b[idx], gold[idx])
        except DataError:
            continue  # degenerate resample (constant ranks)
        valid += 1
        # Two-tailed: center the bootstrap distribution on the observed
        # difference and test the displacement against |observed|.
        if abs(diff - observed) >= abs(observed):
            extreme += 1
    if valid == 0:
        raise DataError("every bootstrap resample was degenerate")
    return float(extreme / valid)
