"""Semantic functions and their supervised training.

Each predicate r has a weight vector v_r defining a sigmoid truth
classifier t_r(x) = sigmoid(v_r . x) over pixies. A predicate is
generated for a pixie with probability proportional to its truth.
Training maximizes the per-pair objective

    (1 + alpha) * log t_r(x) - log sum_i t_i(x)   (mean over pairs)
    - l2_weight * ||W||^2

by mini-batch adaptive-moment ascent with a step learning-rate decay.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import formats
from .data import Vocabulary
from .errors import DataError, NumericalError
from .optim import AdamAscent, StepSchedule
from .validation import check_matrix

log = logging.getLogger(__name__)


def sigmoid(a):
    a = np.asarray(a, dtype=np.float64)
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def log_sigmoid(a):
    """log(sigmoid(a)) without underflow for very negative a."""
    return -np.logaddexp(0.0, -np.asarray(a, dtype=np.float64))


@dataclass
class Lexicon:
    """A trained set of semantic functions over a fixed vocabulary."""

    vocab: Vocabulary
    weights: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape[0] != len(self.vocab):
            raise DataError("weight rows must match vocabulary size")
        if not np.all(np.isfinite(self.weights)):
            raise DataError("lexicon weights must be finite")
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float64)
            if self.bias.shape != (len(self.vocab),):
                raise DataError("bias must have one entry per predicate")

    @property
    def dim(self):
        return self.weights.shape[1]

    def _check_pred(self, r):
        if not (0 <= r < len(self.vocab)):
            raise DataError(f"unknown predicate id {r}")

    def preactivations(self, x):
        """v_r . x (+ bias) for every predicate; x may be a batch."""
        x = np.asarray(x, dtype=np.float64)
        a = x @ self.weights.T
        if self.bias is not None:
            a = a + self.bias
        return a

    def truth(self, r, x):
        """sigmoid(v_r . x), overflow-safe."""
        self._check_pred(r)
        x = np.asarray(x, dtype=np.float64)
        a = x @ self.weights[r]
        if self.bias is not None:
            a = a + self.bias[r]
        return sigmoid(a) if np.ndim(a) else float(sigmoid(a))

    def log_truth(self, r, x):
        self._check_pred(r)
        a = np.asarray(x, dtype=np.float64) @ self.weights[r]
        if self.bias is not None:
            a = a + self.bias[r]
        return log_sigmoid(a) if np.ndim(a) else float(log_sigmoid(a))

    def truths(self, x):
        """Truth of every predicate for pixie(s) x."""
        return sigmoid(self.preactivations(x))

    def generation_prob(self, r, x):
        """P(r | x) = t_r(x) / sum_i t_i(x)."""
        self._check_pred(r)
        t = self.truths(x)
        return float(t[r] / t.sum()) if t.ndim == 1 else t[:, r] / t.sum(axis=1)

    def generation_probs(self, x):
        t = self.truths(x)
        return t / t.sum(axis=-1, keepdims=True)

    def total_truth(self, x):
        return self.truths(x).sum(axis=-1)

    def save(self, path):
        formats.write_lexicon(
            path, self.vocab.to_tsv_lines(), self.weights, self.bias
        )

    @classmethod
    def load(cls, path):
        lines, weights, bias = formats.read_lexicon(path)
        return cls(Vocabulary.from_tsv_lines(lines), weights, bias)


def pair_training_set(triples, feature_rows, pca=None):
    """Flatten triples into (pixie, predicate) pairs.

    Each LabeledTriple contributes its ARG1, event and ARG2 pixies with
    their observed predicates. ``feature_rows`` maps a row index to a
    raw feature vector (e.g. a FeatureFile's rows); ``pca`` optionally
    maps raw features to pixie space.
    """
    idx = np.array(
        [
            i
            for t in triples
            for i in (t.arg1_feat, t.event_feat, t.arg2_feat)
        ],
        dtype=np.int64,
    )
    preds = np.array(
        [
            p
            for t in triples
            for p in (t.arg1_pred, t.event_pred, t.arg2_pred)
        ],
        dtype=np.int64,
    )
    X = np.asarray(feature_rows)[idx]
    if pca is not None:
        X = pca.transform(X)
    return X, preds


def lexicon_loss_and_grad(weights, X, y, alpha=0.0, l2_weight=0.0, bias=None):
    """Objective value and gradient for one batch.

    Returns (loss, grad_weights, grad_bias); grad_bias is None when no
    bias is used. The data term is a mean over pairs so batch size does
    not rescale the L2 penalty.
    """
    A = X @ weights.T
    if bias is not None:
        A = A + bias
    T = sigmoid(A)
    S = T.sum(axis=1)
    B = X.shape[0]
    rows = np.arange(B)
    loss = float(
        np.mean((1.0 + alpha) * log_sigmoid(A[rows, y]) - np.log(S))
        - l2_weight * np.sum(weights**2)
    )
    # d/dA: (1+alpha)(1 - t_y) at the observed entry, minus t(1-t)/S.
    G = -(T * (1.0 - T)) / S[:, None]
    G[rows, y] += (1.0 + alpha) * (1.0 - T[rows, y])
    grad_w = G.T @ X / B - 2.0 * l2_weight * weights
    grad_b = G.sum(axis=0) / B if bias is not None else None
    return loss, grad_w, grad_b


@dataclass
class LexiconTrainConfig:
    l2_weight: float = 5e-8
    epochs: int = 40
    lr: float = 0.01
    lr_decay: float = 0.4
    lr_step_epochs: int = 5
    alpha: float = 0.0
    batch_size: int = 1024
    seed: int = 0
    add_bias: bool = False

    def __post_init__(self):
        if self.lr <= 0 or not (0 < self.lr_decay <= 1) or self.alpha < 0:
            raise DataError("invalid lexicon training configuration")
        if self.epochs < 1 or self.batch_size < 1 or self.lr_step_epochs < 1:
            raise DataError("invalid lexicon training configuration")


@dataclass
class TrainingLog:
    epochs: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    lrs: list = field(default_factory=list)

    def append(self, epoch, loss, lr):
        self.epochs.append(epoch)
        self.losses.append(loss)
        self.lrs.append(lr)

    def to_tsv_lines(self):
        return [
            f"{e}\t{l:.8f}\t{r:.6g}"
            for e, l, r in zip(self.epochs, self.losses, self.lrs)
        ]


class LexiconTrainer(BaseEstimator):
    """Fits a Lexicon from (pixie, predicate-id) pairs."""

    def __init__(self, vocab, config: LexiconTrainConfig | None = None):
        self.vocab = vocab
        self.config = config or LexiconTrainConfig()

    def fit(self, X, y):
        X = check_matrix(X, "pixies")
        y = np.asarray(y, dtype=np.int64)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError("y must align with X rows")
        if y.min() < 0 or y.max() >= len(self.vocab):
            raise DataError("predicate id out of vocabulary range")

        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        n = X.shape[1]
        weights = rng.normal(0.0, 1.0 / np.sqrt(n), size=(len(self.vocab), n))
        bias = np.zeros(len(self.vocab)) if cfg.add_bias else None

        params = [weights] + ([bias] if bias is not None else [])
        opt = AdamAscent(params)
        sched = StepSchedule(cfg.lr, cfg.lr_decay, cfg.lr_step_epochs)
        log_ = TrainingLog()

        N = X.shape[0]
        for epoch in range(cfg.epochs):
            lr = sched.at(epoch)
            perm = rng.permutation(N)
            epoch_loss = 0.0
            for start in range(0, N, cfg.batch_size):
                sel = perm[start : start + cfg.batch_size]
                loss, gw, gb = lexicon_loss_and_grad(
                    weights, X[sel], y[sel], cfg.alpha, cfg.l2_weight, bias
                )
                if not np.isfinite(loss):
                    raise NumericalError(
                        f"non-finite training loss at epoch {epoch}, "
                        f"batch starting at {start} (batch size {sel.size})"
                    )
                opt.step([gw] + ([gb] if bias is not None else []), lr)
                epoch_loss += loss * sel.size
            log_.append(epoch, epoch_loss / N, lr)

        self.lexicon_ = Lexicon(self.vocab, weights, bias)
        self.training_log_ = log_
        return self


def auc_roc(lexicon, r, positives, candidate_negatives, seed=0):
    """AUC-ROC of predicate r against sampled negatives.

    Samples as many negatives as positives, uniformly without
    replacement (seeded), scores everything with truth(r, .), and
    computes AUC by the rank-sum formula with midrank tie handling.
    """
    positives = check_matrix(positives, "positives")
    pool = check_matrix(candidate_negatives, "candidate_negatives")
    npos = positives.shape[0]
    if npos < 2:
        raise DataError("need at least 2 positive examples")
    if pool.shape[0] < npos:
        raise DataError("negative pool smaller than positive set")
    rng = np.random.default_rng(seed)
    neg = pool[rng.choice(pool.shape[0], size=npos, replace=False)]

    scores = np.concatenate([lexicon.truth(r, positives), lexicon.truth(r, neg)])
    from scipy.stats import rankdata

    ranks = rankdata(scores)  # midranks
    rank_sum_pos = ranks[:npos].sum()
    return float((rank_sum_pos - npos * (npos + 1) / 2) / (npos * npos))


def total_truth_audit(lexicon, pixies):
    """Mean over pixies of the summed truth of all predicates."""
    pixies = check_matrix(pixies, "pixies")
    return float(lexicon.total_truth(pixies).mean())


def truth_coverage(lexicon, X, y, threshold=0.1):
    """Number of predicates with at least one training pixie whose truth
    reaches ``threshold`` (the tuning statistic; logged, not optimized)."""
    T = lexicon.truths(X)
    covered = set()
    hits = T[np.arange(len(y)), y] >= threshold
    covered.update(np.asarray(y)[hits].tolist())
    return len(covered)
