"""Variational inference of latent situations from observed predicates.

The posterior over the 3n-dimensional situation is a diagonal Gaussian
optimized by gradient ascent on the ELBO: the sum of expected
log-truths of the observed predicates minus beta times the KL
divergence to the world model. Expectations of sigmoids under a
Gaussian use fixed-constant analytic approximations.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DataError, NumericalError
from .lexicon import log_sigmoid, sigmoid
from .optim import AdamAscent, StepSchedule
from .world import NODES, _node_slice

# Fixed constants of the sigmoid-moment approximations.
_ES_C = 0.368
_ELS_A, _ELS_P = 0.319, 0.781
_ELS_B, _ELS_Q = 0.205, 0.870


def expected_sigmoid(mu, var):
    """E[sigmoid(x)] for x ~ N(mu, var): sigmoid(mu / sqrt(1 + 0.368 var))."""
    mu = np.asarray(mu, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    if np.any(var < 0):
        raise DataError("variance must be >= 0")
    out = sigmoid(mu / np.sqrt(1.0 + _ES_C * var))
    return float(out) if out.ndim == 0 else out


def expected_log_sigmoid(mu, var):
    """E[log sigmoid(x)] for x ~ N(mu, var), analytic approximation."""
    mu = np.asarray(mu, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    if np.any(var < 0):
        raise DataError("variance must be >= 0")
    u = (mu - _ELS_A * var**_ELS_P) / np.sqrt(1.0 + _ELS_B * var**_ELS_Q)
    out = log_sigmoid(u)
    return float(out) if out.ndim == 0 else out


def _els_value_grads(m, s2):
    """expected_log_sigmoid plus partials w.r.t. m and s2 (scalars)."""
    c = np.sqrt(1.0 + _ELS_B * s2**_ELS_Q)
    num = m - _ELS_A * s2**_ELS_P
    u = num / c
    val = float(log_sigmoid(u))
    sig_neg = float(sigmoid(-u))
    d_m = sig_neg / c
    if s2 > 0:
        du_ds2 = (
            -_ELS_A * _ELS_P * s2 ** (_ELS_P - 1) * c
            - num * _ELS_B * _ELS_Q * s2 ** (_ELS_Q - 1) / (2.0 * c)
        ) / (c * c)
        d_s2 = sig_neg * du_ds2
    else:
        d_s2 = 0.0
    return val, d_m, d_s2


@dataclass
class VariationalPosterior:
    """Diagonal Gaussian over a latent situation."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.var = np.asarray(self.var, dtype=np.float64)
        if self.mean.shape != self.var.shape or self.mean.ndim != 1:
            raise DataError("posterior mean and var must be equal-length vectors")
        if np.any(self.var <= 0) or not np.all(np.isfinite(self.mean)):
            raise DataError("posterior var must be strictly positive and finite")

    def node_params(self, node, n):
        s = _node_slice(n, node)
        return self.mean[s], self.var[s]


@dataclass(frozen=True)
class ObservationPattern:
    """Partial map from situation nodes to observed predicate ids."""

    observed: dict

    def __post_init__(self):
        if not self.observed:
            raise DataError("at least one node must be observed")
        for node in self.observed:
            if node not in NODES:
                raise DataError(f"invalid node {node!r}")

    def items(self):
        return [(node, self.observed[node]) for node in NODES if node in self.observed]


@dataclass
class InferenceConfig:
    beta: float = 0.1
    epochs: int = 800
    lr: float = 0.03
    lr_decay: float = 0.6
    lr_step_epochs: int = 50
    seed: int = 0
    normalizer_bound: str = "off"  # off | jensen

    def __post_init__(self):
        if self.beta < 0 or self.lr <= 0 or self.epochs < 1:
            raise DataError("invalid inference configuration")
        if not (0 < self.lr_decay <= 1) or self.lr_step_epochs < 1:
            raise DataError("invalid inference configuration")
        if self.normalizer_bound not in ("off", "jensen"):
            raise DataError("normalizer_bound must be 'off' or 'jensen'")


def kl_gaussian(q: VariationalPosterior, p_mean, p_cov):
    """KL(Q || P) for diagonal Q and full-covariance Gaussian P."""
    p_mean = np.asarray(p_mean, dtype=np.float64)
    p_cov = np.asarray(p_cov, dtype=np.float64)
    k = q.mean.shape[0]
    if p_mean.shape != (k,) or p_cov.shape != (k, k):
        raise DataError("prior dimensions do not match the posterior")
    try:
        c = cho_factor(p_cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("prior covariance is not SPD") from exc
    p_inv = cho_solve(c, np.eye(k))
    logdet_p = 2.0 * np.sum(np.log(np.diag(c[0])))
    delta = q.mean - p_mean
    val = 0.5 * (
        logdet_p
        - np.sum(np.log(q.var))
        - k
        + np.sum(np.diag(p_inv) * q.var)
        + delta @ p_inv @ delta
    )
    return float(val)


def _kl_and_grads(mean, var, p_mean, p_inv, logdet_p):
    k = mean.shape[0]
    delta = mean - p_mean
    pd = delta @ p_inv
    val = 0.5 * (
        logdet_p - np.sum(np.log(var)) - k + np.sum(np.diag(p_inv) * var) + pd @ delta
    )
    return float(val), pd, 0.5 * (np.diag(p_inv) - 1.0 / var)


def _observed_terms(mean, var, pattern, lexicon, n, normalizer_bound):
    """Sum of observed-term expectations with gradients w.r.t. (mean, var)."""
    total = 0.0
    g_mean = np.zeros_like(mean)
    g_var = np.zeros_like(var)
    W = lexicon.weights
    for node, r in pattern.items():
        lexicon._check_pred(r)
        s = _node_slice(n, node)
        mu_n, var_n = mean[s], var[s]
        v = W[r]
        b = lexicon.bias[r] if lexicon.bias is not None else 0.0
        m = float(v @ mu_n + b)
        s2 = float((v * v) @ var_n)
        val, d_m, d_s2 = _els_value_grads(m, s2)
        total += val
        g_mean[s] += d_m * v
        g_var[s] += d_s2 * (v * v)

        if normalizer_bound == "jensen":
            # Heuristic bound: subtract log sum_i E[sigmoid(v_i . x)].
            m_all = W @ mu_n + (lexicon.bias if lexicon.bias is not None else 0.0)
            s2_all = (W * W) @ var_n
            c_all = np.sqrt(1.0 + _ES_C * s2_all)
            e_all = sigmoid(m_all / c_all)
            S = float(e_all.sum())
            total -= np.log(S)
            de_dm = e_all * (1.0 - e_all) / c_all
            de_ds2 = e_all * (1.0 - e_all) * (-m_all * _ES_C / (2.0 * c_all**3))
            g_mean[s] -= (de_dm @ W) / S
            g_var[s] -= (de_ds2 @ (W * W)) / S
    return total, g_mean, g_var


def elbo(q, pattern, lexicon, world, beta, normalizer_bound="off"):
    """ELBO value at the given posterior."""
    val, _, _ = elbo_and_grads(q.mean, q.var, pattern, lexicon, world, beta,
                               normalizer_bound)
    return val


def elbo_and_grads(mean, var, pattern, lexicon, world, beta,
                   normalizer_bound="off"):
    """ELBO plus gradients w.r.t. the posterior mean and variance."""
    n = world.n_
    if mean.shape[0] != 3 * n:
        raise DataError("posterior dimension does not match the world model")
    obs, g_mean, g_var = _observed_terms(
        mean, var, pattern, lexicon, n, normalizer_bound
    )
    c = cho_factor(world.sigma_)
    p_inv = cho_solve(c, np.eye(3 * n))
    logdet_p = 2.0 * np.sum(np.log(np.diag(c[0])))
    kl, kl_g_mean, kl_g_var = _kl_and_grads(mean, var, world.mu_, p_inv, logdet_p)
    return obs - beta * kl, g_mean - beta * kl_g_mean, g_var - beta * kl_g_var


def infer_posterior(pattern, lexicon, world, config: InferenceConfig | None = None):
    """Maximize the ELBO over a diagonal-Gaussian posterior.

    Parameterized as (mean, log var) for unconstrained ascent. Starts at
    the world-model prior. Deterministic given the config. Returns
    (posterior, elbo_trace).
    """
    config = config or InferenceConfig()
    n = world.n_
    mean = world.mu_.copy()
    logvar = np.log(np.diag(world.sigma_).copy())

    opt = AdamAscent([mean, logvar])
    sched = StepSchedule(config.lr, config.lr_decay, config.lr_step_epochs)
    trace = []
    for epoch in range(config.epochs):
        var = np.exp(logvar)
        val, g_mean, g_var = elbo_and_grads(
            mean, var, pattern, lexicon, world, config.beta,
            config.normalizer_bound,
        )
        if not np.isfinite(val):
            raise NumericalError(
                f"non-finite ELBO at epoch {epoch}; trace so far: {trace[-5:]}"
            )
        trace.append(val)
        opt.step([g_mean, g_var * var], sched.at(epoch))
    return VariationalPosterior(mean=mean, var=np.exp(logvar)), trace


def approx_truth(q: VariationalPosterior, node, lexicon, r, n=None):
    """Expected truth of predicate r at one node of the posterior."""
    lexicon._check_pred(r)
    if n is None:
        n = q.mean.shape[0] // 3
    mu_n, var_n = q.node_params(node, n)
    v = lexicon.weights[r]
    b = lexicon.bias[r] if lexicon.bias is not None else 0.0
    return expected_sigmoid(float(v @ mu_n + b), float((v * v) @ var_n))


def node_truths(q: VariationalPosterior, node, lexicon, n=None):
    """Expected truth of every predicate at one node (vectorized)."""
    if n is None:
        n = q.mean.shape[0] // 3
    mu_n, var_n = q.node_params(node, n)
    W = lexicon.weights
    m = W @ mu_n + (lexicon.bias if lexicon.bias is not None else 0.0)
    s2 = (W * W) @ var_n
    return expected_sigmoid(m, s2)
