"""Joint Gaussian over situations (pixie triples X, Y, Z).

The unconstrained fit is the sample mean and covariance. The
conditionally independent variant forces the (X, Z) precision blocks to
zero, which for the decomposable chain X - Y - Z has an exact
closed-form maximum-likelihood solution assembled from the clique
covariances of (X, Y), (Y, Z) and Y.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator

from . import formats
from .errors import DataError, NumericalError
from .validation import check_matrix

log = logging.getLogger(__name__)

NODES = ("X", "Y", "Z")


@dataclass(frozen=True)
class GaussianMarginal:
    mean: np.ndarray
    cov: np.ndarray


@dataclass
class DimensionFit:
    """Per-dimension histogram-vs-Gaussian fit report."""

    missing_area: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray

    @property
    def mean_missing(self):
        return float(self.missing_area.mean())

    @property
    def var_missing(self):
        return float(self.missing_area.var())

    def to_tsv_lines(self):
        return [
            f"{d}\t{self.missing_area[d]:.6f}\t{self.skewness[d]:.6f}"
            f"\t{self.kurtosis[d]:.6f}"
            for d in range(self.missing_area.shape[0])
        ]


def _node_slice(n, node):
    offsets = {"X": 0, "Y": 1, "Z": 2}
    if isinstance(node, str) and node in offsets:
        o = offsets[node]
        return slice(o * n, (o + 1) * n)
    raise DataError(f"invalid node selector {node!r}")


def _node_indices(n, nodes):
    idx = []
    for node in nodes:
        s = _node_slice(n, node)
        idx.extend(range(s.start, s.stop))
    return np.array(idx)


def _safe_inverse(S, what):
    """Invert an SPD matrix, ridging once on Cholesky failure (logged)."""
    try:
        c = cho_factor(S)
    except np.linalg.LinAlgError:
        eps = 1e-6 * np.trace(S) / S.shape[0]
        smallest = float(np.linalg.eigvalsh(S)[0])
        log.warning(
            "%s covariance is singular (smallest eigenvalue %.3e); "
            "adding ridge %.3e",
            what,
            smallest,
            eps,
        )
        try:
            c = cho_factor(S + eps * np.eye(S.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"{what} covariance singular even after ridge "
                f"(smallest eigenvalue {smallest:.3e})"
            ) from exc
    return cho_solve(c, np.eye(S.shape[0]))


class SituationGaussian(BaseEstimator):
    """Gaussian world model over concatenated situations [x | y | z]."""

    def __init__(self, ci_constrained=False):
        self.ci_constrained = ci_constrained

    def fit(self, S, y=None):
        """Fit from an (N, 3n) matrix of situation samples."""
        S = check_matrix(S, "situations")
        if S.shape[1] % 3 != 0:
            raise DataError("situation dimension must be a multiple of 3")
        n = S.shape[1] // 3
        if S.shape[0] < 3 * n + 1:
            raise DataError("need at least 3n+1 situation samples")

        mu = S.mean(axis=0)
        centered = S - mu
        cov = centered.T @ centered / S.shape[0]
        if np.linalg.matrix_rank(cov, tol=1e-12) < cov.shape[0]:
            # Exact-duplicate degenerate inputs land here before Cholesky.
            smallest = float(np.linalg.eigvalsh(cov)[0])
            raise NumericalError(
                f"singular sample covariance (smallest eigenvalue {smallest:.3e})"
            )

        self.n_ = n
        self.mu_ = mu
        if not self.ci_constrained:
            self.sigma_ = cov
            self.precision_ = _safe_inverse(cov, "situation")
        else:
            self._fit_constrained(cov, n)
        return self

    def _fit_constrained(self, cov, n):
        ix, iy, iz = slice(0, n), slice(n, 2 * n), slice(2 * n, 3 * n)
        ixy = _node_indices(n, ("X", "Y"))
        iyz = _node_indices(n, ("Y", "Z"))
        S_xy = cov[np.ix_(ixy, ixy)]
        S_yz = cov[np.ix_(iyz, iyz)]
        S_y = cov[iy, iy]

        P = np.zeros_like(cov)
        P[np.ix_(ixy, ixy)] += _safe_inverse(S_xy, "(X,Y) clique")
        P[np.ix_(iyz, iyz)] += _safe_inverse(S_yz, "(Y,Z) clique")
        P[iy, iy] -= _safe_inverse(S_y, "Y clique")
        # The (X,Z) blocks are never touched above: exactly zero.

        # Implied covariance: all blocks equal their sample counterparts
        # except Sigma_XZ = S_XY,xy . S_Y^-1 . S_YZ,yz.
        sigma = cov.copy()
        S_y_inv = _safe_inverse(S_y, "Y clique")
        cross = cov[ix, iy] @ S_y_inv @ cov[iy, iz]
        sigma[ix, iz] = cross
        sigma[iz, ix] = cross.T

        self.sigma_ = sigma
        self.precision_ = P

    def _check_fitted(self):
        if not hasattr(self, "sigma_"):
            raise DataError("SituationGaussian is not fitted")

    @property
    def dim(self):
        self._check_fitted()
        return 3 * self.n_

    def log_density(self, s):
        """log N(s; mu, sigma) via Cholesky; accepts one vector or a batch."""
        self._check_fitted()
        s = np.asarray(s, dtype=np.float64)
        single = s.ndim == 1
        if single:
            s = s[None, :]
        if s.shape[1] != self.dim:
            raise DataError(f"expected dimension {self.dim}, got {s.shape[1]}")
        L = np.linalg.cholesky(self.sigma_)
        diff = s - self.mu_
        sol = np.linalg.solve(L, diff.T)
        quad = np.sum(sol**2, axis=0)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        out = -0.5 * (self.dim * np.log(2 * np.pi) + logdet + quad)
        return float(out[0]) if single else out

    def mean_log_likelihood(self, S):
        return float(np.mean(self.log_density(S)))

    def marginal(self, nodes):
        """Marginal over one node ("X") or a pair (("X", "Y"))."""
        self._check_fitted()
        if isinstance(nodes, str):
            nodes = (nodes,)
        idx = _node_indices(self.n_, nodes)
        return GaussianMarginal(
            mean=self.mu_[idx].copy(), cov=self.sigma_[np.ix_(idx, idx)].copy()
        )

    def fit_diagnostics(self, S, bins=100):
        """Histogram-vs-best-fit-Gaussian missing area per dimension.

        For each of the 3n dimensions: density histogram over
        mean +/- 5 sd, the 1-D MLE Gaussian, missing area
        = 0.5 * sum |hist - gauss| * binwidth, plus sample skewness and
        excess kurtosis.
        """
        self._check_fitted()
        S = check_matrix(S, "samples")
        if S.shape[0] < 1000:
            raise DataError("need at least 1000 samples for fit diagnostics")
        if S.shape[1] != self.dim:
            raise DataError("sample dimension does not match the model")

        d = self.dim
        missing = np.empty(d)
        skew = np.empty(d)
        kurt = np.empty(d)
        for j in range(d):
            col = S[:, j]
            m, sd = col.mean(), col.std()
            if sd == 0:
                raise NumericalError(f"dimension {j} is constant")
            hist, edges = np.histogram(
                col, bins=bins, range=(m - 5 * sd, m + 5 * sd), density=True
            )
            centers = 0.5 * (edges[:-1] + edges[1:])
            width = edges[1] - edges[0]
            gauss = np.exp(-0.5 * ((centers - m) / sd) ** 2) / (
                sd * np.sqrt(2 * np.pi)
            )
            missing[j] = 0.5 * np.sum(np.abs(hist - gauss)) * width
            z = (col - m) / sd
            skew[j] = np.mean(z**3)
            kurt[j] = np.mean(z**4) - 3.0
        return DimensionFit(missing_area=missing, skewness=skew, kurtosis=kurt)

    def save(self, path):
        self._check_fitted()
        formats.write_world(path, self.n_, self.ci_constrained, self.mu_, self.sigma_)

    @classmethod
    def load(cls, path):
        n, ci_flag, mu, sigma = formats.read_world(path)
        model = cls(ci_constrained=ci_flag)
        model.n_ = n
        model.mu_ = mu
        model.sigma_ = sigma
        model.precision_ = _safe_inverse(sigma, "loaded situation")
        if ci_flag:
            # Zero blocks survive serialization only approximately; restore
            # them exactly so the structural invariant holds after load.
            ix, iz = slice(0, n), slice(2 * n, 3 * n)
            model.precision_[ix, iz] = 0.0
            model.precision_[iz, ix] = 0.0
        return model
