"""PCA with per-dimension whitening and a global rescale.

Produces pixie vectors from raw visual features: center, project onto
the top eigenvectors of the sample covariance, divide each dimension by
the square root of its eigenvalue, then multiply by a global scale
factor (default 1.15) chosen so the world-model covariance determinant
stays near 1.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import formats
from .errors import DataError, NumericalError
from .validation import check_matrix

EIGENVALUE_TOL = 1e-10


class PixiePca(BaseEstimator, TransformerMixin):
    """Whitening PCA fitted by a two-pass streaming accumulation.

    Memory use is independent of the number of rows: the first pass
    accumulates the mean, the second the covariance, both over chunks;
    the dense eigenproblem is input_dim x input_dim.
    """

    def __init__(self, output_dim=100, scale=1.15, chunk_rows=8192):
        self.output_dim = output_dim
        self.scale = scale
        self.chunk_rows = chunk_rows

    def fit(self, X, y=None):
        X = check_matrix(X)
        return self.fit_stream(lambda: iter([X]))

    def fit_stream(self, chunks_factory):
        """Fit from a factory returning an iterator of row chunks.

        The factory is called twice (mean pass, covariance pass), so it
        must produce the same rows each time.
        """
        total = np.zeros(0)
        count = 0
        for chunk in chunks_factory():
            chunk = check_matrix(chunk, "chunk")
            if total.size == 0:
                total = np.zeros(chunk.shape[1])
            total += chunk.sum(axis=0)
            count += chunk.shape[0]
        if count == 0:
            raise DataError("no rows to fit PCA on")
        input_dim = total.shape[0]
        if not (0 < self.output_dim <= input_dim):
            raise DataError(
                f"output_dim must be in (0, {input_dim}], got {self.output_dim}"
            )
        if count < self.output_dim:
            raise DataError("need at least output_dim rows to fit PCA")
        mean = total / count

        cov = np.zeros((input_dim, input_dim))
        for chunk in chunks_factory():
            centered = np.asarray(chunk, dtype=np.float64) - mean
            cov += centered.T @ centered
        cov /= count

        evals, evecs = np.linalg.eigh(cov)
        order = np.argsort(evals)[::-1][: self.output_dim]
        evals = evals[order]
        evecs = evecs[:, order]
        if evals[-1] <= EIGENVALUE_TOL * max(1.0, evals[0]):
            raise NumericalError(
                f"rank-deficient covariance: eigenvalue {evals[-1]:.3e} "
                f"within tolerance of zero"
            )
        # Deterministic sign: largest-magnitude entry of each component positive.
        for j in range(evecs.shape[1]):
            k = np.argmax(np.abs(evecs[:, j]))
            if evecs[k, j] < 0:
                evecs[:, j] = -evecs[:, j]

        self.input_dim_ = input_dim
        self.n_samples_ = count
        self.mean_ = mean
        self.eigenvalues_ = evals
        self.components_ = evecs.T
        self.explained_variance_ratio_ = float(evals.sum() / np.trace(cov))
        return self

    def fit_file(self, path):
        """Fit from an ``fdsf v1`` file, streaming in bounded chunks."""
        return self.fit_stream(
            lambda: formats.iter_feature_chunks(path, self.chunk_rows)
        )

    def _check_fitted(self):
        if not hasattr(self, "components_"):
            raise DataError("PixiePca is not fitted")

    def transform(self, X):
        """Map raw feature rows (or one vector) to pixies."""
        self._check_fitted()
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.input_dim_:
            raise DataError(
                f"expected {self.input_dim_} input dims, got {X.shape[1]}"
            )
        proj = (X - self.mean_) @ self.components_.T
        pixies = self.scale * proj / np.sqrt(self.eigenvalues_)
        return pixies[0] if single else pixies

    def inverse_transform(self, pixies):
        self._check_fitted()
        pixies = np.asarray(pixies, dtype=np.float64)
        single = pixies.ndim == 1
        if single:
            pixies = pixies[None, :]
        proj = pixies * np.sqrt(self.eigenvalues_) / self.scale
        raw = proj @ self.components_ + self.mean_
        return raw[0] if single else raw

    def save(self, path):
        self._check_fitted()
        formats.write_pca(
            path,
            self.input_dim_,
            self.output_dim,
            self.scale,
            self.mean_,
            self.eigenvalues_,
            self.components_,
        )

    @classmethod
    def load(cls, path):
        input_dim, output_dim, scale, mean, evals, comps = formats.read_pca(path)
        model = cls(output_dim=output_dim, scale=scale)
        model.input_dim_ = input_dim
        model.n_samples_ = -1
        model.mean_ = mean
        model.eigenvalues_ = evals
        model.components_ = comps
        model.explained_variance_ratio_ = float("nan")
        return model
