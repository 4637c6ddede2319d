"""Binary container formats.

Every container starts with one ASCII header line and carries raw
little-endian IEEE-754 payloads, row-major:

* ``fdsf v1 <count> <dim>`` -- feature matrix, float32
* ``fdsp v1 <input_dim> <output_dim> <scale>`` -- PCA model, float64
  (mean, eigenvalues, components)
* ``fdsw v1 <n> <ci_flag>`` -- world model, float64 (mu, sigma)
* ``fdsl v1 <|V|> <n> <bias_flag>`` -- lexicon: vocabulary TSV block of
  |V| lines, then float64 weights (and bias if flagged)
"""

from dataclasses import dataclass

import numpy as np

from .errors import FormatError

_MAX_HEADER = 256


@dataclass(frozen=True)
class FeatureFile:
    """An in-memory dense feature matrix (count x dim)."""

    dim: int
    count: int
    rows: np.ndarray

    def __post_init__(self):
        if self.dim <= 0 or self.count <= 0:
            raise FormatError("feature file must have positive count and dim")
        if self.rows.shape != (self.count, self.dim):
            raise FormatError("rows shape does not match header")
        if not np.all(np.isfinite(self.rows)):
            raise FormatError("feature file contains non-finite values")


def _read_header_line(f, magic):
    raw = f.readline(_MAX_HEADER)
    if not raw.endswith(b"\n"):
        raise FormatError("missing or overlong header line")
    fields = raw.decode("ascii", errors="replace").strip().split(" ")
    if len(fields) < 2 or fields[0] != magic or fields[1] != "v1":
        raise FormatError(f"expected '{magic} v1' header, got {raw!r}")
    return fields[2:]


def _read_exact(f, dtype, count):
    arr = np.fromfile(f, dtype=dtype, count=count)
    if arr.size != count:
        raise FormatError(f"truncated payload: wanted {count} values, got {arr.size}")
    return arr


def write_features(path, features: FeatureFile):
    """Write an ``fdsf v1`` file; float32 on disk."""
    with open(path, "wb") as f:
        f.write(f"fdsf v1 {features.count} {features.dim}\n".encode("ascii"))
        np.ascontiguousarray(features.rows, dtype="<f4").tofile(f)


def read_features(path) -> FeatureFile:
    """Read a whole ``fdsf v1`` file into memory."""
    with open(path, "rb") as f:
        fields = _read_header_line(f, "fdsf")
        try:
            count, dim = int(fields[0]), int(fields[1])
        except (IndexError, ValueError) as exc:
            raise FormatError("malformed fdsf header fields") from exc
        if count <= 0 or dim <= 0:
            raise FormatError("fdsf header must declare positive count and dim")
        rows = _read_exact(f, "<f4", count * dim).reshape(count, dim)
        if f.read(1):
            raise FormatError("trailing bytes after fdsf payload")
    if not np.all(np.isfinite(rows)):
        raise FormatError("fdsf payload contains non-finite values")
    return FeatureFile(dim=dim, count=count, rows=rows.astype(np.float64))


def read_feature_header(path):
    """Return (count, dim) without loading the payload."""
    with open(path, "rb") as f:
        fields = _read_header_line(f, "fdsf")
        return int(fields[0]), int(fields[1])


def iter_feature_chunks(path, chunk_rows=8192):
    """Stream an ``fdsf v1`` file in row chunks of bounded size.

    Memory stays proportional to ``chunk_rows * dim`` regardless of the
    file's row count.
    """
    with open(path, "rb") as f:
        fields = _read_header_line(f, "fdsf")
        count, dim = int(fields[0]), int(fields[1])
        if count <= 0 or dim <= 0:
            raise FormatError("fdsf header must declare positive count and dim")
        remaining = count
        while remaining > 0:
            take = min(chunk_rows, remaining)
            chunk = _read_exact(f, "<f4", take * dim).reshape(take, dim)
            if not np.all(np.isfinite(chunk)):
                raise FormatError("fdsf payload contains non-finite values")
            yield chunk.astype(np.float64)
            remaining -= take


def read_feature_rows(path, indices):
    """Random-access read of selected rows by index (sorted or not)."""
    indices = np.asarray(indices, dtype=np.int64)
    with open(path, "rb") as f:
        fields = _read_header_line(f, "fdsf")
        count, dim = int(fields[0]), int(fields[1])
        if indices.size and (indices.min() < 0 or indices.max() >= count):
            raise FormatError("feature row index out of range")
        base = f.tell()
        out = np.empty((indices.size, dim))
        rowbytes = 4 * dim
        for i, idx in enumerate(indices):
            f.seek(base + int(idx) * rowbytes)
            out[i] = _read_exact(f, "<f4", dim)
    return out


def _write_f64(f, *arrays):
    for a in arrays:
        np.ascontiguousarray(a, dtype="<f8").tofile(f)


def write_pca(path, input_dim, output_dim, scale, mean, eigenvalues, components):
    with open(path, "wb") as f:
        f.write(f"fdsp v1 {input_dim} {output_dim} {scale!r}\n".encode("ascii"))
        _write_f64(f, mean, eigenvalues, components)


def read_pca(path):
    with open(path, "rb") as f:
        fields = _read_header_line(f, "fdsp")
        input_dim, output_dim, scale = int(fields[0]), int(fields[1]), float(fields[2])
        mean = _read_exact(f, "<f8", input_dim)
        eigenvalues = _read_exact(f, "<f8", output_dim)
        components = _read_exact(f, "<f8", output_dim * input_dim)
        components = components.reshape(output_dim, input_dim)
    return input_dim, output_dim, scale, mean, eigenvalues, components


def write_world(path, n, ci_constrained, mu, sigma):
    with open(path, "wb") as f:
        f.write(f"fdsw v1 {n} {int(ci_constrained)}\n".encode("ascii"))
        _write_f64(f, mu, sigma)


def read_world(path):
    with open(path, "rb") as f:
        fields = _read_header_line(f, "fdsw")
        n, ci_flag = int(fields[0]), bool(int(fields[1]))
        mu = _read_exact(f, "<f8", 3 * n)
        sigma = _read_exact(f, "<f8", 9 * n * n).reshape(3 * n, 3 * n)
    return n, ci_flag, mu, sigma


def write_lexicon(path, vocab_tsv_lines, weights, bias=None):
    size, n = weights.shape
    if len(vocab_tsv_lines) != size:
        raise FormatError("vocabulary block size does not match weight rows")
    with open(path, "wb") as f:
        f.write(f"fdsl v1 {size} {n} {int(bias is not None)}\n".encode("ascii"))
        for line in vocab_tsv_lines:
            f.write(line.encode("utf-8") + b"\n")
        _write_f64(f, weights)
        if bias is not None:
            _write_f64(f, bias)


def read_lexicon(path):
    with open(path, "rb") as f:
        fields = _read_header_line(f, "fdsl")
        size, n, bias_flag = int(fields[0]), int(fields[1]), bool(int(fields[2]))
        lines = []
        for _ in range(size):
            raw = f.readline()
            if not raw.endswith(b"\n"):
                raise FormatError("truncated vocabulary block")
            lines.append(raw.decode("utf-8").rstrip("\n"))
        weights = _read_exact(f, "<f8", size * n).reshape(size, n)
        bias = _read_exact(f, "<f8", size) if bias_flag else None
    return lines, weights, bias
