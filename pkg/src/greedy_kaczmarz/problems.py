"""Test problems: seeded random matrices, Matrix Market files and b = A x*.

Sparse generators draw an i.i.d. Bernoulli(density) pattern and fill it with
normal or uniform values. MATLAB's ``sprandn``/``sprand`` additionally shape
the singular values to a target reciprocal condition number; that step is not
reproduced here, so spectra differ from MATLAB's.
"""
from __future__ import annotations

import itertools
import logging
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np
import scipy.sparse as sp

from .linalg import ContractError, RowMatrix, as_vector

__all__ = [
    "ProblemSpec",
    "MatrixMarketError",
    "generate",
    "random_matrix",
    "read_matrix_market",
    "write_matrix_market",
    "matching_complex_boundary",
    "mk9_b3_path",
    "SOURCES",
]

log = logging.getLogger(__name__)

SOURCES = ("gaussian", "uniform", "sparse-normal", "sparse-uniform", "identity", "mm")


class MatrixMarketError(ValueError):
    """Malformed or unsupported Matrix Market input."""


@dataclass(frozen=True)
class ProblemSpec:
    """What to generate.

    Parameters
    ----------
    source : str
        ``gaussian`` (i.i.d. N(0, 1)), ``uniform`` (i.i.d. U(0, 1)),
        ``sparse-normal``, ``sparse-uniform``, ``identity`` (``m = n``) or
        ``mm`` (Matrix Market file at ``path``).
    seed : int or tuple of int
        Seed for the matrix and the solution vector (anything
        :func:`numpy.random.default_rng` accepts).
    solution : array_like, optional
        Exact solution to use instead of a standard normal draw.
    """

    source: str = "gaussian"
    m: int = 0
    n: int = 0
    density: float = 1.0
    path: str | None = None
    seed: int | tuple[int, ...] = 0
    solution: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ContractError(f"unknown source {self.source!r}; expected one of {SOURCES}")
        if self.source == "mm":
            if not self.path:
                raise ContractError("source 'mm' needs a path")
        else:
            if self.m < 1 or self.n < 1:
                raise ContractError(f"m and n must be >= 1, got {self.m} x {self.n}")
            if self.source == "identity" and self.m != self.n:
                raise ContractError("identity problems are square")
        if not 0.0 < self.density <= 1.0:
            raise ContractError(f"density must lie in (0, 1], got {self.density}")


def _sparse_random(m: int, n: int, density: float, rng: np.random.Generator, values: str) -> sp.csr_matrix:
    draw = rng.standard_normal if values == "normal" else rng.random
    rows = []
    for _ in range(m):
        mask = rng.random(n) < density
        while not mask.any():
            # empty rows are redrawn so every row has a nonzero
            mask = rng.random(n) < density
        cols = np.flatnonzero(mask)
        v = draw(cols.size)
        v[v == 0.0] = 1.0
        rows.append((cols, v))
    indptr = np.concatenate([[0], np.cumsum([c.size for c, _ in rows])])
    indices = np.concatenate([c for c, _ in rows])
    data = np.concatenate([v for _, v in rows])
    return sp.csr_matrix((data, indices, indptr), shape=(m, n))


def random_matrix(spec: ProblemSpec, rng: np.random.Generator) -> RowMatrix:
    """The matrix part of :func:`generate`."""
    m, n = spec.m, spec.n
    if spec.source == "gaussian":
        return RowMatrix(rng.standard_normal((m, n)))
    if spec.source == "uniform":
        return RowMatrix(rng.random((m, n)))
    if spec.source == "sparse-normal":
        return RowMatrix(_sparse_random(m, n, spec.density, rng, "normal"))
    if spec.source == "sparse-uniform":
        return RowMatrix(_sparse_random(m, n, spec.density, rng, "uniform"))
    if spec.source == "identity":
        return RowMatrix(np.eye(m))
    return read_matrix_market(spec.path)


def generate(spec: ProblemSpec) -> tuple[RowMatrix, np.ndarray, np.ndarray]:
    """Return ``(A, b, x)`` with ``b = A @ x`` computed exactly once.

    ``x`` is the generating solution. For rank-deficient or wide ``A`` it is
    not the minimum-norm solution; use
    :func:`~greedy_kaczmarz.linalg.min_norm_solution` for that.
    """
    rng = np.random.default_rng(spec.seed)
    A = random_matrix(spec, rng)
    if spec.solution is not None:
        x = as_vector(spec.solution, A.n, "solution").copy()
    else:
        x = rng.standard_normal(A.n)
    return A, A.matvec(x), x


# -- Matrix Market -------------------------------------------------------

_FIELDS = ("real", "integer", "pattern", "double")
_SYMMETRIES = ("general", "symmetric", "skew-symmetric")


def _data_lines(fh):
    for line in fh:
        s = line.strip()
        if s and not s.startswith("%"):
            yield s


def read_matrix_market(path, *, drop_zero_rows: bool = True) -> RowMatrix:
    """Read a real Matrix Market file into a :class:`RowMatrix`.

    Supports ``coordinate`` and ``array`` layouts with ``real``, ``integer``
    or ``pattern`` (value 1) entries and ``general``, ``symmetric`` or
    ``skew-symmetric`` storage; symmetric storage is expanded. Explicit zeros
    are dropped. Duplicate coordinates are an error. Rows left without
    nonzeros are removed (with a warning) unless ``drop_zero_rows`` is false,
    in which case :class:`~greedy_kaczmarz.linalg.ContractError` is raised.
    """
    path = os.fspath(path)
    with open(path, "r") as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0].lower() != "%%matrixmarket" or header[1].lower() != "matrix":
            raise MatrixMarketError(f"{path}: missing '%%MatrixMarket matrix' header")
        layout, fld, sym = (h.lower() for h in header[2:])
        if layout not in ("coordinate", "array"):
            raise MatrixMarketError(f"{path}: unsupported layout {layout!r}")
        if fld not in _FIELDS:
            raise MatrixMarketError(f"{path}: unsupported field {fld!r}")
        if sym not in _SYMMETRIES:
            raise MatrixMarketError(f"{path}: unsupported symmetry {sym!r}")
        if layout == "array" and fld == "pattern":
            raise MatrixMarketError(f"{path}: pattern field needs coordinate layout")
        lines = _data_lines(fh)
        try:
            size = [int(t) for t in next(lines).split()]
        except (StopIteration, ValueError):
            raise MatrixMarketError(f"{path}: bad size line") from None
        if layout == "coordinate":
            rows, cols, vals = _read_coordinate(path, lines, size, fld)
        else:
            rows, cols, vals = _read_array(path, lines, size, sym)
    m, n = size[0], size[1]
    if sym != "general":
        if m != n:
            raise MatrixMarketError(f"{path}: {sym} matrix must be square")
        if np.any(rows < cols):
            raise MatrixMarketError(f"{path}: {sym} storage must hold the lower triangle only")
        off = rows != cols
        sign = -1.0 if sym == "skew-symmetric" else 1.0
        rows, cols, vals = (np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, sign * vals[off]]))
    keep = vals != 0.0
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    counts = np.diff(A.indptr)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        if not drop_zero_rows:
            raise ContractError(f"{path}: {empty.size} zero row(s)")
        log.warning("%s: dropped %d zero row(s)", path, empty.size)
        A = A[counts > 0]
    return RowMatrix(A)


def _read_coordinate(path, lines, size, fld):
    if len(size) != 3:
        raise MatrixMarketError(f"{path}: coordinate size line needs 'rows cols nnz'")
    m, n, nnz = size
    width = 2 if fld == "pattern" else 3
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.ones(nnz)
    count = 0
    for line in lines:
        parts = line.split()
        if count >= nnz:
            raise MatrixMarketError(f"{path}: more than the declared {nnz} entries")
        if len(parts) != width:
            raise MatrixMarketError(f"{path}: entry {count + 1} has {len(parts)} fields, expected {width}")
        try:
            rows[count], cols[count] = int(parts[0]) - 1, int(parts[1]) - 1
            if width == 3:
                vals[count] = float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"{path}: unparsable entry {line!r}") from None
        count += 1
    if count != nnz:
        raise MatrixMarketError(f"{path}: header declares {nnz} entries, found {count}")
    if nnz and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
        raise MatrixMarketError(f"{path}: coordinate out of range for a {m} x {n} matrix")
    key = rows * n + cols
    if np.unique(key).size != key.size:
        raise MatrixMarketError(f"{path}: duplicate entries")
    return rows, cols, vals


def _read_array(path, lines, size, sym):
    if len(size) != 2:
        raise MatrixMarketError(f"{path}: array size line needs 'rows cols'")
    m, n = size
    try:
        vals = np.array([float(t) for line in lines for t in line.split()])
    except ValueError:
        raise MatrixMarketError(f"{path}: unparsable value") from None
    # column-major; symmetric storage lists the lower triangle column by column
    if sym == "general":
        pairs = [(i, j) for j in range(n) for i in range(m)]
    elif sym == "symmetric":
        pairs = [(i, j) for j in range(n) for i in range(j, m)]
    else:
        pairs = [(i, j) for j in range(n) for i in range(j + 1, m)]
    if vals.size != len(pairs):
        raise MatrixMarketError(f"{path}: expected {len(pairs)} values, found {vals.size}")
    rows = np.array([p[0] for p in pairs], dtype=np.int64)
    cols = np.array([p[1] for p in pairs], dtype=np.int64)
    return rows, cols, vals


def write_matrix_market(path, A, comment: str | None = None) -> None:
    """Write ``A`` (RowMatrix, ndarray or sparse) as ``coordinate real general``."""
    M = A.op if isinstance(A, RowMatrix) else A
    coo = sp.coo_matrix(M)
    order = np.lexsort((coo.row, coo.col))
    is_int = np.all(coo.data == np.round(coo.data))
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {'integer' if is_int else 'real'} general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{i + 1} {j + 1} {int(v) if is_int else repr(float(v))}\n")


# -- matching complexes ----------------------------------------------------

def _matchings(vertices: int, edges: int):
    all_edges = list(itertools.combinations(range(vertices), 2))
    for combo in itertools.combinations(all_edges, edges):
        used = [v for e in combo for v in e]
        if len(set(used)) == len(used):
            yield combo


def matching_complex_boundary(vertices: int, faces: int) -> sp.csr_matrix:
    """Transposed simplicial boundary map of the matching complex of ``K_vertices``.

    Row ``s`` corresponds to a matching with ``faces + 1`` edges, column ``t``
    to a matching with ``faces`` edges (both in lexicographic order), and
    the entry is ``(-1)^j`` when ``t`` is ``s`` with its ``j``-th edge removed.
    ``matching_complex_boundary(9, 3)`` is the 945 x 1260 ``mk9-b3`` matrix
    of the homology collection, up to row/column order and signs.
    """
    low = list(_matchings(vertices, faces))
    col_of = {m: j for j, m in enumerate(low)}
    rows, cols, vals = [], [], []
    for i, s in enumerate(_matchings(vertices, faces + 1)):
        for j in range(len(s)):
            rows.append(i)
            cols.append(col_of[s[:j] + s[j + 1:]])
            vals.append(-1.0 if j % 2 else 1.0)
    m = rows[-1] + 1 if rows else 0
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, len(low)))


def mk9_b3_path() -> str:
    """Path of the bundled ``mk9-b3.mtx``."""
    return str(resources.files("greedy_kaczmarz") / "data" / "mk9-b3.mtx")
