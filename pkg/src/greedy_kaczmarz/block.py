"""Block updates: exact projection onto a working set, and averaged projections."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import ContractError, IterState, RowMatrix, as_vector, block_ls_apply
from .selection import (
    IndexSet,
    gbk_threshold,
    gmbk_xi_threshold,
    grk_set,
    grk_threshold,
    grmk_set,
    grmk_threshold,
)
from .single import project_row

__all__ = [
    "WeightScheme",
    "project_block",
    "average_projections",
    "gmbk_step",
    "gbk_step",
    "gdbk_eta",
    "averaged_block_step",
    "pick_block",
]


@dataclass(frozen=True)
class WeightScheme:
    """Weights for the averaged block update.

    ``kind`` is ``"uniform"`` (``1/|tau|``), ``"norm"``
    (``||A_i||^2 / ||A_tau||_F^2``) or ``"custom"`` with explicit ``values``
    aligned with the index set.
    """

    kind: str = "norm"
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "norm", "custom"):
            raise ContractError(f"unknown weight scheme {self.kind!r}")
        if (self.kind == "custom") != (self.values is not None):
            raise ContractError("explicit values go with kind='custom' only")

    def weights(self, A: RowMatrix, idx) -> np.ndarray:
        rows = np.asarray(getattr(idx, "indices", idx), dtype=np.intp)
        if self.kind == "uniform":
            return np.full(rows.size, 1.0 / rows.size)
        if self.kind == "norm":
            sq = A.row_sq_norms[rows]
            return sq / sq.sum()
        w = np.asarray(self.values, dtype=np.float64)
        if w.shape != rows.shape:
            raise ContractError(f"{w.size} custom weights for {rows.size} rows")
        if np.any(w <= 0.0) or abs(w.sum() - 1.0) > 1e-12:
            raise ContractError("custom weights must be positive and sum to 1")
        return w


def project_block(A: RowMatrix, x: np.ndarray, r: np.ndarray, rows: np.ndarray,
                  work: np.ndarray | None = None) -> None:
    """``x += A_rows^+ r_rows`` in place, keeping ``r = b - A x``."""
    if rows.size == 1:
        project_row(A, x, r, int(rows[0]), work)
        return
    dz = block_ls_apply(A, rows, r[rows])
    x += dz
    r -= A.op @ dz


def average_projections(A: RowMatrix, x: np.ndarray, r: np.ndarray, rows: np.ndarray,
                        w: np.ndarray) -> None:
    """``x += sum_i w_i r_i / ||A_i||^2 A_i^T`` over ``rows``, in place."""
    coef = w * r[rows] / A.row_sq_norms[rows]
    if A.is_sparse:
        dx = A.csr[rows].T @ coef
    else:
        dx = A.dense[rows].T @ coef
    x += dx
    r -= A.op @ dx


def gdbk_eta(state: IterState, A: RowMatrix) -> float:
    """The ``eta`` for which the block distance threshold equals GRK's.

    ``eta = 1/2 + 1/2 * (||r||^2 / ||A||_F^2) / max_i(|r_i|^2 / ||A_i||^2)``.
    """
    r2 = state.r * state.r
    dmax = float(np.max(r2 / A.row_sq_norms))
    if dmax == 0.0:
        raise ContractError("residual is zero; eta is undefined")
    return 0.5 + 0.5 * (float(r2.sum()) / A.frob_sq) / dmax


def pick_block(rule, A: RowMatrix, r: np.ndarray) -> IndexSet:
    """Working set of a block ``rule`` at residual ``r``."""
    kind = rule.kind
    if kind in ("gmbk", "avg-block"):
        if rule.xi is not None:
            return grmk_set(r, A, gmbk_xi_threshold(r, rule.xi))
        return grmk_set(r, A, grmk_threshold(r, A, 0.5))
    if kind == "gbk":
        return grk_set(r, A, gbk_threshold(r, A, rule.eta))
    if kind == "gdbk":
        # same set as gbk with eta from gdbk_eta, i.e. GRK's threshold
        return grk_set(r, A, grk_threshold(r, A))
    raise ContractError(f"{kind!r} is not a block method")


def _checked(state: IterState, A: RowMatrix, b) -> IterState:
    if b is not None:
        as_vector(b, A.m, "b")
    if not np.any(state.r):
        raise ContractError("residual is zero; the iteration has converged")
    return state.copy()


def gmbk_step(state: IterState, A: RowMatrix, b=None, xi: float | None = None) -> IterState:
    """Project onto every row of the residual-threshold working set at once."""
    new = _checked(state, A, b)
    r = new.r
    delta = grmk_threshold(r, A, 0.5) if xi is None else gmbk_xi_threshold(r, xi)
    s = grmk_set(r, A, delta)
    project_block(A, new.x, new.r, s.indices)
    new.k += 1
    new.last = s
    return new


def gbk_step(state: IterState, A: RowMatrix, b=None, eta: float = 1.0) -> IterState:
    """Project onto every row of the distance-threshold working set at once."""
    new = _checked(state, A, b)
    s = grk_set(new.r, A, gbk_threshold(new.r, A, eta))
    project_block(A, new.x, new.r, s.indices)
    new.k += 1
    new.last = s
    return new


def averaged_block_step(state: IterState, A: RowMatrix, b, idx,
                        w: WeightScheme | None = None) -> IterState:
    """Weighted average of the single-row projections of ``state.x`` over ``idx``."""
    rows = np.asarray(getattr(idx, "indices", idx), dtype=np.intp)
    if rows.size == 0:
        raise ContractError("block index set is empty")
    if b is not None:
        as_vector(b, A.m, "b")
    weights = (w or WeightScheme()).weights(A, rows)
    new = state.copy()
    average_projections(A, new.x, new.r, rows, weights)
    new.k += 1
    new.last = idx if isinstance(idx, IndexSet) else IndexSet(np.sort(rows))
    return new
