"""Single-row Kaczmarz projections and the per-method row pickers."""
from __future__ import annotations

import numpy as np

from .linalg import ContractError, IterState, RowMatrix, as_vector
from .selection import (
    IndexSet,
    _members,
    argmax_distance,
    argmax_residual,
    grmk_set,
    grmk_threshold,
    sample_grk,
    sample_grmk,
    sample_row_norms,
)

__all__ = ["kaczmarz_step", "project_row", "pick_row"]


def project_row(A: RowMatrix, x: np.ndarray, r: np.ndarray, i: int, work: np.ndarray | None = None) -> None:
    """Project ``x`` onto row ``i``'s hyperplane in place, updating ``r = b - A x``.

    ``work`` is an optional zeroed length-``n`` buffer reused by sparse
    matrices to scatter the row before the ``A @ row`` product.
    """
    ri = r[i]
    if ri == 0.0:
        return
    coef = ri / A.row_sq_norms[i]
    if A.is_sparse:
        csr = A.csr
        lo, hi = csr.indptr[i], csr.indptr[i + 1]
        cols, vals = csr.indices[lo:hi], csr.data[lo:hi]
        x[cols] += coef * vals
        buf = np.zeros(A.n) if work is None else work
        buf[cols] = vals
        r -= coef * (csr @ buf)
        buf[cols] = 0.0
    else:
        a = A.dense[i]
        x += coef * a
        r -= coef * (A.dense @ a)


def kaczmarz_step(state: IterState, i: int, A: RowMatrix, b=None) -> IterState:
    """One Kaczmarz projection onto row ``i``; returns a new state.

    ``b`` is accepted for symmetry with the block steps; the residual carried
    in ``state`` already encodes it.
    """
    if not (0 <= i < A.m):
        raise ContractError(f"row index {i} out of range [0, {A.m})")
    if b is not None:
        as_vector(b, A.m, "b")
    new = state.copy()
    project_row(A, new.x, new.r, i)
    new.k += 1
    new.last = int(i)
    return new


def pick_row(rule, A: RowMatrix, r: np.ndarray, rng: np.random.Generator,
             cdf: np.ndarray | None = None) -> tuple[int, IndexSet | None]:
    """Row chosen by a single-row ``rule`` at residual ``r``.

    Returns the row and the working set it was drawn from (``None`` for the
    rules that have no working set).
    """
    kind = rule.kind
    # the two sampled rules share one pass over |r_i|^2 between threshold and
    # set; the arithmetic matches grmk_threshold/grmk_set and grk_threshold/grk_set
    if kind == "grmk":
        r2 = r * r
        top = float(r2.max())
        delta = 0.0
        if top > 0.0:
            delta = rule.theta * top + (1.0 - rule.theta) * (float(r2 @ A.row_sq_norms) / A.frob_sq)
        s = IndexSet(_members(r2, delta), delta)
        return sample_grmk(s, r, A, rng), s
    if kind == "grk":
        r2 = r * r
        d = r2 / A.row_sq_norms
        eps = 0.5 * (float(np.max(d)) + float(r2.sum()) / A.frob_sq)
        s = IndexSet(_members(d, eps), eps)
        return sample_grk(s, r, rng), s
    if kind == "gk":
        s = grmk_set(r, A, grmk_threshold(r, A, 1.0))
        rows = s.indices
        d = r[rows] ** 2 / A.row_sq_norms[rows]
        return int(rows[np.argmax(d)]), s
    if kind == "mr":
        return argmax_residual(r), None
    if kind == "md":
        return argmax_distance(r, A), None
    if kind == "rk":
        return sample_row_norms(A, rng, cdf), None
    raise ContractError(f"{kind!r} is not a single-row method")
