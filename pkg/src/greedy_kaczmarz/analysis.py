"""Convergence factors, empirical rates and the RES/RR metrics.

The factor functions evaluate the closed-form per-step contraction bounds of
the greedy randomized Motzkin-Kaczmarz method, its block version, and the
greedy randomized Kaczmarz method. The Motzkin-type factors depend on the
working sets a run actually visited, so they take recorded set/index
histories (see ``solve(..., record_sets=True)``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import ContractError, RowMatrix, lambda_max, lambda_min_pos

__all__ = [
    "metrics",
    "grk_factor",
    "grmk_first_factor",
    "grmk_step_factor",
    "grmk_bound_general",
    "gmbk_first_factor",
    "gmbk_step_factor",
    "gmbk_bound",
    "GrmkBound",
    "GmbkBound",
    "BoundReport",
    "bound_report",
    "error_matrix",
    "empirical_rate",
    "rate_curve",
]


def metrics(x, x_star, r, r0) -> tuple[float, float]:
    """``(RES, RR)`` with RES = ||x - x*||^2/||x*||^2 and RR = ||r||^2/||r0||^2."""
    x_star = np.asarray(x_star, dtype=np.float64)
    r0 = np.asarray(r0, dtype=np.float64)
    xs = float(x_star @ x_star)
    if xs == 0.0:
        raise ContractError("degenerate reference solution: ||x*|| = 0, RES undefined")
    rn = float(r0 @ r0)
    if rn == 0.0:
        raise ContractError("initial residual is zero, RR undefined")
    e = np.asarray(x, dtype=np.float64) - x_star
    r = np.asarray(r, dtype=np.float64)
    return float(e @ e) / xs, float(r @ r) / rn


def _lam(A: RowMatrix, lam):
    return lambda_min_pos(A) if lam is None else float(lam)


def grk_factor(A: RowMatrix, lam: float | None = None) -> float:
    """GRK per-step factor ``1 - 1/2 (lam/F) (F/(F - min||A_i||^2) + 1)``."""
    lam = _lam(A, lam)
    F = A.frob_sq
    return 1.0 - 0.5 * (lam / F) * (F / (F - A.row_sq_norms.min()) + 1.0)


def grmk_first_factor(A: RowMatrix, first_set, lam: float | None = None) -> float:
    """First-step factor ``1 - (min_i||A_i||^2 / max_{I_0}||A_i||^2) lam/F``."""
    lam = _lam(A, lam)
    rows = np.asarray(getattr(first_set, "indices", first_set), dtype=np.intp)
    sq = A.row_sq_norms
    return 1.0 - sq.min() / sq[rows].max() * lam / A.frob_sq


def _min_excluding(sq: np.ndarray, excluded) -> float:
    mask = np.ones(sq.size, dtype=bool)
    mask[np.asarray(excluded, dtype=np.intp)] = False
    return float(sq[mask].min()) if mask.any() else math.nan


def grmk_step_factor(A: RowMatrix, current_set, previous_index: int, lam: float | None = None) -> float:
    """Per-step factor for ``k >= 1``.

    ``1 - 1/2 * ratio * (lam/F) * (F/(F - min||A_i||^2) + 1)`` with
    ``ratio = min_{i != i_{k-1}} ||A_i||^2 / max_{i in I_k} ||A_i||^2``.
    """
    lam = _lam(A, lam)
    rows = np.asarray(getattr(current_set, "indices", current_set), dtype=np.intp)
    sq = A.row_sq_norms
    F = A.frob_sq
    ratio = _min_excluding(sq, [previous_index]) / sq[rows].max()
    return 1.0 - 0.5 * ratio * (lam / F) * (F / (F - sq.min()) + 1.0)


@dataclass
class GrmkBound:
    """Factors for one recorded GRMK run.

    ``steps[k-1]`` is the factor of step ``k`` (``k >= 1``), ``general`` uses
    the smallest norm ratio seen in the run, and ``cumulative[k]`` bounds
    ``E||x_k - x*||^2 / ||x_0 - x*||^2``.
    """

    first: float
    steps: np.ndarray
    alpha: float
    general: float
    cumulative: np.ndarray


def grmk_bound_general(A: RowMatrix, observed_sets, last_indices, lam: float | None = None) -> GrmkBound:
    """Convergence factors along a recorded run.

    Parameters
    ----------
    observed_sets : sequence
        ``I_0, I_1, ...``: the working set used at each step.
    last_indices : sequence of int
        ``i_0, i_1, ...``: the row chosen at each step.
    """
    lam = _lam(A, lam)
    sets = [np.asarray(getattr(s, "indices", s), dtype=np.intp) for s in observed_sets]
    idx = [int(i) for i in last_indices]
    if not sets or len(sets) != len(idx):
        raise ContractError("need one chosen index per recorded working set")
    sq = A.row_sq_norms
    F = A.frob_sq
    first = grmk_first_factor(A, sets[0], lam)
    ratios = np.array([_min_excluding(sq, [idx[k - 1]]) / sq[sets[k]].max() for k in range(1, len(sets))])
    scale = 0.5 * (lam / F) * (F / (F - sq.min()) + 1.0)
    steps = 1.0 - ratios * scale
    alpha = float(ratios.min()) if ratios.size else 1.0
    general = 1.0 - alpha * scale
    k = np.arange(len(sets) + 1)
    cumulative = np.where(k == 0, 1.0, first * general ** np.maximum(k - 1, 0))
    return GrmkBound(first, steps, alpha, general, cumulative)


def gmbk_first_factor(A: RowMatrix, first_set, lam: float | None = None) -> float:
    """``1 - |I_0| min||A_i||^2 / lambda_max(A_I0^T A_I0) * lam/F``."""
    lam = _lam(A, lam)
    rows = np.asarray(getattr(first_set, "indices", first_set), dtype=np.intp)
    return 1.0 - rows.size * A.row_sq_norms.min() / lambda_max(A.rows(rows)) * lam / A.frob_sq


def gmbk_step_factor(A: RowMatrix, current_set, previous_set, lam: float | None = None) -> float:
    """Block factor for ``k >= 1``; ``nan`` when ``I_{k-1}`` covers every row."""
    lam = _lam(A, lam)
    cur = np.asarray(getattr(current_set, "indices", current_set), dtype=np.intp)
    prev = np.asarray(getattr(previous_set, "indices", previous_set), dtype=np.intp)
    sq = A.row_sq_norms
    F = A.frob_sq
    rest = F - float(sq[prev].sum())
    low = _min_excluding(sq, prev)
    if not rest > 0.0 or math.isnan(low):
        return math.nan
    return 1.0 - 0.5 * cur.size * low / lambda_max(A.rows(cur)) * (lam / F) * (F / rest + 1.0)


@dataclass
class GmbkBound:
    """Deterministic block factors along a run; ``vacuous`` flags factors <= 0."""

    first: float
    steps: np.ndarray
    vacuous: np.ndarray = field(init=False)

    def __post_init__(self):
        self.vacuous = np.concatenate([[self.first <= 0.0], self.steps <= 0.0])

    @property
    def general(self) -> float:
        """Largest (weakest) finite factor of the run."""
        allf = np.concatenate([[self.first], self.steps])
        allf = allf[np.isfinite(allf)]
        return float(allf.max())


def gmbk_bound(A: RowMatrix, set_history, lam: float | None = None) -> GmbkBound:
    """Per-step block factors for the recorded working sets ``I_0, I_1, ...``."""
    lam = _lam(A, lam)
    sets = [np.asarray(getattr(s, "indices", s), dtype=np.intp) for s in set_history]
    if not sets:
        raise ContractError("empty set history")
    first = gmbk_first_factor(A, sets[0], lam)
    steps = np.array([gmbk_step_factor(A, sets[k], sets[k - 1], lam) for k in range(1, len(sets))])
    return GmbkBound(first, steps)


@dataclass
class BoundReport:
    grmk_first_step: float
    grmk_general: float
    grk_factor: float
    gmbk_first: float | None = None
    gmbk_general: float | None = None
    rho_history: np.ndarray | None = None


def bound_report(A: RowMatrix, grmk_run=None, gmbk_run=None, rho=None, lam: float | None = None) -> BoundReport:
    """Collect the factors for recorded GRMK/GMBK runs (``SolveReport`` with sets)."""
    lam = _lam(A, lam)
    first = general = math.nan
    if grmk_run is not None:
        g = grmk_bound_general(A, grmk_run.sets[1:], grmk_run.chosen[1:], lam)
        first, general = g.first, g.general
    gm_first = gm_general = None
    if gmbk_run is not None:
        gb = gmbk_bound(A, gmbk_run.sets[1:], lam)
        gm_first, gm_general = gb.first, gb.general
    return BoundReport(first, general, grk_factor(A, lam), gm_first, gm_general,
                       None if rho is None else np.asarray(rho))


def error_matrix(reports, length: int | None = None) -> np.ndarray:
    """Stack per-trial ``||x_k - x*||^2 / ||x_0 - x*||^2`` histories.

    Runs that stopped early are padded with their last value, since the
    iterate no longer moves.
    """
    curves = [np.asarray(getattr(rep, "err_sq", rep), dtype=np.float64) for rep in reports]
    K = max(c.size for c in curves) if length is None else length
    out = np.empty((len(curves), K))
    for t, c in enumerate(curves):
        if c[0] == 0.0:
            raise ContractError("initial error is zero; relative error undefined")
        c = c[:K] / c[0]
        out[t, : c.size] = c
        out[t, c.size:] = c[-1]
    return out


def _mean(col: np.ndarray) -> float:
    return math.fsum(col.tolist()) / col.size


def empirical_rate(error_history, k: int) -> float:
    """``rho_k = (E||x_k - x*||^2 / ||x_0 - x*||^2)^(1/k)``.

    ``error_history`` is one squared-error history or a ``(trials, K)``
    array of them; the expectation is the trial mean (compensated sum).
    """
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    E = np.atleast_2d(np.asarray(error_history, dtype=np.float64))
    if k >= E.shape[1]:
        raise ContractError(f"history has {E.shape[1]} entries, no iterate {k}")
    if np.any(E[:, 0] == 0.0):
        raise ContractError("initial error is zero; rate undefined")
    ratio = _mean(E[:, k] / E[:, 0])
    return ratio ** (1.0 / k) if ratio > 0.0 else 0.0


def rate_curve(error_history) -> np.ndarray:
    """``rho_k`` for ``k = 1 .. K-1``."""
    E = np.atleast_2d(np.asarray(error_history, dtype=np.float64))
    return np.array([empirical_rate(E, k) for k in range(1, E.shape[1])])
