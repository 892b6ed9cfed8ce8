"""Greedy thresholds, working-index sets and sampling rules.

Two families of greedy rules are implemented:

* residual based (Motzkin): the working set keeps rows whose squared
  residual ``|r_i|^2`` clears a threshold mixing the largest squared residual
  with a row-norm weighted average of all of them;
* distance based: the working set keeps rows whose squared distance to their
  hyperplane, ``|r_i|^2 / ||A_i||^2``, clears a threshold.

Rows with an exactly zero residual never enter a working set, and the
membership test carries a relative slack of ``GUARD`` so that the row
attaining the maximum is never lost to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .linalg import ContractError, RowMatrix

__all__ = [
    "GUARD",
    "IndexSet",
    "SelectionRule",
    "METHODS",
    "grmk_threshold",
    "grmk_set",
    "grk_threshold",
    "grk_set",
    "gbk_threshold",
    "gmbk_xi_threshold",
    "sample_grmk",
    "sample_grk",
    "sample_row_norms",
    "argmax_residual",
    "argmax_distance",
]

#: relative slack on threshold comparisons: keep i when |r_i|^2 >= t * (1 - GUARD)
GUARD = 1e-14


@dataclass(frozen=True)
class IndexSet:
    """Sorted row indices together with the threshold that produced them."""

    indices: np.ndarray
    threshold: float = 0.0

    def __len__(self) -> int:
        return int(self.indices.size)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices.tolist())

    def __contains__(self, i) -> bool:
        j = np.searchsorted(self.indices, i)
        return bool(j < self.indices.size and self.indices[j] == i)


def _squares(r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    return r * r


def _members(score: np.ndarray, threshold: float) -> np.ndarray:
    keep = score >= threshold * (1.0 - GUARD)
    if threshold <= 0.0:
        keep &= score > 0.0
    return np.flatnonzero(keep)


def grmk_threshold(r, A: RowMatrix, theta: float = 0.5) -> float:
    """Residual threshold ``theta * max|r_i|^2 + (1 - theta) * sum_i w_i |r_i|^2``.

    The weights are ``w_i = ||A_i||^2 / ||A||_F^2``. ``theta = 1/2`` is the
    plain greedy randomized Motzkin-Kaczmarz rule and ``theta = 1`` keeps only
    the rows of largest residual. A zero residual gives ``0.0``; the caller is
    expected to have stopped already.
    """
    if not 0.0 <= theta <= 1.0:
        raise ContractError(f"theta must lie in [0, 1], got {theta}")
    r2 = _squares(r)
    top = float(r2.max())
    if top == 0.0:
        return 0.0
    avg = float(r2 @ A.row_sq_norms) / A.frob_sq
    return theta * top + (1.0 - theta) * avg


def grmk_set(r, A: RowMatrix, delta: float) -> IndexSet:
    """Rows with ``|r_i|^2 >= delta`` (and ``r_i != 0``)."""
    return IndexSet(_members(_squares(r), delta), float(delta))


def grk_threshold(r, A: RowMatrix) -> float:
    """Distance threshold ``(max_i |r_i|^2/||A_i||^2 + ||r||^2/||A||_F^2) / 2``."""
    r2 = _squares(r)
    return 0.5 * (float(np.max(r2 / A.row_sq_norms)) + float(r2.sum()) / A.frob_sq)


def grk_set(r, A: RowMatrix, eps: float) -> IndexSet:
    """Rows with ``|r_i|^2 / ||A_i||^2 >= eps`` (and ``r_i != 0``)."""
    return IndexSet(_members(_squares(r) / A.row_sq_norms, eps), float(eps))


def gbk_threshold(r, A: RowMatrix, eta: float) -> float:
    """``eta`` times the largest squared distance."""
    if not 0.0 < eta <= 1.0:
        raise ContractError(f"eta must lie in (0, 1], got {eta}")
    return eta * float(np.max(_squares(r) / A.row_sq_norms))


def gmbk_xi_threshold(r, xi: float) -> float:
    """``xi`` times the largest squared residual."""
    if not 0.0 < xi <= 1.0:
        raise ContractError(f"xi must lie in (0, 1], got {xi}")
    return xi * float(_squares(r).max())


def _draw(weights: np.ndarray, rng: np.random.Generator) -> int:
    # inverse-CDF draw; one uniform per call keeps streams reproducible
    cdf = np.cumsum(weights)
    total = cdf[-1]
    if not total > 0.0:
        raise ContractError("sampling weights sum to zero")
    j = int(np.searchsorted(cdf, rng.random() * total, side="right"))
    return min(j, weights.size - 1)


def sample_grmk(idx: IndexSet, r, A: RowMatrix, rng: np.random.Generator) -> int:
    """Draw ``i`` from ``idx`` with probability proportional to its squared distance."""
    rows = idx.indices
    if rows.size == 0:
        raise ContractError("cannot sample from an empty index set")
    if rows.size == 1:
        return int(rows[0])
    r = np.asarray(r)
    d = r[rows] ** 2 / A.row_sq_norms[rows]
    return int(rows[_draw(d, rng)])


def sample_grk(idx: IndexSet, r, rng: np.random.Generator) -> int:
    """Draw ``i`` from ``idx`` with probability proportional to ``|r_i|^2``."""
    rows = idx.indices
    if rows.size == 0:
        raise ContractError("cannot sample from an empty index set")
    if rows.size == 1:
        return int(rows[0])
    return int(rows[_draw(np.asarray(r)[rows] ** 2, rng)])


def sample_row_norms(A: RowMatrix, rng: np.random.Generator, cdf: np.ndarray | None = None) -> int:
    """Randomized Kaczmarz draw: row ``i`` with probability ``||A_i||^2 / ||A||_F^2``."""
    if cdf is None:
        cdf = np.cumsum(A.row_sq_norms)
    j = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(j, A.m - 1)


def argmax_residual(r) -> int:
    """Motzkin rule; ties go to the smallest index."""
    return int(np.argmax(_squares(r)))


def argmax_distance(r, A: RowMatrix) -> int:
    """Maximum distance rule; ties go to the smallest index."""
    return int(np.argmax(_squares(r) / A.row_sq_norms))


#: method tags understood by the solver driver
METHODS = {
    "rk": "randomized Kaczmarz (rows drawn by squared norm)",
    "mr": "maximum residual (Motzkin)",
    "md": "maximum distance",
    "grk": "greedy randomized Kaczmarz",
    "grmk": "greedy randomized Motzkin-Kaczmarz (theta-relaxed)",
    "gk": "greedy Kaczmarz: theta = 1 set, argmax distance inside it",
    "gbk": "greedy block Kaczmarz with fixed eta",
    "gdbk": "greedy distance block Kaczmarz (eta matched to GRK's threshold)",
    "gmbk": "greedy Motzkin block Kaczmarz (optionally xi threshold)",
    "avg-block": "weighted average of projections over the GRMK working set",
}
BLOCK_METHODS = frozenset({"gbk", "gdbk", "gmbk", "avg-block"})


@dataclass(frozen=True)
class SelectionRule:
    """A method tag plus its parameter.

    Parameters
    ----------
    kind : str
        One of the keys of :data:`METHODS`.
    theta : float
        Relaxation for ``grmk`` (``[0, 1]``, default 1/2).
    eta : float, optional
        Threshold scale for ``gbk`` (``(0, 1]``).
    xi : float, optional
        Threshold scale for the ``gmbk`` variant (``(0, 1]``). ``None`` uses
        the GRMK threshold.
    """

    kind: str
    theta: float = 0.5
    eta: float | None = None
    xi: float | None = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in METHODS:
            raise ContractError(f"unknown method {self.kind!r}; expected one of {sorted(METHODS)}")
        if not 0.0 <= self.theta <= 1.0:
            raise ContractError(f"theta must lie in [0, 1], got {self.theta}")
        if self.kind == "gbk":
            if self.eta is None or not 0.0 < self.eta <= 1.0:
                raise ContractError(f"gbk needs eta in (0, 1], got {self.eta}")
        elif self.eta is not None:
            raise ContractError(f"eta only applies to gbk, not {self.kind}")
        if self.xi is not None:
            if self.kind != "gmbk":
                raise ContractError(f"xi only applies to gmbk, not {self.kind}")
            if not 0.0 < self.xi <= 1.0:
                raise ContractError(f"xi must lie in (0, 1], got {self.xi}")
        if self.theta != 0.5 and self.kind != "grmk":
            raise ContractError(f"theta only applies to grmk, not {self.kind}")
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    def _default_label(self) -> str:
        if self.kind == "grmk" and self.theta != 0.5:
            return f"grmk-theta={self.theta:g}"
        if self.kind == "gbk":
            return f"gbk-eta={self.eta:g}"
        if self.kind == "gmbk" and self.xi is not None:
            return f"gmbk-xi={self.xi:g}"
        return self.kind

    @property
    def is_block(self) -> bool:
        return self.kind in BLOCK_METHODS

    @classmethod
    def parse(cls, token: str) -> "SelectionRule":
        """Parse ``grmk``, ``grmk-theta=0.3``, ``gbk-eta=0.5``, ``gmbk-xi=0.8`` and friends."""
        token = token.strip().lower()
        if "=" in token:
            head, value = token.split("=", 1)
            try:
                v = float(value)
            except ValueError:
                raise ContractError(f"bad parameter value in {token!r}") from None
            params = {"grmk-theta": "theta", "gbk-eta": "eta", "gmbk-xi": "xi"}
            if head not in params:
                raise ContractError(f"unknown parameterised method {token!r}")
            return cls(head.split("-")[0], **{params[head]: v})
        if token == "gbk":
            raise ContractError("gbk needs a parameter, e.g. gbk-eta=0.5")
        return cls(token)
