"""Greedy Motzkin-Kaczmarz and related row-action solvers for consistent linear systems."""
from .linalg import (
    ContractError,
    InconsistentSystemError,
    IterState,
    RowMatrix,
    axpy_row,
    block_ls_apply,
    lambda_max,
    lambda_min_pos,
    min_norm_solution,
    row_dot,
)
from .selection import IndexSet, SelectionRule
from .single import kaczmarz_step
from .block import WeightScheme, averaged_block_step, gbk_step, gdbk_eta, gmbk_step
from .solve import SolveReport, Status, StopCriteria, solve

__version__ = "0.1.0"
