"""Array layout, candidate grids and antenna-selection algebra.

Index conventions used everywhere in this package:
  * grid positions are 1-based, matching the ``b*V + 1`` placement formulas,
  * vectorization of a selection matrix is column-major (``order='F'``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DualbandError


@dataclass(frozen=True)
class ArrayConfig:
    """Dimensions and spacing thresholds of the dual-band panel.

    n_row, n_col: mmWave antennas per column / per row of the planar array.
    n_s:          number of selected sub-6G antennas.
    n_rf:         number of mmWave RF chains.
    h_s, v_s:     minimum horizontal / vertical index spacing between
                  selected sub-6G antennas (units of half mmWave wavelength).
    lambda_ratio: mmWave wavelength over sub-6G wavelength (f_s / f_m).
    """

    n_row: int
    n_col: int
    n_s: int
    n_rf: int = 1
    h_s: int = 1
    v_s: int = 1
    lambda_ratio: float = 1.0 / 6.0

    def __post_init__(self):
        if self.n_row < 2 or self.n_col < 2:
            raise DualbandError("panel needs at least 2x2 mmWave antennas")
        if self.n_s < 1 or self.n_rf < 1:
            raise DualbandError("n_s and n_rf must be positive")
        if self.h_s < 1 or self.v_s < 1:
            raise DualbandError("spacing thresholds must be >= 1")
        if not 0 < self.lambda_ratio <= 1:
            raise DualbandError("lambda_ratio must be in (0, 1]")

    @property
    def grid_rows(self) -> int:
        return self.n_row - 1

    @property
    def grid_cols(self) -> int:
        return self.n_col - 1

    @property
    def n_p(self) -> int:
        """Number of candidate sub-6G antenna positions."""
        return self.grid_rows * self.grid_cols

    @property
    def n_m(self) -> int:
        """Number of mmWave antennas."""
        return self.n_row * self.n_col


@dataclass(frozen=True)
class SelectionState:
    """A feasible set of selected sub-6G antennas.

    p_matrix is the binary (n_row-1) x (n_col-1) selection matrix; x_idx and
    y_idx hold the 1-based row / column indices of the selected antennas.
    """

    p_matrix: np.ndarray
    x_idx: np.ndarray
    y_idx: np.ndarray

    @property
    def p_vec(self) -> np.ndarray:
        """Column-major vectorization of the selection matrix."""
        return self.p_matrix.flatten(order="F")

    def positions(self) -> list[tuple[int, int]]:
        return list(zip(self.x_idx.tolist(), self.y_idx.tolist()))

    def to_json(self, cfg: ArrayConfig) -> str:
        return json.dumps({
            "rows": self.x_idx.tolist(),
            "cols": self.y_idx.tolist(),
            "n_row": cfg.n_row,
            "n_col": cfg.n_col,
        })

    @staticmethod
    def from_json(text: str, cfg: ArrayConfig) -> "SelectionState":
        obj = json.loads(text)
        if obj["n_row"] != cfg.n_row or obj["n_col"] != cfg.n_col:
            raise DimensionMismatch("selection file does not match array config")
        return indices_to_selection(obj["rows"], obj["cols"], cfg)


@dataclass
class CoarseGrid:
    """Spacing-feasible candidate mask and its relaxed selection weights."""

    c_matrix: np.ndarray
    m_row: int
    m_col: int
    q_matrix: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.q_matrix is None:
            self.q_matrix = np.zeros((self.m_row, self.m_col))

    def cell_positions(self, cfg: ArrayConfig) -> list[tuple[int, int]]:
        """1-based grid position of every coarse cell, row-major cell order."""
        return [(b * cfg.v_s + 1, d * cfg.h_s + 1)
                for b in range(self.m_row) for d in range(self.m_col)]


def build_coarse_grid(cfg: ArrayConfig) -> CoarseGrid:
    """Mask of grid positions that are pairwise spacing-feasible by construction.

    Ones sit at rows b*v_s + 1 and columns d*h_s + 1 (1-based), so any two
    distinct ones are at least (v_s, h_s) apart in index distance.
    """
    m_row = -(-cfg.grid_rows // cfg.v_s)
    m_col = -(-cfg.grid_cols // cfg.h_s)
    c = np.zeros((cfg.grid_rows, cfg.grid_cols), dtype=int)
    for b in range(m_row):
        for d in range(m_col):
            c[b * cfg.v_s, d * cfg.h_s] = 1
    return CoarseGrid(c_matrix=c, m_row=m_row, m_col=m_col)


def coarse_to_full(grid: CoarseGrid, cfg: ArrayConfig) -> np.ndarray:
    """Expand coarse-grid weights Q to a full-size selection matrix P.

    P[b*v_s, d*h_s] = Q[b, d] (0-based), zero elsewhere; linear in Q.
    """
    if grid.q_matrix.shape != (grid.m_row, grid.m_col):
        raise DimensionMismatch("q_matrix shape does not match coarse grid")
    if grid.c_matrix.shape != (cfg.grid_rows, cfg.grid_cols):
        raise DimensionMismatch("coarse grid does not match array config")
    p = np.zeros((cfg.grid_rows, cfg.grid_cols))
    for b in range(grid.m_row):
        for d in range(grid.m_col):
            p[b * cfg.v_s, d * cfg.h_s] = grid.q_matrix[b, d]
    return p


def indices_to_selection(x_idx, y_idx, cfg: ArrayConfig) -> SelectionState:
    """Build a SelectionState from 1-based (row, column) index vectors."""
    x = np.asarray(x_idx, dtype=int)
    y = np.asarray(y_idx, dtype=int)
    if x.shape != (cfg.n_s,) or y.shape != (cfg.n_s,):
        raise DimensionMismatch(f"expected {cfg.n_s} antenna indices")
    if np.any(x < 1) or np.any(x > cfg.grid_rows) or np.any(y < 1) or np.any(y > cfg.grid_cols):
        raise DualbandError("antenna index outside the candidate grid")
    if len({(a, b) for a, b in zip(x.tolist(), y.tolist())}) != cfg.n_s:
        raise DualbandError("duplicate antenna position")
    p = np.zeros((cfg.grid_rows, cfg.grid_cols), dtype=int)
    p[x - 1, y - 1] = 1
    return SelectionState(p_matrix=p, x_idx=x.copy(), y_idx=y.copy())


def selection_from_matrix(p_matrix: np.ndarray, cfg: ArrayConfig) -> SelectionState:
    """Extract the (row, col) index vectors from a binary selection matrix."""
    rows, cols = np.nonzero(p_matrix)
    order = np.lexsort((cols, rows))
    return indices_to_selection(rows[order] + 1, cols[order] + 1, cfg)


def spacing_feasible(state: SelectionState, cfg: ArrayConfig) -> bool:
    """Check the pairwise minimum-spacing constraint between selected antennas.

    Two antennas conflict when they are closer than v_s rows AND closer than
    h_s columns, i.e. each selected antenna excludes a (2*v_s-1) x (2*h_s-1)
    index neighborhood around itself.
    """
    x, y = state.x_idx, state.y_idx
    for p in range(len(x)):
        for q in range(p + 1, len(x)):
            if abs(int(x[p]) - int(x[q])) < cfg.v_s and abs(int(y[p]) - int(y[q])) < cfg.h_s:
                return False
    return True


def candidate_set(state: SelectionState, antenna_order: int, cfg: ArrayConfig) -> list[tuple[int, int]]:
    """All grid positions the given antenna may move to without violating spacing.

    antenna_order is 1-based.  The antenna's current position is always a
    member because the state itself is spacing-feasible.
    """
    if not 1 <= antenna_order <= cfg.n_s:
        raise DualbandError("antenna_order out of range")
    others = [p for p in range(cfg.n_s) if p != antenna_order - 1]
    ox = state.x_idx[others]
    oy = state.y_idx[others]
    out = []
    for x in range(1, cfg.grid_rows + 1):
        row_close = np.abs(ox - x) < cfg.v_s
        for y in range(1, cfg.grid_cols + 1):
            if np.any(row_close & (np.abs(oy - y) < cfg.h_s)):
                continue
            out.append((x, y))
    return out
