"""Reference sub-6G antenna-selection strategies used in the comparisons.

The conventional-selection benchmark restricts candidates to the coarse
half-sub-6G-wavelength grid (exactly the relaxed placement problem the
coarse-grid algorithm solves); the fixed array pins the selection to the
center of the panel; the random benchmark draws a uniformly random
spacing-feasible selection and only solves the beamformer.
"""
from __future__ import annotations

import numpy as np

from ..errors import DualbandError, Infeasible, InfeasibleSubproblem
from ..geometry import (ArrayConfig, SelectionState, build_coarse_grid,
                        indices_to_selection, spacing_feasible)
from ..sub6g import Sub6gDesign, Sub6gScenario, abas, fsjbas, solve_selection

CAS = "cas"
FIXED_ARRAY = "fixed"
RAS_RS = "ras_rs"
RAS_FSJBAS = "ras_fsjbas"
SUB6G_STRATEGIES = (CAS, FIXED_ARRAY, RAS_RS, RAS_FSJBAS)


def fixed_array_selection(cfg: ArrayConfig) -> SelectionState:
    """The n_s coarse-grid cells nearest the panel center."""
    cells = build_coarse_grid(cfg).cell_positions(cfg)
    center_r = (1 + cfg.grid_rows) / 2.0
    center_c = (1 + cfg.grid_cols) / 2.0
    cells.sort(key=lambda rc: ((rc[0] - center_r) ** 2
                               + (rc[1] - center_c) ** 2, rc))
    chosen = cells[:cfg.n_s]
    if len(chosen) < cfg.n_s:
        raise Infeasible("coarse grid holds fewer cells than antennas")
    return indices_to_selection([r for r, _ in chosen],
                                [c for _, c in chosen], cfg)


def random_selection(cfg: ArrayConfig, rng: np.random.Generator,
                     max_tries: int = 10000) -> SelectionState:
    """Uniformly random spacing-feasible selection (rejection sampling)."""
    n_cells = cfg.grid_rows * cfg.grid_cols
    for _ in range(max_tries):
        flat = rng.choice(n_cells, size=cfg.n_s, replace=False)
        rows = flat // cfg.grid_cols + 1
        cols = flat % cfg.grid_cols + 1
        sel = indices_to_selection(rows, cols, cfg)
        if spacing_feasible(sel, cfg):
            return sel
    raise Infeasible("no spacing-feasible selection found")


def _random_feasible_design(scen: Sub6gScenario, rng: np.random.Generator,
                            attempts: int) -> Sub6gDesign:
    for _ in range(attempts):
        sel = random_selection(scen.cfg, rng)
        try:
            return solve_selection(scen, sel)
        except InfeasibleSubproblem:
            continue
    raise Infeasible("no random selection admitted a feasible beamformer")


def design_sub6g_strategy(scen: Sub6gScenario, kind: str,
                          rng: np.random.Generator | None = None,
                          attempts: int = 50,
                          restarts: int = 0) -> Sub6gDesign:
    """Design one sub-6G selection strategy end to end.

    restarts adds that many extra joint-search runs from random feasible
    selections (the cyclic per-antenna search can hit local minima where no
    single antenna move improves); the lowest-power run wins.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if kind == CAS:
        return abas(scen)
    if kind == FIXED_ARRAY:
        return solve_selection(scen, fixed_array_selection(scen.cfg))
    if kind == RAS_FSJBAS:
        try:
            init = abas(scen)
        except Infeasible:
            # the coarse grid can be infeasible while the dense grid is not;
            # start the joint search from a random feasible selection instead
            init = _random_feasible_design(scen, rng, attempts)
        best = fsjbas(scen, init)
        for _ in range(restarts):
            try:
                start = _random_feasible_design(scen, rng, attempts)
            except Infeasible:
                break
            cand = fsjbas(scen, start)
            if cand.power < best.power:
                best = cand
        return best
    if kind == RAS_RS:
        return _random_feasible_design(scen, rng, attempts)
    raise DualbandError(f"unknown sub-6G strategy '{kind}'")
