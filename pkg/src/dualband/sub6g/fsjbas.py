"""Fast cyclic coordinate search over single-antenna relocations.

Starting from a feasible design, each iteration moves one antenna (cyclic
order) to the best position in its spacing-feasible candidate set, evaluating
every candidate with a full per-selection beamformer solve.  Results are
cached by selection so revisited configurations are free.
"""
from __future__ import annotations

import numpy as np

from ..errors import Infeasible, InfeasibleSubproblem
from ..geometry import candidate_set, indices_to_selection
from .scenario import Sub6gDesign, Sub6gScenario
from .socp import solve_selection

POWER_TIE = 1e-9


class _SelectionCache:
    """Per-selection design cache keyed by the sorted position set."""

    def __init__(self, scen: Sub6gScenario):
        self.scen = scen
        self.store: dict = {}

    def lookup(self, positions) -> Sub6gDesign | None:
        """Design for these positions, or None when infeasible."""
        key = tuple(sorted(positions))
        if key not in self.store:
            rows = [r for r, _ in positions]
            cols = [c for _, c in positions]
            sel = indices_to_selection(rows, cols, self.scen.cfg)
            try:
                self.store[key] = solve_selection(self.scen, sel)
            except InfeasibleSubproblem:
                self.store[key] = None
        return self.store[key]


def fsjbas(scen: Sub6gScenario, init: Sub6gDesign, max_iters: int | None = None,
           power_floor: float = 0.0, trace: list | None = None) -> Sub6gDesign:
    """Minimum-power antenna refinement from a feasible starting design.

    The power trace is non-increasing because the incumbent position is
    always a candidate.  Stops on the iteration budget, on reaching
    power_floor, or after n_s - 1 consecutive iterations without a move.
    """
    cfg = scen.cfg
    if max_iters is None:
        max_iters = 3 * cfg.n_s
    cache = _SelectionCache(scen)
    positions = list(init.selection.positions())
    best = cache.lookup(positions)
    if best is None:
        raise Infeasible("starting selection admits no feasible beamformer")
    if trace is not None:
        trace.append({"iteration": 0, "antenna_order": 0, "candidate_count": 0,
                      "best_power": best.power,
                      "positions": tuple(sorted(positions))})
    stall = 0
    for it in range(1, max_iters + 1):
        order = (it - 1) % cfg.n_s + 1
        state = indices_to_selection([r for r, _ in positions],
                                     [c for _, c in positions], cfg)
        cands = candidate_set(state, order, cfg)
        results = []
        for pos in cands:
            trial = list(positions)
            trial[order - 1] = pos
            des = cache.lookup(trial)
            results.append((np.inf if des is None else des.power, pos, des))
        min_power = min(p for p, _, _ in results)
        if not np.isfinite(min_power):
            stall += 1                       # keep the previous position
        else:
            # candidates come in lexicographic order, so near-ties resolve
            # deterministically to the smallest (row, col)
            power, pos, des = next(r for r in results if r[0] <= min_power + POWER_TIE)
            moved = pos != positions[order - 1]
            positions[order - 1] = pos
            if des.power < best.power:
                best = des
            stall = 0 if moved else stall + 1
        if trace is not None:
            trace.append({"iteration": it, "antenna_order": order,
                          "candidate_count": len(cands), "best_power": best.power,
                          "positions": tuple(sorted(positions))})
        if best.power <= power_floor:
            break
        if stall >= cfg.n_s - 1 and cfg.n_s > 1:
            break
    return best
