"""Alternating beamformer / antenna-selection design on the coarse grid.

The selection matrix is relaxed to [0, 1] weights on the spacing-feasible
coarse cells, alternately optimizing the beamformer (SOCP) and the relaxed
weights (majorize-minimize surrogate SOCP with a growing binariness penalty),
then rounding with a deterministic feasibility repair.
"""
from __future__ import annotations

import numpy as np

from ..conic import OPTIMAL, INFEASIBLE, MAX_ITERS, SocpBuilder
from ..errors import Infeasible, InfeasibleSubproblem
from ..geometry import (ArrayConfig, CoarseGrid, build_coarse_grid,
                        indices_to_selection, spacing_feasible)
from .scenario import Sub6gDesign, Sub6gScenario
from .socp import rescale_weighted, solve_fs, solve_selection


def _cell_pvec_indices(grid: CoarseGrid, cfg: ArrayConfig) -> np.ndarray:
    """Column-major p-vector index of every coarse cell (row-major cell order)."""
    return np.array([(c - 1) * cfg.grid_rows + (r - 1)
                     for r, c in grid.cell_positions(cfg)], dtype=int)


def _expand(q: np.ndarray, cells: np.ndarray, n_p: int) -> np.ndarray:
    w = np.zeros(n_p)
    w[cells] = q
    return w


def abas_init(scen: Sub6gScenario, kappa: float = 10.0):
    """Steered beamformer columns and uniform relaxed weights on the coarse grid."""
    grid = build_coarse_grid(scen.cfg)
    cells = _cell_pvec_indices(grid, scen.cfg)
    n_cells = cells.size
    q = np.full(n_cells, scen.cfg.n_s / n_cells)
    mask = _expand(np.ones(n_cells), cells, scen.cfg.n_p)
    extra = sum((scen.target_steering(t) for t in range(scen.t_s)),
                np.zeros(scen.cfg.n_p, dtype=complex))
    f_s = kappa * mask[:, None] * (scen.h_sub + extra[:, None])
    return f_s, q


def abas_step_fs(scen: Sub6gScenario, weights: np.ndarray,
                 fbar: np.ndarray, warm=None):
    """Beamformer update at fixed relaxed weights (one linearized SOCP)."""
    return solve_fs(scen, weights, fbar, warm=warm)


def abas_step_p(scen: Sub6gScenario, fbar: np.ndarray, qbar: np.ndarray,
                mu: float, warm=None):
    """Relaxed-selection update at a fixed beamformer.

    Minimizes masked power minus the binariness reward 2*mu*<qbar, q> subject
    to the box, count, SOC-form SINR and linearized gain constraints; the
    surrogate majorizes power - mu*||q||^2, so the penalized objective cannot
    increase between consecutive calls at fixed fbar.
    """
    grid = build_coarse_grid(scen.cfg)
    cells = _cell_pvec_indices(grid, scen.cfg)
    n_cells = cells.size
    fb = fbar[cells, :]
    bld = SocpBuilder()
    qvar = bld.real_var(n_cells)
    bld.add_box(qvar, 0.0, 1.0)
    ones = np.ones((1, n_cells))
    bld.add_zero(bld.rows_real(ones, qvar, const=[-float(scen.cfg.n_s)]))

    row_amp = np.sqrt(np.sum(np.abs(fb) ** 2, axis=1))
    bld.add_quad_epigraph(bld.rows_real(np.diag(row_amp), qvar))
    bld.add_linear_objective_var(qvar, -2.0 * mu * qbar)

    for k in range(scen.k_s):
        hk = scen.h_sub[cells, k]
        ck = (fb.conj() * hk[:, None]).T           # ck[i, j] = conj(F[j,i]) h[j]
        head_coefs = np.real(fb[:, k].conj() * hk).reshape(1, -1)
        head = bld.rows_real(head_coefs, qvar)
        bld.add_nonneg(head)
        scale = np.sqrt(1.0 + 1.0 / scen.sinr_thresholds[k])
        body = bld.rows_complex_real_arg(ck, qvar)
        body = body.vstack([body, bld.row_const(scen.sigma)])
        bld.add_soc(head.scaled(scale), body)

    gram = fb @ fb.conj().T
    for t in range(scen.t_s):
        beta = scen.target_steering(t)[cells]
        u = beta.conj()[:, None] * gram * beta[None, :]
        coefs = 2.0 * np.real(qbar @ u).reshape(1, -1)
        quad = float(np.real(qbar @ u @ qbar))
        const = -(quad + scen.gain_floor(t))
        den = max(1.0, abs(const), float(np.max(np.abs(coefs), initial=0.0)))
        row = bld.rows_real(coefs / den, qvar, const=[const / den])
        bld.add_nonneg(row)

    sol = bld.solve(warm=warm.raw if warm is not None else None)
    if sol.status == INFEASIBLE:
        raise InfeasibleSubproblem("relaxed selection subproblem infeasible")
    if sol.status not in (OPTIMAL, MAX_ITERS):
        raise InfeasibleSubproblem(f"relaxed selection subproblem {sol.status}")
    return np.clip(sol.value(qvar), 0.0, 1.0), sol


def round_and_repair(q: np.ndarray, scen: Sub6gScenario):
    """Entrywise round of the relaxed weights with deterministic repair.

    Picks greedily by descending weight (row-major cell order breaks ties),
    skipping spacing conflicts, until exactly n_s antennas remain; shortfalls
    are filled from the remaining coarse cells by descending weight.
    """
    cfg = scen.cfg
    grid = build_coarse_grid(cfg)
    positions = grid.cell_positions(cfg)
    order = sorted(range(len(positions)), key=lambda i: (-q[i], positions[i]))
    chosen = []

    def conflicts(pos):
        return any(abs(pos[0] - r) < cfg.v_s and abs(pos[1] - c) < cfg.h_s
                   for r, c in chosen)

    for i in order:
        if len(chosen) == cfg.n_s:
            break
        if round(q[i]) >= 1 and not conflicts(positions[i]):
            chosen.append(positions[i])
    for i in order:                                  # fill any shortfall
        if len(chosen) == cfg.n_s:
            break
        if positions[i] not in chosen and not conflicts(positions[i]):
            chosen.append(positions[i])
    if len(chosen) < cfg.n_s:
        raise Infeasible("coarse grid has fewer than n_s feasible cells")
    chosen.sort()
    sel = indices_to_selection([r for r, _ in chosen], [c for _, c in chosen], cfg)
    assert spacing_feasible(sel, cfg)
    return sel


def abas(scen: Sub6gScenario, max_iters: int = 10, mu0: float = 1.0,
         mu_growth: float = 2.0, mu_cap: float = 1e3,
         kappa: float = 10.0) -> Sub6gDesign:
    """Full alternating design: relax, alternate, round, repair, re-solve."""
    grid = build_coarse_grid(scen.cfg)
    cells = _cell_pvec_indices(grid, scen.cfg)
    fbar, qbar = abas_init(scen, kappa=kappa)
    mu = mu0
    warm_f = warm_q = None
    try:
        for _ in range(max_iters):
            weights = _expand(qbar, cells, scen.cfg.n_p)
            fbar, _, warm_f = abas_step_fs(scen, weights, fbar, warm=warm_f)
            # margin keeps the next selection subproblem strictly feasible at
            # qbar despite the finite solve tolerance
            fbar = rescale_weighted(fbar, scen, weights, margin=1e-3)
            qbar, warm_q = abas_step_p(scen, fbar, qbar, mu, warm=warm_q)
            mu = min(mu * mu_growth, mu_cap)
        selection = round_and_repair(qbar, scen)
        return solve_selection(scen, selection)
    except InfeasibleSubproblem as exc:
        raise Infeasible(f"no feasible coarse-grid design: {exc}") from exc
