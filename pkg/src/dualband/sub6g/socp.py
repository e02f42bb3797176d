"""Power-minimizing beamformer solves used by both design algorithms.

The beamformer subproblem keeps only the rows of F on antennas with nonzero
selection weight, which keeps the cone programs small.  The nonconvex gain
constraint enters through its first-order lower bound around a linearization
point and is tightened by re-linearizing (successive convex approximation).
"""
from __future__ import annotations

import numpy as np

from ..conic import OPTIMAL, INFEASIBLE, MAX_ITERS, SocpBuilder
from ..errors import InfeasibleSubproblem
from ..geometry import SelectionState
from .scenario import Sub6gDesign, Sub6gScenario

SUPPORT_TOL = 1e-9


def default_linearization(scen: Sub6gScenario, weights: np.ndarray) -> np.ndarray:
    """Columns steered at the user channels plus all sensing targets."""
    mask = (np.asarray(weights) > SUPPORT_TOL).astype(float)
    extra = sum((scen.target_steering(t) for t in range(scen.t_s)),
                np.zeros(scen.cfg.n_p, dtype=complex))
    return mask[:, None] * (scen.h_sub + extra[:, None])


def solve_fs(scen: Sub6gScenario, weights: np.ndarray, fbar: np.ndarray | None = None,
             warm=None, tol: float = 1e-4):
    """One conic solve of the beamformer subproblem at fixed selection weights.

    Minimizes the masked Frobenius power subject to the SOC-form SINR
    constraints and, when sensing targets exist, gain constraints linearized
    at fbar.  Returns (F, power, solution); F has zero rows off the support.
    """
    weights = np.asarray(weights, dtype=float)
    sup = np.flatnonzero(weights > SUPPORT_TOL)
    ns, ks = sup.size, scen.k_s
    w = weights[sup]
    bld = SocpBuilder()
    fvar = bld.complex_var(ns * ks)

    w_full = np.tile(w, ks)
    bld.add_quad_epigraph(bld.rows_complex(np.diag(w_full.astype(complex)), fvar))

    for k in range(scen.k_s):
        gk = w * scen.h_sub[sup, k]
        mk = np.zeros((ks, ns * ks), dtype=complex)
        for i in range(ks):
            mk[i, i * ns:(i + 1) * ns] = gk.conj()
        bvec = np.zeros(ns * ks, dtype=complex)
        bvec[k * ns:(k + 1) * ns] = gk
        head = bld.row_re_inner(bvec, fvar)
        bld.add_nonneg(head)
        scale = np.sqrt(1.0 + 1.0 / scen.sinr_thresholds[k])
        body = bld.rows_complex(mk, fvar)
        body = body.vstack([body, bld.row_const(scen.sigma)])
        bld.add_soc(head.scaled(scale), body)

    if scen.t_s:
        if fbar is None:
            fbar = default_linearization(scen, weights)
        fb = fbar[sup, :]
        for t in range(scen.t_s):
            phi = w * scen.target_steering(t)[sup]
            proj = phi.conj() @ fb                      # phi^H fbar per column
            cvec = np.concatenate([phi * proj[i] for i in range(ks)])
            quad = float(np.sum(np.abs(proj) ** 2))
            const = -(quad + scen.gain_floor(t))
            # normalize so a large linearization point cannot distort the
            # solver's relative residual scale
            den = max(1.0, abs(const), 2.0 * float(np.max(np.abs(cvec), initial=0.0)))
            row = bld.row_re_inner(2.0 * cvec / den, fvar, const=const / den)
            bld.add_nonneg(row)

    sol = bld.solve(tol=tol, warm=warm.raw if warm is not None else None)
    if sol.status == INFEASIBLE:
        raise InfeasibleSubproblem("beamformer subproblem infeasible at this selection")
    if sol.status not in (OPTIMAL, MAX_ITERS):
        raise InfeasibleSubproblem(f"beamformer subproblem {sol.status}")
    fsup = sol.value(fvar).reshape((ns, ks), order="F")
    f_full = np.zeros((scen.cfg.n_p, ks), dtype=complex)
    f_full[sup, :] = fsup
    power = float(np.sum(np.abs(w[:, None] * fsup) ** 2))
    return f_full, power, sol


def rescale_weighted(f_s: np.ndarray, scen: Sub6gScenario, weights: np.ndarray,
                     margin: float = 0.0, slack: float = 1e-12) -> np.ndarray:
    """Scale the beamformer up (never down) until every constraint holds.

    A common scale factor raises all SINRs (noise stays fixed) and all gains,
    so small solver-tolerance violations can be repaired exactly.  margin
    tightens each threshold by the given relative amount.
    """
    p = np.asarray(weights, dtype=float)
    c2 = 1.0
    for k in range(scen.k_s):
        hk = scen.h_sub[:, k] * p
        powers = np.abs(hk.conj() @ f_s) ** 2
        signal = float(powers[k])
        interf = float(np.sum(powers)) - signal
        gamma = scen.sinr_thresholds[k] * (1.0 + margin)
        head = signal - gamma * interf
        if head <= 0:
            raise InfeasibleSubproblem("SINR unreachable by scaling; solve too inexact")
        c2 = max(c2, gamma * scen.noise_power / head)
    for t in range(scen.t_s):
        phi = p * scen.target_steering(t)
        g2 = float(np.sum(np.abs(f_s.conj().T @ phi) ** 2))
        floor = scen.gain_floor(t) * (1.0 + margin)
        if floor > 0:
            if g2 <= 0:
                raise InfeasibleSubproblem("zero gain cannot be scaled to threshold")
            c2 = max(c2, floor / g2)
    return f_s * np.sqrt(c2 + slack)


def rescale_to_feasible(f_s: np.ndarray, scen: Sub6gScenario,
                        selection: SelectionState) -> np.ndarray:
    return rescale_weighted(f_s, scen, selection.p_vec)


def solve_selection(scen: Sub6gScenario, selection: SelectionState,
                    sca_iters: int = 15, rel_tol: float = 1e-4,
                    tol: float = 1e-4) -> Sub6gDesign:
    """Optimal beamformer and power for one fixed binary selection.

    Deterministic: the gain linearization starts from the steered columns and
    is refined to convergence, so equal selections always yield equal powers.
    """
    weights = selection.p_vec.astype(float)
    fbar = None
    warm = None
    power = np.inf
    f_s = None
    iters = sca_iters if scen.t_s else 1
    for _ in range(iters):
        f_s, new_power, warm = solve_fs(scen, weights, fbar, warm=warm, tol=tol)
        if abs(power - new_power) <= rel_tol * max(1.0, new_power):
            power = new_power
            break
        power = new_power
        fbar = f_s
    f_s = rescale_to_feasible(f_s, scen, selection)
    design = Sub6gDesign(f_s=f_s, selection=selection)
    design.power = design.recompute_power()
    return design
