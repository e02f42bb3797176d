"""Operator-splitting design of the reconfigurable hybrid beamformer.

Sum-rate maximization is handled through its weighted-MMSE reformulation:
alternating closed-form receiver/weight updates, a convexified solve for an
auxiliary fully-digital beamformer, an exhaustive per-antenna phase/switch
step, a least-squares digital stage, and a running multiplier that drives the
digital auxiliary and the hybrid product together.

The fully-digital solve is performed in the low-dimensional subspace spanned
by the user channels, the target steering vectors, the penalty target and the
previous iterate; components orthogonal to that span only add power and
penalty, so the restriction is exact and keeps the cone programs small.
"""
from __future__ import annotations

import numpy as np

from ..conic import INFEASIBLE, MAX_ITERS, OPTIMAL, SocpBuilder
from ..errors import DualbandError, Infeasible, InfeasibleSubproblem
from .scenario import (MmWaveScenario, RhbDesign, gain_mm, min_gain_mm,
                       power_mm, sumrate)

MAX_ENUM_CHAINS = 16
GAIN_MARGIN = 1e-3


# -- closed-form blocks ----------------------------------------------------


def mse_mm(f_m: np.ndarray, scen: MmWaveScenario, u: np.ndarray) -> np.ndarray:
    """Per-user mean squared error at receiver scalars u."""
    m = scen.h_mm.conj().T @ f_m                 # m[k, i] = h_k^H f_i
    err = u[:, None] * m - np.eye(scen.k_m)
    return (np.sum(np.abs(err) ** 2, axis=1)
            + scen.noise_power * np.abs(u) ** 2)


def update_u(f_m: np.ndarray, scen: MmWaveScenario) -> np.ndarray:
    """MMSE receiver scalars: the exact minimizer of the MSE in u."""
    m = scen.h_mm.conj().T @ f_m
    denom = np.sum(np.abs(m) ** 2, axis=1) + scen.noise_power
    return np.conj(np.diag(m)) / denom


def update_w(e: np.ndarray) -> np.ndarray:
    """MSE weights: the exact minimizer of w*e - log w is w = 1/e."""
    return 1.0 / np.asarray(e, dtype=float)


def wmmse_objective(f_m: np.ndarray, scen: MmWaveScenario, u: np.ndarray,
                    w: np.ndarray) -> float:
    e = mse_mm(f_m, scen, u)
    return float(np.sum(w * e - np.log(w)))


def lagrangian(design: RhbDesign, scen: MmWaveScenario, rho: float) -> float:
    """Penalized objective tying the digital auxiliary to the hybrid product."""
    gap = design.f_m - design.f_physical + rho * design.duals
    return (wmmse_objective(design.f_m, scen, design.u, design.w)
            + float(np.sum(np.abs(gap) ** 2)) / (2.0 * rho))


def update_dual(duals: np.ndarray, f_m: np.ndarray, f_phys: np.ndarray,
                rho: float) -> np.ndarray:
    return duals + (f_m - f_phys) / rho


# -- digital auxiliary solve -----------------------------------------------


def _orthobasis(blocks: list[np.ndarray]) -> np.ndarray:
    """Orthonormal basis of the joint column span."""
    m = np.concatenate([np.atleast_2d(b.T).T for b in blocks], axis=1)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    keep = s > max(1e-12, 1e-10 * s[0])
    return u[:, keep]


def update_fm(f_m: np.ndarray, g: np.ndarray | None, u: np.ndarray,
              w: np.ndarray, scen: MmWaveScenario, rho: float | None,
              inner_iters: int = 10, tol: float = 1e-5) -> np.ndarray:
    """Convexified solve for the digital auxiliary beamformer.

    Minimizes the weighted-MSE quadratic plus (when g is given) the proximity
    penalty ||F_m - g||^2/(2 rho), under the power budget and gain
    constraints linearized at the current iterate; re-linearizes up to
    inner_iters times.  With g=None the penalty is dropped, which yields the
    fully-digital design step.  Never returns a worse point than f_m.
    """
    k = scen.k_m
    blocks = [scen.h_mm, f_m]
    blocks += [scen.target_steering(t)[:, None] for t in range(scen.t_m)]
    if g is not None:
        blocks.append(g)
    basis = _orthobasis(blocks)
    d = basis.shape[1]
    hs = basis.conj().T @ scen.h_mm              # projected channels, d x K
    steer = [basis.conj().T @ scen.target_steering(t) for t in range(scen.t_m)]
    gh = basis.conj().T @ g if g is not None else None

    def quad_objective(x):
        e = (np.sum(np.abs(u[:, None] * (hs.conj().T @ x) - np.eye(k)) ** 2,
                    axis=1) + scen.noise_power * np.abs(u) ** 2)
        val = float(np.sum(w * e))
        if gh is not None:
            val += float(np.sum(np.abs(x - gh) ** 2)) / (2.0 * rho)
        return val

    # one row per (user, column): sqrt(w_k) (u_k h_k^H f_i - delta_ki)
    wm = np.zeros((k * k, d * k), dtype=complex)
    wconst = np.zeros(k * k, dtype=complex)
    sw = np.sqrt(w)
    for kk in range(k):
        for i in range(k):
            wm[kk * k + i, i * d:(i + 1) * d] = sw[kk] * u[kk] * hs[:, kk].conj()
            if i == kk:
                wconst[kk * k + i] = -sw[kk]

    xbar = basis.conj().T @ f_m
    best = xbar
    best_obj = quad_objective(xbar)
    warm = None
    for _ in range(inner_iters):
        bld = SocpBuilder()
        xvar = bld.complex_var(d * k)
        bld.add_quad_epigraph(bld.rows_complex(wm, xvar, const=wconst))
        if gh is not None:
            bld.add_quad_epigraph(
                bld.rows_complex(np.eye(d * k, dtype=complex), xvar,
                                 const=-gh.reshape(-1, order="F")),
                weight=1.0 / (2.0 * rho))
        bld.add_soc(bld.row_const(np.sqrt(scen.power_budget)),
                    bld.rows_complex(np.eye(d * k, dtype=complex), xvar))
        for t in range(scen.t_m):
            proj = steer[t].conj() @ xbar
            cvec = np.concatenate([steer[t] * proj[i] for i in range(k)])
            quad = float(np.sum(np.abs(proj) ** 2))
            const = -(quad + scen.gain_floor(t))
            den = max(1.0, abs(const),
                      2.0 * float(np.max(np.abs(cvec), initial=0.0)))
            bld.add_nonneg(bld.row_re_inner(2.0 * cvec / den, xvar,
                                            const=const / den))
        sol = bld.solve(tol=tol, warm=warm)
        if sol.status == INFEASIBLE:
            raise InfeasibleSubproblem(
                "digital beamformer subproblem infeasible; gain thresholds "
                "too large for the power budget")
        if sol.status not in (OPTIMAL, MAX_ITERS):
            raise InfeasibleSubproblem(f"digital beamformer solve {sol.status}")
        warm = sol.raw
        x = sol.value(xvar).reshape((d, k), order="F")
        pw = float(np.sum(np.abs(x) ** 2))
        if pw > scen.power_budget:
            x *= np.sqrt(scen.power_budget / pw)
        obj = quad_objective(x)
        moved = float(np.sum(np.abs(x - xbar) ** 2))
        if obj <= best_obj + 1e-12 * max(1.0, abs(best_obj)):
            if obj < best_obj:
                best, best_obj = x, obj
            xbar = x
        else:
            break
        if moved <= 1e-6 * max(1.0, scen.power_budget):
            break
    return basis @ best


# -- analog and digital stages ---------------------------------------------


def switch_patterns(n_rf: int) -> np.ndarray:
    """All 2^n_rf binary switch rows, pattern 0 first."""
    if n_rf > MAX_ENUM_CHAINS:
        raise DualbandError("switch enumeration limited to 16 RF chains")
    codes = np.arange(2 ** n_rf)[:, None]
    return ((codes >> np.arange(n_rf)) & 1).astype(float)


def update_fp_s(f_bb: np.ndarray, f_target: np.ndarray, n_rf: int,
                patterns: np.ndarray | None = None):
    """Per-antenna exhaustive phase/switch optimization.

    The rows of the residual ||f_target - diag(f_p) S f_bb|| decouple: for
    each antenna, every allowed switch pattern is tested with its closed-form
    optimal phase exp(-j angle(z)), z the correlation between the target row
    and the pattern's digital combination.  Returns (f_p, s_matrix).
    """
    if patterns is None:
        patterns = switch_patterns(n_rf)
    v = patterns.astype(complex) @ f_bb          # (patterns, users)
    z = f_target.conj() @ v.T                    # (antennas, patterns)
    cost = np.sum(np.abs(v) ** 2, axis=1)[None, :] - 2.0 * np.abs(z)
    idx = np.argmin(cost, axis=1)
    rows = np.arange(f_target.shape[0])
    f_p = np.exp(-1j * np.angle(z[rows, idx]))
    return f_p, patterns[idx].copy()


def update_fbb(f_p: np.ndarray, s_matrix: np.ndarray, f_target: np.ndarray,
               repair: bool = True):
    """Least-squares digital stage for a fixed analog beamformer.

    An RF chain connected to zero antennas would make the normal equations
    singular; such a column is repaired first by switching on the antenna
    with the largest target-row energy (distinct per repaired chain), which
    cannot worsen the least-squares residual because the repaired chain may
    always be driven with zeros.  With repair=False (structures whose switch
    layout must not change) the minimum-norm solution zeroes the dead chain
    instead.  Returns (f_bb, s_matrix).
    """
    s_matrix = np.asarray(s_matrix, dtype=float)
    empty = np.flatnonzero(s_matrix.sum(axis=0) == 0)
    if empty.size and repair:
        s_matrix = s_matrix.copy()
        energy = np.sum(np.abs(f_target) ** 2, axis=1)
        order = np.argsort(-energy, kind="stable")
        for j, antenna in zip(empty, order):
            s_matrix[antenna, j] = 1.0
    f_rf = f_p[:, None] * s_matrix
    f_bb, *_ = np.linalg.lstsq(f_rf, f_target, rcond=None)
    return f_bb, s_matrix


# -- initialization --------------------------------------------------------


def _restore_gains(f_m: np.ndarray, scen: MmWaveScenario) -> np.ndarray:
    """Blend toward pure target steering until every gain floor holds."""
    if scen.t_m == 0 or min_gain_mm(f_m, scen) >= _floor_with_margin(scen):
        return f_m
    cap = scen.power_budget * scen.cfg.n_m
    if max(scen.gain_floor(t) for t in range(scen.t_m)) > cap:
        raise Infeasible("gain threshold exceeds the power-budget cap")
    steer = np.zeros_like(f_m)
    for i in range(scen.k_m):
        a = scen.target_steering(i % scen.t_m)
        steer[:, i] = a / np.linalg.norm(a)
    steer *= np.sqrt(scen.power_budget / power_mm(steer))
    for t_mix in np.linspace(0.0, 1.0, 21)[1:]:
        cand = (1.0 - t_mix) * f_m + t_mix * steer
        pw = power_mm(cand)
        if pw <= 0:
            continue
        cand *= np.sqrt(scen.power_budget / pw)
        if min_gain_mm(cand, scen) >= _floor_with_margin(scen):
            return cand
    raise Infeasible("unable to reach the gain thresholds at this power budget")


def _floor_with_margin(scen: MmWaveScenario) -> float:
    return max(scen.gain_floor(t) for t in range(scen.t_m)) * (1.0 + GAIN_MARGIN)


def _min_floor_slack(f: np.ndarray, scen: MmWaveScenario) -> float:
    """Smallest (squared gain - floor) over targets; inf when no targets."""
    if scen.t_m == 0:
        return np.inf
    return min(gain_mm(f, scen, t) ** 2 - scen.gain_floor(t)
               for t in range(scen.t_m))


def steered_init(scen: MmWaveScenario) -> np.ndarray:
    """Full-power digital start: one column per user steered at that user's
    channel plus all sensing targets, blended toward pure target steering
    whenever a gain floor is not yet met."""
    extra = sum((scen.target_steering(t) for t in range(scen.t_m)),
                np.zeros(scen.cfg.n_m, dtype=complex))
    f_m = scen.h_mm + extra[:, None]
    f_m = f_m * np.sqrt(scen.power_budget / power_mm(f_m))
    return _restore_gains(f_m, scen)


def rhb_init(scen: MmWaveScenario, init_rounds: int = 20,
             analog_update=None, fbb_repair: bool = True) -> RhbDesign:
    """Starting point: steered digital columns, alternating analog fit.

    The analog/digital stages are fit by alternating rounds of the
    per-antenna search and the least-squares stage against the steered
    digital start.
    """
    if analog_update is None:
        analog_update = lambda f_bb, f_target: update_fp_s(
            f_bb, f_target, scen.n_rf)
    f_m = steered_init(scen)

    f_p = np.ones(scen.cfg.n_m, dtype=complex)
    s_matrix = np.ones((scen.cfg.n_m, scen.n_rf))
    f_bb, s_matrix = update_fbb(f_p, s_matrix, f_m, repair=fbb_repair)
    for _ in range(init_rounds):
        f_p, s_matrix = analog_update(f_bb, f_m)
        f_bb, s_matrix = update_fbb(f_p, s_matrix, f_m, repair=fbb_repair)
    design = RhbDesign(f_p=f_p, s_matrix=s_matrix, f_bb=f_bb, f_m=f_m,
                       duals=np.zeros_like(f_m))
    design.u = update_u(f_m, scen)
    design.w = update_w(mse_mm(f_m, scen, design.u))
    return design


# -- main loop -------------------------------------------------------------


def admm_rhb(scen: MmWaveScenario, rho: float = 1.0, max_iters: int = 100,
             eps: float | None = None, inner_iters: int = 10,
             rho_decay: float = 0.7, rho_period: int = 10,
             analog_update=None, trace: list | None = None,
             polish: bool = True, fbb_repair: bool = True) -> RhbDesign:
    """Full alternating design of the reconfigurable hybrid beamformer.

    Each iteration runs the receiver, weight, digital-auxiliary, analog and
    least-squares updates followed by the multiplier step; the penalty
    parameter shrinks geometrically every rho_period iterations to tighten
    the digital/hybrid coupling.  Stops when the hybrid product moves less
    than eps (squared Frobenius) or after max_iters.  The returned design is
    rescaled to the power budget and, if needed, its digital stage is
    re-solved to restore the sensing gain floors on the physical beamformer.
    """
    if eps is None:
        eps = 1e-4 * scen.power_budget
    if analog_update is None:
        analog_update = lambda f_bb, f_target: update_fp_s(
            f_bb, f_target, scen.n_rf)
    design = rhb_init(scen, analog_update=analog_update,
                      fbb_repair=fbb_repair)
    prev_phys = design.f_physical
    for it in range(1, max_iters + 1):
        blocks = {"start": lagrangian(design, scen, rho)}
        design.u = update_u(design.f_m, scen)
        blocks["u"] = lagrangian(design, scen, rho)
        design.w = update_w(mse_mm(design.f_m, scen, design.u))
        blocks["w"] = lagrangian(design, scen, rho)
        g = design.f_physical - rho * design.duals
        design.f_m = update_fm(design.f_m, g, design.u, design.w, scen, rho,
                               inner_iters=inner_iters)
        blocks["f_m"] = lagrangian(design, scen, rho)
        f_target = design.f_m + rho * design.duals
        design.f_p, design.s_matrix = analog_update(design.f_bb, f_target)
        blocks["analog"] = lagrangian(design, scen, rho)
        design.f_bb, design.s_matrix = update_fbb(design.f_p, design.s_matrix,
                                                  f_target, repair=fbb_repair)
        blocks["f_bb"] = lagrangian(design, scen, rho)
        design.duals = update_dual(design.duals, design.f_m,
                                   design.f_physical, rho)
        phys = design.f_physical
        moved = float(np.sum(np.abs(phys - prev_phys) ** 2))
        if trace is not None:
            trace.append({
                "iteration": it,
                "lagrangian": blocks["f_bb"],
                "block_values": blocks,
                "primal_residual": float(np.linalg.norm(design.f_m - phys)),
                "sumrate": sumrate(phys, scen),
                "min_gain": _min_floor_slack(phys, scen),
                "rho": rho,
            })
        if moved <= eps:
            break
        prev_phys = phys
        if it % rho_period == 0:
            rho *= rho_decay
    _finalize(design, scen, polish=polish)
    return design


def _finalize(design: RhbDesign, scen: MmWaveScenario, polish: bool) -> None:
    pw = power_mm(design.f_physical)
    if pw > scen.power_budget:
        design.f_bb *= np.sqrt(scen.power_budget / pw)
    if polish and scen.t_m and _min_floor_slack(design.f_physical, scen) < 0.0:
        design.f_bb = polish_digital(design.f_rf, design.f_bb, scen,
                                     design.u, design.w)
    phys = design.f_physical
    design.u = update_u(phys, scen)
    design.w = update_w(mse_mm(phys, scen, design.u))
    design.validate(scen.power_budget)


# -- digital gain repair ---------------------------------------------------


def _digital_power_rows(bld, bvar, f_rf: np.ndarray, k: int):
    gram = f_rf.conj().T @ f_rf
    n_rf = gram.shape[0]
    chol = np.linalg.cholesky(gram + 1e-12 * np.trace(gram).real
                              / n_rf * np.eye(n_rf))
    mat = np.kron(np.eye(k), chol.conj().T)
    return bld.rows_complex(mat, bvar)


def polish_digital(f_rf: np.ndarray, f_bb: np.ndarray, scen: MmWaveScenario,
                   u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Re-solve the digital stage so the physical gains meet their floors.

    With the analog stage fixed, a margin-maximization step pushes every
    linearized squared gain above its floor; because the linearization is a
    global lower bound of the convex gain quadratic, any feasible solution of
    the surrogate is feasible for the true constraint.  A follow-up
    weighted-MSE pass then recovers communication quality while keeping the
    repaired gains, and is kept only if it actually helps.
    """
    k = scen.k_m
    n_rf = f_rf.shape[1]
    heff = f_rf.conj().T @ scen.h_mm             # effective channels
    aeff = [f_rf.conj().T @ scen.target_steering(t) for t in range(scen.t_m)]

    def solve_margin(bbar):
        bld = SocpBuilder()
        bvar = bld.complex_var(n_rf * k)
        tvar = bld.real_var(1)
        bld.add_linear_objective_var(tvar, [-1.0])
        bld.add_soc(bld.row_const(np.sqrt(scen.power_budget)),
                    _digital_power_rows(bld, bvar, f_rf, k))
        for t in range(scen.t_m):
            proj = aeff[t].conj() @ bbar
            cvec = np.concatenate([aeff[t] * proj[i] for i in range(k)])
            quad = float(np.sum(np.abs(proj) ** 2))
            floor = scen.gain_floor(t)
            den = max(1.0, floor)
            row = bld.row_re_inner(2.0 * cvec / den, bvar,
                                   const=-(quad + floor) / den)
            row.add_term(tvar, np.full((1, 1), -1.0))
            bld.add_nonneg(row)
        bld.add_nonneg(bld.rows_real([[-1.0]], tvar, const=[10.0]))
        sol = bld.solve(tol=1e-6)
        if sol.status not in (OPTIMAL, MAX_ITERS):
            return None, -np.inf
        return sol.value(bvar).reshape((n_rf, k), order="F"), \
            float(sol.value(tvar)[0])

    # the gain quadratic has local maxima on the power ellipsoid, so the
    # margin ascent is run from several starts: the current stage, the
    # closed-form best-gain digital stage, and their blend
    gram = f_rf.conj().T @ f_rf
    gram += 1e-12 * np.trace(gram).real / n_rf * np.eye(n_rf)
    b_gain = np.zeros_like(f_bb)
    for i in range(k):
        b_gain[:, i] = np.linalg.solve(gram, aeff[i % max(scen.t_m, 1)])
    b_gain = _cap_power(b_gain * np.sqrt(
        scen.power_budget / max(power_mm(f_rf @ b_gain), 1e-30)), f_rf, scen)
    best = f_bb
    for start in (f_bb, b_gain, 0.5 * (f_bb + b_gain)):
        bbar = start
        for _ in range(5):
            cand, margin = solve_margin(bbar)
            if cand is None:
                break
            cand = _cap_power(cand, f_rf, scen)
            if _min_floor_slack(f_rf @ cand, scen) > _min_floor_slack(
                    f_rf @ best, scen):
                best = cand
            bbar = cand
            if margin > GAIN_MARGIN:
                break
        if _min_floor_slack(f_rf @ best, scen) >= GAIN_MARGIN:
            break
    if _min_floor_slack(f_rf @ best, scen) < 0.0:
        return best                               # repair incomplete; keep best
    refined = _digital_objective_pass(f_rf, best, scen, u, w, heff, aeff)
    if refined is not None:
        return refined
    return best


def refine_digital(f_rf: np.ndarray, f_bb: np.ndarray, scen: MmWaveScenario,
                   rounds: int = 3) -> np.ndarray:
    """Weighted-MSE refinement of the digital stage with the analog fixed.

    Alternates receiver/weight updates on the physical beamformer with one
    convex digital solve under the power budget and the gain floors
    (linearized at the current stage, hence true-feasible).  Each round is
    kept only if it does not hurt the sum-rate or the gain slack.
    """
    heff = f_rf.conj().T @ scen.h_mm
    aeff = [f_rf.conj().T @ scen.target_steering(t) for t in range(scen.t_m)]
    for _ in range(rounds):
        phys = f_rf @ f_bb
        u = update_u(phys, scen)
        w = update_w(mse_mm(phys, scen, u))
        cand = _digital_objective_pass(f_rf, f_bb, scen, u, w, heff, aeff)
        if cand is None or np.allclose(cand, f_bb):
            break
        f_bb = cand
    return f_bb


def _cap_power(f_bb, f_rf, scen):
    pw = power_mm(f_rf @ f_bb)
    if pw > scen.power_budget:
        f_bb = f_bb * np.sqrt(scen.power_budget / pw)
    return f_bb


def _digital_objective_pass(f_rf, f_bb, scen, u, w, heff, aeff):
    """One weighted-MSE minimization over the digital stage, gains held."""
    k = scen.k_m
    n_rf = f_rf.shape[1]
    bld = SocpBuilder()
    bvar = bld.complex_var(n_rf * k)
    wm = np.zeros((k * k, n_rf * k), dtype=complex)
    wconst = np.zeros(k * k, dtype=complex)
    sw = np.sqrt(w)
    for kk in range(k):
        for i in range(k):
            wm[kk * k + i, i * n_rf:(i + 1) * n_rf] = \
                sw[kk] * u[kk] * heff[:, kk].conj()
            if i == kk:
                wconst[kk * k + i] = -sw[kk]
    bld.add_quad_epigraph(bld.rows_complex(wm, bvar, const=wconst))
    bld.add_soc(bld.row_const(np.sqrt(scen.power_budget)),
                _digital_power_rows(bld, bvar, f_rf, k))
    for t in range(scen.t_m):
        proj = aeff[t].conj() @ f_bb
        cvec = np.concatenate([aeff[t] * proj[i] for i in range(k)])
        quad = float(np.sum(np.abs(proj) ** 2))
        floor = scen.gain_floor(t) * (1.0 + GAIN_MARGIN)
        const = -(quad + floor)
        den = max(1.0, abs(const),
                  2.0 * float(np.max(np.abs(cvec), initial=0.0)))
        bld.add_nonneg(bld.row_re_inner(2.0 * cvec / den, bvar,
                                        const=const / den))
    sol = bld.solve(tol=1e-6)
    if sol.status not in (OPTIMAL, MAX_ITERS):
        return None
    cand = _cap_power(sol.value(bvar).reshape((n_rf, k), order="F"),
                      f_rf, scen)
    if _min_floor_slack(f_rf @ cand, scen) < 0.0:
        return None
    if sumrate(f_rf @ cand, scen) < sumrate(f_rf @ f_bb, scen):
        return None
    return cand


# -- exports ---------------------------------------------------------------


def beampattern_grid(f: np.ndarray, scen: MmWaveScenario,
                     resolution: int = 61):
    """Squared beampattern gain on a (elevation, azimuth) grid over [-1,1]^2.

    Returns (angles, gains) with gains[i, j] the squared gain toward
    elevation angles[i], azimuth angles[j].
    """
    from ..channel import steering_mm
    angles = np.linspace(-1.0, 1.0, resolution)
    gains = np.empty((resolution, resolution))
    for i, el in enumerate(angles):
        for j, az in enumerate(angles):
            a = steering_mm(scen.cfg, el, az)
            gains[i, j] = float(np.sum(np.abs(f.conj().T @ a) ** 2))
    return angles, gains
