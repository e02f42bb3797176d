"""Reference mmWave beamforming structures used in the comparisons.

All structures share the weighted-MMSE machinery: the fully-digital design
runs the receiver/weight/beamformer loop without any splitting; the hybrid
variants run the same operator-splitting loop as the reconfigurable design
with the per-antenna switch search restricted to the structure's hardware
(single chain per antenna, fixed contiguous blocks), and the fully-connected
variant fits a dense unit-modulus analog matrix to the fully-digital solution
by alternating phase extraction and least squares.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DualbandError
from ..mmwave import (MmWaveScenario, RhbDesign, admm_rhb, min_gain_mm,
                      mse_mm, polish_digital, power_mm, refine_digital,
                      steered_init, update_fbb, update_fm, update_fp_s,
                      update_u, update_w)

FD = "fd"
FCHB = "fchb"
PCHB = "pchb"
DHB = "dhb"
RHB = "rhb"
MM_STRUCTURES = (FD, FCHB, PCHB, DHB, RHB)


@dataclass
class StructureResult:
    """Physical beamformer of one structure plus its stages when hybrid.

    pool holds every physical beamformer realizable by this structure's
    hardware that the run produced (its own output plus adopted outputs of
    strictly more constrained structures); f is the best pool member at the
    design operating point.
    """

    kind: str
    f: np.ndarray
    f_rf: np.ndarray | None = None
    f_bb: np.ndarray | None = None
    design: RhbDesign | None = None
    pool: list = None

    def __post_init__(self):
        if self.pool is None:
            self.pool = [self.f]


def design_fd(scen: MmWaveScenario, max_iters: int = 40,
              inner_iters: int = 10) -> np.ndarray:
    """Fully-digital design: alternating receiver/weight/beamformer updates
    under the power budget and gain floors, no hardware structure."""
    f = steered_init(scen)
    for _ in range(max_iters):
        u = update_u(f, scen)
        w = update_w(mse_mm(f, scen, u))
        f_new = update_fm(f, None, u, w, scen, None, inner_iters=inner_iters)
        moved = float(np.sum(np.abs(f_new - f) ** 2))
        f = f_new
        if moved <= 1e-6 * max(1.0, scen.power_budget):
            break
    return f


def block_switch_matrix(n_m: int, n_rf: int) -> np.ndarray:
    """Fixed partition: chain j drives the j-th contiguous block of antennas."""
    s = np.zeros((n_m, n_rf))
    for j, rows in enumerate(np.array_split(np.arange(n_m), n_rf)):
        s[rows, j] = 1.0
    return s


def _fixed_pattern_phases(f_bb: np.ndarray, f_target: np.ndarray,
                          s_fixed: np.ndarray):
    """Optimal per-antenna phase when every switch row is predetermined."""
    v = s_fixed @ f_bb
    z = np.sum(f_target.conj() * v, axis=1)
    return np.exp(-1j * np.angle(z)), s_fixed.copy()


def design_fchb(scen: MmWaveScenario, fd_target: np.ndarray | None = None,
                rounds: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Fully-connected hybrid: dense unit-modulus analog matrix.

    Fits the analog/digital product to the fully-digital design by
    alternating per-entry phase extraction and least squares, then restores
    the power budget and gain floors on the physical product.  Phase
    extraction can lose a chunk of the sensing gain; when the digital repair
    cannot recover it, the fit is retried against a fully-digital design with
    inflated gain floors so the extracted analog stage keeps enough margin.
    """
    if fd_target is None:
        fd_target = design_fd(scen)
    best = _extract_and_restore(fd_target, scen, rounds)
    for inflate in (1.5, 2.5, 4.0):
        if min_gain_mm(best[0] @ best[1], scen) >= _max_floor(scen):
            break
        inflated = MmWaveScenario(
            h_mm=scen.h_mm, target_dirs=list(scen.target_dirs),
            gain_thresholds=scen.gain_thresholds * inflate,
            noise_power=scen.noise_power, power_budget=scen.power_budget,
            cfg=scen.cfg, gain_convention=scen.gain_convention)
        try:
            cand = _extract_and_restore(design_fd(inflated), scen, rounds)
        except DualbandError:
            break
        if (min_gain_mm(cand[0] @ cand[1], scen)
                > min_gain_mm(best[0] @ best[1], scen)):
            best = cand
    return best


def _max_floor(scen: MmWaveScenario) -> float:
    if scen.t_m == 0:
        return 0.0
    return max(scen.gain_floor(t) for t in range(scen.t_m))


def _extract_and_restore(fd_target, scen, rounds):
    k = scen.k_m
    cols = [fd_target[:, i % k] for i in range(scen.n_rf)]
    f_rf = np.exp(1j * np.angle(np.stack(cols, axis=1)))
    f_bb = None
    for _ in range(rounds):
        f_bb, *_ = np.linalg.lstsq(f_rf, fd_target, rcond=None)
        f_rf_new = np.exp(1j * np.angle(fd_target @ f_bb.conj().T))
        if np.allclose(f_rf_new, f_rf):
            f_rf = f_rf_new
            break
        f_rf = f_rf_new
    f_bb, *_ = np.linalg.lstsq(f_rf, fd_target, rcond=None)
    f_bb = _restore_output(f_rf, f_bb, scen)
    return f_rf, f_bb


def _restore_output(f_rf, f_bb, scen):
    pw = power_mm(f_rf @ f_bb)
    if pw > scen.power_budget:
        f_bb = f_bb * np.sqrt(scen.power_budget / pw)
    if scen.t_m and min_gain_mm(f_rf @ f_bb, scen) < max(
            scen.gain_floor(t) for t in range(scen.t_m)):
        phys = f_rf @ f_bb
        u = update_u(phys, scen)
        w = update_w(mse_mm(phys, scen, u))
        f_bb = polish_digital(f_rf, f_bb, scen, u, w)
    f_bb = refine_digital(f_rf, f_bb, scen)
    return f_bb


def design_mm_structure(scen: MmWaveScenario, kind: str,
                        **admm_kwargs) -> StructureResult:
    """Design one mmWave structure; returns its physical beamformer."""
    if kind == FD:
        f = design_fd(scen)
        return StructureResult(kind=kind, f=f)
    if kind == FCHB:
        f_rf, f_bb = design_fchb(scen)
        return StructureResult(kind=kind, f=f_rf @ f_bb, f_rf=f_rf, f_bb=f_bb)
    if kind == RHB:
        design = admm_rhb(scen, **admm_kwargs)
    elif kind == DHB:
        one_hot = np.eye(scen.n_rf)
        design = admm_rhb(
            scen,
            analog_update=lambda f_bb, f_target: update_fp_s(
                f_bb, f_target, scen.n_rf, patterns=one_hot),
            fbb_repair=False, **admm_kwargs)
    elif kind == PCHB:
        s_fixed = block_switch_matrix(scen.cfg.n_m, scen.n_rf)
        design = admm_rhb(
            scen,
            analog_update=lambda f_bb, f_target: _fixed_pattern_phases(
                f_bb, f_target, s_fixed),
            fbb_repair=False, **admm_kwargs)
    else:
        raise DualbandError(f"unknown mmWave structure '{kind}'")
    return StructureResult(kind=kind, f=design.f_physical,
                           f_rf=design.f_rf, f_bb=design.f_bb, design=design)


def design_mm_suite(scen: MmWaveScenario, kinds=MM_STRUCTURES,
                    **admm_kwargs) -> dict:
    """Design several structures on the same channels, sharing candidates.

    The feasible sets nest: a fixed-block analog stage is a special dynamic
    one, a dynamic one a special reconfigurable one, and any physical
    beamformer is fully-digital-feasible.  Each structure therefore keeps a
    portfolio of every candidate its hardware can realize and adopts the best
    at the design operating point, which makes the nested orderings robust
    to the occasional worse local optimum of the richer structure.
    """
    from ..mmwave import sumrate

    results = {}
    for kind in (PCHB, DHB, RHB):
        if kind in kinds:
            results[kind] = design_mm_structure(scen, kind, **admm_kwargs)
    if FD in kinds or FCHB in kinds:
        fd = design_mm_structure(scen, FD)
        if FCHB in kinds:
            f_rf, f_bb = design_fchb(scen, fd_target=fd.f)
            results[FCHB] = StructureResult(kind=FCHB, f=f_rf @ f_bb,
                                            f_rf=f_rf, f_bb=f_bb)
        if FD in kinds:
            results[FD] = fd
    if DHB in results and PCHB in results:
        results[DHB].pool.append(results[PCHB].f)
    if RHB in results:
        for kind in (DHB, PCHB):
            if kind in results:
                results[RHB].pool.append(results[kind].f)
    if FD in results:
        results[FD].pool.extend(r.f for k, r in results.items() if k != FD)
    for r in results.values():
        r.f = max(r.pool, key=lambda f: sumrate(f, scen))
    return results


def structure_constraints_ok(result: StructureResult,
                             scen: MmWaveScenario) -> bool:
    """Post-hoc hardware check of a structure's analog stage."""
    if result.kind == FD:
        return power_mm(result.f) <= scen.power_budget * (1 + 1e-6)
    if power_mm(result.f) > scen.power_budget * (1 + 1e-6):
        return False
    if result.kind == FCHB:
        return bool(np.allclose(np.abs(result.f_rf), 1.0, atol=1e-9))
    s = result.design.s_matrix
    if not np.all((s == 0) | (s == 1)):
        return False
    if not np.allclose(np.abs(result.design.f_p), 1.0, atol=1e-9):
        return False
    if result.kind == DHB:
        return bool(np.all(s.sum(axis=1) == 1))
    if result.kind == PCHB:
        return bool(np.array_equal(
            s, block_switch_matrix(scen.cfg.n_m, scen.n_rf)))
    return True
