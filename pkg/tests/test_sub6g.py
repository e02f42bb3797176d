import itertools

import numpy as np
import pytest

from dualband.channel import gen_channels, steering_beta
from dualband.errors import DualbandError
from dualband.geometry import (ArrayConfig, build_coarse_grid,
                               indices_to_selection, spacing_feasible)
from dualband.sub6g import (Sub6gDesign, Sub6gScenario, abas, abas_init,
                            abas_step_p, constraints_satisfied, fsjbas,
                            gain_sub6g, round_and_repair, sinr_sub6g,
                            solve_fs, solve_selection)
from dualband.sub6g.abas import _cell_pvec_indices, _expand


def tiny_cfg():
    return ArrayConfig(n_row=8, n_col=8, n_s=2, h_s=3, v_s=3)


def make_scenario(cfg, seed=0, k_s=2, gamma=10.0, targets=((0.3, -0.2),),
                  ups=10.0, **kw):
    chan = gen_channels(cfg, k_s=k_s, k_m=1, l_s=3, l_m=3, seed=seed)
    return Sub6gScenario(h_sub=chan.h_sub, sinr_thresholds=[gamma] * k_s,
                         target_dirs=list(targets),
                         gain_thresholds=[ups] * len(targets),
                         noise_power=1.0, cfg=cfg, **kw)


# -- metrics ---------------------------------------------------------------


def sinr_oracle(design, scen, user):
    """Independent scalar-loop recomputation."""
    p = design.selection.p_vec
    num = 0.0 + 0.0j
    for j in range(scen.cfg.n_p):
        num += np.conj(scen.h_sub[j, user]) * p[j] * design.f_s[j, user]
    signal = abs(num) ** 2
    interf = 0.0
    for i in range(scen.k_s):
        if i == user:
            continue
        acc = 0.0 + 0.0j
        for j in range(scen.cfg.n_p):
            acc += np.conj(scen.h_sub[j, user]) * p[j] * design.f_s[j, i]
        interf += abs(acc) ** 2
    return signal / (interf + scen.noise_power)


def gain_oracle(design, scen, target):
    p = design.selection.p_vec
    beta = scen.target_steering(target)
    total = 0.0
    for i in range(scen.k_s):
        acc = 0.0 + 0.0j
        for j in range(scen.cfg.n_p):
            acc += np.conj(design.f_s[j, i]) * p[j] * beta[j]
        total += abs(acc) ** 2
    return np.sqrt(total)


def test_metrics_match_scalar_oracle():
    cfg = tiny_cfg()
    scen = make_scenario(cfg, seed=4)
    rng = np.random.default_rng(1)
    sel = indices_to_selection([2, 6], [3, 7], cfg)
    f = rng.standard_normal((cfg.n_p, 2)) + 1j * rng.standard_normal((cfg.n_p, 2))
    design = Sub6gDesign(f_s=f, selection=sel)
    for k in range(2):
        assert sinr_sub6g(design, scen, k) == pytest.approx(sinr_oracle(design, scen, k))
    assert gain_sub6g(design, scen, 0) == pytest.approx(gain_oracle(design, scen, 0))


def test_sinr_matched_filter_single_user():
    cfg = ArrayConfig(n_row=3, n_col=3, n_s=4, h_s=1, v_s=1)
    chan = gen_channels(cfg, k_s=1, k_m=1, l_s=3, l_m=3, seed=2)
    scen = Sub6gScenario(h_sub=chan.h_sub, sinr_thresholds=[1.0],
                         target_dirs=[], gain_thresholds=[],
                         noise_power=1.0, cfg=cfg)
    sel = indices_to_selection([1, 1, 2, 2], [1, 2, 1, 2], cfg)
    h = chan.h_sub[:, 0]
    P = 3.7
    f = (h / np.linalg.norm(h) * np.sqrt(P)).reshape(-1, 1)
    design = Sub6gDesign(f_s=f, selection=sel)
    assert sinr_sub6g(design, scen, 0) == pytest.approx(P * np.linalg.norm(h) ** 2)


def test_gain_trivial_cases():
    cfg = ArrayConfig(n_row=3, n_col=3, n_s=4, h_s=1, v_s=1)
    scen = make_scenario(cfg, k_s=1, targets=((0.5, 0.5),))
    sel = indices_to_selection([1, 1, 2, 2], [1, 2, 1, 2], cfg)
    zero = Sub6gDesign(f_s=np.zeros((4, 1), dtype=complex), selection=sel)
    assert gain_sub6g(zero, scen, 0) == 0.0
    beta = scen.target_steering(0)
    P = 2.0
    f = (beta / np.linalg.norm(beta) * np.sqrt(P)).reshape(-1, 1)
    steered = Sub6gDesign(f_s=f, selection=sel)
    assert gain_sub6g(steered, scen, 0) == pytest.approx(
        np.sqrt(P) * np.linalg.norm(beta))


def test_scenario_validation():
    cfg = tiny_cfg()
    chan = gen_channels(cfg, k_s=2, k_m=1, l_s=3, l_m=3, seed=0)
    with pytest.raises(DualbandError):
        Sub6gScenario(h_sub=chan.h_sub, sinr_thresholds=[10.0],
                      target_dirs=[], gain_thresholds=[], noise_power=1.0, cfg=cfg)
    with pytest.raises(DualbandError):
        Sub6gScenario(h_sub=chan.h_sub, sinr_thresholds=[10.0, -1.0],
                      target_dirs=[], gain_thresholds=[], noise_power=1.0, cfg=cfg)


# -- beamformer subproblem -------------------------------------------------


def test_solve_fs_single_user_closed_form():
    cfg = tiny_cfg()
    chan = gen_channels(cfg, k_s=1, k_m=1, l_s=3, l_m=3, seed=6)
    gamma = 5.0
    scen = Sub6gScenario(h_sub=chan.h_sub, sinr_thresholds=[gamma],
                         target_dirs=[], gain_thresholds=[],
                         noise_power=1.0, cfg=cfg)
    sel = indices_to_selection([1, 4], [1, 4], cfg)
    w = sel.p_vec.astype(float)
    _, power, _ = solve_fs(scen, w)
    hmask = w * chan.h_sub[:, 0]
    expect = gamma * 1.0 / np.linalg.norm(hmask) ** 2
    assert power == pytest.approx(expect, rel=1e-3)


def test_solve_selection_meets_constraints():
    cfg = tiny_cfg()
    scen = make_scenario(cfg, seed=1)
    sel = indices_to_selection([1, 5], [2, 6], cfg)
    design = solve_selection(scen, sel)
    assert constraints_satisfied(design, scen)
    assert design.power == pytest.approx(design.recompute_power(), abs=1e-9)


def test_solve_selection_deterministic():
    cfg = tiny_cfg()
    scen = make_scenario(cfg, seed=1)
    sel = indices_to_selection([1, 5], [2, 6], cfg)
    a = solve_selection(scen, sel)
    b = solve_selection(scen, sel)
    assert a.power == b.power
    assert np.array_equal(a.f_s, b.f_s)


def test_norm_gain_convention():
    cfg = tiny_cfg()
    scen = make_scenario(cfg, seed=1, ups=3.0, gain_convention="norm")
    sel = indices_to_selection([1, 5], [2, 6], cfg)
    design = solve_selection(scen, sel)
    assert gain_sub6g(design, scen, 0) >= 3.0 * (1 - 1e-4)


# -- ABAS ------------------------------------------------------------------


def test_abas_init_values():
    cfg = ArrayConfig(n_row=14, n_col=14, n_s=4, h_s=6, v_s=6)
    scen = make_scenario(cfg, seed=0, k_s=4, targets=())
    f0, q0 = abas_init(scen)
    assert q0.shape == (9,)
    assert np.allclose(q0, 4.0 / 9.0)
    assert q0.sum() == pytest.approx(4.0)
    # with no targets, columns are scaled masked channels
    grid = build_coarse_grid(cfg)
    cells = _cell_pvec_indices(grid, cfg)
    mask = np.zeros(cfg.n_p)
    mask[cells] = 1.0
    assert np.allclose(f0[:, 0], 10.0 * mask * scen.h_sub[:, 0])


def test_abas_step_p_mm_descent():
    cfg = tiny_cfg()
    scen = make_scenario(cfg, seed=3)
    grid = build_coarse_grid(cfg)
    cells = _cell_pvec_indices(grid, cfg)
    fbar, q = abas_init(scen)
    w = _expand(q, cells, cfg.n_p)
    fbar, _, _ = solve_fs(scen, w, fbar)
    from dualband.sub6g.socp import rescale_weighted
    fbar = rescale_weighted(fbar, scen, w, margin=1e-3)
    mu = 4.0
    fb = fbar[cells, :]
    row_power = np.sum(np.abs(fb) ** 2, axis=1)

    def penalized(qv):
        return float(row_power @ (qv ** 2) - mu * qv @ qv)

    prev = penalized(q)
    for _ in range(4):
        q, _ = abas_step_p(scen, fbar, q, mu)
        cur = penalized(q)
        assert cur <= prev + 1e-6 * max(1.0, abs(prev))
        prev = cur


def test_round_and_repair_feasible_output():
    cfg = ArrayConfig(n_row=14, n_col=14, n_s=4, h_s=6, v_s=6)
    scen = make_scenario(cfg, seed=0, k_s=4)
    # degenerate relaxed weights: everything below 0.5 -> repair must fill
    q = np.full(9, 0.3)
    q[2] = 0.9
    sel = round_and_repair(q, scen)
    assert len(sel.positions()) == 4
    assert spacing_feasible(sel, cfg)
    assert (1, 13) in sel.positions()     # the rounded-up cell stays selected


def test_abas_produces_feasible_design():
    cfg = tiny_cfg()
    scen = make_scenario(cfg, seed=5)
    design = abas(scen)
    assert constraints_satisfied(design, scen)
    assert spacing_feasible(design.selection, cfg)
    assert len(design.selection.positions()) == 2


# -- FS-JBAS ---------------------------------------------------------------


def feasible_pairs(cfg):
    cells = [(r, c) for r in range(1, cfg.grid_rows + 1)
             for c in range(1, cfg.grid_cols + 1)]
    for a, b in itertools.combinations(cells, 2):
        if abs(a[0] - b[0]) >= cfg.v_s or abs(a[1] - b[1]) >= cfg.h_s:
            yield a, b


def test_fsjbas_monotone_and_beats_init():
    cfg = tiny_cfg()
    scen = make_scenario(cfg, seed=2)
    init = abas(scen)
    trace = []
    best = fsjbas(scen, init, trace=trace)
    powers = [r["best_power"] for r in trace]
    assert all(powers[i + 1] <= powers[i] + 1e-9 for i in range(len(powers) - 1))
    assert best.power <= init.power + 1e-9
    assert constraints_satisfied(best, scen)


def test_fsjbas_near_exhaustive_optimum():
    cfg = tiny_cfg()
    scen = make_scenario(cfg, seed=7)
    init = abas(scen)
    best = fsjbas(scen, init)
    opt = np.inf
    for a, b in feasible_pairs(cfg):
        sel = indices_to_selection([a[0], b[0]], [a[1], b[1]], cfg)
        try:
            opt = min(opt, solve_selection(scen, sel).power)
        except DualbandError:
            continue
    assert best.power <= opt * 1.05
