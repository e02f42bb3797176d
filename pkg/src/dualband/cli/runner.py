"""End-to-end dual-band design runs and their on-disk artifacts.

A run directory contains deterministic CSVs (identical bytes for identical
config and seed), JSON design artifacts that `validate` can re-check with the
independent metric paths, and a manifest carrying everything that is allowed
to differ between repetitions (wall time, host details).
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass

import numpy as np

from ..baselines import design_sub6g_strategy, RAS_FSJBAS
from ..channel import ChannelSet, gen_channels, save_channels, load_channels
from ..errors import BudgetExhausted, DualbandError
from ..geometry import SelectionState
from ..mmwave import (MmWaveScenario, RhbDesign, admm_rhb, min_gain_mm,
                      power_mm, sinr_mm, sumrate)
from ..sub6g import (Sub6gDesign, Sub6gScenario, abas, constraints_satisfied,
                     fsjbas, gain_sub6g, sinr_sub6g)
from ..mmwave import constraints_satisfied_mm, gain_mm
from .config import ScenarioConfig, config_hash


def _fmt(x) -> str:
    """Canonical decimal rendering used in every CSV cell."""
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def sub6g_scenario(cfg: ScenarioConfig, chan: ChannelSet) -> Sub6gScenario:
    gammas, targets, ups = cfg.sub6g_thresholds(chan.h_sub.shape[1])
    return Sub6gScenario(
        h_sub=chan.h_sub, sinr_thresholds=gammas, target_dirs=targets,
        gain_thresholds=ups,
        noise_power=float(cfg.power.get("noise_sub", 1.0)),
        cfg=chan.cfg, gain_convention=cfg.gain_convention)


def mm_scenario(cfg: ScenarioConfig, chan: ChannelSet,
                power_budget: float) -> MmWaveScenario:
    targets, ups = cfg.mm_thresholds()
    return MmWaveScenario(
        h_mm=chan.h_mm, target_dirs=targets, gain_thresholds=ups,
        noise_power=float(cfg.power.get("noise_mm", 1.0)),
        power_budget=power_budget,
        cfg=chan.cfg, gain_convention=cfg.gain_convention)


def admm_kwargs(cfg: ScenarioConfig) -> dict:
    alg = cfg.algorithm
    out = {}
    if "rho" in alg:
        out["rho"] = float(alg["rho"])
    if "outer_iters" in alg:
        out["max_iters"] = int(alg["outer_iters"])
    if "inner_iters" in alg:
        out["inner_iters"] = int(alg["inner_iters"])
    if "eps" in alg:
        out["eps"] = float(alg["eps"])
    return out


@dataclass
class RunResult:
    """Everything one seeded dual-band run produced."""

    seed: int
    chan: ChannelSet
    scen_sub: Sub6gScenario | None = None
    design_sub: Sub6gDesign | None = None
    trace_sub: list | None = None
    power_sub: float = 0.0
    power_mm_budget: float = 0.0
    scen_mm: MmWaveScenario | None = None
    design_mm: RhbDesign | None = None
    trace_mm: list | None = None


def run_dual_band(cfg: ScenarioConfig, seed: int) -> RunResult:
    """One seeded run: place and design the sub-6G stage first, then spend
    the remaining transmit power on the mmWave stage."""
    arr = cfg.array_config()
    chan = gen_channels(arr, k_s=int(cfg.users["k_s"]),
                        k_m=int(cfg.users["k_m"]),
                        l_s=int(cfg.users["l_s"]),
                        l_m=int(cfg.users["l_m"]), seed=seed)
    res = RunResult(seed=seed, chan=chan)
    p_t = float(cfg.power["p_t"])
    pipelines = cfg.pipelines

    if "sub6g" in pipelines:
        res.scen_sub = sub6g_scenario(cfg, chan)
        res.trace_sub = []
        init = abas(res.scen_sub,
                    max_iters=int(cfg.algorithm.get("abas_iters", 10)))
        res.design_sub = fsjbas(
            res.scen_sub, init,
            max_iters=cfg.algorithm.get("fsjbas_iters"),
            trace=res.trace_sub)
        res.power_sub = res.design_sub.power

    if "mmwave" in pipelines:
        if "p_m" in cfg.power:
            p_m = float(cfg.power["p_m"])
        else:
            p_m = p_t - res.power_sub
        if p_m <= 0:
            raise BudgetExhausted(
                f"sub-6G stage used {res.power_sub:.6g} of the "
                f"{p_t:.6g} budget; nothing left for the mmWave stage")
        res.power_mm_budget = p_m
        res.scen_mm = mm_scenario(cfg, chan, p_m)
        res.trace_mm = []
        res.design_mm = admm_rhb(res.scen_mm, trace=res.trace_mm,
                                 **admm_kwargs(cfg))

    # re-verify every emitted design with the independent metric paths
    if res.design_sub is not None and not constraints_satisfied(
            res.design_sub, res.scen_sub):
        raise DualbandError("sub-6G design failed metric re-validation")
    if res.design_mm is not None and not constraints_satisfied_mm(
            res.design_mm.f_physical, res.scen_mm):
        raise DualbandError("mmWave design failed metric re-validation")
    return res


def _complex_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m)
    return {"re": np.real(m).tolist(), "im": np.imag(m).tolist(),
            "shape": list(m.shape)}


def _complex_from_json(obj: dict) -> np.ndarray:
    return (np.asarray(obj["re"], dtype=float)
            + 1j * np.asarray(obj["im"], dtype=float))


def result_rows(res: RunResult) -> list[list]:
    """Long-format metric rows for results.csv, all via the metric paths."""
    rows = [["seed", float(res.seed)],
            ["power_sub", float(res.power_sub)],
            ["power_mm_budget", float(res.power_mm_budget)]]
    if res.trace_sub:
        rows.append(["sub_iterations",
                     float(res.trace_sub[-1]["iteration"])])
    if res.trace_mm:
        rows.append(["mm_iterations", float(res.trace_mm[-1]["iteration"])])
    if res.design_sub is not None:
        scen, des = res.scen_sub, res.design_sub
        for k in range(scen.k_s):
            rows.append([f"sub_sinr_{k}", sinr_sub6g(des, scen, k)])
        for t in range(scen.t_s):
            rows.append([f"sub_gain_{t}", gain_sub6g(des, scen, t)])
    if res.design_mm is not None:
        scen, f = res.scen_mm, res.design_mm.f_physical
        rows.append(["mm_power", power_mm(f)])
        rows.append(["mm_sumrate", sumrate(f, scen)])
        for k in range(scen.k_m):
            rows.append([f"mm_sinr_{k}", sinr_mm(f, scen, k)])
        for t in range(scen.t_m):
            rows.append([f"mm_gain_{t}", gain_mm(f, scen, t)])
        if scen.t_m:
            rows.append(["mm_min_gain_sq", min_gain_mm(f, scen)])
    return rows


def write_run(out_dir: str, cfg: ScenarioConfig, res: RunResult,
              wall_time: float) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_csv(os.path.join(out_dir, "results.csv"), ["metric", "value"],
              result_rows(res))
    if res.trace_sub is not None:
        write_csv(os.path.join(out_dir, "trace_sub.csv"),
                  ["iteration", "antenna_order", "candidate_count",
                   "best_power"],
                  [[r["iteration"], r["antenna_order"], r["candidate_count"],
                    float(r["best_power"])] for r in res.trace_sub])
    if res.trace_mm is not None:
        write_csv(os.path.join(out_dir, "trace_mm.csv"),
                  ["iteration", "lagrangian", "primal_residual", "sumrate",
                   "min_gain_slack", "rho"],
                  [[r["iteration"], float(r["lagrangian"]),
                    float(r["primal_residual"]), float(r["sumrate"]),
                    float(r["min_gain"]), float(r["rho"])]
                   for r in res.trace_mm])
    save_channels(res.chan, os.path.join(out_dir, "channels.json"))
    designs = {}
    if res.design_sub is not None:
        designs["sub6g"] = {
            "f_s": _complex_to_json(res.design_sub.f_s),
            "selection": res.design_sub.selection.to_json(res.chan.cfg),
            "power": res.design_sub.power,
        }
    if res.design_mm is not None:
        d = res.design_mm
        designs["mmwave"] = {
            "f_p": _complex_to_json(d.f_p),
            "s_matrix": d.s_matrix.tolist(),
            "f_bb": _complex_to_json(d.f_bb),
            "power_budget": res.power_mm_budget,
        }
    with open(os.path.join(out_dir, "designs.json"), "w") as fh:
        json.dump(designs, fh, sort_keys=True)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump({"seed": res.seed, "config_hash": config_hash(cfg),
                   "config": asdict(cfg), "wall_time_s": wall_time},
                  fh, indent=2, sort_keys=True)


def run_and_write(cfg: ScenarioConfig, seed: int, out_dir: str) -> RunResult:
    t0 = time.perf_counter()
    res = run_dual_band(cfg, seed)
    write_run(out_dir, cfg, res, wall_time=time.perf_counter() - t0)
    return res


def validate_run(run_dir: str, slack: float = 1e-3) -> list[str]:
    """Re-check a stored run with the metric paths; returns problem messages."""
    problems = []
    try:
        with open(os.path.join(run_dir, "manifest.json")) as fh:
            manifest = json.load(fh)
        with open(os.path.join(run_dir, "designs.json")) as fh:
            designs = json.load(fh)
        chan = load_channels(os.path.join(run_dir, "channels.json"))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        return [f"unreadable run directory: {exc}"]
    cfg = ScenarioConfig(**manifest["config"])
    if manifest.get("config_hash") != config_hash(cfg):
        problems.append("manifest config hash does not match its config")
    if "sub6g" in designs:
        blob = designs["sub6g"]
        scen = sub6g_scenario(cfg, chan)
        design = Sub6gDesign(
            f_s=_complex_from_json(blob["f_s"]),
            selection=SelectionState.from_json(blob["selection"], chan.cfg))
        design.power = design.recompute_power()
        if abs(design.power - blob["power"]) > slack * max(1.0, blob["power"]):
            problems.append("stored sub-6G power disagrees with the design")
        if not constraints_satisfied(design, scen, slack=slack):
            problems.append("sub-6G design violates SINR or gain constraints")
    if "mmwave" in designs:
        blob = designs["mmwave"]
        scen = mm_scenario(cfg, chan, float(blob["power_budget"]))
        f_p = _complex_from_json(blob["f_p"])
        s = np.asarray(blob["s_matrix"], dtype=float)
        f_bb = _complex_from_json(blob["f_bb"])
        if not np.allclose(np.abs(f_p), 1.0, atol=1e-6):
            problems.append("analog phases are not unit-modulus")
        if not np.all((s == 0) | (s == 1)):
            problems.append("switch matrix is not binary")
        phys = (f_p[:, None] * s) @ f_bb
        if power_mm(phys) > scen.power_budget * (1 + slack):
            problems.append("mmWave design exceeds its power budget")
        if not constraints_satisfied_mm(phys, scen, slack=slack):
            problems.append("mmWave design violates a sensing gain floor")
    if not designs:
        problems.append("run directory holds no designs")
    return problems


def dump_channel(cfg: ScenarioConfig, seed: int, path: str) -> None:
    chan = gen_channels(cfg.array_config(), k_s=int(cfg.users["k_s"]),
                        k_m=int(cfg.users["k_m"]),
                        l_s=int(cfg.users["l_s"]),
                        l_m=int(cfg.users["l_m"]), seed=seed)
    save_channels(chan, path)
