from .scenario import (MmWaveScenario, RhbDesign, constraints_satisfied_mm,
                       gain_mm, min_gain_mm, power_mm, sinr_mm, sumrate)
from .admm import (admm_rhb, beampattern_grid, lagrangian, mse_mm,
                   polish_digital, refine_digital, rhb_init, steered_init,
                   switch_patterns, update_dual, update_fbb, update_fm,
                   update_fp_s, update_u, update_w, wmmse_objective)

__all__ = [
    "MmWaveScenario", "RhbDesign", "constraints_satisfied_mm", "gain_mm",
    "min_gain_mm", "power_mm", "sinr_mm", "sumrate",
    "admm_rhb", "beampattern_grid", "lagrangian", "mse_mm", "polish_digital",
    "refine_digital", "rhb_init", "steered_init", "switch_patterns",
    "update_dual", "update_fbb", "update_fm", "update_fp_s", "update_u",
    "update_w", "wmmse_objective",
]
