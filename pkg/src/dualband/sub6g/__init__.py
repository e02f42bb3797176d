from .scenario import (Sub6gScenario, Sub6gDesign, sinr_sub6g, gain_sub6g,
                       constraints_satisfied, feasibility_precheck,
                       GAIN_SQUARED, GAIN_NORM)
from .socp import solve_fs, solve_selection, rescale_to_feasible
from .abas import abas, abas_init, abas_step_fs, abas_step_p, round_and_repair
from .fsjbas import fsjbas

__all__ = [
    "Sub6gScenario", "Sub6gDesign", "sinr_sub6g", "gain_sub6g",
    "constraints_satisfied", "feasibility_precheck", "GAIN_SQUARED", "GAIN_NORM",
    "solve_fs", "solve_selection", "rescale_to_feasible",
    "abas", "abas_init", "abas_step_fs", "abas_step_p", "round_and_repair",
    "fsjbas",
]
