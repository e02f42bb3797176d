from .solver import (ConicProblem, ConicSolution, project_soc, solve,
                     OPTIMAL, INFEASIBLE, UNBOUNDED, MAX_ITERS)
from .build import SocpBuilder, ComplexVar

__all__ = [
    "ConicProblem", "ConicSolution", "project_soc", "solve",
    "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "MAX_ITERS",
    "SocpBuilder", "ComplexVar",
]
