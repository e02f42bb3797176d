from .mm import (DHB, FCHB, FD, MM_STRUCTURES, PCHB, RHB, StructureResult,
                 block_switch_matrix, design_fchb, design_fd,
                 design_mm_structure, design_mm_suite,
                 structure_constraints_ok)
from .sub import (CAS, FIXED_ARRAY, RAS_FSJBAS, RAS_RS, SUB6G_STRATEGIES,
                  design_sub6g_strategy, fixed_array_selection,
                  random_selection)

__all__ = [
    "DHB", "FCHB", "FD", "MM_STRUCTURES", "PCHB", "RHB", "StructureResult",
    "block_switch_matrix", "design_fchb", "design_fd", "design_mm_structure",
    "design_mm_suite", "structure_constraints_ok",
    "CAS", "FIXED_ARRAY", "RAS_FSJBAS", "RAS_RS", "SUB6G_STRATEGIES",
    "design_sub6g_strategy", "fixed_array_selection", "random_selection",
]
