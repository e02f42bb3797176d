"""Exception types shared across the design pipelines."""


class DualbandError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(DualbandError):
    """Malformed or inconsistent scenario configuration."""


class DimensionMismatch(DualbandError):
    """Array shapes do not agree with the array configuration."""


class InfeasibleSubproblem(DualbandError):
    """A convex subproblem has no feasible point (thresholds too aggressive)."""


class Infeasible(DualbandError):
    """No feasible design exists for the requested scenario."""


class BudgetExhausted(DualbandError):
    """Sub-6G design consumed the whole power budget; no mmWave power left."""


class RankDeficient(DualbandError):
    """Analog beamformer has a rank-deficient column (RF chain with no antenna)."""
