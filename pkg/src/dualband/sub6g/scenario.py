"""Sub-6G design problem data, quality metrics and feasibility pre-checks."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..channel import steering_beta
from ..errors import DimensionMismatch, DualbandError
from ..geometry import ArrayConfig, SelectionState

log = logging.getLogger(__name__)

GAIN_SQUARED = "squared"
GAIN_NORM = "norm"


@dataclass(frozen=True)
class Sub6gScenario:
    """Channels, thresholds and sensing targets for the sub-6G design problem.

    sinr_thresholds are linear (not dB); target_dirs holds (elevation,
    azimuth) surrogate angles in [-1, 1].  gain_convention selects whether a
    gain threshold applies to the beampattern norm or to its square.
    """

    h_sub: np.ndarray
    sinr_thresholds: np.ndarray
    target_dirs: tuple
    gain_thresholds: np.ndarray
    noise_power: float
    cfg: ArrayConfig
    gain_convention: str = GAIN_SQUARED

    def __post_init__(self):
        object.__setattr__(self, "h_sub", np.asarray(self.h_sub, dtype=complex))
        object.__setattr__(self, "sinr_thresholds",
                           np.asarray(self.sinr_thresholds, dtype=float))
        object.__setattr__(self, "gain_thresholds",
                           np.asarray(self.gain_thresholds, dtype=float))
        object.__setattr__(self, "target_dirs",
                           tuple((float(e), float(a)) for e, a in self.target_dirs))
        if self.h_sub.shape[0] != self.cfg.n_p:
            raise DimensionMismatch("channel rows do not match candidate grid size")
        if self.sinr_thresholds.shape != (self.h_sub.shape[1],):
            raise DimensionMismatch("one SINR threshold per user required")
        if self.gain_thresholds.shape != (len(self.target_dirs),):
            raise DimensionMismatch("one gain threshold per sensing target required")
        if np.any(self.sinr_thresholds <= 0):
            raise DualbandError("SINR thresholds must be positive")
        if np.any(self.gain_thresholds < 0):
            raise DualbandError("gain thresholds must be nonnegative")
        if self.noise_power <= 0:
            raise DualbandError("noise power must be positive")
        if self.gain_convention not in (GAIN_SQUARED, GAIN_NORM):
            raise DualbandError("gain_convention must be 'squared' or 'norm'")

    @property
    def k_s(self) -> int:
        return self.h_sub.shape[1]

    @property
    def t_s(self) -> int:
        return len(self.target_dirs)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.noise_power))

    def target_steering(self, target: int) -> np.ndarray:
        el, az = self.target_dirs[target]
        return steering_beta(self.cfg, el, az)

    def gain_floor(self, target: int) -> float:
        """Threshold expressed on the squared gain (optimizer convention)."""
        g = float(self.gain_thresholds[target])
        return g if self.gain_convention == GAIN_SQUARED else g * g


@dataclass
class Sub6gDesign:
    """Digital beamformer plus antenna selection; power is the masked norm."""

    f_s: np.ndarray
    selection: SelectionState
    power: float = field(default=0.0)

    def recompute_power(self) -> float:
        p = self.selection.p_vec
        return float(np.sum(np.abs(p[:, None] * self.f_s) ** 2))


def sinr_sub6g(design: Sub6gDesign, scen: Sub6gScenario, user: int) -> float:
    """Downlink SINR of one user under the selected-antenna mask."""
    p = design.selection.p_vec
    hk = scen.h_sub[:, user] * p
    powers = np.abs(hk.conj() @ design.f_s) ** 2
    signal = powers[user]
    interference = float(np.sum(powers)) - float(signal)
    return float(signal / (interference + scen.noise_power))


def gain_sub6g(design: Sub6gDesign, scen: Sub6gScenario, target: int) -> float:
    """Sensing beampattern gain (2-norm over users) toward one target."""
    p = design.selection.p_vec
    phi = p * scen.target_steering(target)
    return float(np.linalg.norm(design.f_s.conj().T @ phi))


def constraints_satisfied(design: Sub6gDesign, scen: Sub6gScenario,
                          slack: float = 1e-4) -> bool:
    """Re-verify every SINR and gain constraint with the metric operations."""
    for k in range(scen.k_s):
        if sinr_sub6g(design, scen, k) < scen.sinr_thresholds[k] * (1 - slack):
            return False
    for t in range(scen.t_s):
        if gain_sub6g(design, scen, t) ** 2 < scen.gain_floor(t) * (1 - slack):
            return False
    return True


def feasibility_precheck(scen: Sub6gScenario, weights: np.ndarray,
                         power_budget: float) -> dict:
    """Numeric attainability bounds for the thresholds at a given power budget.

    Per-user cap is the interference-free SINR with the whole budget; the
    squared-gain cap is power times the masked steering energy
    (Cauchy-Schwarz).  Logs a warning when a threshold exceeds its cap.
    """
    weights = np.asarray(weights, dtype=float)
    sinr_cap = np.array([
        power_budget * np.sum(np.abs(weights * scen.h_sub[:, k]) ** 2) / scen.noise_power
        for k in range(scen.k_s)])
    gain_cap = np.array([
        power_budget * np.sum(np.abs(weights * scen.target_steering(t)) ** 2)
        for t in range(scen.t_s)])
    for k in range(scen.k_s):
        if scen.sinr_thresholds[k] > sinr_cap[k]:
            log.warning("SINR threshold for user %d (%.3g) exceeds the "
                        "interference-free cap %.3g", k, scen.sinr_thresholds[k],
                        sinr_cap[k])
    for t in range(scen.t_s):
        if scen.gain_floor(t) > gain_cap[t]:
            log.warning("gain threshold for target %d (%.3g) exceeds the "
                        "power-budget cap %.3g", t, scen.gain_floor(t), gain_cap[t])
    return {"sinr_cap": sinr_cap, "gain_cap_squared": gain_cap}
