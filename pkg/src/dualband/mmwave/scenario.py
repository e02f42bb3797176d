"""mmWave design problem data, beamformer containers and quality metrics.

Metrics operate on the physical beamformer matrix (antennas x users), so the
same code scores the hybrid pipeline and every reference structure.
"""
from __future__ import annotations

import numpy as np

from ..channel import steering_mm
from ..errors import DimensionMismatch, DualbandError
from ..geometry import ArrayConfig
from ..sub6g.scenario import GAIN_NORM, GAIN_SQUARED

from dataclasses import dataclass, field


@dataclass(frozen=True)
class MmWaveScenario:
    """Channels, sensing targets and power budget for the mmWave design.

    target_dirs holds (elevation, azimuth) surrogate angles in [-1, 1];
    gain_convention selects whether a gain threshold applies to the
    beampattern norm or to its square.
    """

    h_mm: np.ndarray
    target_dirs: tuple
    gain_thresholds: np.ndarray
    noise_power: float
    power_budget: float
    cfg: ArrayConfig
    gain_convention: str = GAIN_SQUARED

    def __post_init__(self):
        object.__setattr__(self, "h_mm", np.asarray(self.h_mm, dtype=complex))
        object.__setattr__(self, "gain_thresholds",
                           np.asarray(self.gain_thresholds, dtype=float))
        object.__setattr__(self, "target_dirs",
                           tuple((float(e), float(a)) for e, a in self.target_dirs))
        if self.h_mm.shape[0] != self.cfg.n_m:
            raise DimensionMismatch("channel rows do not match antenna count")
        if self.gain_thresholds.shape != (len(self.target_dirs),):
            raise DimensionMismatch("one gain threshold per sensing target required")
        if np.any(self.gain_thresholds < 0):
            raise DualbandError("gain thresholds must be nonnegative")
        if self.noise_power <= 0:
            raise DualbandError("noise power must be positive")
        if self.power_budget <= 0:
            raise DualbandError("power budget must be positive")
        if self.gain_convention not in (GAIN_SQUARED, GAIN_NORM):
            raise DualbandError("gain_convention must be 'squared' or 'norm'")

    @property
    def k_m(self) -> int:
        return self.h_mm.shape[1]

    @property
    def t_m(self) -> int:
        return len(self.target_dirs)

    @property
    def n_rf(self) -> int:
        return self.cfg.n_rf

    def target_steering(self, target: int) -> np.ndarray:
        el, az = self.target_dirs[target]
        return steering_mm(self.cfg, el, az)

    def gain_floor(self, target: int) -> float:
        """Threshold expressed on the squared gain (optimizer convention)."""
        g = float(self.gain_thresholds[target])
        return g if self.gain_convention == GAIN_SQUARED else g * g


@dataclass
class RhbDesign:
    """Hybrid beamformer state: phase shifters, switches, digital stage.

    f_p holds one unit-modulus phase per antenna; s_matrix is the binary
    antenna-to-chain switch network; the analog beamformer is their product
    diag(f_p) @ s_matrix.  f_m is the auxiliary fully-digital variable the
    splitting method drives toward the hybrid product, duals its running
    multiplier estimate, (u, w) the per-user receiver/weight pair.
    """

    f_p: np.ndarray
    s_matrix: np.ndarray
    f_bb: np.ndarray
    f_m: np.ndarray
    duals: np.ndarray
    u: np.ndarray = field(default=None)
    w: np.ndarray = field(default=None)

    @property
    def f_rf(self) -> np.ndarray:
        return self.f_p[:, None] * self.s_matrix

    @property
    def f_physical(self) -> np.ndarray:
        """The implemented beamformer diag(f_p) @ s_matrix @ f_bb."""
        return self.f_rf @ self.f_bb

    def validate(self, power_budget: float) -> None:
        if not np.allclose(np.abs(self.f_p), 1.0, atol=1e-9):
            raise DualbandError("phase-shifter entries must be unit modulus")
        if not np.all((self.s_matrix == 0) | (self.s_matrix == 1)):
            raise DualbandError("switch matrix entries must be binary")
        if power_mm(self.f_physical) > power_budget * (1 + 1e-6):
            raise DualbandError("hybrid beamformer exceeds the power budget")


def power_mm(f: np.ndarray) -> float:
    """Transmit power of a physical beamformer matrix."""
    return float(np.sum(np.abs(f) ** 2))


def sinr_mm(f: np.ndarray, scen: MmWaveScenario, user: int) -> float:
    """Downlink SINR of one user under the physical beamformer."""
    powers = np.abs(scen.h_mm[:, user].conj() @ f) ** 2
    signal = float(powers[user])
    interference = float(np.sum(powers)) - signal
    return signal / (interference + scen.noise_power)


def sumrate(f: np.ndarray, scen: MmWaveScenario) -> float:
    """Achievable sum-rate (bits/s/Hz) of the physical beamformer."""
    return float(sum(np.log2(1.0 + sinr_mm(f, scen, k))
                     for k in range(scen.k_m)))


def gain_mm(f: np.ndarray, scen: MmWaveScenario, target: int) -> float:
    """Sensing beampattern gain (2-norm over users) toward one target."""
    return float(np.linalg.norm(f.conj().T @ scen.target_steering(target)))


def min_gain_mm(f: np.ndarray, scen: MmWaveScenario) -> float:
    """Smallest squared gain over all sensing targets (inf when none)."""
    if scen.t_m == 0:
        return np.inf
    return min(gain_mm(f, scen, t) ** 2 for t in range(scen.t_m))


def constraints_satisfied_mm(f: np.ndarray, scen: MmWaveScenario,
                             slack: float = 1e-3) -> bool:
    """Re-verify power and gain constraints with the metric operations."""
    if power_mm(f) > scen.power_budget * (1 + 1e-6):
        return False
    for t in range(scen.t_m):
        if gain_mm(f, scen, t) ** 2 < scen.gain_floor(t) * (1 - slack):
            return False
    return True
