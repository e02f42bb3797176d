"""Multipath channel generation over the dual-band panel geometry.

Channels are synthesized from steering vectors with seeded, portable
randomness (numpy PCG64), so a (config, seed) pair always reproduces the
same ChannelSet bit-for-bit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DualbandError
from .geometry import ArrayConfig


@dataclass(frozen=True)
class PathParams:
    """One propagation path: complex gain and surrogate angles in [-1, 1]."""

    gain: complex
    az: float
    el: float

    def __post_init__(self):
        if abs(self.az) > 1 or abs(self.el) > 1:
            raise DualbandError("surrogate angles must lie in [-1, 1]")


def steering_gamma(n: int, angle: float, lambda_ratio: float) -> np.ndarray:
    """Sub-6G uniform linear steering vector on the half-mmWave-wavelength grid.

    Entry i (0-based) is exp(j*pi*i*lambda_ratio*angle); the ratio accounts for
    the grid pitch being a fraction of the sub-6G wavelength.
    """
    if n < 1:
        raise DualbandError("steering vector length must be >= 1")
    return np.exp(1j * np.pi * np.arange(n) * lambda_ratio * angle)


def steering_alpha(n: int, angle: float) -> np.ndarray:
    """mmWave uniform linear steering vector at half-wavelength pitch."""
    return steering_gamma(n, angle, 1.0)


def steering_beta(cfg: ArrayConfig, el: float, az: float) -> np.ndarray:
    """Planar steering vector over the candidate sub-6G grid (length n_p).

    Kronecker product of the vertical (rows, elevation) and horizontal
    (columns, azimuth) linear factors.
    """
    return np.kron(steering_gamma(cfg.grid_rows, el, cfg.lambda_ratio),
                   steering_gamma(cfg.grid_cols, az, cfg.lambda_ratio))


def steering_mm(cfg: ArrayConfig, el: float, az: float) -> np.ndarray:
    """Planar mmWave steering vector over the full array (length n_m)."""
    return np.kron(steering_alpha(cfg.n_row, el), steering_alpha(cfg.n_col, az))


def _synth_column(paths: list[PathParams], steer) -> np.ndarray:
    acc = sum(p.gain * steer(p.el, p.az) for p in paths)
    return acc / np.sqrt(len(paths))


@dataclass(frozen=True)
class ChannelSet:
    """Per-user sub-6G and mmWave channel matrices plus their path parameters."""

    h_sub: np.ndarray      # n_p x k_s
    h_mm: np.ndarray       # n_m x k_m
    paths_sub: tuple
    paths_mm: tuple
    seed: int
    cfg: ArrayConfig

    @property
    def k_s(self) -> int:
        return self.h_sub.shape[1]

    @property
    def k_m(self) -> int:
        return self.h_mm.shape[1]

    def resynthesize(self) -> tuple[np.ndarray, np.ndarray]:
        """Rebuild both matrices from the stored path parameters."""
        h_sub = np.stack([
            _synth_column(list(paths), lambda el, az: steering_beta(self.cfg, el, az))
            for paths in self.paths_sub], axis=1)
        h_mm = np.stack([
            _synth_column(list(paths), lambda el, az: steering_mm(self.cfg, el, az))
            for paths in self.paths_mm], axis=1)
        return h_sub, h_mm

    def verify(self, rtol: float = 1e-12) -> None:
        h_sub, h_mm = self.resynthesize()
        for stored, rebuilt, name in ((self.h_sub, h_sub, "sub-6G"), (self.h_mm, h_mm, "mmWave")):
            err = np.linalg.norm(stored - rebuilt) / max(np.linalg.norm(stored), 1e-300)
            if err > rtol:
                raise DualbandError(f"{name} channel fails reconstruction identity ({err:.2e})")


def _draw_paths(rng: np.random.Generator, n_users: int, n_paths: int) -> tuple:
    users = []
    for _ in range(n_users):
        gains = (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)) / np.sqrt(2)
        els = rng.uniform(-1, 1, n_paths)
        azs = rng.uniform(-1, 1, n_paths)
        users.append(tuple(PathParams(gain=complex(g), az=float(a), el=float(e))
                           for g, a, e in zip(gains, azs, els)))
    return tuple(users)


def gen_channels(cfg: ArrayConfig, k_s: int, k_m: int, l_s: int, l_m: int,
                 seed: int) -> ChannelSet:
    """Draw seeded multipath channels for both bands.

    Gains are unit-variance complex Gaussian, surrogate angles uniform on
    [-1, 1]; each column is normalized by sqrt(path count).
    """
    if min(k_s, k_m, l_s, l_m) < 1:
        raise DualbandError("user and path counts must be >= 1")
    rng = np.random.default_rng(seed)
    paths_sub = _draw_paths(rng, k_s, l_s)
    paths_mm = _draw_paths(rng, k_m, l_m)
    h_sub = np.stack([_synth_column(list(p), lambda el, az: steering_beta(cfg, el, az))
                      for p in paths_sub], axis=1)
    h_mm = np.stack([_synth_column(list(p), lambda el, az: steering_mm(cfg, el, az))
                     for p in paths_mm], axis=1)
    return ChannelSet(h_sub=h_sub, h_mm=h_mm, paths_sub=paths_sub,
                      paths_mm=paths_mm, seed=seed, cfg=cfg)


def _mat_to_lists(m: np.ndarray) -> list:
    """Interleaved re/im float lists, column-major."""
    flat = m.flatten(order="F")
    out = np.empty(2 * flat.size)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out.tolist()


def _mat_from_lists(data: list, rows: int, cols: int) -> np.ndarray:
    arr = np.asarray(data)
    flat = arr[0::2] + 1j * arr[1::2]
    return flat.reshape((rows, cols), order="F")


def save_channels(chan: ChannelSet, path: str) -> None:
    """Persist a ChannelSet as a self-describing JSON file."""
    cfg = chan.cfg
    doc = {
        "format": "dualband-channelset-v1",
        "seed": chan.seed,
        "array": {"n_row": cfg.n_row, "n_col": cfg.n_col, "n_s": cfg.n_s,
                  "n_rf": cfg.n_rf, "h_s": cfg.h_s, "v_s": cfg.v_s,
                  "lambda_ratio": cfg.lambda_ratio},
        "distributions": {"gain": "complex-normal(0,1)", "angle": "uniform[-1,1]"},
        "paths_sub": [[{"re": p.gain.real, "im": p.gain.imag, "az": p.az, "el": p.el}
                       for p in user] for user in chan.paths_sub],
        "paths_mm": [[{"re": p.gain.real, "im": p.gain.imag, "az": p.az, "el": p.el}
                      for p in user] for user in chan.paths_mm],
        "h_sub": _mat_to_lists(chan.h_sub),
        "h_mm": _mat_to_lists(chan.h_mm),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_channels(path: str) -> ChannelSet:
    """Load a ChannelSet and verify the stored matrices against the paths."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "dualband-channelset-v1":
        raise DualbandError("unrecognized channel file format")
    a = doc["array"]
    cfg = ArrayConfig(n_row=a["n_row"], n_col=a["n_col"], n_s=a["n_s"], n_rf=a["n_rf"],
                      h_s=a["h_s"], v_s=a["v_s"], lambda_ratio=a["lambda_ratio"])
    paths_sub = tuple(tuple(PathParams(gain=complex(p["re"], p["im"]), az=p["az"], el=p["el"])
                            for p in user) for user in doc["paths_sub"])
    paths_mm = tuple(tuple(PathParams(gain=complex(p["re"], p["im"]), az=p["az"], el=p["el"])
                           for p in user) for user in doc["paths_mm"])
    h_sub = _mat_from_lists(doc["h_sub"], cfg.n_p, len(paths_sub))
    h_mm = _mat_from_lists(doc["h_mm"], cfg.n_m, len(paths_mm))
    if h_sub.shape[0] != cfg.n_p or h_mm.shape[0] != cfg.n_m:
        raise DimensionMismatch("channel matrices do not match array dimensions")
    chan = ChannelSet(h_sub=h_sub, h_mm=h_mm, paths_sub=paths_sub, paths_mm=paths_mm,
                      seed=doc["seed"], cfg=cfg)
    chan.verify()
    return chan
