"""Self-contained solver for real-valued conic programs.

Standard form:  minimize c'x  subject to  A x + s = b,  s in K,
where K is an ordered product of zero, nonnegative and second-order cones.

The algorithm is projection-based operator splitting on the homogeneous
self-dual embedding: each iteration solves a fixed linear system (factorized
once) and projects onto the cone product, which has closed-form projections
for all supported cones.  Ruiz row/column equilibration is applied up front
because steering-vector columns produce badly scaled data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DualbandError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITERS = "max_iters"

ZERO, NONNEG, SOC = 0, 1, 2
_CONE_CODES = {"zero": ZERO, "nonneg": NONNEG, "soc": SOC}

_STATUS_BY_CODE = {0: MAX_ITERS, 1: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}


def project_soc(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the second-order cone {(t, u): ||u|| <= t}."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise DualbandError("SOC projection needs a 1-D vector of length >= 1")
    t = v[0]
    u = v[1:]
    nu = np.linalg.norm(u)
    if nu <= t:
        return v.copy()
    if nu <= -t:
        return np.zeros_like(v)
    coef = 0.5 * (t + nu)
    out = np.empty_like(v)
    out[0] = coef
    out[1:] = coef * u / nu
    return out


@dataclass
class ConicProblem:
    """A conic program in standard form.

    cones is an ordered list of (kind, dim) blocks with kind in
    {"zero", "nonneg", "soc"}; dims must sum to the row count of A.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    cones: list

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        m, n = self.A.shape
        if self.c.shape != (n,) or self.b.shape != (m,):
            raise DualbandError("c/b dimensions do not match A")
        total = 0
        for kind, dim in self.cones:
            if kind not in _CONE_CODES:
                raise DualbandError(f"unknown cone kind {kind!r}")
            if dim < 1:
                raise DualbandError("cone dims must be >= 1")
            total += dim
        if total != m:
            raise DualbandError("cone dims do not sum to row count")

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def cone_arrays(self):
        kinds = np.array([_CONE_CODES[k] for k, _ in self.cones], dtype=np.int64)
        dims = np.array([d for _, d in self.cones], dtype=np.int64)
        starts = np.concatenate(([0], np.cumsum(dims)))[:-1]
        return kinds, starts, dims

    def dump(self) -> str:
        """Text dump (dims, cone layout, nonzero triplets) for external checks."""
        lines = [f"conic m={self.m} n={self.n}",
                 "cones " + " ".join(f"{k}:{d}" for k, d in self.cones),
                 "c " + " ".join(f"{i}:{v:.17g}" for i, v in enumerate(self.c) if v != 0),
                 "b " + " ".join(f"{i}:{v:.17g}" for i, v in enumerate(self.b) if v != 0)]
        rows, cols = np.nonzero(self.A)
        lines.append("A " + " ".join(f"{r},{c}:{self.A[r, c]:.17g}" for r, c in zip(rows, cols)))
        return "\n".join(lines)


@dataclass
class ConicSolution:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    status: str
    primal_res: float
    dual_res: float
    gap: float
    objective: float
    iterations: int


def ruiz_equilibrate(A: np.ndarray, cone_kinds, cone_starts, cone_dims,
                     iters: int = 15):
    """Row/column equilibration; rows of one SOC block share a common scale."""
    m, n = A.shape
    d = np.ones(m)
    e = np.ones(n)
    for _ in range(iters):
        As = (A * e[None, :]) * d[:, None]
        rnorm = np.max(np.abs(As), axis=1)
        # rows inside an SOC block must be scaled together to keep the cone
        for k, st, dim in zip(cone_kinds, cone_starts, cone_dims):
            if k == SOC and dim > 1:
                rnorm[st:st + dim] = np.max(rnorm[st:st + dim])
        rnorm[rnorm < 1e-12] = 1.0
        d /= np.sqrt(rnorm)
        As = (A * e[None, :]) * d[:, None]
        cnorm = np.max(np.abs(As), axis=0)
        cnorm[cnorm < 1e-12] = 1.0
        e /= np.sqrt(cnorm)
    return d, e


def _project_cone_product(w, kinds, starts, dims, dual):
    """Project the m-vector w onto K (dual=False) or K* (dual=True) in place."""
    for k, st, dim in zip(kinds, starts, dims):
        seg = w[st:st + dim]
        if k == ZERO:
            if dual:
                continue            # dual of {0} is free
            seg[:] = 0.0
        elif k == NONNEG:
            np.maximum(seg, 0.0, out=seg)
        else:
            seg[:] = project_soc(seg)
    return w


def _build_inv(As, bs, cs):
    n = As.shape[1]
    m = As.shape[0]
    N = n + m + 1
    IQ = np.eye(N)
    IQ[0:n, n:n + m] += As.T
    IQ[0:n, N - 1] += cs
    IQ[n:n + m, 0:n] -= As
    IQ[n:n + m, N - 1] += bs
    IQ[N - 1, 0:n] -= cs
    IQ[N - 1, n:n + m] -= bs
    return np.linalg.inv(IQ)


def _core_loop(As, bs0, cs0, A, b, c, d, e, sb0, sc0, kinds, starts, dims,
               alpha, tol, max_iters, check_every, u, v):
    """Operator-splitting iterations on the homogeneous embedding.

    Written so that numba can compile it unchanged; the pure-numpy version is
    the fallback.  The b-side scalar normalization adapts when primal and
    dual residuals decay at very different rates (the iterates are rescaled
    and the cached inverse rebuilt).  Returns
    (u, v, iters, status_code, pres, dres, gap, pobj, sb, sc).
    """
    n = c.shape[0]
    m = b.shape[0]
    N = n + m + 1
    sb = sb0
    sc = sc0
    Minv = _build_inv(As, bs0 * sb, cs0 * sc)
    bnorm = np.linalg.norm(b)
    cnorm = np.linalg.norm(c)
    w = np.empty(N)
    status = 0
    pres = np.inf
    dres = np.inf
    gap = np.inf
    pobj = np.inf
    it = 0
    last_adapt = 0
    for it in range(1, max_iters + 1):
        for i in range(N):
            w[i] = u[i] + v[i]
        ut = Minv @ w
        for i in range(N):
            ut[i] = alpha * ut[i] + (1.0 - alpha) * u[i]
        # u = proj_C(ut - v), C = R^n x K* x R+
        for i in range(N):
            w[i] = ut[i] - v[i]
        yseg = w[n:n + m]
        for ci in range(kinds.shape[0]):
            k = kinds[ci]
            st = starts[ci]
            dim = dims[ci]
            if k == 0:
                continue
            elif k == 1:
                for i in range(st, st + dim):
                    if yseg[i] < 0.0:
                        yseg[i] = 0.0
            else:
                t = yseg[st]
                nu = 0.0
                for i in range(st + 1, st + dim):
                    nu += yseg[i] * yseg[i]
                nu = np.sqrt(nu)
                if nu <= t:
                    pass
                elif nu <= -t:
                    for i in range(st, st + dim):
                        yseg[i] = 0.0
                else:
                    coef = 0.5 * (t + nu)
                    scale = coef / nu
                    yseg[st] = coef
                    for i in range(st + 1, st + dim):
                        yseg[i] *= scale
        if w[N - 1] < 0.0:
            w[N - 1] = 0.0
        # v = v - ut + u
        for i in range(N):
            unew = w[i]
            v[i] = v[i] - ut[i] + unew
            u[i] = unew
        if it % check_every != 0 and it != max_iters:
            continue
        tau = u[N - 1]
        if tau > 1e-12:
            # candidate solution residuals on the unscaled data
            x = e * u[0:n] / (tau * sb)
            y = d * u[n:n + m] / (tau * sc)
            s = (v[n:n + m] / d) / (tau * sb)
            rp = A @ x + s - b
            rd = A.T @ y + c
            px = float(c @ x)
            dy = float(b @ y)
            pres = np.linalg.norm(rp) / (1.0 + bnorm)
            dres = np.linalg.norm(rd) / (1.0 + cnorm)
            gap = abs(px + dy) / (1.0 + abs(px) + abs(dy))
            pobj = px
            if pres <= tol and dres <= tol and gap <= tol:
                status = 1
                break
            # rebalance the primal/dual scalar scaling when one residual
            # stalls far above the other
            if it - last_adapt >= 250 and np.isfinite(pres) and np.isfinite(dres):
                ratio = pres / max(dres, 1e-300)
                if ratio > 9.0 or ratio < 1.0 / 9.0:
                    factor = np.sqrt(ratio)
                    if factor > 10.0:
                        factor = 10.0
                    elif factor < 0.1:
                        factor = 0.1
                    newsb = sb * factor
                    if 1e-8 < newsb < 1e8:
                        sb = newsb
                        for i in range(n):
                            u[i] *= factor
                        for i in range(n, n + m):
                            v[i] *= factor
                        Minv = _build_inv(As, bs0 * sb, cs0 * sc)
                        last_adapt = it
        # certificate checks; the thresholds are fixed (not tied to tol) so a
        # loose convergence tolerance cannot produce false certificates
        yc = d * u[n:n + m]
        bty = float(b @ yc)
        if bty < -1e-12:
            if np.linalg.norm(A.T @ yc) <= 1e-7 * (-bty) / max(bnorm, 1e-12):
                status = 2
                break
        xc = e * u[0:n]
        ctx = float(c @ xc)
        if ctx < -1e-12:
            sc_ = (v[n:n + m] / d)
            if np.linalg.norm(A @ xc + sc_) <= 1e-7 * (-ctx) / max(cnorm, 1e-12):
                status = 3
                break
    return u, v, it, status, pres, dres, gap, pobj, sb, sc


_jit_core = None


def _get_core(use_jit: bool):
    global _jit_core, _build_inv
    if not use_jit:
        return _core_loop
    if _jit_core is None:
        try:
            import numba
            _build_inv = numba.njit(cache=True)(_build_inv)
            _jit_core = numba.njit(cache=True, fastmath=False)(_core_loop)
        except Exception:
            _jit_core = _core_loop
    return _jit_core


def solve(prob: ConicProblem, tol: float = 1e-6, max_iters: int = 50000,
          alpha: float = 1.6, warm: ConicSolution | None = None,
          check_every: int = 25, use_jit: bool = True) -> ConicSolution:
    """Solve a conic program; deterministic given its inputs.

    On OPTIMAL the KKT residuals (primal, dual, gap) are all <= tol.  Returns
    MAX_ITERS status when the iteration budget runs out, INFEASIBLE /
    UNBOUNDED when the corresponding certificate is found.
    """
    m, n = prob.A.shape
    kinds, starts, dims = prob.cone_arrays()
    d, e = ruiz_equilibrate(prob.A, kinds, starts, dims)
    As = (prob.A * e[None, :]) * d[:, None]
    bs = prob.b * d
    cs = prob.c * e
    sb = 1.0 / max(np.linalg.norm(bs), 1.0)
    sc = 1.0 / max(np.linalg.norm(cs), 1.0)
    N = n + m + 1

    u = np.zeros(N)
    v = np.zeros(N)
    u[N - 1] = 1.0
    v[N - 1] = 1.0
    if warm is not None and warm.x.shape == (n,):
        u[0:n] = (warm.x / e) * sb
        u[n:n + m] = (warm.y / d) * sc
        v[n:n + m] = warm.s * d * sb
        v[N - 1] = 0.0

    core = _get_core(use_jit)
    u, v, iters, code, pres, dres, gap, pobj, sb, sc = core(
        np.ascontiguousarray(As), bs, cs, prob.A, prob.b, prob.c, d, e, sb, sc,
        kinds, starts, dims,
        float(alpha), float(tol), int(max_iters), int(check_every), u, v)

    tau = u[N - 1]
    if tau > 1e-12:
        x = e * u[0:n] / (tau * sb)
        y = d * u[n:n + m] / (tau * sc)
        s = (v[n:n + m] / d) / (tau * sb)
    else:
        x = e * u[0:n]
        y = d * u[n:n + m]
        s = v[n:n + m] / d
    status = _STATUS_BY_CODE[int(code)]
    obj = float(prob.c @ x) if status in (OPTIMAL, MAX_ITERS) else np.inf
    return ConicSolution(x=x, y=y, s=s, status=status,
                         primal_res=float(pres), dual_res=float(dres),
                         gap=float(gap), objective=obj, iterations=int(iters))
