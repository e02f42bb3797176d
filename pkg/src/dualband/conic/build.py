"""Assembly of second-order cone programs, including complex-to-real lifting.

A complex decision vector z is represented by the real stack (Re z, Im z); a
complex matrix product becomes the usual 2x2 real block structure and Re{.}
becomes a linear functional.  Quadratic objectives are handled through an
epigraph variable bounded by a second-order cone.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DualbandError
from .solver import ConicProblem, ConicSolution, solve


@dataclass(frozen=True)
class RealVar:
    start: int
    dim: int


@dataclass(frozen=True)
class ComplexVar:
    re: RealVar
    im: RealVar

    @property
    def dim(self) -> int:
        return self.re.dim


class Rows:
    """A block of affine rows over the builder's real variable vector."""

    def __init__(self, nrows: int):
        self.nrows = nrows
        self.terms: dict[int, np.ndarray] = {}
        self.const = np.zeros(nrows)

    def add_term(self, var: RealVar, mat: np.ndarray) -> "Rows":
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        if mat.shape != (self.nrows, var.dim):
            raise DualbandError("row-block term has wrong shape")
        if var.start in self.terms:
            self.terms[var.start] = self.terms[var.start] + mat
        else:
            self.terms[var.start] = mat
        return self

    def add_const(self, vec) -> "Rows":
        self.const = self.const + np.asarray(vec, dtype=float)
        return self

    def scaled(self, factor: float) -> "Rows":
        out = Rows(self.nrows)
        out.const = self.const * factor
        out.terms = {s: m * factor for s, m in self.terms.items()}
        return out

    @staticmethod
    def vstack(blocks: list["Rows"]) -> "Rows":
        out = Rows(sum(b.nrows for b in blocks))
        out.const = np.concatenate([b.const for b in blocks])
        offset = 0
        pieces: dict[int, list] = {}
        for b in blocks:
            for s, m in b.terms.items():
                pieces.setdefault(s, []).append((offset, m))
            offset += b.nrows
        for s, parts in pieces.items():
            width = parts[0][1].shape[1]
            mat = np.zeros((out.nrows, width))
            for off, m in parts:
                mat[off:off + m.shape[0]] += m
            out.terms[s] = mat
        return out


class SocpBuilder:
    """Incremental SOCP assembly over real and complex variables."""

    def __init__(self):
        self._n = 0
        self._var_dims: dict[int, int] = {}
        self._blocks: list[tuple[str, Rows]] = []
        self._obj: dict[int, np.ndarray] = {}
        self._obj_offset = 0.0

    # -- variables ---------------------------------------------------------

    def real_var(self, dim: int) -> RealVar:
        var = RealVar(self._n, dim)
        self._var_dims[self._n] = dim
        self._n += dim
        return var

    def complex_var(self, dim: int) -> ComplexVar:
        return ComplexVar(re=self.real_var(dim), im=self.real_var(dim))

    # -- affine expression helpers ----------------------------------------

    def rows_real(self, mat, var: RealVar, const=None) -> Rows:
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        rows = Rows(mat.shape[0]).add_term(var, mat)
        if const is not None:
            rows.add_const(const)
        return rows

    def rows_complex(self, mat, z: ComplexVar, const=None) -> Rows:
        """Real rows [Re(M z + c); Im(M z + c)] for complex M, z, c."""
        mat = np.atleast_2d(np.asarray(mat, dtype=complex))
        r = mat.shape[0]
        rows = Rows(2 * r)
        rows.add_term(z.re, np.vstack([mat.real, mat.imag]))
        rows.add_term(z.im, np.vstack([-mat.imag, mat.real]))
        if const is not None:
            const = np.asarray(const, dtype=complex).reshape(r)
            rows.add_const(np.concatenate([const.real, const.imag]))
        return rows

    def rows_complex_real_arg(self, mat, var: RealVar, const=None) -> Rows:
        """Real rows [Re(M x + c); Im(M x + c)] for complex M over a real var."""
        mat = np.atleast_2d(np.asarray(mat, dtype=complex))
        r = mat.shape[0]
        rows = Rows(2 * r)
        rows.add_term(var, np.vstack([mat.real, mat.imag]))
        if const is not None:
            const = np.asarray(const, dtype=complex).reshape(r)
            rows.add_const(np.concatenate([const.real, const.imag]))
        return rows

    def row_re_inner(self, bvec, z: ComplexVar, const: float = 0.0) -> Rows:
        """Single row Re{b^H z} + const."""
        bvec = np.asarray(bvec, dtype=complex).reshape(1, -1)
        rows = Rows(1)
        rows.add_term(z.re, bvec.real)
        rows.add_term(z.im, bvec.imag)
        rows.add_const([const])
        return rows

    def row_const(self, value: float) -> Rows:
        return Rows(1).add_const([value])

    # -- constraints -------------------------------------------------------

    def add_zero(self, rows: Rows) -> None:
        """rows == 0."""
        self._blocks.append(("zero", rows))

    def add_nonneg(self, rows: Rows) -> None:
        """rows >= 0 (elementwise)."""
        self._blocks.append(("nonneg", rows))

    def add_box(self, var: RealVar, lo: float, hi: float) -> None:
        eye = np.eye(var.dim)
        self.add_nonneg(self.rows_real(eye, var, const=np.full(var.dim, -lo)))
        self.add_nonneg(self.rows_real(-eye, var, const=np.full(var.dim, hi)))

    def add_soc(self, t_row: Rows, u_rows: Rows) -> None:
        """||u_rows|| <= t_row (t_row must be a single row)."""
        if t_row.nrows != 1:
            raise DualbandError("SOC head must be a single row")
        self._blocks.append(("soc", Rows.vstack([t_row, u_rows])))

    def add_quad_epigraph(self, u_rows: Rows, weight: float = 1.0) -> RealVar:
        """Add weight * ||u_rows||^2 to the objective; returns the epigraph var."""
        t = self.real_var(1)
        head = Rows(1).add_term(t, [[1.0]]).add_const([1.0])      # 1 + t
        tail = Rows(1).add_term(t, [[-1.0]]).add_const([1.0])     # 1 - t
        self._blocks.append(("soc", Rows.vstack([head, u_rows.scaled(2.0), tail])))
        self.add_linear_objective_var(t, np.array([weight]))
        return t

    # -- objective ---------------------------------------------------------

    def add_linear_objective_var(self, var: RealVar, coefs) -> None:
        coefs = np.asarray(coefs, dtype=float).reshape(var.dim)
        if var.start in self._obj:
            self._obj[var.start] = self._obj[var.start] + coefs
        else:
            self._obj[var.start] = coefs.copy()

    def add_linear_objective(self, row: Rows) -> None:
        """Add a single affine row to the minimized objective."""
        if row.nrows != 1:
            raise DualbandError("objective rows must be single rows")
        for start, mat in row.terms.items():
            var = RealVar(start, self._var_dims[start])
            self.add_linear_objective_var(var, mat[0])
        self._obj_offset += float(row.const[0])

    # -- assembly ----------------------------------------------------------

    def build(self) -> ConicProblem:
        m = sum(b.nrows for _, b in self._blocks)
        A = np.zeros((m, self._n))
        b = np.zeros(m)
        cones = []
        offset = 0
        for kind, rows in self._blocks:
            for start, mat in rows.terms.items():
                A[offset:offset + rows.nrows, start:start + mat.shape[1]] -= mat
            b[offset:offset + rows.nrows] = rows.const
            cones.append((kind, rows.nrows))
            offset += rows.nrows
        c = np.zeros(self._n)
        for start, coefs in self._obj.items():
            c[start:start + coefs.size] += coefs
        return ConicProblem(c=c, A=A, b=b, cones=cones)

    def solve(self, tol: float = 1e-6, max_iters: int = 50000,
              warm: ConicSolution | None = None) -> "BuilderSolution":
        prob = self.build()
        sol = solve(prob, tol=tol, max_iters=max_iters, warm=warm)
        return BuilderSolution(sol, self._obj_offset)


class BuilderSolution:
    """Solution wrapper that un-lifts values back to their declared variables."""

    def __init__(self, raw: ConicSolution, obj_offset: float):
        self.raw = raw
        self.status = raw.status
        self.objective = raw.objective + obj_offset

    def value(self, var) -> np.ndarray:
        x = self.raw.x
        if isinstance(var, ComplexVar):
            return (x[var.re.start:var.re.start + var.re.dim]
                    + 1j * x[var.im.start:var.im.start + var.im.dim])
        return x[var.start:var.start + var.dim].copy()
