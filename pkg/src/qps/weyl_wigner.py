"""Discrete Weyl-Wigner point operators and the phase-space transform.

For odd N the phase-point operators

    Delta(j, k) = 2 V^{-k} U^{2j} V^{-k} F^2

are Hermitian, square to ``4 I`` and are mutually orthogonal under the
Hilbert-Schmidt product with a common norm ``c_N``.  ``c_N`` is not assumed
here: :func:`orthogonality_constant` measures it from the operators, and
:func:`ww_inverse` uses the measured value.

The second half of the module evaluates Weyl symbols of quadratic
oscillator observables on a truncated Fock space and compares the symbol of
``-i[F, G]`` against the classical Poisson bracket.
"""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from . import kinematics as kin
from .exceptions import DimensionMismatch, NotHermitian, ParityError, QPSError


def _odd_space(space) -> kin.FiniteSpace:
    sp = kin.as_space(space)
    if sp.dim % 2 == 0:
        raise ParityError(
            f"N={sp.dim} is even: the momentum doubling j -> 2j is not invertible "
            "mod N, so the point operators do not form a basis; use odd N"
        )
    return sp


def ww_point_operator(space, j: int, k: int) -> np.ndarray:
    """Phase-point operator ``Delta(j, k)`` (odd N only)."""
    sp = _odd_space(space)
    vk = kin.shift_power(sp, -k)
    return 2.0 * vk @ kin.clock_power(sp, 2 * j) @ vk @ kin.inversion_op(sp)


class WWBasis:
    """All ``N**2`` point operators of an odd-dimensional space.

    ``basis.operators[j, k]`` is ``Delta(j, k)``; the array is read-only.
    """

    def __init__(self, space):
        self.space = _odd_space(space)
        n = self.space.dim
        ops = np.empty((n, n, n, n), dtype=complex)
        for j in range(n):
            for k in range(n):
                ops[j, k] = ww_point_operator(self.space, j, k)
        ops.setflags(write=False)
        self.operators = ops
        self._c = None

    @property
    def dim(self) -> int:
        return self.space.dim

    def __getitem__(self, jk) -> np.ndarray:
        j, k = jk
        return self.operators[j % self.dim, k % self.dim]

    @property
    def orthogonality_constant(self) -> float:
        """Measured ``tr(Delta^dag Delta)``, shared by every phase point."""
        if self._c is None:
            self._c = orthogonality_constant(self)
        return self._c


def gram_matrix(basis: WWBasis) -> np.ndarray:
    """Hilbert-Schmidt Gram matrix of the flattened point operators."""
    n = basis.dim
    flat = basis.operators.reshape(n * n, n * n)
    return flat.conj() @ flat.T


def orthogonality_constant(basis: WWBasis, spread_tol: float = 1e-12) -> float:
    """Brute-force ``c_N`` from the Gram matrix.

    Raises if the diagonal is not constant or the off-diagonal part does not
    vanish within ``spread_tol`` (scaled by ``c_N``).
    """
    g = gram_matrix(basis)
    diag = np.diag(g)
    c = float(np.mean(diag.real))
    spread = max(kin.max_norm(diag - c), kin.max_norm(g - np.diag(diag)))
    if spread > spread_tol * max(c, 1.0):
        raise QPSError(f"point operators not orthogonal with a common norm (spread {spread:.3g})")
    return c


@dataclass
class WignerMap:
    """Values ``tr(Delta^dag(j, k) A)`` on the N x N phase grid."""

    space: kin.FiniteSpace
    values: np.ndarray
    source_hermitian: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        n = self.space.dim
        if self.values.shape != (n, n):
            raise DimensionMismatch(f"grid shape {self.values.shape} != {(n, n)}")
        if self.source_hermitian and np.max(np.abs(self.values.imag)) >= kin.SPECTRAL_TOL:
            raise NotHermitian("map of a Hermitian operator has an imaginary part")

    def to_csv(self, target=None) -> str:
        """Write ``j,k,re,im`` rows, row-major in ``j``; returns the text."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "k", "re", "im"])
        n = self.space.dim
        for j in range(n):
            for k in range(n):
                v = self.values[j, k]
                w.writerow([j, k, repr(float(v.real)), repr(float(v.imag))])
        text = buf.getvalue()
        if target is not None:
            with open(os.fspath(target), "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source, source_hermitian: bool = False) -> "WignerMap":
        if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
            with open(source, newline="") as fh:
                rows = list(csv.DictReader(fh))
        else:
            rows = list(csv.DictReader(io.StringIO(str(source))))
        n = int(round(np.sqrt(len(rows))))
        if n * n != len(rows):
            raise ValueError(f"{len(rows)} rows do not form a square grid")
        vals = np.zeros((n, n), dtype=complex)
        for r in rows:
            vals[int(r["j"]), int(r["k"])] = float(r["re"]) + 1j * float(r["im"])
        return cls(kin.FiniteSpace(n), vals, source_hermitian)


def _check_operator(a, basis: WWBasis) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.shape != (basis.dim, basis.dim):
        raise DimensionMismatch(f"operator {a.shape} on a {basis.dim}-dimensional basis")
    return a


def ww_transform(a, basis: WWBasis) -> WignerMap:
    """Phase-space map of ``A``; real-valued when ``A`` is Hermitian."""
    a = _check_operator(a, basis)
    vals = np.einsum("jkab,ab->jk", basis.operators.conj(), a)
    herm = kin.is_hermitian(a)
    if herm:
        vals = vals.real.astype(complex) if np.max(np.abs(vals.imag)) < kin.SPECTRAL_TOL else vals
    return WignerMap(basis.space, vals, herm)


def ww_inverse(wmap: WignerMap, basis: WWBasis) -> np.ndarray:
    """Rebuild the operator ``(1/c_N) sum_{j,k} a(j,k) Delta(j,k)``."""
    if wmap.space.dim != basis.dim:
        raise DimensionMismatch(f"map on N={wmap.space.dim}, basis on N={basis.dim}")
    return np.einsum("jk,jkab->ab", wmap.values, basis.operators) / basis.orthogonality_constant


def second_completeness(a, basis: WWBasis) -> np.ndarray:
    """``sum_{j,k} Delta A Delta`` divided by ``c_N``; proportional to ``tr(A) I``."""
    a = _check_operator(a, basis)
    ops = basis.operators
    total = np.einsum("jkab,bc,jkcd->ad", ops, a, ops)
    return total / basis.orthogonality_constant


def wigner_negativity(rho, basis: WWBasis, tol: float = 1e-10) -> float:
    """Total negative weight ``sum max(0, -Re a(j,k))`` of a density matrix."""
    rho = _check_operator(rho, basis)
    if not kin.is_hermitian(rho, tol):
        raise NotHermitian("density matrix must be Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError("density matrix must have unit trace")
    if np.min(np.linalg.eigvalsh(rho)) < -tol:
        raise ValueError("density matrix must be positive semidefinite")
    vals = ww_transform(rho, basis).values.real
    return float(np.sum(np.clip(-vals, 0.0, None)))


# -- quadratic observables and the classical limit --------------------------

_MONOMIALS = {(2, 0): "c_qq", (0, 2): "c_pp", (1, 1): "c_qp", (1, 0): "c_q", (0, 1): "c_p", (0, 0): "c_0"}


@dataclass(frozen=True)
class QuadraticObservable:
    """``c_qq q^2 + c_pp p^2 + c_qp (qp + pq)/2 + c_q q + c_p p + c_0``."""

    c_qq: float = 0.0
    c_pp: float = 0.0
    c_qp: float = 0.0
    c_q: float = 0.0
    c_p: float = 0.0
    c_0: float = 0.0

    def __post_init__(self):
        for name in _MONOMIALS.values():
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"coefficient {name} is not finite")

    @classmethod
    def from_monomials(cls, terms: Mapping[tuple[int, int], float]) -> "QuadraticObservable":
        """Build from ``{(deg_q, deg_p): coeff}``; anything above degree 2 is rejected."""
        kw = {}
        for (dq, dp), c in terms.items():
            if dq < 0 or dp < 0 or dq + dp > 2:
                raise ValueError(
                    f"monomial q^{dq} p^{dp} has degree > 2: the sine series of the "
                    "bracket no longer stops at first order"
                )
            kw[_MONOMIALS[(dq, dp)]] = kw.get(_MONOMIALS[(dq, dp)], 0.0) + float(c)
        return cls(**kw)

    def __call__(self, q, p):
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        return (self.c_qq * q * q + self.c_pp * p * p + self.c_qp * q * p
                + self.c_q * q + self.c_p * p + self.c_0)

    def gradient(self):
        """Linear forms ``(df/dq, df/dp)`` as ``(a_q, a_p, a_0)`` triples."""
        dq = (2 * self.c_qq, self.c_qp, self.c_q)
        dp = (self.c_qp, 2 * self.c_pp, self.c_p)
        return dq, dp

    def operator(self, cutoff: int) -> np.ndarray:
        """Symmetrically ordered operator on the truncated Fock space."""
        from .oscillator import FockSpace, quadratures

        q, p = quadratures(FockSpace(cutoff))
        eye = np.eye(cutoff)
        return (self.c_qq * q @ q + self.c_pp * p @ p + 0.5 * self.c_qp * (q @ p + p @ q)
                + self.c_q * q + self.c_p * p + self.c_0 * eye)


def _mul_linear(u, v) -> dict:
    # (u0 q + u1 p + u2)(v0 q + v1 p + v2) as monomial coefficients
    a0, a1, a2 = u
    b0, b1, b2 = v
    return {(2, 0): a0 * b0, (0, 2): a1 * b1, (1, 1): a0 * b1 + a1 * b0,
            (1, 0): a0 * b2 + a2 * b0, (0, 1): a1 * b2 + a2 * b1, (0, 0): a2 * b2}


def poisson_bracket(f: QuadraticObservable, g: QuadraticObservable) -> QuadraticObservable:
    """``{f, g} = f_q g_p - f_p g_q``, evaluated on the coefficients."""
    fq, fp = f.gradient()
    gq, gp = g.gradient()
    left = _mul_linear(fq, gp)
    right = _mul_linear(fp, gq)
    terms = {m: left[m] - right[m] for m in left}
    # (qp+pq)/2 has classical symbol qp
    return QuadraticObservable.from_monomials(terms)


def weyl_symbol_fock(a, q, p, cutoff: int | None = None) -> np.ndarray:
    """Weyl symbol of a Fock-space operator of degree <= 2 in (Q, P).

    Uses ``W = <z|A|z> - (1/2) <z|[a, [A, a^dag]]|z>`` with
    ``z = (q + i p)/sqrt(2)``; the correction series of the normal-ordered
    symbol stops after one term for quadratic operators.
    """
    from .oscillator import FockSpace, coherent_state, ladder_ops

    a_op = np.asarray(a, dtype=complex)
    d = a_op.shape[0] if cutoff is None else cutoff
    lad = ladder_ops(FockSpace(d))
    lo, hi = lad.a, lad.a_dagger
    inner = a_op @ hi - hi @ a_op
    corr = lo @ inner - inner @ lo
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    out = np.empty((q.size, p.size), dtype=complex)
    for i, qi in enumerate(q):
        for j, pj in enumerate(p):
            ket = coherent_state(FockSpace(d), complex(qi, pj) / np.sqrt(2))
            out[i, j] = np.vdot(ket, a_op @ ket) - 0.5 * np.vdot(ket, corr @ ket)
    return out


class ClassicalLimit(NamedTuple):
    moyal: np.ndarray
    poisson: np.ndarray
    max_diff: float


def classical_limit_check(f: QuadraticObservable, g: QuadraticObservable,
                          q_grid, p_grid, cutoff: int = 64) -> ClassicalLimit:
    """Compare the Weyl symbol of ``-i[F, G]`` with ``{f, g}`` on a grid.

    Grids index as ``moyal[i, j]`` at ``(q_grid[i], p_grid[j])``.
    """
    for obs in (f, g):
        if not isinstance(obs, QuadraticObservable):
            raise TypeError("only quadratic observables are supported")
    fo, go = f.operator(cutoff), g.operator(cutoff)
    comm = -1j * (fo @ go - go @ fo)
    moyal = weyl_symbol_fock(comm, q_grid, p_grid)
    qq, pp = np.meshgrid(np.asarray(q_grid, float), np.asarray(p_grid, float), indexing="ij")
    poisson = poisson_bracket(f, g)(qq, pp)
    return ClassicalLimit(moyal, poisson, float(np.max(np.abs(moyal - poisson))))
