"""Finite Schwinger kinematics on a cyclic N-level space.

Kets are complex 1-d ``numpy`` arrays, operators complex 2-d arrays.  The
position basis ``|u_k>`` is the standard basis; ``V`` shifts it down,
``V|u_k> = |u_{k-1}>``, and ``U`` is the diagonal clock
``U|u_k> = exp(2 pi i k / N)|u_k>``.  The Fourier operator has entries
``<u_j|F|u_k> = exp(2 pi i j k / N) / sqrt(N)`` so that ``F|u_k> = |v_k>``.

Operators returned by the constructors are cached and read-only.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .exceptions import DimensionMismatch, NotHermitian, NotNormalized

MAX_DIM = 4096

# absolute max-norm tolerances
ALGEBRA_TOL = 1e-12
SPECTRAL_TOL = 1e-10


@dataclass(frozen=True)
class FiniteSpace:
    """An N-dimensional cyclic position space, ``2 <= N <= MAX_DIM``."""

    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.dim!r}")
        if self.dim > MAX_DIM:
            raise ValueError(f"dimension {self.dim} exceeds the dense cap {MAX_DIM}")
        object.__setattr__(self, "dim", int(self.dim))


def as_space(space) -> FiniteSpace:
    return space if isinstance(space, FiniteSpace) else FiniteSpace(int(space))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=64)
def _shift(n: int) -> np.ndarray:
    v = np.zeros((n, n), dtype=complex)
    k = np.arange(n)
    v[(k - 1) % n, k] = 1.0
    return _frozen(v)


@lru_cache(maxsize=64)
def _clock(n: int) -> np.ndarray:
    return _frozen(np.diag(np.exp(2j * np.pi * np.arange(n) / n)))


@lru_cache(maxsize=64)
def _fourier(n: int) -> np.ndarray:
    j = np.arange(n)
    # reduce jk mod n before the exponential to keep phases exact for large n
    f = np.exp(2j * np.pi * (np.outer(j, j) % n) / n) / np.sqrt(n)
    return _frozen(f)


def position_translation_op(space) -> np.ndarray:
    """Cyclic shift ``V`` with ``V|u_k> = |u_{k-1}>``."""
    return _shift(as_space(space).dim)


def momentum_phase_op(space) -> np.ndarray:
    """Diagonal clock ``U = diag(exp(2 pi i k / N))``."""
    return _clock(as_space(space).dim)


def finite_fourier(space) -> np.ndarray:
    """Unitary ``F`` mapping ``|u_k>`` to the momentum ket ``|v_k>``.

    ``F^dag V F = U``, ``F^dag U F = V^dag`` and ``F^2`` is the index
    inversion ``k -> -k mod N``.
    """
    return _fourier(as_space(space).dim)


def inversion_op(space) -> np.ndarray:
    """Parity ``F^2``, built as the exact permutation ``|u_k> -> |u_{-k}>``."""
    n = as_space(space).dim
    p = np.zeros((n, n), dtype=complex)
    k = np.arange(n)
    p[(-k) % n, k] = 1.0
    return p


def shift_power(space, j: int) -> np.ndarray:
    """``V**j`` for any integer ``j`` (negative powers are ``V^dag``)."""
    n = as_space(space).dim
    p = np.zeros((n, n), dtype=complex)
    k = np.arange(n)
    p[(k - j) % n, k] = 1.0
    return p


def clock_power(space, k: int) -> np.ndarray:
    """``U**k`` for any integer ``k``, phases reduced mod N."""
    n = as_space(space).dim
    m = np.arange(n)
    return np.diag(np.exp(2j * np.pi * ((k * m) % n) / n))


def position_ket(space, k: int) -> np.ndarray:
    n = as_space(space).dim
    e = np.zeros(n, dtype=complex)
    e[k % n] = 1.0
    return e


def momentum_ket(space, k: int) -> np.ndarray:
    n = as_space(space).dim
    return finite_fourier(n)[:, k % n].copy()


def weyl_phase(space, j: int, k: int) -> complex:
    """Phase in ``V^j U^k = exp(2 pi i j k / N) U^k V^j``."""
    n = as_space(space).dim
    return complex(np.exp(2j * np.pi * ((j * k) % n) / n))


def weyl_residual(space, j: int, k: int) -> float:
    """Max-norm of ``V^j U^k - phase * U^k V^j`` from explicit matrix products."""
    sp = as_space(space)
    v = np.linalg.matrix_power(position_translation_op(sp), j % sp.dim)
    u = np.linalg.matrix_power(momentum_phase_op(sp), k % sp.dim)
    return max_norm(v @ u - weyl_phase(sp, j, k) * (u @ v))


class OpAlgebra(NamedTuple):
    commutator: np.ndarray
    anticommutator: np.ndarray
    hilbert_schmidt: complex


def op_algebra(a, b) -> OpAlgebra:
    """Commutator, anticommutator and Hilbert-Schmidt product ``tr(A^dag B)``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    check_same_shape(a, b)
    ab, ba = a @ b, b @ a
    return OpAlgebra(ab - ba, ab + ba, complex(np.vdot(a, b)))


class Moments(NamedTuple):
    mean: complex
    delta: float


def expectation_and_uncertainty(a, psi) -> Moments:
    """Mean ``<psi|A|psi>`` and spread ``sqrt(<A^2> - <A>^2)``.

    Raises :class:`NotNormalized` for an unnormalized ket and
    :class:`NotHermitian` when the variance is negative or complex beyond
    the numerical floor.
    """
    a = np.asarray(a, dtype=complex)
    psi = check_normalized(psi)
    if a.shape != (psi.size, psi.size):
        raise DimensionMismatch(f"operator {a.shape} vs ket of length {psi.size}")
    a_psi = a @ psi
    mean = np.vdot(psi, a_psi)
    var = np.vdot(psi, a @ a_psi) - mean**2
    if abs(var.imag) > SPECTRAL_TOL or var.real < -SPECTRAL_TOL:
        raise NotHermitian(f"variance {var} is not a non-negative real number")
    return Moments(complex(mean), float(np.sqrt(max(var.real, 0.0))))


def symmetric_indices(n: int) -> np.ndarray:
    """Indices ``-(N-1)/2 .. (N-1)/2`` for odd N."""
    if n % 2 == 0:
        raise ValueError("symmetric indexing needs odd N")
    return np.arange(n) - (n - 1) // 2


def symmetric_grid(n: int) -> np.ndarray:
    """Equal-footing grid ``x_j = sqrt(2 pi / N) j`` used for the continuum limit."""
    return np.sqrt(2 * np.pi / n) * symmetric_indices(n)


def symmetric_fourier(n: int) -> np.ndarray:
    """Fourier matrix on symmetric indices, rescaled so entries read
    ``sqrt(2 pi / N) * exp(i x_j y_k) / sqrt(2 pi)``; unitary."""
    j = symmetric_indices(n)
    return np.exp(2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)


# -- small shared helpers ---------------------------------------------------

def dagger(a) -> np.ndarray:
    return np.asarray(a).conj().T


def max_norm(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_unitary(a, tol: float = ALGEBRA_TOL) -> bool:
    a = np.asarray(a)
    return max_norm(dagger(a) @ a - np.eye(a.shape[0])) < tol


def is_hermitian(a, tol: float = ALGEBRA_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and max_norm(a - dagger(a)) < tol


def check_hermitian(a, tol: float = ALGEBRA_TOL) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a, tol):
        raise NotHermitian("operator is not Hermitian")
    return a


def check_normalized(psi, tol: float = ALGEBRA_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    if abs(np.vdot(psi, psi).real - 1.0) > tol:
        raise NotNormalized(f"squared norm {np.vdot(psi, psi).real!r} differs from 1")
    return psi


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} do not match")


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    return psi / np.linalg.norm(psi)
