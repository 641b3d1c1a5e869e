"""Truncated-Fock oscillator: ladder operators, coherent states, sl(2,R).

Conventions: ``a = (Q + iP)/sqrt(2)``, ``z = (q + ip)/sqrt(2)``,
``D[z] = exp(z a^dag - conj(z) a)``.  Matrix exponentials go through
``scipy.linalg.expm`` (scaling and squaring with Pade approximants).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from . import kinematics as kin
from .exceptions import TruncationError

DEFAULT_CUTOFF = 64


@dataclass(frozen=True)
class FockSpace:
    """Number states ``|0> .. |D-1>``."""

    cutoff: int = DEFAULT_CUTOFF

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            raise ValueError(f"cutoff must be an integer >= 2, got {self.cutoff!r}")
        if self.cutoff > kin.MAX_DIM:
            raise ValueError(f"cutoff {self.cutoff} exceeds {kin.MAX_DIM}")


def as_fock(space) -> FockSpace:
    return space if isinstance(space, FockSpace) else FockSpace(int(space))


@dataclass(frozen=True)
class CoherentAmplitude:
    """Complex amplitude ``z``; build from phase-space point with :meth:`from_qp`."""

    z: complex

    @classmethod
    def from_qp(cls, q: float, p: float) -> "CoherentAmplitude":
        return cls(complex(q, p) / np.sqrt(2))

    @property
    def q(self) -> float:
        return float(np.sqrt(2) * complex(self.z).real)

    @property
    def p(self) -> float:
        return float(np.sqrt(2) * complex(self.z).imag)

    def faithful(self, cutoff: int) -> bool:
        r = abs(self.z)
        return r * r + 3 * r + 1 < cutoff


def _amp(z) -> complex:
    return complex(z.z) if isinstance(z, CoherentAmplitude) else complex(z)


def check_faithful(space, z) -> complex:
    d = as_fock(space).cutoff
    z = _amp(z)
    if not CoherentAmplitude(z).faithful(d):
        raise TruncationError(
            f"|z|={abs(z):.4g} too large for cutoff {d}: need |z|^2 + 3|z| + 1 < D"
        )
    return z


class Ladder(NamedTuple):
    a: np.ndarray
    a_dagger: np.ndarray
    n_op: np.ndarray


@lru_cache(maxsize=16)
def _ladder(d: int) -> Ladder:
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)
    ad = a.conj().T.copy()
    n = np.diag(np.arange(d, dtype=float)).astype(complex)
    for m in (a, ad, n):
        m.setflags(write=False)
    return Ladder(a, ad, n)


def ladder_ops(space) -> Ladder:
    """``a|n> = sqrt(n)|n-1>``, ``a^dag|n> = sqrt(n+1)|n+1>``, ``n_op = a^dag a``."""
    return _ladder(as_fock(space).cutoff)


def quadratures(space) -> tuple[np.ndarray, np.ndarray]:
    """``Q = (a + a^dag)/sqrt(2)`` and ``P = -i(a - a^dag)/sqrt(2)``."""
    lad = ladder_ops(space)
    q = (lad.a + lad.a_dagger) / np.sqrt(2)
    p = -1j * (lad.a - lad.a_dagger) / np.sqrt(2)
    return q, p


def vacuum(space) -> np.ndarray:
    v = np.zeros(as_fock(space).cutoff, dtype=complex)
    v[0] = 1.0
    return v


def number_state(space, n: int) -> np.ndarray:
    v = np.zeros(as_fock(space).cutoff, dtype=complex)
    v[n] = 1.0
    return v


def fractional_fourier(space, theta: float) -> np.ndarray:
    """Diagonal ``exp(i theta N)``; ``theta = pi/2`` is the Fourier operator."""
    n = np.arange(as_fock(space).cutoff)
    return np.diag(np.exp(1j * theta * n))


def displacement(space, z) -> np.ndarray:
    """``D[z] = exp(z a^dag - conj(z) a)`` for an amplitude inside the faithful bound."""
    sp = as_fock(space)
    z = check_faithful(sp, z)
    lad = ladder_ops(sp)
    if z == 0:
        return np.eye(sp.cutoff, dtype=complex)
    return expm(z * lad.a_dagger - np.conj(z) * lad.a)


def coherent_state(space, z) -> np.ndarray:
    """``|z> = D[z]|0>``."""
    return displacement(space, z)[:, 0].copy()


def coherent_amplitudes(space, z) -> np.ndarray:
    """Closed-form ``exp(-|z|^2/2) z^n / sqrt(n!)``, built by a stable recurrence."""
    d = as_fock(space).cutoff
    z = _amp(z)
    out = np.empty(d, dtype=complex)
    out[0] = np.exp(-0.5 * abs(z) ** 2)
    for n in range(1, d):
        out[n] = out[n - 1] * z / np.sqrt(n)
    return out


def protected_dim(cutoff: int, z) -> int:
    """Rows ``n < D - 4 ceil(|z|^2)`` where truncation artefacts are negligible."""
    return cutoff - 4 * int(np.ceil(abs(_amp(z)) ** 2))


def coherent_overlap(z1, z2) -> complex:
    """Analytic ``<z1|z2>`` with the symplectic area phase."""
    a, b = CoherentAmplitude(_amp(z1)), CoherentAmplitude(_amp(z2))
    q, p, q2, p2 = a.q, a.p, b.q, b.p
    mod = np.exp(-0.25 * ((p - p2) ** 2 + (q - q2) ** 2))
    return complex(mod * np.exp(0.5j * (p2 * q - p * q2)))


def coherent_rotation_check(z, theta: float, cutoff: int = DEFAULT_CUTOFF) -> float:
    """Infidelity ``1 - |<e^{i theta} z| F_theta |z>|^2`` on the truncated space."""
    sp = FockSpace(cutoff)
    z = check_faithful(sp, z)
    rotated = fractional_fourier(sp, theta) @ coherent_state(sp, z)
    target = coherent_state(sp, np.exp(1j * theta) * z)
    return float(max(0.0, 1.0 - abs(np.vdot(target, rotated)) ** 2))


class Sl2Generator(NamedTuple):
    kind: str
    matrix: np.ndarray


class Sl2Generators(NamedTuple):
    H0: Sl2Generator
    G: Sl2Generator
    K: Sl2Generator


def sl2_generators(space) -> Sl2Generators:
    """Rotation ``H0 = N + 1/2``, scale ``G = (i/2)(a^dag^2 - a^2)``,
    hyperbolic ``K = (a^dag^2 + a^2)/2``.

    They close as ``[H0, G] = 2iK``, ``[G, K] = -2iH0``, ``[K, H0] = 2iG``
    away from the top of the truncation.
    """
    lad = ladder_ops(space)
    a2 = lad.a @ lad.a
    ad2 = lad.a_dagger @ lad.a_dagger
    h0 = lad.n_op + 0.5 * np.eye(lad.n_op.shape[0])
    g = 0.5j * (ad2 - a2)
    k = 0.5 * (ad2 + a2)
    return Sl2Generators(Sl2Generator("H0", h0), Sl2Generator("G", g), Sl2Generator("K", k))


def sl2_structure_residuals(space, margin: int = 4) -> dict[str, float]:
    """Max deviation of the three brackets from their structure constants,
    restricted to ``n < D - margin``."""
    gens = sl2_generators(space)
    h, g, k = gens.H0.matrix, gens.G.matrix, gens.K.matrix
    m = as_fock(space).cutoff - margin

    def comm(x, y):
        return x @ y - y @ x

    cases = {
        "[H0,G]": comm(h, g) - 2j * k,
        "[G,K]": comm(g, k) + 2j * h,
        "[K,H0]": comm(k, h) - 2j * g,
    }
    return {name: kin.max_norm(r[:m, :m]) for name, r in cases.items()}


def hermite_functions(nmax: int, x) -> np.ndarray:
    """Table ``psi_n(x)`` for ``n = 0..nmax``, shape ``(nmax + 1,) + x.shape``.

    Three-term recurrence ``psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, nmax):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_position_amplitude(n: int, x):
    """``<q(x)|n>``; scalar in, scalar out."""
    if n < 0:
        raise ValueError("n must be non-negative")
    val = hermite_functions(n, x)[n]
    return float(val) if np.ndim(val) == 0 else val


def wavefunction(state, x) -> np.ndarray:
    """Position-space amplitude ``sum_n c_n psi_n(x)`` of a Fock-space ket."""
    state = np.asarray(state, dtype=complex)
    table = hermite_functions(state.size - 1, x)
    return np.tensordot(state, table, axes=(0, 0))


def scale_operator(space, xi: float) -> np.ndarray:
    """``S_xi = exp(i G ln xi)``; maps ``psi(x)`` to ``sqrt(xi) psi(xi x)``."""
    if not xi > 0:
        raise ValueError(f"scale factor must be positive, got {xi!r}")
    g = sl2_generators(space).G.matrix
    return expm(1j * np.log(xi) * g)


def squeezed_vacuum_wavefunction(xi: float, x):
    """Closed form ``sqrt(xi) pi^{-1/4} exp(-xi^2 x^2 / 2)``."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(xi) * np.pi ** -0.25 * np.exp(-0.5 * (xi * x) ** 2)
