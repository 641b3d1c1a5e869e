"""Modular variables on cyclic rings and CRT pseudo-degrees of freedom.

The two-slit modular qubit lives on a ring of circumference ``2L`` with
sites ``x_j = 2 L j / N``, ``j = -N/2 .. N/2 - 1``.  On that ring the half
period shift ``V_L`` is an involution and the slit span
``{|q(+L/2)>, |q(-L/2)>}`` is exactly invariant.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np
from scipy.integrate import quad

from . import kinematics as kin
from .exceptions import CoprimalityError, DimensionMismatch


@dataclass(frozen=True)
class RingSpace:
    """``N`` sites (``4 | N``) on a ring of circumference ``2L``."""

    sites: int
    L: float = 1.0

    def __post_init__(self):
        if int(self.sites) != self.sites or self.sites < 4 or self.sites % 4:
            raise ValueError(f"ring needs a site count divisible by 4, got {self.sites!r}")
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError("L must be positive and finite")
        if self.sites > kin.MAX_DIM:
            raise ValueError(f"{self.sites} sites exceeds {kin.MAX_DIM}")

    @property
    def circumference(self) -> float:
        return 2.0 * self.L

    @property
    def site_spacing(self) -> float:
        return 2.0 * self.L / self.sites

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.sites) - self.sites // 2

    @property
    def positions(self) -> np.ndarray:
        return self.indices * self.site_spacing

    @property
    def slit_indices(self) -> tuple[int, int]:
        """Array positions of the sites at ``+L/2`` and ``-L/2``."""
        half = self.sites // 2
        return half + self.sites // 4, half - self.sites // 4

    def ket(self, array_index: int) -> np.ndarray:
        e = np.zeros(self.sites, dtype=complex)
        e[array_index] = 1.0
        return e


def ring_translation(ring: RingSpace, sites: int) -> np.ndarray:
    """``V_xi`` for ``xi = sites * spacing``: ``|q(x)> -> |q(x - xi)>`` cyclically."""
    return kin.shift_power(ring.sites, sites)


def ring_phase(ring: RingSpace, eta: float) -> np.ndarray:
    """``U_eta = diag(exp(i eta x_j))``; single-valued only if ``2 L eta`` is a multiple of ``2 pi``."""
    return np.diag(np.exp(1j * eta * ring.positions))


class SpinOps(NamedTuple):
    sigma1: np.ndarray
    sigma2: np.ndarray
    sigma3: np.ndarray


def modular_spin_ops(ring: RingSpace) -> SpinOps:
    """Modular spin operators from ``U_{pi/L}`` and ``V_L`` on the ring."""
    u = ring_phase(ring, np.pi / ring.L)
    v = ring_translation(ring, ring.sites // 2)
    vd = v.conj().T
    s3 = (u - u.conj().T) / 2j
    s1 = 0.5 * (v + vd) - 0.5 * (v - vd) @ s3
    s2 = -0.5j * (v - vd) + 0.5j * (v + vd) @ s3
    return SpinOps(s1, s2, s3)


def slit_block(ring: RingSpace, op) -> np.ndarray:
    """2x2 compression onto ``(|q(+L/2)>, |q(-L/2)>)``."""
    idx = list(ring.slit_indices)
    return np.asarray(op)[np.ix_(idx, idx)]


def span_leakage(ring: RingSpace, op) -> float:
    """Max amplitude that ``op`` moves out of the slit span."""
    idx = list(ring.slit_indices)
    rest = [i for i in range(ring.sites) if i not in idx]
    return kin.max_norm(np.asarray(op)[np.ix_(rest, idx)])


def pauli_residuals(ring: RingSpace) -> dict[str, float]:
    """Commutator and anticommutator residuals of the compressed operators."""
    ops = [slit_block(ring, s) for s in modular_spin_ops(ring)]
    eye = np.eye(2)
    comm = anti = 0.0
    for j in range(3):
        for k in range(3):
            a, b = ops[j], ops[k]
            anti = max(anti, kin.max_norm(a @ b + b @ a - 2 * eye * (j == k)))
            l = 3 - j - k
            if j != k:
                eps = 1 if (j, k) in ((0, 1), (1, 2), (2, 0)) else -1
                comm = max(comm, kin.max_norm(a @ b - b @ a - 2j * eps * ops[l]))
    leak = max(span_leakage(ring, s) for s in modular_spin_ops(ring))
    return {"commutator": comm, "anticommutator": anti, "leakage": leak}


def open_line_leakage(ring: RingSpace) -> float:
    """Leakage of ``V_L`` out of the slit span on the same sites without wrap.

    On an open segment ``V_L|q(-L/2)>`` lands at ``-3L/2``, outside both the
    slit span and the segment, so the restriction is not closed.
    """
    n = ring.sites
    v = np.zeros((n, n), dtype=complex)
    half = n // 2
    for k in range(n):
        if k - half >= 0:
            v[k - half, k] = 1.0
    _, minus = ring.slit_indices
    image = v[:, minus]
    idx = list(ring.slit_indices)
    return float(1.0 - np.sum(np.abs(image[idx]) ** 2))


def direct_sum_vs_tensor(ring: RingSpace, fact: tuple[int, int] = (2, 3)) -> dict:
    """Side-by-side numbers for the two constructions of a modular qubit."""
    report = crt_relabel_check(fact)
    res = pauli_residuals(ring)
    return {
        "direct_sum": {"open_line_leakage": open_line_leakage(ring),
                       "ring_leakage": res["leakage"],
                       "pauli_commutator_residual": res["commutator"]},
        "tensor_product": {"factors": list(fact), "conjugation_residual": report.residual,
                           "orbit_length": report.orbit_length},
    }


@dataclass(frozen=True)
class SlitLattice:
    """``n_slits`` periods of length ``period``; ``e^{-iV(Q)} = sum c_n U_{2 pi n / L}``."""

    n_slits: int
    period: float
    potential_coefficients: Mapping[int, complex] = field(default_factory=lambda: {0: 1.0})

    def __post_init__(self):
        if self.n_slits < 1 or self.period <= 0:
            raise ValueError("need at least one slit and a positive period")
        coeffs = {int(k): complex(v) for k, v in dict(self.potential_coefficients).items()}
        norm = sum(abs(v) ** 2 for v in coeffs.values())
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"coefficients have squared norm {norm!r}, need 1")
        object.__setattr__(self, "potential_coefficients", coeffs)


class Diffraction(NamedTuple):
    state: np.ndarray
    v_eigenvalue: complex
    v_residual: float
    u_eigenvalue: complex
    u_residual: float


def _eig_residual(op, psi) -> tuple[complex, float]:
    img = op @ psi
    lam = complex(np.vdot(psi, img))
    return lam, kin.max_norm(img - lam * psi)


def nslit_diffraction(lattice: SlitLattice, ring_momentum_dim: int) -> Diffraction:
    """Momentum comb ``sum_n c_n |p(2 pi n / L)>`` from ``|p(0)>``.

    The ring holds ``n_slits`` periods on ``N`` sites, so its basic clock is
    ``U_{2 pi / (n_slits L)}`` and harmonic ``n`` is ``U^{n * n_slits}``.
    Eigen-residuals are reported for ``V_L`` (shift by one period) and for
    ``U_{2 pi / L}``.
    """
    n, p = int(ring_momentum_dim), lattice.n_slits
    if n % p:
        raise ValueError(f"{n} sites do not split into {p} equal periods")
    for h in lattice.potential_coefficients:
        if 2 * abs(h * p) > n:
            raise ValueError(f"harmonic {h} is not resolved by a {n}-point momentum grid")
    if len({(h * p) % n for h in lattice.potential_coefficients}) < len(lattice.potential_coefficients):
        raise ValueError("two harmonics alias onto the same momentum site")
    sp = kin.FiniteSpace(n)
    p0 = kin.momentum_ket(sp, 0)
    psi = np.zeros(n, dtype=complex)
    for h, c in lattice.potential_coefficients.items():
        psi += c * (kin.clock_power(sp, h * p) @ p0)
    v_l = kin.shift_power(sp, n // p)
    u_per = kin.clock_power(sp, p)
    lv, rv = _eig_residual(v_l, psi)
    lu, ru = _eig_residual(u_per, psi)
    return Diffraction(psi, lv, rv, lu, ru)


def comb_support(state, n_slits: int, tol: float = 1e-12) -> np.ndarray:
    """Momentum indices carrying weight; all are multiples of ``n_slits`` for a comb."""
    amps = kin.finite_fourier(state.size).conj().T @ state
    return np.flatnonzero(np.abs(amps) > tol)


def slit_coefficients(period: float, width: float, nmax: int) -> dict[int, complex]:
    """Fourier coefficients of a Gaussian-slit transmission, normalized.

    ``t(x) = sum_m exp(-(x - m L)^2 / (2 w^2))`` is expanded as
    ``sum_n c_n exp(2 pi i n x / L)`` by quadrature over one period; as
    ``w -> 0`` the coefficients become uniform (Dirac comb).
    """
    if width <= 0 or period <= 0:
        raise ValueError("period and width must be positive")
    reps = int(np.ceil(8 * width / period)) + 1

    def t(x):
        return sum(np.exp(-((x - m * period) ** 2) / (2 * width ** 2)) for m in range(-reps, reps + 1))

    coeffs = {}
    for h in range(-nmax, nmax + 1):
        k = 2 * np.pi * h / period
        re = quad(lambda x: t(x) * np.cos(k * x), -period / 2, period / 2, limit=200)[0]
        im = quad(lambda x: -t(x) * np.sin(k * x), -period / 2, period / 2, limit=200)[0]
        coeffs[h] = complex(re, im) / period
    norm = np.sqrt(sum(abs(c) ** 2 for c in coeffs.values()))
    return {h: c / norm for h, c in coeffs.items()}


def comb_spacing_error(lattice: SlitLattice, sites: int) -> float:
    """Deviation of the lattice-momentum tooth positions from ``2 pi n / L``.

    Uses the discrete momentum ``(V - V^dag)/(2 i a)`` with spacing
    ``a = n_slits L / N``.
    """
    nslit_diffraction(lattice, sites)  # validates the grid
    a = lattice.n_slits * lattice.period / sites
    v = kin.position_translation_op(sites)
    p_op = (v - v.conj().T) / (2j * a)
    f = kin.finite_fourier(sites)
    err = 0.0
    for h in lattice.potential_coefficients:
        k = (h * lattice.n_slits) % sites
        tooth = f[:, k]
        p_val = np.vdot(tooth, p_op @ tooth).real
        err = max(err, abs(p_val - 2 * np.pi * h / lattice.period))
    return float(err)


class EomIdentity(NamedTuple):
    residual: float
    commutator_norm: float


def nonlocal_eom_identity(ring: RingSpace, phi) -> EomIdentity:
    """Residual of ``[phi(Q), V_L] = (phi(Q) - phi(Q + L)) V_L`` on the ring.

    ``phi`` may be a callable of position or an array of site values.  A
    callable must be ``2L``-periodic on the sites, otherwise the cyclic
    wrap contradicts the potential and the call is rejected.
    """
    x = ring.positions
    if callable(phi):
        here = np.asarray(phi(x), dtype=float)
        ahead = np.asarray(phi(x + ring.L), dtype=float)
        wrapped = np.asarray(phi(x + 2 * ring.L), dtype=float)
        if np.max(np.abs(wrapped - here)) > 1e-12 * max(1.0, np.max(np.abs(here))):
            raise ValueError("potential is not periodic with the ring circumference 2L")
    else:
        here = np.asarray(phi, dtype=float)
        if here.shape != (ring.sites,):
            raise DimensionMismatch("site potential must have one value per site")
        ahead = np.roll(here, -ring.sites // 2)
    pq, pql = np.diag(here), np.diag(ahead)
    v = ring_translation(ring, ring.sites // 2)
    comm = pq @ v - v @ pq
    return EomIdentity(kin.max_norm(comm - (pq - pql) @ v), kin.max_norm(comm))


# -- CRT factorization ------------------------------------------------------

@dataclass(frozen=True)
class CrtFactorization:
    """Coprime pair ``(N_a, N_b)`` with ``j -> (j mod N_a, j mod N_b)``."""

    N_a: int
    N_b: int

    def __post_init__(self):
        if self.N_a < 1 or self.N_b < 1:
            raise ValueError("factors must be positive")
        if math.gcd(self.N_a, self.N_b) != 1:
            raise CoprimalityError(f"gcd({self.N_a}, {self.N_b}) = {math.gcd(self.N_a, self.N_b)}")
        labels = {self.relabel(j) for j in range(self.dim)}
        if len(labels) != self.dim:
            raise CoprimalityError("relabelling is not a bijection")

    @property
    def dim(self) -> int:
        return self.N_a * self.N_b

    def relabel(self, j: int) -> tuple[int, int]:
        return j % self.N_a, j % self.N_b

    def permutation(self) -> np.ndarray:
        """``P|j> = |a N_b + b>`` with ``(a, b)`` the relabelled index."""
        return _crt_perm(self.N_a, self.N_b)


def _crt_perm(na: int, nb: int) -> np.ndarray:
    n = na * nb
    p = np.zeros((n, n))
    for j in range(n):
        p[(j % na) * nb + (j % nb), j] = 1.0
    return p


def product_orbits(na: int, nb: int) -> list[list[tuple[int, int]]]:
    """Orbits of the diagonal shift ``(a, b) -> (a + 1, b + 1)`` on the grid."""
    seen, orbits = set(), []
    for a in range(na):
        for b in range(nb):
            if (a, b) in seen:
                continue
            orb, cur = [], (a, b)
            while cur not in seen:
                seen.add(cur)
                orb.append(cur)
                cur = ((cur[0] + 1) % na, (cur[1] + 1) % nb)
            orbits.append(orb)
    return orbits


class CrtReport(NamedTuple):
    coprime: bool
    residual: float
    orbit_length: int
    orbits: list


def crt_relabel_check(fact) -> CrtReport:
    """Conjugation residual ``|P V P^-1 - V_a (x) V_b|`` and the orbit of ``(0, 0)``.

    For non-coprime factors no bijection exists; the report carries an
    infinite residual and the parallel-line orbit structure instead of
    raising.
    """
    na, nb = (fact.N_a, fact.N_b) if isinstance(fact, CrtFactorization) else map(int, fact)
    orbits = product_orbits(na, nb)
    orbit_len = len(orbits[0])
    if math.gcd(na, nb) != 1:
        return CrtReport(False, float("inf"), orbit_len, orbits)
    p = _crt_perm(na, nb)
    big = kin.position_translation_op(na * nb)
    target = np.kron(kin.position_translation_op(na), kin.position_translation_op(nb))
    return CrtReport(True, kin.max_norm(p @ big @ p.T - target), orbit_len, orbits)


class AzState(NamedTuple):
    state: np.ndarray
    v_residual: float
    u_residual: float


def az_state(fact: CrtFactorization, j: int, sigma: int) -> AzState:
    """``|v_j^(N_a)> (x) |u_sigma^(N_b)>`` with its two eigen-residuals."""
    if not (0 <= j < fact.N_a and 0 <= sigma < fact.N_b):
        raise IndexError(f"(j, sigma) = ({j}, {sigma}) outside {fact.N_a} x {fact.N_b}")
    psi = np.kron(kin.momentum_ket(fact.N_a, j), kin.position_ket(fact.N_b, sigma))
    va = np.kron(kin.position_translation_op(fact.N_a), np.eye(fact.N_b))
    ub = np.kron(np.eye(fact.N_a), kin.momentum_phase_op(fact.N_b))
    rv = kin.max_norm(va @ psi - np.exp(2j * np.pi * j / fact.N_a) * psi)
    ru = kin.max_norm(ub @ psi - np.exp(2j * np.pi * sigma / fact.N_b) * psi)
    return AzState(psi, rv, ru)


def az_cell_csv(fact: CrtFactorization, state, target=None) -> str:
    """Rows ``x_mod,p_mod,weight``: weight of ``|v_p^(N_a)> (x) |u_x^(N_b)>``."""
    state = np.asarray(state, dtype=complex)
    if state.size != fact.dim:
        raise DimensionMismatch("state does not live on the product space")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x_mod", "p_mod", "weight"])
    for x in range(fact.N_b):
        for p in range(fact.N_a):
            basis = np.kron(kin.momentum_ket(fact.N_a, p), kin.position_ket(fact.N_b, x))
            w.writerow([x, p, repr(float(abs(np.vdot(basis, state)) ** 2))])
    text = buf.getvalue()
    if target is not None:
        with open(target, "w", newline="") as fh:
            fh.write(text)
    return text


class SlitMeasurement(NamedTuple):
    state: np.ndarray
    expansion_residual: float


def slit_projective_measurement(fact) -> SlitMeasurement:
    """Post-measurement ``|v_0^(N_a)> (x) |u_0^(N_b)>`` and its momentum expansion.

    Needs no coprimality, so a plain ``(N_a, N_b)`` tuple is accepted.
    """
    na, nb = (fact.N_a, fact.N_b) if isinstance(fact, CrtFactorization) else map(int, fact)
    v0 = kin.momentum_ket(na, 0)
    state = np.kron(v0, kin.position_ket(nb, 0))
    expansion = sum(np.kron(v0, kin.momentum_ket(nb, s)) for s in range(nb)) / np.sqrt(nb)
    return SlitMeasurement(state, kin.max_norm(state - expansion))

