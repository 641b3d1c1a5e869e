"""Projective-space geometry: Fubini-Study metric, Pancharatnam and Bargmann
phases, Bloch-sphere solid angles and the reference-state probability.

Every exported scalar depends only on rays, so multiplying any
representative by a phase leaves the result unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from . import kinematics as kin
from .exceptions import DegenerateGeometry, DimensionMismatch

OVERLAP_FLOOR = 1e-12


@dataclass(frozen=True)
class RayPoint:
    """A normalized representative of a ray."""

    representative: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "representative", kin.check_normalized(self.representative))

    @classmethod
    def from_vector(cls, v) -> "RayPoint":
        return cls(kin.normalize(v))

    @property
    def dim(self) -> int:
        return self.representative.size

    def rephased(self, chi: float) -> "RayPoint":
        return RayPoint(np.exp(1j * chi) * self.representative)


def _vec(p) -> np.ndarray:
    return p.representative if isinstance(p, RayPoint) else kin.check_normalized(p)


@dataclass(frozen=True)
class GeodesicTriangle:
    vertices: tuple

    def __post_init__(self):
        vs = tuple(v if isinstance(v, RayPoint) else RayPoint(v) for v in self.vertices)
        if len(vs) != 3:
            raise ValueError("a triangle has three vertices")
        if len({v.dim for v in vs}) != 1:
            raise DimensionMismatch("vertices live in different spaces")
        object.__setattr__(self, "vertices", vs)


def _tri(t) -> GeodesicTriangle:
    return t if isinstance(t, GeodesicTriangle) else GeodesicTriangle(tuple(t))


def fubini_study_step(psi, dpsi) -> float:
    """``ds^2 = <dpsi|dpsi> - <dpsi|psi><psi|dpsi>`` for normalized ``psi``."""
    psi = kin.check_normalized(psi)
    dpsi = np.asarray(dpsi, dtype=complex).ravel()
    if dpsi.size != psi.size:
        raise DimensionMismatch("displacement and state differ in length")
    ov = np.vdot(psi, dpsi)
    return float(np.vdot(dpsi, dpsi).real - abs(ov) ** 2)


def pancharatnam_phase(a0, a1) -> float:
    """``arg <A0|A1>`` in ``(-pi, pi]``."""
    ov = np.vdot(_vec(a0), _vec(a1))
    if abs(ov) <= OVERLAP_FLOOR:
        raise DegenerateGeometry("orthogonal rays have no relative phase")
    return _wrap(float(np.angle(ov)))


def _wrap(x: float) -> float:
    """Map an angle to ``(-pi, pi]``."""
    y = -((-x + np.pi) % (2 * np.pi) - np.pi)
    return float(y)


def bargmann_invariant(tri) -> float:
    """Rephasing-invariant phase of a triangle traversed ``v0 -> v1 -> v2``.

    Returns ``arg(<v0|v2><v2|v1><v1|v0>)``, which equals ``-Omega/2`` with
    ``Omega`` the solid angle oriented along the same traversal.
    """
    v0, v1, v2 = (v.representative for v in _tri(tri).vertices)
    ovs = (np.vdot(v0, v2), np.vdot(v2, v1), np.vdot(v1, v0))
    if min(abs(o) for o in ovs) <= OVERLAP_FLOOR:
        raise DegenerateGeometry("triangle has an orthogonal pair of vertices")
    return _wrap(float(np.angle(ovs[0] * ovs[1] * ovs[2])))


def post_selection_phase(a0, a1, beta) -> float:
    """``arg(<A1|beta><beta|A0><A0|A1>)``: the triangle ``A0 -> beta -> A1``."""
    return bargmann_invariant((a0, beta, a1))


def bloch_vector(psi) -> np.ndarray:
    """``(<s1>, <s2>, <s3>)`` of a qubit ket."""
    psi = _vec(psi)
    if psi.size != 2:
        raise DimensionMismatch("Bloch vectors need a 2-level state")
    a, b = psi
    return np.array([2 * (np.conj(a) * b).real, 2 * (np.conj(a) * b).imag,
                     abs(a) ** 2 - abs(b) ** 2])


def solid_angle(tri) -> float:
    """Oriented solid angle of the Bloch-vector triangle, in ``(-2 pi, 2 pi]``.

    Uses ``tan(Omega/2) = r1.(r2 x r3) / (1 + r1.r2 + r2.r3 + r3.r1)``.
    """
    vs = _tri(tri).vertices
    if vs[0].dim != 2:
        raise DimensionMismatch("solid angle is defined for qubit triangles only")
    r1, r2, r3 = (bloch_vector(v) for v in vs)
    num = float(np.dot(r1, np.cross(r2, r3)))
    den = 1.0 + float(np.dot(r1, r2) + np.dot(r2, r3) + np.dot(r3, r1))
    omega = 2.0 * np.arctan2(num, den)
    omega = omega % (4 * np.pi)
    return float(omega - 4 * np.pi if omega > 2 * np.pi else omega)


class ReferenceProbability(NamedTuple):
    probability: float
    trace_value: float
    eta: float
    residual: float


def reference_probability(a0, a1, theta: float, phi: float, eta: float | None = None
                          ) -> ReferenceProbability:
    """Probability of finding a qubit pointer in ``|pi/2, 0>`` after the
    correlation ``|A_0>|v_0> cos(theta/2) + |A_1>|v_1> e^{i phi} sin(theta/2)``.

    Closed form ``1/2 + (1/2)|<A0|A1>| sin(theta) cos(phi - eta)`` with
    ``<A0|A1> = |<A0|A1>| e^{-i eta}``; the trace value is computed
    independently from the reduced pointer density matrix.
    """
    v0, v1 = _vec(a0), _vec(a1)
    ov = np.vdot(v0, v1)
    eta_true = float(-np.angle(ov)) if abs(ov) > 0 else 0.0
    if eta is None:
        eta = eta_true
    formula = 0.5 + 0.5 * abs(ov) * np.sin(theta) * np.cos(phi - eta)
    amps = (np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2))
    joint = np.kron(v0, [amps[0], 0]) + np.kron(v1, [0, amps[1]])
    m = joint.reshape(v0.size, 2)
    rho = m.T @ m.conj()
    ref = np.array([1, 1], dtype=complex) / np.sqrt(2)
    trace = float(np.vdot(ref, rho @ ref).real)
    return ReferenceProbability(float(formula), trace, _wrap(eta), abs(formula - trace))


class SpeedCheck(NamedTuple):
    lhs: float
    rhs: float


def speed_equals_uncertainty(h, psi0, dt: float = 1e-5) -> SpeedCheck:
    """Finite-difference projective speed against the energy spread."""
    h = kin.check_hermitian(h)
    psi0 = kin.check_normalized(psi0)
    step = expm(-1j * dt * h) @ psi0
    ds2 = max(fubini_study_step(psi0, step - psi0), 0.0)
    return SpeedCheck(float(np.sqrt(ds2) / dt), kin.expectation_and_uncertainty(h, psi0).delta)


# -- CP(1) chart quantities --------------------------------------------------

def projective_coordinates(psi) -> np.ndarray:
    """Chart coordinates ``xi^i = z^i / z^0``; fails when ``z^0 = 0``."""
    z = np.asarray(psi, dtype=complex).ravel()
    if abs(z[0]) < OVERLAP_FLOOR:
        raise DegenerateGeometry("first component vanishes: point outside the chart")
    return z[1:] / z[0]


def chart_point(xi) -> np.ndarray:
    """Normalized representative ``(1, xi) / sqrt(1 + |xi|^2)``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    return kin.normalize(np.concatenate([[1.0], xi]))


def cp1_metric(xi: complex) -> float:
    """Conformal factor: ``ds^2 = |dxi|^2 / (1 + |xi|^2)^2``."""
    return float(1.0 / (1.0 + abs(xi) ** 2) ** 2)


def cp1_connection(xi: complex, dxi: complex) -> float:
    """``Im(<psi|dpsi>)`` along ``dxi`` in the normalized chart section,
    ``Im(conj(xi) dxi) / (1 + |xi|^2)``."""
    return float((np.conj(xi) * dxi).imag / (1.0 + abs(xi) ** 2))
