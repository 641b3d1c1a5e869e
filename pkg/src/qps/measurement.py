"""Von Neumann coupling, weak values and pointer shifts.

The system-pointer interaction is ``exp(-i s O (x) R)`` with strength ``s``
(``epsilon`` in the weak regime, ``lambda`` for a strong pre-measurement).
Joint kets are flattened with the system index first, i.e.
``joint.reshape(n_sys, n_ptr)``.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm

from . import kinematics as kin
from . import oscillator as osc
from .exceptions import DimensionMismatch, OrthogonalPostSelection

POST_SELECTION_FLOOR = 1e-10
WEAK_EPSILON = 1e-3
STRONG_LAMBDA = 1.0
ASYMPTOTIC_EPS_LIMIT = 0.1

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class PrePostPair:
    """Pre-selected ``alpha``, post-selected ``beta`` and a Hermitian observable."""

    alpha: np.ndarray
    beta: np.ndarray
    observable: np.ndarray

    def __post_init__(self):
        a = kin.check_normalized(self.alpha)
        b = kin.check_normalized(self.beta)
        o = kin.check_hermitian(self.observable)
        if a.size != b.size or o.shape != (a.size, a.size):
            raise DimensionMismatch("pre/post states and observable must share a space")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "observable", o)


def qubit_state(theta: float, phi: float) -> np.ndarray:
    """``cos(theta/2)|u0> + e^{i phi} sin(theta/2)|u1>``."""
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=complex)


def qubit_pair_for(o_w: complex) -> PrePostPair:
    """A qubit pair with ``sigma_1`` weak value equal to ``o_w``.

    Pre-selection ``|theta, phi>`` with ``tan(theta/2) = |o_w|``,
    ``phi = arg(o_w)``, post-selection ``|u0>``.
    """
    o_w = complex(o_w)
    theta = 2.0 * np.arctan(abs(o_w))
    phi = float(np.angle(o_w)) if o_w != 0 else 0.0
    return PrePostPair(qubit_state(theta, phi), qubit_state(0.0, 0.0), SIGMA1)


def weak_value(pair: PrePostPair, floor: float = POST_SELECTION_FLOOR) -> complex:
    """``<beta|O|alpha> / <beta|alpha>``.

    Raises :class:`OrthogonalPostSelection` when ``|<beta|alpha>| <= floor``.
    """
    overlap = np.vdot(pair.beta, pair.alpha)
    if abs(overlap) <= floor:
        raise OrthogonalPostSelection(
            f"|<beta|alpha>| = {abs(overlap):.3g} is below {floor:g}; the weak value diverges"
        )
    return complex(np.vdot(pair.beta, pair.observable @ pair.alpha) / overlap)


@dataclass(frozen=True)
class PointerModel:
    """Pointer ket, Hermitian coupling generator ``R`` and coupling strength."""

    initial: np.ndarray
    coupling_generator: np.ndarray
    strength: float = WEAK_EPSILON
    space: object = None

    def __post_init__(self):
        psi = kin.check_normalized(self.initial)
        r = kin.check_hermitian(self.coupling_generator)
        if r.shape != (psi.size, psi.size):
            raise DimensionMismatch(f"generator {r.shape} vs pointer ket of length {psi.size}")
        if not np.isfinite(self.strength):
            raise ValueError("coupling strength must be finite")
        object.__setattr__(self, "initial", psi)
        object.__setattr__(self, "coupling_generator", r)

    @property
    def dim(self) -> int:
        return self.initial.size

    def with_strength(self, strength: float) -> "PointerModel":
        return PointerModel(self.initial, self.coupling_generator, strength, self.space)


def von_neumann_couple(system, observable, pointer: PointerModel, strength: float | None = None,
                       direct: bool = False) -> np.ndarray:
    """``exp(-i s O (x) R)(system (x) pointer.initial)``.

    By default the action is factorized over the eigenbasis of ``O``,
    ``sum_j |o_j><o_j|alpha> (x) exp(-i s o_j R)|phi>``; ``direct=True``
    exponentiates the full joint generator instead.
    """
    alpha = np.asarray(system, dtype=complex).ravel()
    o = kin.check_hermitian(observable)
    if o.shape != (alpha.size, alpha.size):
        raise DimensionMismatch(f"observable {o.shape} vs system ket of length {alpha.size}")
    s = pointer.strength if strength is None else float(strength)
    if not np.isfinite(s):
        raise ValueError("coupling strength must be finite")
    phi, r = pointer.initial, pointer.coupling_generator
    if direct:
        return expm(-1j * s * np.kron(o, r)) @ np.kron(alpha, phi)
    evals, evecs = np.linalg.eigh(o)
    rw, rv = np.linalg.eigh(r)
    phi_r = rv.conj().T @ phi
    joint = np.zeros((alpha.size, phi.size), dtype=complex)
    for oj, vj in zip(evals, evecs.T):
        branch = rv @ (np.exp(-1j * s * oj * rw) * phi_r)
        joint += np.vdot(vj, alpha) * np.outer(vj, branch)
    return joint.ravel()


class PostSelection(NamedTuple):
    pointer: np.ndarray
    success_probability: float


def post_select(joint, beta) -> PostSelection:
    """Contract the system index of ``joint`` with ``<beta|``."""
    beta = np.asarray(beta, dtype=complex).ravel()
    joint = np.asarray(joint, dtype=complex).ravel()
    if joint.size % beta.size:
        raise DimensionMismatch(f"joint length {joint.size} not divisible by {beta.size}")
    ptr = beta.conj() @ joint.reshape(beta.size, -1)
    return PostSelection(ptr, float(np.vdot(ptr, ptr).real))


def first_order_pointer(pair: PrePostPair, pointer: PointerModel) -> np.ndarray:
    """``<beta|alpha> (1 - i eps O_w R)|phi>``."""
    ov = np.vdot(pair.beta, pair.alpha)
    o_w = weak_value(pair)
    phi = pointer.initial
    return ov * (phi - 1j * pointer.strength * o_w * (pointer.coupling_generator @ phi))


@dataclass
class ShiftReport:
    """Predicted and simulated shift of one pointer observable."""

    predicted: complex
    simulated: complex
    epsilon: float
    order_residual: float

    def __post_init__(self):
        if not np.isfinite(self.order_residual):
            raise ValueError("order residual is not finite")

    def to_dict(self) -> dict:
        p, s = complex(self.predicted), complex(self.simulated)
        return {"predicted_re": p.real, "predicted_im": p.imag,
                "simulated_re": s.real, "simulated_im": s.imag,
                "epsilon": float(self.epsilon), "order_residual": float(self.order_residual)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _expect(op, psi) -> complex:
    return complex(np.vdot(psi, op @ psi))


def _warn_eps(eps: float) -> None:
    if abs(eps) > ASYMPTOTIC_EPS_LIMIT:
        warnings.warn(f"epsilon={eps:g} exceeds {ASYMPTOTIC_EPS_LIMIT}: first-order shift "
                      "formulas are not asymptotically valid", RuntimeWarning, stacklevel=3)


def jozsa_prediction(m, pointer: PointerModel, o_w: complex) -> complex:
    """``eps[Im(O_w)(<{M,R}> - 2<R><M>) - i Re(O_w) <[M,R]>]`` on the initial pointer."""
    m = np.asarray(m, dtype=complex)
    r, phi, eps = pointer.coupling_generator, pointer.initial, pointer.strength
    if m.shape != r.shape:
        raise DimensionMismatch("M and R must act on the pointer space")
    anti = _expect(m @ r + r @ m, phi)
    comm = _expect(m @ r - r @ m, phi)
    o_w = complex(o_w)
    return eps * (o_w.imag * (anti - 2 * _expect(r, phi) * _expect(m, phi)) - 1j * o_w.real * comm)


def simulate_shift(m, pointer: PointerModel, pair: PrePostPair) -> complex:
    """``<M>_F - <M>_I`` from coupling, post-selection and renormalization."""
    joint = von_neumann_couple(pair.alpha, pair.observable, pointer)
    ps = post_select(joint, pair.beta)
    if ps.success_probability <= 0:
        raise OrthogonalPostSelection("post-selection annihilated the pointer")
    final = ps.pointer / np.sqrt(ps.success_probability)
    m = np.asarray(m, dtype=complex)
    return _expect(m, final) - _expect(m, pointer.initial)


def jozsa_shift(m, pointer: PointerModel, o_w: complex | None = None,
                pair: PrePostPair | None = None) -> ShiftReport:
    """General first-order shift of a pointer observable ``M``.

    The simulation needs a concrete system; if only ``o_w`` is given the
    qubit pair of :func:`qubit_pair_for` realizes it.
    """
    if pair is None:
        if o_w is None:
            raise ValueError("give o_w, a pair, or both")
        pair = qubit_pair_for(o_w)
    if o_w is None:
        o_w = weak_value(pair)
    _warn_eps(pointer.strength)
    pred = jozsa_prediction(m, pointer, o_w)
    sim = simulate_shift(m, pointer, pair)
    return ShiftReport(pred, sim, pointer.strength, abs(pred - sim))


class CoherentShift(NamedTuple):
    delta_a: ShiftReport
    delta_q: ShiftReport
    delta_p: ShiftReport


def coherent_pointer_shift(z, o_w: complex, eps: float,
                           cutoff: int = osc.DEFAULT_CUTOFF) -> CoherentShift:
    """Shifts of a coherent pointer coupled through the number operator.

    First order gives ``Delta a = -i eps z O_w``; for ``arg z = pi/2`` this is
    ``Delta Q = eps sqrt(2)|z| Re(O_w)`` and ``Delta P = eps sqrt(2)|z| Im(O_w)``.
    The simulated values come from the qubit realization of ``o_w``.
    """
    fock = osc.FockSpace(cutoff)
    z = osc.check_faithful(fock, z)
    _warn_eps(eps)
    lad = osc.ladder_ops(fock)
    q_op, p_op = osc.quadratures(fock)
    ptr = PointerModel(osc.coherent_state(fock, z), lad.n_op, eps, fock)
    pair = qubit_pair_for(o_w)
    da = -1j * eps * z * complex(o_w)
    pred = {"a": da, "q": np.sqrt(2) * da.real, "p": np.sqrt(2) * da.imag}
    sim = {"a": simulate_shift(lad.a, ptr, pair),
           "q": simulate_shift(q_op, ptr, pair).real,
           "p": simulate_shift(p_op, ptr, pair).real}
    reps = {k: ShiftReport(pred[k], sim[k], eps, abs(pred[k] - sim[k])) for k in pred}
    return CoherentShift(reps["a"], reps["q"], reps["p"])


def translation_pointer(cutoff: int = 128, strength: float = STRONG_LAMBDA) -> PointerModel:
    """Vacuum Gaussian pointer with generator ``P`` (so ``exp(-i s P)`` translates ``Q``)."""
    fock = osc.FockSpace(cutoff)
    _, p_op = osc.quadratures(fock)
    return PointerModel(osc.vacuum(fock), p_op, strength, fock)


class EnsembleShift(NamedTuple):
    position: float
    predicted: float
    residual: float


def ensemble_position_shift(system, observable, pointer: PointerModel,
                            readout=None) -> EnsembleShift:
    """Pointer position averaged over the unread system outcomes.

    Builds ``rho = sum_j |alpha_j|^2 T_j |phi><phi| T_j^dag`` with
    ``T_j = exp(-i lambda o_j R)`` and returns ``tr(rho Q)`` alongside the
    prediction ``<Q>_phi + lambda <O>_alpha``.
    """
    alpha = kin.check_normalized(system)
    o = kin.check_hermitian(observable)
    if o.shape != (alpha.size, alpha.size):
        raise DimensionMismatch("observable does not act on the system ket")
    if readout is None:
        readout, _ = osc.quadratures(pointer.dim)
    readout = np.asarray(readout, dtype=complex)
    if readout.shape != (pointer.dim, pointer.dim):
        raise DimensionMismatch("readout does not act on the pointer space")
    lam, r, phi = pointer.strength, pointer.coupling_generator, pointer.initial
    evals, evecs = np.linalg.eigh(o)
    rho = np.zeros((pointer.dim, pointer.dim), dtype=complex)
    for oj, vj in zip(evals, evecs.T):
        w = abs(np.vdot(vj, alpha)) ** 2
        if w == 0:
            continue
        branch = expm(-1j * lam * oj * r) @ phi
        rho += w * np.outer(branch, branch.conj())
    pos = float(np.trace(rho @ readout).real)
    pred = float(_expect(readout, phi).real + lam * _expect(o, alpha).real)
    return EnsembleShift(pos, pred, abs(pos - pred))


# -- deterministic / completely uncertain operators -------------------------

class DsoCuo(NamedTuple):
    A: np.ndarray
    B: np.ndarray


def _projectors(psi):
    psi = kin.check_normalized(psi)
    pi = np.outer(psi, psi.conj())
    return pi, np.eye(psi.size) - pi


def dso_cuo_decompose(c, psi) -> DsoCuo:
    """Split ``C`` into a part with ``psi`` as eigenvector and a part mapping
    ``psi`` into its orthogonal complement."""
    c = kin.check_hermitian(c)
    pi, perp = _projectors(psi)
    if c.shape != pi.shape:
        raise DimensionMismatch("operator and state dimensions differ")
    a = pi @ c @ pi + perp @ c @ perp
    return DsoCuo(a, c - a)


class Fluctuation(NamedTuple):
    mean: float
    delta: float
    residual: float


def fluctuation_theorem_check(a, psi, delta_floor: float = 1e-14) -> Fluctuation:
    """Check ``A|psi> = <A>|psi> + dA |psi_perp>``.

    ``dA`` comes from the variance and ``|psi_perp>`` is the normalized
    component of ``A|psi>`` orthogonal to ``psi``; the residual therefore
    tests that this component has norm ``dA``.
    """
    a = kin.check_hermitian(a)
    psi = kin.check_normalized(psi)
    mom = kin.expectation_and_uncertainty(a, psi)
    mean = mom.mean.real
    a_psi = a @ psi
    perp = a_psi - np.vdot(psi, a_psi) * psi
    if mom.delta < delta_floor:
        res = np.linalg.norm(a_psi - mean * psi)
    else:
        nperp = np.linalg.norm(perp)
        unit = perp / nperp if nperp > 0 else np.zeros_like(perp)
        res = np.linalg.norm(a_psi - mean * psi - mom.delta * unit)
    return Fluctuation(float(mean), mom.delta, float(res))


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Real basis of ``n x n`` Hermitian matrices (``n**2`` elements)."""
    out = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1
        out.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = e[j, i] = 1
            out.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[i, j], e[j, i] = -1j, 1j
            out.append(e)
    return out


def _real_rank(images: Sequence[np.ndarray], tol: float = 1e-10) -> int:
    mat = np.array([np.concatenate([x.ravel().real, x.ravel().imag]) for x in images])
    return int(np.linalg.matrix_rank(mat, tol=tol))


def dso_dimension(psi) -> int:
    """Real dimension of ``{H Hermitian : H psi parallel to psi}``."""
    _, perp = _projectors(psi)
    psi = np.asarray(psi, dtype=complex)
    basis = hermitian_basis(psi.size)
    return len(basis) - _real_rank([perp @ h @ psi for h in basis])


def cuo_dimension(psi) -> int:
    """Real dimension of the off-diagonal block ``Pi H Pi_perp + Pi_perp H Pi``."""
    pi, perp = _projectors(psi)
    basis = hermitian_basis(pi.shape[0])
    return _real_rank([pi @ h @ perp + perp @ h @ pi for h in basis])


# -- position-shift diagnostic with the variance-rate term -------------------

def pointer_hamiltonian(cutoff: int, mass: float = 1.0, potential: Sequence[float] = (0.0, 0.0, 0.5)):
    """``P^2/(2m) + sum_k c_k Q^k`` on a truncated Fock space."""
    q_op, p_op = osc.quadratures(cutoff)
    h = p_op @ p_op / (2.0 * mass)
    qk = np.eye(cutoff, dtype=complex)
    for c in potential:
        h = h + c * qk
        qk = qk @ q_op
    return h


def variance_rate(psi, q_op, h) -> float:
    """``d/dt (dQ)^2 = i<[H, Q^2]> - 2<Q> i<[H, Q]>`` by Ehrenfest."""
    psi = kin.check_normalized(psi)
    q2 = q_op @ q_op
    d_q2 = 1j * _expect(h @ q2 - q2 @ h, psi)
    d_q = 1j * _expect(h @ q_op - q_op @ h, psi)
    return float((d_q2 - 2 * _expect(q_op, psi) * d_q).real)


def weak_position_shift(psi, o_w: complex, eps: float, mass: float = 1.0,
                        potential: Sequence[float] = (0.0, 0.0, 0.5)) -> float:
    """``eps [Re O_w + m Im O_w d/dt (dQ)^2]`` for a ``P``-coupled pointer."""
    psi = np.asarray(psi, dtype=complex)
    d = psi.size
    q_op, _ = osc.quadratures(d)
    rate = variance_rate(psi, q_op, pointer_hamiltonian(d, mass, potential))
    o_w = complex(o_w)
    return float(eps * (o_w.real + mass * o_w.imag * rate))
