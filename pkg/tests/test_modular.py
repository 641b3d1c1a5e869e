import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qps import kinematics as kin
from qps import modular as mo
from qps.exceptions import CoprimalityError, DimensionMismatch

PAULI = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
COPRIME_PAIRS = [(2, 3), (3, 4), (3, 5), (4, 5), (2, 5), (5, 6), (5, 7), (7, 8), (2, 7), (3, 7),
                 (4, 7), (6, 7), (8, 9), (2, 9), (4, 9), (5, 9), (7, 9), (3, 8), (5, 8), (9, 10)]


def test_ring_geometry():
    r = mo.RingSpace(8, 1.0)
    assert r.circumference == 2.0 and r.site_spacing == 0.25
    np.testing.assert_allclose(r.positions, np.arange(-4, 4) * 0.25)
    plus, minus = r.slit_indices
    assert r.positions[plus] == 0.5 and r.positions[minus] == -0.5
    with pytest.raises(ValueError):
        mo.RingSpace(6)
    with pytest.raises(ValueError):
        mo.RingSpace(8, -1.0)


def test_half_period_shift_swaps_slits():
    r = mo.RingSpace(16, 2.0)
    v = mo.ring_translation(r, r.sites // 2)
    plus, minus = r.slit_indices
    np.testing.assert_array_equal(v @ r.ket(plus), r.ket(minus))
    np.testing.assert_array_equal(v @ r.ket(minus), r.ket(plus))
    assert kin.max_norm(v @ v - np.eye(16)) == 0


def test_spin_blocks_are_pauli_n8():
    r = mo.RingSpace(8)
    for s, ref in zip(mo.modular_spin_ops(r), PAULI):
        np.testing.assert_allclose(mo.slit_block(r, s), ref, atol=1e-12)


def test_sigma3_slit_eigenvalues():
    r = mo.RingSpace(32, 1.5)
    s3 = mo.modular_spin_ops(r).sigma3
    plus, minus = r.slit_indices
    np.testing.assert_allclose(s3 @ r.ket(plus), r.ket(plus), atol=1e-12)
    np.testing.assert_allclose(s3 @ r.ket(minus), -r.ket(minus), atol=1e-12)


@pytest.mark.parametrize("n", [8, 16, 32, 64])
def test_pauli_algebra_on_slit_span(n):
    res = mo.pauli_residuals(mo.RingSpace(n))
    assert res["commutator"] < 1e-12
    assert res["anticommutator"] < 1e-12
    assert res["leakage"] < 1e-12


def test_open_line_leaks():
    assert mo.open_line_leakage(mo.RingSpace(16)) == pytest.approx(1.0)


def test_direct_sum_vs_tensor_report():
    rep = mo.direct_sum_vs_tensor(mo.RingSpace(16))
    assert rep["direct_sum"] == {"open_line_leakage": 1.0, "ring_leakage": 0.0, "pauli_commutator_residual": 0.0}
    assert rep["tensor_product"]["orbit_length"] == 6
    assert rep["tensor_product"]["conjugation_residual"] == 0.0


def test_lattice_validation():
    with pytest.raises(ValueError):
        mo.SlitLattice(3, 1.0, {0: 0.5})
    with pytest.raises(ValueError):
        mo.SlitLattice(0, 1.0)
    with pytest.raises(ValueError, match="resolved"):
        mo.nslit_diffraction(mo.SlitLattice(3, 1.0, {5: 1.0}), 24)
    with pytest.raises(ValueError):
        mo.nslit_diffraction(mo.SlitLattice(5, 1.0), 24)


def test_single_coefficient_leaves_zero_momentum():
    d = mo.nslit_diffraction(mo.SlitLattice(3, 1.0), 24)
    np.testing.assert_allclose(d.state, kin.momentum_ket(24, 0), atol=1e-15)
    assert d.v_residual < 1e-12
    # the period clock moves |p(0)> to an orthogonal momentum ket
    assert d.u_residual == pytest.approx(1 / math.sqrt(24), abs=1e-12)


def test_two_tooth_comb():
    lat = mo.SlitLattice(3, 1.0, {1: 2**-0.5, -1: 2**-0.5})
    d = mo.nslit_diffraction(lat, 24)
    assert list(mo.comb_support(d.state, 3)) == [3, 21]
    assert d.v_eigenvalue == pytest.approx(1.0)
    assert d.v_residual < 1e-12
    # independent check of the period clock: the two teeth move to 6 and 0
    f = kin.finite_fourier(24)
    comb = (f[:, 3] + f[:, 21]) / math.sqrt(2)
    img = kin.clock_power(24, 3) @ comb
    lam = np.vdot(comb, img)
    assert d.u_residual == pytest.approx(kin.max_norm(img - lam * comb), abs=1e-14)
    assert d.u_residual == pytest.approx(1 / (2 * math.sqrt(3)), abs=1e-12)


def test_full_harmonic_cycle_is_joint_eigenvector():
    lat = mo.SlitLattice(3, 1.0, {h: 1 / math.sqrt(8) for h in range(-4, 4)})
    d = mo.nslit_diffraction(lat, 24)
    assert d.v_residual < 1e-12 and d.u_residual < 1e-12
    assert abs(d.u_eigenvalue) == pytest.approx(1.0)


def test_comb_spacing_converges_quadratically():
    lat = mo.SlitLattice(3, 1.0, {1: 2**-0.5, -1: 2**-0.5})
    errs = [mo.comb_spacing_error(lat, n) for n in (24, 48, 96, 192)]
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(4.0, rel=0.05)


def test_slit_coefficients_narrow_limit_uniform():
    c = mo.slit_coefficients(1.0, 0.01, 3)
    vals = np.array([abs(c[h]) for h in range(-3, 4)])
    assert np.sum(vals**2) == pytest.approx(1.0)
    assert np.ptp(vals) < 0.01
    # analytic Gaussian-comb coefficients exp(-2 pi^2 n^2 w^2) up to normalization
    w = 0.1
    c = mo.slit_coefficients(1.0, w, 2)
    ref = np.array([math.exp(-2 * math.pi**2 * h * h * w * w) for h in range(-2, 3)])
    np.testing.assert_allclose([c[h].real for h in range(-2, 3)], ref / np.linalg.norm(ref), atol=1e-10)


def test_eom_constant_potential():
    res = mo.nonlocal_eom_identity(mo.RingSpace(16), lambda x: np.full_like(x, 3.0))
    assert res.residual < 1e-12 and res.commutator_norm < 1e-12


def test_eom_period_l_potential_conserves():
    res = mo.nonlocal_eom_identity(mo.RingSpace(16, 1.0), lambda x: np.cos(2 * np.pi * x))
    assert res.residual < 1e-12
    assert res.commutator_norm < 1e-12


def test_eom_period_2l_potential_does_not_conserve():
    res = mo.nonlocal_eom_identity(mo.RingSpace(16, 1.0), lambda x: np.cos(np.pi * x))
    assert res.residual < 1e-12
    assert res.commutator_norm == pytest.approx(2.0)


def test_eom_rejects_aperiodic_and_bad_arrays():
    with pytest.raises(ValueError, match="periodic"):
        mo.nonlocal_eom_identity(mo.RingSpace(16), lambda x: x**2)
    with pytest.raises(DimensionMismatch):
        mo.nonlocal_eom_identity(mo.RingSpace(16), np.zeros(5))
    arr = np.random.default_rng(0).normal(size=16)
    assert mo.nonlocal_eom_identity(mo.RingSpace(16), arr).residual < 1e-12


def test_crt_factorization():
    f = mo.CrtFactorization(2, 3)
    assert f.dim == 6
    assert [f.relabel(j) for j in range(6)] == [(0, 0), (1, 1), (0, 2), (1, 0), (0, 1), (1, 2)]
    p = f.permutation()
    np.testing.assert_array_equal(p @ p.T, np.eye(6))
    with pytest.raises(CoprimalityError):
        mo.CrtFactorization(2, 4)


@pytest.mark.parametrize("pair", COPRIME_PAIRS)
def test_crt_single_line_cover(pair):
    rep = mo.crt_relabel_check(mo.CrtFactorization(*pair))
    assert rep.coprime
    assert rep.residual < 1e-12
    assert rep.orbit_length == pair[0] * pair[1]
    assert len(rep.orbits) == 1


def test_crt_three_five():
    rep = mo.crt_relabel_check((3, 5))
    assert rep.residual == 0.0 and rep.orbit_length == 15


def test_crt_two_two_parallel_lines():
    rep = mo.crt_relabel_check((2, 2))
    assert not rep.coprime
    assert rep.residual == float("inf")
    assert rep.orbit_length == 2
    assert rep.orbits == [[(0, 0), (1, 1)], [(0, 1), (1, 0)]]


def test_orbit_count_is_gcd():
    for na, nb in [(4, 6), (6, 9), (3, 3)]:
        orbits = mo.product_orbits(na, nb)
        assert len(orbits) == math.gcd(na, nb)
        assert {len(o) for o in orbits} == {na * nb // math.gcd(na, nb)}


def test_az_state_figure_cell():
    f = mo.CrtFactorization(2, 3)
    az = mo.az_state(f, 1, 2)
    assert az.v_residual < 1e-12 and az.u_residual < 1e-12
    rows = mo.az_cell_csv(f, az.state).splitlines()
    assert rows[0] == "x_mod,p_mod,weight"
    weights = {tuple(map(int, r.split(",")[:2])): float(r.split(",")[2]) for r in rows[1:]}
    assert weights[(2, 1)] == pytest.approx(1.0)
    assert sum(weights.values()) == pytest.approx(1.0)


def test_az_state_trivial_and_random():
    f = mo.CrtFactorization(3, 5)
    az = mo.az_state(f, 0, 0)
    np.testing.assert_allclose(az.state, np.kron(np.ones(3) / math.sqrt(3), kin.position_ket(5, 0)))
    rng = np.random.default_rng(2)
    for j, s in zip(rng.integers(0, 3, 5), rng.integers(0, 5, 5)):
        az = mo.az_state(f, int(j), int(s))
        assert az.v_residual < 1e-12 and az.u_residual < 1e-12
    with pytest.raises(IndexError):
        mo.az_state(f, 3, 0)


@pytest.mark.parametrize("fact", [(2, 3), (2, 2), (3, 5)])
def test_slit_measurement(fact):
    m = mo.slit_projective_measurement(fact)
    assert m.expansion_residual < 1e-12
    assert np.linalg.norm(m.state) == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(2, 12))
def test_crt_property(na, nb):
    rep = mo.crt_relabel_check((na, nb))
    assert rep.orbit_length == na * nb // math.gcd(na, nb)
    assert rep.coprime == (math.gcd(na, nb) == 1)
    if rep.coprime:
        assert rep.residual < 1e-12
