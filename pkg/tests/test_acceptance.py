"""Acceptance criteria 1-13.  Each test prints one PASS/FAIL line to the terminal."""
import math
import time

import numpy as np
import pytest

from qps import experiments as ex
from qps import geometry as geo
from qps import kinematics as kin
from qps import measurement as me
from qps import modular as mo
from qps import weyl_wigner as ww

pytestmark = pytest.mark.acceptance

EPSILONS = (1e-2, 1e-3, 1e-4)
COPRIME_PAIRS = [(2, 3), (3, 4), (3, 5), (4, 5), (2, 5), (5, 6), (5, 7), (7, 8), (2, 7), (3, 7),
                 (4, 7), (6, 7), (8, 9), (2, 9), (4, 9), (5, 9), (7, 9), (3, 8), (5, 8), (9, 10)]


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail
    return emit


def rand_herm(n, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def rand_ket(n, rng):
    return kin.normalize(rng.normal(size=n) + 1j * rng.normal(size=n))


def test_criterion_01_cat_detector_probabilities(report):
    start = time.perf_counter()
    p0 = ex.cat_click_probability(ex.CatConfig(10.0, 0.0, 256), ex.DetectorArray.default(), np.pi / 2)
    ppi = ex.cat_click_probability(ex.CatConfig(10.0, np.pi, 256), ex.DetectorArray.default(), np.pi / 2)
    elapsed = time.perf_counter() - start
    ok = abs(p0 - 0.93) <= 0.02 and abs(ppi - 0.35) <= 0.02 and elapsed < 10.0
    report(1, ok, f"P(alpha=0)={p0:.4f} (0.93+-0.02), P(alpha=pi)={ppi:.4f} (0.35+-0.02), "
                  f"both runs {elapsed:.2f}s (<10s) at D=256")


def test_criterion_02_branch_overlap(report):
    analytic, truncated = ex.branch_overlap(ex.CatConfig(10.0, 0.0, 256))
    ok = abs(analytic - math.exp(-50)) <= 1e-12 * math.exp(-50) \
        and abs(analytic - 1.93e-22) <= 0.01 * 1.93e-22 and truncated < 1e-20
    report(2, ok, f"analytic={analytic:.5e} (1.93e-22 within 1%), truncated D=256 {truncated:.5e} (<1e-20)")


def test_criterion_03_qubit_weak_value(report):
    worst = 0.0
    u0 = np.array([1, 0], dtype=complex)
    for theta in np.linspace(0.05, np.pi - 0.05, 20):
        for phi in np.linspace(-np.pi, np.pi, 20):
            pair = me.PrePostPair(me.qubit_state(theta, phi), u0, me.SIGMA1)
            worst = max(worst, abs(me.weak_value(pair) - math.tan(theta / 2) * np.exp(1j * phi)))
    report(3, worst < 1e-12, f"max |O_w - tan(theta/2)e^(i phi)| = {worst:.2e} over 20x20 grid (<1e-12)")


def test_criterion_04_coherent_pointer_shifts(report):
    z = 2j  # |z| = 2 with arg z = pi/2
    worst, failing = 0.0, []
    for o_w in (1.0, 1j, np.exp(1j * np.pi / 4)):
        for eps in EPSILONS:
            rep = me.coherent_pointer_shift(z, o_w, eps, cutoff=64)
            ratio = max(rep.delta_q.order_residual, rep.delta_p.order_residual) / eps**2
            worst = max(worst, ratio)
            if ratio > 5.0:
                failing.append(f"O_w={complex(o_w):.3g},eps={eps:g}:{ratio:.2f}")
    detail = f"max residual/eps^2 = {worst:.3f} (bound 5) at |z|=2, D=64"
    if failing:
        detail += "; over bound: " + ", ".join(failing)
    report(4, not failing, detail)


def test_criterion_05_jozsa_general_shift(report):
    rng = np.random.default_rng(2024)
    spreads = []
    for _ in range(10):
        dim = int(rng.integers(3, 9))
        m, r, phi = rand_herm(dim, rng), rand_herm(dim, rng), rand_ket(dim, rng)
        pair = me.PrePostPair(rand_ket(2, rng), rand_ket(2, rng), rand_herm(2, rng))
        ratios = [me.jozsa_shift(m, me.PointerModel(phi, r, eps), pair=pair).order_residual / eps**2
                  for eps in EPSILONS]
        spreads.append((max(ratios), max(ratios) / min(ratios)))
    worst_ratio = max(s[0] for s in spreads)
    worst_spread = max(s[1] for s in spreads)
    ok = worst_spread < 2.0 and np.isfinite(worst_ratio)
    report(5, ok, f"10 configs: residual/eps^2 <= {worst_ratio:.3g}, max/min across decades {worst_spread:.3f} (<2)")


def test_criterion_06_finite_kinematics(report):
    worst = 0.0
    for n in range(2, 33):
        v, u, f = kin.position_translation_op(n), kin.momentum_phase_op(n), kin.finite_fourier(n)
        eye = np.eye(n)
        worst = max(worst, kin.max_norm(np.linalg.matrix_power(v, n) - eye),
                    kin.max_norm(np.linalg.matrix_power(u, n) - eye),
                    kin.max_norm(np.linalg.matrix_power(f, 4) - eye))
        for j in range(n):
            for k in range(n):
                worst = max(worst, kin.weyl_residual(n, j, k))
    report(6, worst < 1e-12, f"max residual over N=2..32 (V^N, U^N, F^4, all Weyl pairs) = {worst:.2e} (<1e-12)")


def test_criterion_07_ww_identities(report):
    worst, spread = 0.0, 0.0
    for n in (3, 5, 7):
        basis = ww.WWBasis(n)
        f2 = kin.finite_fourier(n) @ kin.finite_fourier(n)
        worst = max(worst, kin.max_norm(basis[0, 0] - 2 * f2))
        for j in range(n):
            for k in range(n):
                d = basis[j, k]
                worst = max(worst, kin.max_norm(d - d.conj().T), kin.max_norm(d @ d - 4 * np.eye(n)),
                            kin.max_norm(f2 @ d @ f2 - basis[-j, -k]))
        g = ww.gram_matrix(basis)
        spread = max(spread, float(np.ptp(np.diag(g).real)), kin.max_norm(g - np.diag(np.diag(g))))
    ok = worst < 1e-12 and spread < 1e-12
    report(7, ok, f"identity residual {worst:.2e}, orthogonality spread {spread:.2e} at N=3,5,7 (<1e-12)")


def test_criterion_08_classical_limit(report):
    grid = np.linspace(-3, 3, 13)
    q, p = ww.QuadraticObservable(c_q=1), ww.QuadraticObservable(c_p=1)
    pairs = [(q, p), (ww.QuadraticObservable(c_qq=0.5, c_pp=0.5), q),
             (ww.QuadraticObservable(c_qp=1), ww.QuadraticObservable(c_qq=1))]
    worst = max(ww.classical_limit_check(f, g, grid, grid, cutoff=64).max_diff for f, g in pairs)
    report(8, worst < 1e-5, f"max |Moyal - Poisson| = {worst:.2e} on |q|,|p|<=3 (<1e-5)")


def test_criterion_09_geometric_phase(report):
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(200):
        tri = [rand_ket(2, rng) for _ in range(3)]
        d = geo.bargmann_invariant(tri) + geo.solid_angle(tri) / 2
        worst = max(worst, abs((d + np.pi) % (2 * np.pi) - np.pi))
    report(9, worst < 1e-9, f"max |Theta + Omega/2| mod 2pi = {worst:.2e} over 200 triangles (<1e-9)")


def test_criterion_10_dso_cuo_dimensions(report):
    rng = np.random.default_rng(5)
    rows = []
    ok = True
    for n in range(2, 7):
        psi = rand_ket(n, rng)
        d, c = me.dso_dimension(psi), me.cuo_dimension(psi)
        ok = ok and d == (n - 1) ** 2 + 1 and c == 2 * (n - 1)
        rows.append(f"n={n}:{d}/{c}")
    report(10, ok, "DSO/CUO dims " + " ".join(rows))


def test_criterion_11_modular_qubit(report):
    worst = 0.0
    for n in (8, 16, 32, 64):
        worst = max(worst, *mo.pauli_residuals(mo.RingSpace(n)).values())
    report(11, worst < 1e-12, f"max Pauli/leakage residual on slit span, N=8..64: {worst:.2e} (<1e-12)")


def test_criterion_12_crt_single_line(report):
    worst, lengths_ok = 0.0, True
    for na, nb in COPRIME_PAIRS:
        rep = mo.crt_relabel_check(mo.CrtFactorization(na, nb))
        worst = max(worst, rep.residual)
        lengths_ok = lengths_ok and rep.orbit_length == na * nb
    bad = mo.crt_relabel_check((2, 2))
    two_lines = (not bad.coprime and len(bad.orbits) == 2 and all(len(o) == 2 for o in bad.orbits))
    ok = worst < 1e-12 and lengths_ok and two_lines
    report(12, ok, f"20 coprime pairs: residual {worst:.2e}, full orbits {lengths_ok}; "
                   f"(2,2) -> {len(bad.orbits)} parallel lines of length {bad.orbit_length}")


def test_criterion_13_speed_uncertainty(report):
    rng = np.random.default_rng(13)
    h, psi = rand_herm(4, rng), rand_ket(4, rng)
    dts = (1e-2, 5e-3, 2.5e-3, 1.25e-3)
    res = []
    for dt in dts:
        chk = geo.speed_equals_uncertainty(h, psi, dt)
        res.append(abs(chk.lhs - chk.rhs))
    ratios = [a / b for a, b in zip(res, res[1:])]
    ok = all(r >= 2.0 for r in ratios) and res[-1] < 1e-3
    report(13, ok, "residuals " + ", ".join(f"{r:.2e}" for r in res)
           + " under dt halving; ratios " + ", ".join(f"{r:.2f}" for r in ratios) + " (>=2)")
