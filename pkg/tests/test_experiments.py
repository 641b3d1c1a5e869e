import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from qps import experiments as ex
from qps.exceptions import TruncationError


def quad_clicks(L, alpha, detectors):
    # closed-form fringe pattern, renormalized so small separations stay exact
    f = ex.analytic_density(L, alpha)
    total = quad(f, -np.inf, np.inf, epsabs=1e-13)[0]
    return sum(quad(f, lo, hi, epsabs=1e-13)[0] for lo, hi in detectors.windows) / total


@pytest.fixture(scope="module")
def rotated_cats():
    out = {}
    for alpha in (0.0, np.pi):
        cfg = ex.CatConfig(10.0, alpha, 256)
        out[alpha] = (cfg, ex.rotate_cat(ex.cat_state(cfg), np.pi / 2))
    return out


# -- result container ---------------------------------------------------------

def test_result_json_round_trip(tmp_path):
    res = ex.ExperimentResult("demo", {"n": np.int64(3), "z": 1 + 2j})
    res.add("x", np.float64(0.5), 1e-3)
    res.series["grid"] = np.arange(3)
    path = res.write(tmp_path, "20260101T000000Z")
    assert path.endswith("demo_20260101T000000Z.json")
    doc = json.loads(open(path).read())
    assert doc["inputs"] == {"n": 3, "z": {"re": 1.0, "im": 2.0}}
    assert doc["scalars"]["x"] == {"value": 0.5, "tolerance": 0.001}
    assert doc["series"]["grid"] == [0, 1, 2]
    assert doc["timestamp"] == "20260101T000000Z"
    assert res.value("x") == 0.5


def test_json_is_deterministic():
    a = ex.ExperimentResult("d", {"b": 1, "a": 2})
    a.add("k", 1.0, 0.0)
    assert a.to_json("T") == a.to_json("T")
    assert list(json.loads(a.to_json("T"))) == sorted(json.loads(a.to_json("T")))


def test_timestamp_format():
    ts = ex.utc_timestamp()
    assert len(ts) == 16 and ts.endswith("Z") and ts[8] == "T"


# -- phase game ---------------------------------------------------------------

def test_phase_game_zero_phase_is_deterministic():
    res = ex.qubit_phase_game([0.0], 1000, 1)
    row = res.series["rounds"][0]
    assert row["deterministic"]
    assert row["sigma1_mean"] == 1.0 and row["first_outcome"] == 1


def test_phase_game_pi_always_minus():
    row = ex.qubit_phase_game([np.pi], 500, 4).series["rounds"][0]
    assert row["sigma1_mean"] == -1.0 and row["deterministic"]


def test_phase_game_estimates_within_three_sigma():
    res = ex.qubit_phase_game([np.pi / 3], 10**6, 42)
    assert res.value("max_abs_cos_error") < res.scalars["max_abs_cos_error"]["tolerance"]
    assert res.series["rounds"][0]["alpha_estimate"] == pytest.approx(np.pi / 3, abs=0.01)


def test_phase_game_reproducible_and_validated():
    a = ex.qubit_phase_game([0.3, 1.2], 2000, 9).to_json("T")
    b = ex.qubit_phase_game([0.3, 1.2], 2000, 9).to_json("T")
    assert a == b
    with pytest.raises(ValueError):
        ex.qubit_phase_game([], 10, 0)
    with pytest.raises(ValueError):
        ex.qubit_phase_game([0.1], 0, 0)


# -- cat state -----------------------------------------------------------------

def test_cat_config_guards():
    assert ex.CatConfig().branch_amplitude == pytest.approx(10 / (2 * math.sqrt(2)))
    with pytest.raises(TruncationError):
        ex.CatConfig(10.0, 0.0, 50)
    with pytest.raises(ValueError):
        ex.CatConfig(-1.0)


def test_cat_state_normalized_and_branch_positions():
    cat = ex.cat_state(ex.CatConfig(10.0, 0.0, 256))
    assert np.linalg.norm(cat.state) == pytest.approx(1.0)
    x = np.array([-5.0, 5.0])
    dens = ex.position_density(cat.branches[0], x)
    assert dens[0] > 1e3 * dens[1]


def test_branch_overlap_values():
    analytic, truncated = ex.branch_overlap(ex.CatConfig(10.0, 0.0, 256))
    assert analytic == pytest.approx(math.exp(-50), rel=1e-12)
    assert analytic == pytest.approx(1.93e-22, rel=0.01)
    assert truncated < 1e-20
    assert truncated == pytest.approx(analytic, rel=1e-3)


def test_rotation_matches_analytic_target(rotated_cats):
    cfg, psi = rotated_cats[0.0]
    target = ex.rotated_cat_target(cfg, np.pi / 2)
    assert abs(np.vdot(target, psi)) ** 2 == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("alpha", [0.0, np.pi])
def test_fock_density_matches_closed_form(rotated_cats, alpha):
    cfg, psi = rotated_cats[alpha]
    x = np.linspace(-3, 3, 121)
    np.testing.assert_allclose(ex.position_density(psi, x, cfg), ex.analytic_density(10.0, alpha)(x), atol=1e-9)


def test_density_grid_window_enforced(rotated_cats):
    cfg, psi = rotated_cats[0.0]
    with pytest.raises(ValueError, match="faithful"):
        ex.position_density(psi, [20.0], cfg)
    x, d = ex.density_grid(psi, -1, 1, 0.5, cfg)
    np.testing.assert_allclose(x, [-1, -0.5, 0, 0.5, 1])
    text = ex.series_csv(x, d)
    assert text.splitlines()[0] == "x,density" and len(text.splitlines()) == 6


def test_detector_array():
    det = ex.DetectorArray.default()
    assert len(det.centers) == 7
    assert det.centers[3] == 0.0 and det.centers[4] == pytest.approx(np.pi / 5)
    assert det.windows[3] == (-0.2, 0.2)
    with pytest.raises(ValueError, match="overlap"):
        ex.DetectorArray((0.0, 0.3), 0.2)


@pytest.mark.parametrize("f,a,b,exact", [
    (np.sin, 0.0, np.pi, 2.0),
    (lambda x: np.exp(-x * x), -3.0, 3.0, math.sqrt(math.pi) * math.erf(3.0)),
    (lambda x: x**4, 0.0, 1.0, 0.2),
])
def test_adaptive_simpson(f, a, b, exact):
    assert ex.adaptive_simpson(f, a, b, 1e-10) == pytest.approx(exact, abs=1e-9)


def test_click_probability_analytic_oracle():
    det = ex.DetectorArray.default()
    p0 = ex.detector_click_probability(ex.analytic_density(10.0, 0.0), det)
    ppi = ex.detector_click_probability(ex.analytic_density(10.0, np.pi), det)
    assert p0 == pytest.approx(quad_clicks(10.0, 0.0, det), abs=1e-8)
    assert ppi == pytest.approx(quad_clicks(10.0, np.pi, det), abs=1e-8)
    assert p0 == pytest.approx(0.924694, abs=1e-6)
    assert ppi == pytest.approx(0.346595, abs=1e-6)


def test_click_probability_from_series():
    det = ex.DetectorArray((0.0,), 0.2)
    x = np.linspace(-1, 1, 20001)
    f = ex.analytic_density(10.0, 0.0)
    assert ex.detector_click_probability((x, f(x)), det) == pytest.approx(
        ex.detector_click_probability(f, det), abs=1e-7)


def test_click_model_consistency():
    a, b = ex.click_model(10.0, 0.2)
    assert a == pytest.approx(math.erf(0.2))
    for alpha in (0.0, 1.0, np.pi):
        direct = quad(ex.analytic_density(10.0, alpha), -0.2, 0.2, epsabs=1e-13)[0]
        assert a + b * math.cos(alpha) == pytest.approx(direct, abs=1e-10)


def test_cat_phase_estimation():
    res = ex.cat_phase_estimation(np.pi / 2, 10**5, 3)
    est = res.value("cos_alpha_estimate")
    assert abs(est) < 4 * res.scalars["cos_alpha_estimate"]["tolerance"]
    res0 = ex.cat_phase_estimation(0.0, 10**5, 3)
    assert res0.value("cos_alpha_estimate") == pytest.approx(1.0, abs=4 * res0.scalars["cos_alpha_estimate"]["tolerance"])


def test_inverse_cdf_sampler_mean():
    sample = ex.inverse_cdf_sampler(lambda x: np.exp(-(x - 1) ** 2), -6, 8)
    xs = sample(np.random.default_rng(0), 200000)
    assert xs.mean() == pytest.approx(1.0, abs=0.01)


def test_cat_experiment_small_run():
    res = ex.cat_experiment(L=6.0, alpha=0.0, cutoff=128, grid_step=0.05)
    assert res.value("norm") == pytest.approx(1.0)
    det = ex.DetectorArray.default()
    assert res.value("click_probability") == pytest.approx(quad_clicks(6.0, 0.0, det), abs=1e-7)
    assert set(res.series["density"]) == {"x", "density"}
