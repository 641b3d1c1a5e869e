"""End-to-end reproductions: the qubit phase game and the two-slit cat state.

Cat-state conventions: ``|p, q>`` labels the coherent state with
``z = (q + i p)/sqrt(2)``; the cat at ``t = 0`` is
``(|0, -L/2> + e^{i alpha}|0, +L/2>) / sqrt(2)`` and evolves under
``exp(-i t (N + 1/2))``.  Closed-form densities are the oracle; the Fock
reconstruction is what gets tested against them.
"""
from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy.special import erf

from . import oscillator as osc
from .exceptions import TruncationError

DETECTOR_HALF_WIDTH = 0.2
SIMPSON_TOL = 1e-8
CDF_STEP = 1e-4


def utc_timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")


@dataclass
class ExperimentResult:
    """Named result with echoed inputs, toleranced scalars and data series.

    ``scalars`` maps a name to ``{"value": ..., "tolerance": ...}``.
    """

    name: str
    inputs: dict
    scalars: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)

    def add(self, key: str, value, tolerance) -> None:
        self.scalars[key] = {"value": _plain(value), "tolerance": _plain(tolerance)}

    def value(self, key: str):
        return self.scalars[key]["value"]

    def to_dict(self, timestamp: str | None = None) -> dict:
        doc = {"experiment": self.name, "inputs": _plain(self.inputs),
               "scalars": _plain(self.scalars),
               "series": {k: _plain(v) for k, v in self.series.items()}}
        if timestamp is not None:
            doc["timestamp"] = timestamp
        return doc

    def to_json(self, timestamp: str | None = None) -> str:
        return json.dumps(self.to_dict(timestamp), sort_keys=True, indent=2) + "\n"

    def write(self, out_dir, timestamp: str | None = None) -> str:
        """Write ``<name>_<timestamp>.json`` into ``out_dir``; returns the path."""
        ts = timestamp or utc_timestamp()
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"{self.name}_{ts}.json")
        with open(path, "w") as fh:
            fh.write(self.to_json(ts))
        return path


def _plain(obj):
    """Convert numpy scalars/arrays and complex numbers into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


# -- qubit phase game --------------------------------------------------------

def equator_state(alpha: float) -> np.ndarray:
    return np.array([1.0, np.exp(1j * alpha)], dtype=complex) / np.sqrt(2)


def _sample_pm(p_plus: float, shots: int, rng) -> np.ndarray:
    return np.where(rng.random(shots) < p_plus, 1, -1)


def qubit_phase_game(alpha_choices: Iterable[float], shots: int, rng_seed: int) -> ExperimentResult:
    """Estimate ``cos(alpha)`` from ``sigma_1`` outcomes and ``sin(alpha)``
    from ``sigma_2`` outcomes for each prepared equator state."""
    alphas = [float(a) for a in alpha_choices]
    if not alphas:
        raise ValueError("need at least one phase choice")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(rng_seed)
    res = ExperimentResult("game", {"alpha_choices": alphas, "shots": shots, "seed": rng_seed})
    rows = []
    for a in alphas:
        s1 = _sample_pm(0.5 * (1 + np.cos(a)), shots, rng)
        s2 = _sample_pm(0.5 * (1 + np.sin(a)), shots, rng)
        m1, m2 = float(s1.mean()), float(s2.mean())
        se1 = float(np.sqrt(max(1 - m1 * m1, 0.0) / shots))
        rows.append({"alpha": a, "sigma1_mean": m1, "sigma1_stderr": se1,
                     "sigma2_mean": m2, "alpha_estimate": float(np.arctan2(m2, m1)),
                     "deterministic": bool(np.all(s1 == s1[0]) and abs(abs(np.cos(a)) - 1) < 1e-12),
                     "first_outcome": int(s1[0])})
    res.series["rounds"] = rows
    res.add("max_abs_cos_error", max(abs(r["sigma1_mean"] - np.cos(r["alpha"])) for r in rows),
            max(3 * abs(np.sin(r["alpha"])) / np.sqrt(shots) for r in rows))
    return res


# -- cat state ----------------------------------------------------------------

@dataclass(frozen=True)
class CatConfig:
    separation: float = 10.0
    relative_phase: float = 0.0
    fock_cutoff: int = 256

    def __post_init__(self):
        L = self.separation
        if not L > 0:
            raise ValueError("separation must be positive")
        if not self.fock_cutoff > L * L / 4 + 1.5 * L + 16:
            raise TruncationError(
                f"cutoff {self.fock_cutoff} too small for L={L}: need D > L^2/4 + 3L/2 + 16"
            )

    @property
    def branch_amplitude(self) -> float:
        """``|z|`` of each branch: ``(L/2)/sqrt(2)``."""
        return self.separation / (2 * np.sqrt(2))


class Cat(NamedTuple):
    config: CatConfig
    state: np.ndarray
    branches: tuple


def cat_state(config: CatConfig) -> Cat:
    """Normalized ``(|0,-L/2> + e^{i alpha}|0,+L/2>)/sqrt(2)`` in the Fock basis."""
    fock = osc.FockSpace(config.fock_cutoff)
    z = config.branch_amplitude
    b1 = osc.coherent_state(fock, -z)
    b2 = osc.coherent_state(fock, z)
    psi = (b1 + np.exp(1j * config.relative_phase) * b2) / np.sqrt(2)
    psi = psi / np.linalg.norm(psi)
    return Cat(config, psi, (b1, b2))


def branch_overlap(config: CatConfig) -> tuple[float, float]:
    """``|<phi_2|phi_1>|^2`` analytically and from the truncated kets."""
    z = config.branch_amplitude
    analytic = abs(osc.coherent_overlap(z, -z)) ** 2
    b1, b2 = cat_state(config).branches
    return float(analytic), float(abs(np.vdot(b2, b1)) ** 2)


def rotate_cat(state, t: float) -> np.ndarray:
    """Apply ``exp(-i t (N + 1/2))``."""
    state = state.state if isinstance(state, Cat) else np.asarray(state, dtype=complex)
    n = np.arange(state.size)
    return np.exp(-1j * t * (n + 0.5)) * state


def rotated_cat_target(config: CatConfig, t: float) -> np.ndarray:
    """Analytic target: each branch ``z -> z e^{-it}`` with phase ``e^{-it/2}``."""
    fock = osc.FockSpace(config.fock_cutoff)
    z = config.branch_amplitude * np.exp(-1j * t)
    psi = (osc.coherent_state(fock, -z)
           + np.exp(1j * config.relative_phase) * osc.coherent_state(fock, z)) / np.sqrt(2)
    return np.exp(-0.5j * t) * psi / np.linalg.norm(psi)


def faithful_window(config: CatConfig) -> float:
    return config.separation / 2 + 4.0


def position_density(state, x, config: CatConfig | None = None) -> np.ndarray:
    """``|sum_n psi_n <q(x)|n>|^2`` on the points ``x``."""
    psi = state.state if isinstance(state, Cat) else np.asarray(state, dtype=complex)
    x = np.asarray(x, dtype=float)
    if config is None and isinstance(state, Cat):
        config = state.config
    if config is not None and np.any(np.abs(x) > faithful_window(config) + 1e-12):
        raise ValueError(f"grid leaves the faithful window |x| <= {faithful_window(config)}")
    return np.abs(osc.wavefunction(psi, x)) ** 2


def density_grid(state, start: float, stop: float, step: float, config=None):
    x = np.arange(start, stop + 0.5 * step, step)
    return x, position_density(state, x, config)


def series_csv(x, density, target=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "density"])
    for xi, di in zip(x, density):
        w.writerow([repr(float(xi)), repr(float(di))])
    text = buf.getvalue()
    if target is not None:
        with open(target, "w", newline="") as fh:
            fh.write(text)
    return text


def analytic_density(L: float, alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    """``(2/sqrt(pi)) cos^2((L x - alpha)/2) e^{-x^2}`` at ``t = pi/2``."""
    def f(x):
        x = np.asarray(x, dtype=float)
        return 2 / np.sqrt(np.pi) * np.cos(0.5 * (L * x - alpha)) ** 2 * np.exp(-x * x)
    return f


# -- detectors ------------------------------------------------------------------

@dataclass(frozen=True)
class DetectorArray:
    centers: tuple
    half_width: float = DETECTOR_HALF_WIDTH

    def __post_init__(self):
        cs = tuple(sorted(float(c) for c in self.centers))
        if not self.half_width > 0:
            raise ValueError("half width must be positive")
        for a, b in zip(cs, cs[1:]):
            if b - a < 2 * self.half_width:
                raise ValueError(f"detector windows around {a} and {b} overlap")
        object.__setattr__(self, "centers", cs)

    @classmethod
    def default(cls, spacing: float = np.pi / 5, n_max: int = 3,
                half_width: float = DETECTOR_HALF_WIDTH) -> "DetectorArray":
        return cls(tuple(n * spacing for n in range(-n_max, n_max + 1)), half_width)

    @property
    def windows(self) -> list[tuple[float, float]]:
        return [(c - self.half_width, c + self.half_width) for c in self.centers]


def adaptive_simpson(f, a: float, b: float, tol: float = SIMPSON_TOL, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with absolute tolerance ``tol``.

    ``f`` must accept a numpy array; each refinement evaluates two new
    points in one call.
    """
    fa, fm, fb = np.asarray(f(np.array([a, 0.5 * (a + b), b])), dtype=float)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        fl, fr = np.asarray(f(np.array([0.5 * (lo + mid), 0.5 * (mid + hi)])), dtype=float)
        left = (mid - lo) / 6 * (flo + 4 * fl + fmid)
        right = (hi - mid) / 6 * (fmid + 4 * fr + fhi)
        delta = left + right - s
        if depth >= max_depth or abs(delta) <= 15 * eps:
            total += left + right + delta / 15
        else:
            stack.append((lo, mid, flo, fl, fmid, left, eps / 2, depth + 1))
            stack.append((mid, hi, fmid, fr, fhi, right, eps / 2, depth + 1))
    return float(total)


def _as_density(density):
    if callable(density):
        return density
    x, d = (np.asarray(v, dtype=float) for v in density)
    return lambda q: np.interp(q, x, d, left=0.0, right=0.0)


def detector_click_probability(density, detectors: DetectorArray, tol: float = SIMPSON_TOL) -> float:
    """Probability mass over the union of detector windows.

    ``density`` is a vectorized callable or an ``(x, values)`` series
    (linearly interpolated).  The tolerance is split across the windows.
    """
    f = _as_density(density)
    wins = detectors.windows
    return float(sum(adaptive_simpson(f, lo, hi, tol / len(wins)) for lo, hi in wins))


def fock_density(state, config: CatConfig | None = None):
    """Vectorized density callable backed by the Fock amplitudes."""
    psi = state.state if isinstance(state, Cat) else np.asarray(state, dtype=complex)

    def f(x):
        return position_density(psi, x, config)
    return f


def cat_click_probability(config: CatConfig, detectors: DetectorArray | None = None,
                          t: float = np.pi / 2) -> float:
    """Full pipeline: build, rotate, reconstruct density, integrate windows."""
    detectors = detectors or DetectorArray.default()
    psi = rotate_cat(cat_state(config), t)
    return detector_click_probability(fock_density(psi, config), detectors)


# -- phase estimation with a single detector ------------------------------------

def click_model(L: float, half_width: float) -> tuple[float, float]:
    """``(A, B)`` with click probability ``A + B cos(alpha)`` for a window at 0.

    ``A = erf(Delta)``, ``B = pi^{-1/2} int_{-Delta}^{Delta} cos(L x) e^{-x^2} dx``.
    """
    a = float(erf(half_width))
    b = adaptive_simpson(lambda x: np.cos(L * x) * np.exp(-x * x) / np.sqrt(np.pi),
                         -half_width, half_width, 1e-12)
    return a, b


def inverse_cdf_sampler(density, lo: float, hi: float, step: float = CDF_STEP):
    """Return ``sample(rng, n)`` drawing from ``density`` on ``[lo, hi]``."""
    x = np.arange(lo, hi + 0.5 * step, step)
    d = np.clip(np.asarray(density(x), dtype=float), 0.0, None)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(x))])
    cdf /= cdf[-1]

    def sample(rng, n):
        return np.interp(rng.random(n), cdf, x)
    return sample


def cat_phase_estimation(alpha: float, shots: int, seed: int, L: float = 10.0,
                         half_width: float = DETECTOR_HALF_WIDTH) -> ExperimentResult:
    """Sample positions from the ``alpha`` pattern, count clicks at ``x = 0``,
    and invert the click rate to ``cos(alpha)``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    window = L / 2 + 4.0
    sample = inverse_cdf_sampler(analytic_density(L, alpha), -window, window)
    xs = sample(rng, shots)
    clicks = int(np.count_nonzero(np.abs(xs) <= half_width))
    rate = clicks / shots
    a, b = click_model(L, half_width)
    se_rate = np.sqrt(rate * (1 - rate) / shots)
    res = ExperimentResult("cat_phase", {"alpha": alpha, "shots": shots, "seed": seed,
                                         "L": L, "half_width": half_width})
    res.add("click_rate", rate, float(se_rate))
    res.add("click_probability", a + b * np.cos(alpha), float(se_rate))
    res.add("cos_alpha_estimate", (rate - a) / b, float(se_rate / abs(b)))
    res.series["model"] = {"A": a, "B": b}
    return res


def cat_experiment(L: float = 10.0, alpha: float = 0.0, t: float = np.pi / 2,
                   cutoff: int = 256, detectors: DetectorArray | None = None,
                   grid_step: float = 0.01) -> ExperimentResult:
    """The two-slit cat run used by the CLI."""
    cfg = CatConfig(L, alpha, cutoff)
    detectors = detectors or DetectorArray.default()
    cat = cat_state(cfg)
    psi = rotate_cat(cat, t)
    prob = detector_click_probability(fock_density(psi, cfg), detectors)
    analytic, truncated = branch_overlap(cfg)
    w = faithful_window(cfg)
    x, dens = density_grid(psi, -w, w, grid_step, cfg)
    res = ExperimentResult("cat", {"L": L, "alpha": alpha, "t": t, "cutoff": cutoff,
                                   "detector_centers": list(detectors.centers),
                                   "half_width": detectors.half_width})
    res.add("click_probability", prob, SIMPSON_TOL)
    res.add("branch_overlap_analytic", analytic, 0.0)
    res.add("branch_overlap_truncated", truncated, 1e-20)
    res.add("norm", float(np.linalg.norm(psi)), 1e-10)
    res.series["density"] = {"x": x, "density": dens}
    return res
