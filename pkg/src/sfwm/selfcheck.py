"""Oracle battery: independent consistency checks runnable on demand.

Each check pins an implementation path against an independent route:
back-substitution residuals for the Bloch solves, an analytic two-level
reduction for the first-order response, finite physical drives against the
linear coefficients, direct Riemann sums against the FFT synthesis, the
Parseval identity, the quadrature self-convergence gate, the etalon
linewidth algebra, the correlation arithmetic, byte-level determinism across
worker counts, and cache corruption recovery.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernel, obe
from .cache import ResponseCache
from .doppler import GridSpec, QuadratureSpec, averaged_response
from .fitting import cauchy_schwarz, fit_etalon_spectrum, sbr_to_peak_g2
from .params import FrameParams, PhysicalParams
from .spectrum import ComplexSpectrum, assemble_spectrum, synthesize_wavepacket
from .sweep import SweepSpec, run_sweep, write_sweep_csv

#: Cheap but honest pipeline settings for the battery.
_CHECK_PARAMS = PhysicalParams(gamma_dec=0.4, omega_c=17.0, omega_p=78.0, delta_c=380.0, delta_p=-380.0, alpha=420.0)
_CHECK_GRID = GridSpec(span=2.0 * math.pi * 0.5e9 / (2.0 * math.pi * 6.0e6), nodes=1024)
_CHECK_QUAD = QuadratureSpec()
_FAST_QUAD = QuadratureSpec(global_panels=32, window_panels=32, tol=1.0e-3, max_doublings=5)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(name: str, fn) -> CheckResult:
    try:
        detail = fn()
        return CheckResult(name, True, detail or "")
    except Exception as exc:  # noqa: BLE001 - a failing check is a result, not a crash
        return CheckResult(name, False, f"{type(exc).__name__}: {exc}")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise AssertionError(message)


def _zeroth_residual() -> str:
    worst = 0.0
    for omega_d in (0.0, 17.3, -53.3, 380.0):
        sol = obe.solve_zeroth_order(_CHECK_PARAMS, omega_d)
        worst = max(worst, obe.zeroth_order_residual(sol, _CHECK_PARAMS, omega_d))
        total = sum(sol.populations)
        _require(abs(total - 1.0) < 1.0e-10, f"population sum off by {total - 1.0:.3g}")
    _require(worst < 1.0e-10, f"residual {worst:.3g} >= 1e-10")
    return f"max residual {worst:.3g}"


def _first_order_residual() -> str:
    worst = 0.0
    for omega_d, delta_s in ((0.0, 0.0), (12.0, 1.7), (-40.0, -3.2)):
        zeroth = obe.solve_zeroth_order(_CHECK_PARAMS, omega_d)
        responses = obe.first_order_unit_responses(zeroth, _CHECK_PARAMS, omega_d, delta_s)
        for drive, sol6 in responses.items():
            drives = {name: (1.0 if name == drive else 0.0) for name in obe.DRIVES}
            worst = max(
                worst,
                obe.first_order_residual(sol6, drives, zeroth, _CHECK_PARAMS, omega_d, delta_s),
            )
    _require(worst < 1.0e-10, f"residual {worst:.3g} >= 1e-10")
    return f"max residual {worst:.3g}"


def _two_level_closed_form() -> str:
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        gamma_dec = float(rng.uniform(0.0, 2.0))
        params = _CHECK_PARAMS.replace(omega_c=0.0, omega_p=0.0, gamma_dec=gamma_dec)
        omega_d = float(rng.uniform(-100.0, 100.0))
        delta_s = float(rng.uniform(-50.0, 50.0))
        zeroth = obe.solve_zeroth_order(params, omega_d)
        triple = obe.solve_first_order(zeroth, params, omega_d, delta_s)
        _, _, d31 = obe.first_order_detunings(params, omega_d, delta_s)
        expected = -0.5j / d31
        rel = abs(triple.d_rho31_d_omega_i - expected) / abs(expected)
        worst = max(worst, rel)
        _require(abs(triple.d_rho31_d_omega_s_conj) < 1.0e-14, "cross-coupling should vanish without drive fields")
    _require(worst < 1.0e-10, f"closed-form mismatch {worst:.3g} >= 1e-10")
    return f"max relative mismatch {worst:.3g}"


def _first_order_linearity() -> str:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(5):
        omega_d = float(rng.uniform(-30.0, 30.0))
        delta_s = float(rng.uniform(-10.0, 10.0))
        zeroth = obe.solve_zeroth_order(_CHECK_PARAMS, omega_d)
        responses = obe.first_order_unit_responses(zeroth, _CHECK_PARAMS, omega_d, delta_s)
        omega_s = 1.0e-4 * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
        omega_i = 1.0e-4 * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
        drives = {
            "omega_s": omega_s,
            "omega_s_conj": omega_s.conjugate(),
            "omega_i": omega_i,
            "omega_i_conj": omega_i.conjugate(),
        }
        m, rhs = obe.first_order_system(zeroth, _CHECK_PARAMS, omega_d, delta_s)
        b = sum(drives[name] * rhs[name] for name in obe.DRIVES)
        direct = np.linalg.solve(m, b)
        combo = sum(drives[name] * responses[name] for name in obe.DRIVES)
        rel = np.max(np.abs(direct - combo) / np.maximum(np.abs(direct), 1.0e-30))
        worst = max(worst, float(rel))
    _require(worst < 1.0e-8, f"linearity mismatch {worst:.3g} >= 1e-8")
    return f"max relative mismatch {worst:.3g}"


def _fft_vs_quadrature() -> str:
    n = 2048
    step = 0.05
    delta_s = (np.arange(n) - n // 2) * step
    values = np.exp(-(delta_s**2) / (2.0 * 3.0**2)) * np.exp(0.25j * delta_s)
    spec = ComplexSpectrum(delta_s, values)
    wp = synthesize_wavepacket(spec, window_ns=None)
    t_units = wp.t_ns / (1.0e9 / (2.0 * math.pi * 6.0e6))
    rng = np.random.default_rng(11)
    worst = 0.0
    for idx in rng.integers(0, n, size=10):
        t = t_units[idx]
        direct = abs(np.sum(values * np.exp(1j * delta_s * t)) * step / (2.0 * math.pi)) ** 2
        rel = abs(wp.values[idx] - direct) / max(direct, 1.0e-300)
        worst = max(worst, rel)
    _require(worst < 1.0e-6, f"fft mismatch {worst:.3g} >= 1e-6")
    return f"max relative mismatch {worst:.3g}"


_MINI_PIPELINE_MEMO: dict = {}


def _mini_pipeline():
    # shared by several checks; computed once per process
    if "result" not in _MINI_PIPELINE_MEMO:
        kappa, zeta, xi = averaged_response(_CHECK_PARAMS, _CHECK_GRID, _CHECK_QUAD, cache=None)
        _MINI_PIPELINE_MEMO["result"] = (kappa, assemble_spectrum(kappa, zeta, xi))
    return _MINI_PIPELINE_MEMO["result"]


def _parseval() -> str:
    _, f = _mini_pipeline()
    wp = synthesize_wavepacket(f, window_ns=None)
    lhs = wp.meta["energy_time_full"]
    rhs = wp.meta["energy_freq"]
    rel = abs(lhs - rhs) / abs(rhs)
    _require(rel < 1.0e-8, f"Parseval mismatch {rel:.3g} >= 1e-8")
    return f"relative mismatch {rel:.3g}"


def _quadrature_convergence() -> str:
    kappa, _ = _mini_pipeline()
    _require(bool(kappa.meta["quad_converged"]), "convergence flag not set")
    err = float(kappa.meta["quad_error"])
    _require(err < _CHECK_QUAD.tol, f"self-convergence error {err:.3g} >= {_CHECK_QUAD.tol}")
    return f"converged at level {kappa.meta['quad_levels']} (error {err:.3g})"


def _etalon_linewidth() -> str:
    freq = np.linspace(-150.0, 150.0, 601)
    product = (0.42 / (1.0 + 4.0 * freq**2 / 80.0**2)) * (0.70 / (1.0 + 4.0 * freq**2 / 47.0**2))
    fit = fit_etalon_spectrum(freq, product, model="squared_lorentzian")
    _require(abs(fit.fwhm - 38.0) <= 2.0, f"combined FWHM {fit.fwhm:.2f} MHz outside 38+-2")
    _require(abs(fit.gamma_e - 59.0) <= 1.0, f"field linewidth {fit.gamma_e:.2f} MHz outside 59+-1")
    _require(abs(fit.t_p - 0.29) <= 0.02, f"peak transmission {fit.t_p:.3f} outside 0.29+-0.02")
    return f"T_p={fit.t_p:.3f}, FWHM={fit.fwhm:.2f} MHz, Gamma_e={fit.gamma_e:.2f} MHz"


def _correlation_arithmetic() -> str:
    cs = cauchy_schwarz(3.00, 2.06, 1.95)
    _require(2.2 <= cs <= 2.3, f"violation factor {cs:.4f} outside [2.2, 2.3]")
    _require(sbr_to_peak_g2(2.00) == 3.00, "sbr->g2 mapping broken at 2.00")
    _require(sbr_to_peak_g2(8.5) == 9.5, "sbr->g2 mapping broken at 8.5")
    return f"violation factor {cs:.4f}"


def _jobs_determinism() -> str:
    frames = (FrameParams(0.0, 300.0), FrameParams(40.0, 380.0))
    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        for run_idx, jobs in enumerate((1, 1, 2)):
            cache_dir = Path(tmp) / f"cache-{run_idx}"
            spec = SweepSpec(
                frames=frames,
                base_params=_CHECK_PARAMS,
                od_fixed=420.0,
                grid=_CHECK_GRID,
                quad=_FAST_QUAD,
            )
            rows = run_sweep(spec, jobs=jobs, cache_dir=cache_dir)
            csv_path = Path(tmp) / f"sweep-{run_idx}.csv"
            write_sweep_csv(csv_path, rows)
            outputs.append(csv_path.read_bytes())
    _require(outputs[0] == outputs[1], "repeat run with jobs=1 differs")
    _require(outputs[0] == outputs[2], "jobs=2 output differs from jobs=1")
    return f"3 runs byte-identical ({len(outputs[0])} bytes)"


def _cache_rebuild() -> str:
    with tempfile.TemporaryDirectory() as tmp:
        cache = ResponseCache(tmp)
        first = averaged_response(_CHECK_PARAMS, _CHECK_GRID, _FAST_QUAD, cache=cache)
        entries = sorted(Path(tmp).glob("response-*.npz"))
        _require(len(entries) == 1, f"expected one cache entry, found {len(entries)}")
        entries[0].write_bytes(b"corrupted")
        cache2 = ResponseCache(tmp)
        second = averaged_response(_CHECK_PARAMS, _CHECK_GRID, _FAST_QUAD, cache=cache2)
        _require(len(cache2.rebuilt_keys) == 1, "corruption was not detected")
        for a, b in zip(first, second):
            _require(np.array_equal(a.values, b.values), "rebuilt response differs")
    return "corruption detected and entry rebuilt"


def _kernel_agreement() -> str:
    if len(kernel.available_backends()) < 2:
        return "single backend present; nothing to compare"
    nodes = np.linspace(-80.0, 80.0, 257)
    weights = np.exp(-(nodes / 53.0) ** 2)
    zeroth = obe.solve_zeroth_order_batch(_CHECK_PARAMS, nodes)
    delta_s = np.linspace(-40.0, 40.0, 512)
    out = {
        name: kernel.susceptibility_sums(delta_s, nodes, weights, zeroth, _CHECK_PARAMS, backend=name)
        for name in kernel.available_backends()
    }
    worst = 0.0
    for a, b in zip(out["cython"], out["numpy"]):
        scale = np.max(np.abs(a))
        worst = max(worst, float(np.max(np.abs(a - b)) / scale))
    _require(worst < 1.0e-9, f"backend mismatch {worst:.3g} >= 1e-9")
    return f"cython vs numpy sup mismatch {worst:.3g}"


def run_selfcheck(print_fn=None) -> list[CheckResult]:
    """Run the oracle battery; returns one result per check."""
    checks = [
        ("obe-zeroth-residual", _zeroth_residual),
        ("obe-first-order-residual", _first_order_residual),
        ("two-level-closed-form", _two_level_closed_form),
        ("first-order-linearity", _first_order_linearity),
        ("fft-vs-quadrature", _fft_vs_quadrature),
        ("parseval", _parseval),
        ("quadrature-convergence", _quadrature_convergence),
        ("etalon-linewidth-relation", _etalon_linewidth),
        ("correlation-arithmetic", _correlation_arithmetic),
        ("kernel-backend-agreement", _kernel_agreement),
        ("jobs-determinism", _jobs_determinism),
        ("cache-rebuild", _cache_rebuild),
    ]
    results = []
    for name, fn in checks:
        result = _check(name, fn)
        results.append(result)
        if print_fn is not None:
            status = "PASS" if result.passed else "FAIL"
            print_fn(f"{status}  {name}  {result.detail}")
    return results
