"""Wave-packet fitting, linewidth extraction, and correlation metrics.

The temporal shape of the filtered correlation packet is fit with the
phenomenological form

    bg + A * [1 + tanh((t - t0)/tau1)]^p * [1 - erf((t - t0 - td)/tau2)],

a smooth rise raised to a power times a complementary-error-function fall.
The parameters correlate strongly (notably p against tau1), so the fit runs
a fixed set of eight deterministic starts through Levenberg-Marquardt and
keeps the best optimum.  Bounds on p and the time constants are enforced by
a smooth log-logistic reparameterization rather than box constraints.

The reported temporal width ``tau_b`` is the half-maximum width of the
fitted background-free curve, located by bisection, and the
signal-to-background ratio is fitted peak over fitted background.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, least_squares, minimize_scalar
from scipy.special import erf, expit, logit

P_BOUNDS = (0.1, 10.0)
TAU_BOUNDS_NS = (0.05, 1000.0)


class FitConvergenceError(RuntimeError):
    """No fit start converged; carries the best residual seen."""

    def __init__(self, best_cost: float):
        super().__init__(f"no start converged (best residual sum {best_cost:.6g})")
        self.best_cost = best_cost


class DegenerateDataError(ValueError):
    """Input data carry no structure to fit."""


class MultiPeakError(ValueError):
    """A single-peaked spectrum was required."""

    def __init__(self, count: int):
        super().__init__(f"expected a single-peaked spectrum, found {count} half-maximum lobes")
        self.count = count


def wavepacket_model(t, a, t0, p, tau1, tau2, td, background=0.0):
    """Rise-times-fall phenomenological packet shape."""
    t = np.asarray(t, dtype=float)
    rise = (1.0 + np.tanh((t - t0) / tau1)) ** p
    fall = 1.0 - erf((t - t0 - td) / tau2)
    return background + a * rise * fall


@dataclass
class FitResult:
    """Best-fit parameters and derived packet metrics (times in ns)."""

    a: float
    t0: float
    p: float
    tau1: float
    tau2: float
    td: float
    background: float
    tau_b: float
    sbr: float
    covariance: np.ndarray | None
    converged: bool
    ssr: float
    n_points: int

    def params_tuple(self):
        return (self.a, self.t0, self.p, self.tau1, self.tau2, self.td)

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "t0_ns": self.t0,
            "p": self.p,
            "tau1_ns": self.tau1,
            "tau2_ns": self.tau2,
            "td_ns": self.td,
            "background": self.background,
            "tau_b_ns": self.tau_b,
            "sbr": self.sbr if math.isfinite(self.sbr) else None,
            "covariance": None if self.covariance is None else [list(map(float, row)) for row in self.covariance],
            "converged": self.converged,
            "ssr": self.ssr,
            "n_points": self.n_points,
        }


def _to_internal(value: float, lo: float, hi: float) -> float:
    frac = (math.log(value) - math.log(lo)) / (math.log(hi) - math.log(lo))
    frac = min(max(frac, 1.0e-6), 1.0 - 1.0e-6)
    return float(logit(frac))

def _from_internal(u, lo: float, hi: float):
    return np.exp(math.log(lo) + (math.log(hi) - math.log(lo)) * expit(u))


def _unpack(theta):
    a, t0, up, u1, u2, td, bg = theta
    p = float(_from_internal(up, *P_BOUNDS))
    tau1 = float(_from_internal(u1, *TAU_BOUNDS_NS))
    tau2 = float(_from_internal(u2, *TAU_BOUNDS_NS))
    return a, t0, p, tau1, tau2, td, bg


def _curve_metrics(a, t0, p, tau1, tau2, td):
    """Peak location/height and half-maximum crossings of the bg-free curve."""

    def f(t):
        return wavepacket_model(t, a, t0, p, tau1, tau2, td)

    # Small p makes the rise extremely slow; stretch the left bound so the
    # curve is genuinely below half maximum at `lo`.
    lo = t0 - 10.0 * tau1 * max(1.0, 1.0 / p) + min(td, 0.0) - tau2
    hi = t0 + max(td, 0.0) + 10.0 * tau2 + 3.0 * tau1
    ts = np.linspace(lo, hi, 4001)
    ys = f(ts)
    i = int(np.argmax(ys))
    if i == 0 or i == ts.size - 1:
        t_pk = ts[i]
    else:
        res = minimize_scalar(lambda t: -f(t), bounds=(ts[i - 1], ts[i + 1]), method="bounded",
                              options={"xatol": 1.0e-12 * (hi - lo)})
        t_pk = float(res.x)
    f_pk = float(f(t_pk))
    if f_pk <= 0.0:
        raise FitConvergenceError(float("nan"))
    half = 0.5 * f_pk

    def g(t):
        return f(t) - half

    left = brentq(g, lo, t_pk, xtol=1.0e-12 * (hi - lo))
    right = brentq(g, t_pk, hi, xtol=1.0e-12 * (hi - lo))
    return t_pk, f_pk, float(left), float(right)


def fit_wavepacket(t, counts, weights=None) -> FitResult:
    """Fit the packet shape to sampled coincidence data.

    ``t`` in ns, ``counts`` non-negative; optional ``weights`` multiply the
    residuals.  Needs at least 12 samples spanning the packet.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(counts, dtype=float)
    if t.ndim != 1 or t.shape != y.shape:
        raise ValueError("t and counts must be matching 1-D arrays")
    if t.size < 12:
        raise ValueError(f"need at least 12 samples, got {t.size}")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite samples")
    scale = float(np.max(np.abs(y))) if y.size else 0.0
    if np.min(y) < -1.0e-9 * max(scale, 1.0):
        raise ValueError("counts must be non-negative")
    if np.max(y) - np.min(y) <= 1.0e-12 * max(scale, 1.0):
        raise DegenerateDataError("flat data: nothing to fit")
    w = None
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be non-negative finite and match counts")

    ipk = int(np.argmax(y))
    dec = max(1, t.size // 10)
    bg0 = float(np.mean(np.concatenate([y[:dec], y[-dec:]])))
    height = float(y[ipk] - bg0)
    if height <= 0.0:
        raise DegenerateDataError("no peak above the background estimate")
    halflevel = bg0 + 0.5 * height
    above = np.flatnonzero(y >= halflevel)
    dt = float(np.median(np.diff(t)))
    crude_width = max(float(t[above[-1]] - t[above[0]]), 2.0 * dt)

    def residuals(theta):
        a, t0, p, tau1, tau2, td, bg = _unpack(theta)
        r = wavepacket_model(t, a, t0, p, tau1, tau2, td, bg) - y
        return r if w is None else r * w

    starts = []
    for p0 in (1.0, 2.0):
        for f1 in (0.2, 1.0):
            for f2 in (0.2, 1.0):
                starts.append(
                    np.array(
                        [
                            height / 2.0**p0,
                            float(t[ipk]),
                            _to_internal(p0, *P_BOUNDS),
                            _to_internal(min(max(f1 * crude_width, TAU_BOUNDS_NS[0] * 1.01), TAU_BOUNDS_NS[1] * 0.99), *TAU_BOUNDS_NS),
                            _to_internal(min(max(f2 * crude_width, TAU_BOUNDS_NS[0] * 1.01), TAU_BOUNDS_NS[1] * 0.99), *TAU_BOUNDS_NS),
                            0.0,
                            bg0,
                        ]
                    )
                )

    best = None
    best_cost = math.inf
    for theta0 in starts:
        try:
            res = least_squares(residuals, theta0, method="lm", max_nfev=5000)
        except Exception:  # noqa: BLE001 - a diverging start is not fatal
            continue
        if not np.all(np.isfinite(res.x)):
            continue
        if res.cost < best_cost:
            best, best_cost = res, res.cost
    if best is None:
        raise FitConvergenceError(best_cost)

    a, t0, p, tau1, tau2, td, bg = _unpack(best.x)
    _, f_pk, left, right = _curve_metrics(a, t0, p, tau1, tau2, td)
    tau_b = right - left
    sbr = f_pk / bg if bg > 1.0e-12 * (abs(f_pk) + 1.0) else math.inf

    covariance = None
    dof = t.size - best.x.size
    if dof > 0:
        jtj = best.jac.T @ best.jac
        try:
            cov_u = 2.0 * best.cost / dof * np.linalg.pinv(jtj)
            d = np.ones(best.x.size)
            ln_p = math.log(P_BOUNDS[1] / P_BOUNDS[0])
            ln_tau = math.log(TAU_BOUNDS_NS[1] / TAU_BOUNDS_NS[0])
            for idx, (value, span) in ((2, (p, ln_p)), (3, (tau1, ln_tau)), (4, (tau2, ln_tau))):
                e = expit(best.x[idx])
                d[idx] = value * span * e * (1.0 - e)
            covariance = d[:, None] * cov_u * d[None, :]
        except np.linalg.LinAlgError:
            covariance = None

    return FitResult(
        a=a,
        t0=t0,
        p=p,
        tau1=tau1,
        tau2=tau2,
        td=td,
        background=bg,
        tau_b=tau_b,
        sbr=sbr,
        covariance=covariance,
        converged=bool(best.status > 0),
        ssr=float(2.0 * best.cost),
        n_points=int(t.size),
    )


def spectral_fwhm(freq, power) -> float:
    """Half-maximum width of a single-peaked power spectrum.

    Walks outward from the peak's half-maximum lobe and interpolates the
    edge crossings linearly; any second lobe reaching half maximum is an
    error (the width would be ambiguous).
    """
    x = np.asarray(freq, dtype=float)
    y = np.asarray(power, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 5:
        raise ValueError("freq and power must be matching 1-D arrays with >= 5 samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite samples")
    peak = float(np.max(y))
    if peak <= 0.0:
        raise ValueError("power spectrum has no positive peak")
    half = 0.5 * peak
    mask = np.concatenate([[False], y >= half, [False]])
    edges = np.flatnonzero(np.diff(mask.astype(np.int8)))
    runs = list(zip(edges[0::2], edges[1::2] - 1))
    if len(runs) != 1:
        raise MultiPeakError(len(runs))
    i0, i1 = runs[0]
    if i0 == 0 or i1 == y.size - 1:
        raise ValueError("half-maximum lobe touches the grid edge; widen the grid")
    left = x[i0 - 1] + (half - y[i0 - 1]) * (x[i0] - x[i0 - 1]) / (y[i0] - y[i0 - 1])
    right = x[i1] + (half - y[i1]) * (x[i1 + 1] - x[i1]) / (y[i1 + 1] - y[i1])
    return float(right - left)


@dataclass(frozen=True)
class EtalonFitResult:
    """Fitted transmission line; frequencies in the input axis unit."""

    t_p: float
    fwhm: float
    center: float
    gamma_e: float | None = None


def fit_etalon_spectrum(freq, transmission, model: str = "lorentzian") -> EtalonFitResult:
    """Least-squares fit of a (squared) Lorentzian transmission line.

    For ``model="squared_lorentzian"`` the returned ``gamma_e`` is the
    field-linewidth parameter, related to the power FWHM by
    ``fwhm = gamma_e * sqrt(sqrt(2) - 1)``.
    """
    x = np.asarray(freq, dtype=float)
    y = np.asarray(transmission, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 8:
        raise ValueError("need >= 8 matching samples")
    if model not in ("lorentzian", "squared_lorentzian"):
        raise ValueError(f"unknown model {model!r}")

    sq = model == "squared_lorentzian"
    shape_fwhm = math.sqrt(math.sqrt(2.0) - 1.0)

    def line(theta, xs):
        tp, width, center = theta
        u = 1.0 + 4.0 * (xs - center) ** 2 / (width * width)
        return tp / (u * u) if sq else tp / u

    i_pk = int(np.argmax(y))
    from .spectrum import numeric_fwhm

    try:
        width0 = numeric_fwhm(x, y)
    except ValueError:
        width0 = (x[-1] - x[0]) / 4.0
    if sq:
        width0 = width0 / shape_fwhm
    theta0 = np.array([float(y[i_pk]), width0, float(x[i_pk])])
    res = least_squares(lambda th: line(th, x) - y, theta0, method="lm", max_nfev=5000)
    if not (res.status > 0 and np.all(np.isfinite(res.x))):
        raise FitConvergenceError(float(res.cost))
    tp, width, center = res.x
    width = abs(float(width))
    if sq:
        return EtalonFitResult(t_p=float(tp), fwhm=width * shape_fwhm, center=float(center), gamma_e=width)
    return EtalonFitResult(t_p=float(tp), fwhm=width, center=float(center))


@dataclass(frozen=True)
class CorrelationMetrics:
    """Cross/auto correlation summary with the nonclassicality factor."""

    g2_si_peak: float
    g2_ss0: float
    g2_ii0: float
    cs_factor: float

    @classmethod
    def from_values(cls, g2_si_peak: float, g2_ss0: float, g2_ii0: float) -> "CorrelationMetrics":
        return cls(g2_si_peak, g2_ss0, g2_ii0, cauchy_schwarz(g2_si_peak, g2_ss0, g2_ii0))


def cauchy_schwarz(g2_si_peak: float, g2_ss0: float, g2_ii0: float) -> float:
    """Nonclassicality factor g2_si^2 / (g2_ss(0) * g2_ii(0)); > 1 violates
    the classical bound."""
    for name, value in (("g2_si_peak", g2_si_peak), ("g2_ss0", g2_ss0), ("g2_ii0", g2_ii0)):
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return g2_si_peak * g2_si_peak / (g2_ss0 * g2_ii0)


def sbr_to_peak_g2(sbr: float) -> float:
    """Peak cross-correlation implied by a signal-to-background ratio."""
    if not (isinstance(sbr, (int, float)) and math.isfinite(sbr) and sbr >= 0):
        raise ValueError(f"sbr must be finite and >= 0, got {sbr!r}")
    return 1.0 + sbr


def read_wavepacket_counts(path):
    """Read an ingestion CSV: header ``t_ns,counts[,weight]``, one row per bin."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        names = [c.strip().lower() for c in header]
        if names[:2] != ["t_ns", "counts"] or len(names) > 3 or (len(names) == 3 and names[2] != "weight"):
            raise ValueError(f"{path}: header must be 't_ns,counts[,weight]', got {header!r}")
        has_weight = len(names) == 3
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise ValueError(f"{path}:{lineno}: expected {len(names)} columns, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric value in {row!r}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    weights = data[:, 2] if has_weight else None
    return data[:, 0], data[:, 1], weights
