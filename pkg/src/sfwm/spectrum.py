"""Biphoton spectrum assembly, etalon filtering, and wave-packet synthesis.

The joint spectral amplitude as a function of signal detuning is

    F(delta_s) = kappa_bar * sinc(zeta_bar + xi_bar) * exp(i*xi_bar),

where ``kappa_bar`` is the velocity-averaged four-wave-mixing cross-coupling,
``sinc`` (with complex argument) carries the phase-mismatch attenuation, and
``exp(i*xi_bar)`` the idler transmission; signal gain is negligible and
dropped.  The two-photon correlation wave packet is the squared modulus of
the inverse Fourier transform of F, evaluated by FFT on the uniform grid.

The combined line of the two experiment etalons is modeled as a squared
Lorentzian in power, i.e. a field factor ``sqrt(T_p) / (1 + 4 x^2/Gamma_e^2)``
applied once in the signal-frequency variable.  Its power FWHM equals
``Gamma_e * sqrt(sqrt(2) - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .units import MHZ_PER_GAMMA, NS_PER_TIME_UNIT

#: |z| below which sinc falls back to its Taylor series (cancellation guard).
SINC_SERIES_CUTOFF = 1.0e-4


class GridMismatchError(ValueError):
    """Spectra that must share a frequency grid do not."""


@dataclass
class ComplexSpectrum:
    """Complex samples on a uniform, strictly increasing detuning grid (Gamma)."""

    delta_s: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delta_s = np.asarray(self.delta_s, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.delta_s.ndim != 1 or self.delta_s.size < 2:
            raise ValueError("delta_s grid must be 1-D with at least 2 nodes")
        if self.values.shape != self.delta_s.shape:
            raise ValueError("values and delta_s must have matching shapes")
        steps = np.diff(self.delta_s)
        if not np.all(steps > 0):
            raise ValueError("delta_s grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1.0e-9, atol=0.0):
            raise ValueError("delta_s grid must be uniform")
        if not np.all(np.isfinite(self.delta_s)) or not np.all(np.isfinite(self.values.view(float))):
            raise ValueError("spectrum contains non-finite samples")

    @property
    def step(self) -> float:
        return float(self.delta_s[1] - self.delta_s[0])

    @property
    def freq_mhz(self) -> np.ndarray:
        """Grid in ordinary MHz."""
        return self.delta_s * MHZ_PER_GAMMA

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def with_values(self, values, **meta_updates) -> "ComplexSpectrum":
        meta = dict(self.meta)
        meta.update(meta_updates)
        return ComplexSpectrum(self.delta_s, values, meta)


@dataclass
class WavePacket:
    """Two-photon correlation samples on a uniform time grid (ns)."""

    t_ns: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_ns = np.asarray(self.t_ns, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.t_ns.shape != self.values.shape or self.t_ns.ndim != 1:
            raise ValueError("t_ns and values must be matching 1-D arrays")
        if np.any(self.values < 0.0):
            raise ValueError("correlation samples must be non-negative")


@dataclass(frozen=True)
class EtalonModel:
    """Squared-Lorentzian combined etalon line (all frequencies in Gamma).

    ``center=None`` means "tuned onto the photons": when applied to a
    spectrum the line centers itself on the spectral peak, the way the
    physical etalons are locked to the photon line.  A number pins the
    center explicitly (useful when fitting measured transmission spectra).
    """

    t_p: float = 0.29
    gamma_e: float = 59.0 / 6.0
    center: float | None = None

    def __post_init__(self):
        if not 0.0 < self.t_p <= 1.0:
            raise ValueError(f"t_p must lie in (0, 1], got {self.t_p}")
        if not self.gamma_e > 0.0:
            raise ValueError(f"gamma_e must be > 0, got {self.gamma_e}")
        if self.center is not None and not math.isfinite(self.center):
            raise ValueError(f"center must be finite or None, got {self.center}")

    @property
    def power_fwhm(self) -> float:
        """FWHM of the power transmission line."""
        return self.gamma_e * math.sqrt(math.sqrt(2.0) - 1.0)

    def resolved_for(self, f: "ComplexSpectrum") -> "EtalonModel":
        """Pin an auto-tracking center to the spectrum's power peak."""
        if self.center is not None:
            return self
        peak = float(f.delta_s[int(np.argmax(f.power))])
        return EtalonModel(t_p=self.t_p, gamma_e=self.gamma_e, center=peak)

    def field_factor(self, delta_s) -> np.ndarray:
        if self.center is None:
            raise ValueError("auto-tracking etalon has no fixed center; resolve it against a spectrum first")
        x = np.asarray(delta_s, dtype=float) - self.center
        return math.sqrt(self.t_p) / (1.0 + 4.0 * x * x / (self.gamma_e * self.gamma_e))

    def power_transmission(self, delta_s) -> np.ndarray:
        return self.field_factor(delta_s) ** 2


def csinc(z):
    """sin(z)/z for complex z, with the series branch near zero."""
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    small = np.abs(z) < SINC_SERIES_CUTOFF
    zs = z[small]
    out[small] = 1.0 - zs * zs / 6.0 + zs**4 / 120.0
    zl = z[~small]
    out[~small] = np.sin(zl) / zl
    return out


def assemble_spectrum(
    kappa_bar: ComplexSpectrum, zeta_bar: ComplexSpectrum, xi_bar: ComplexSpectrum
) -> ComplexSpectrum:
    """Combine the three averaged responses into the biphoton spectrum."""
    if not (
        np.array_equal(kappa_bar.delta_s, zeta_bar.delta_s)
        and np.array_equal(kappa_bar.delta_s, xi_bar.delta_s)
    ):
        raise GridMismatchError("kappa/zeta/xi spectra must share one grid")
    values = kappa_bar.values * csinc(zeta_bar.values + xi_bar.values) * np.exp(1j * xi_bar.values)
    return kappa_bar.with_values(values, stage="assembled", etalon=False)


def apply_etalon(f: ComplexSpectrum, etalon: EtalonModel) -> ComplexSpectrum:
    """Multiply by the etalon field transmission."""
    resolved = etalon.resolved_for(f)
    factor = resolved.field_factor(f.delta_s)
    return f.with_values(
        f.values * factor,
        etalon=True,
        etalon_t_p=resolved.t_p,
        etalon_gamma_e=resolved.gamma_e,
        etalon_center=resolved.center,
    )


def synthesize_wavepacket(
    f: ComplexSpectrum, window_ns: float | None = 400.0, mirror_time: bool = False
) -> WavePacket:
    """Fourier-synthesize the correlation wave packet from a spectrum.

    The FFT evaluates the Riemann sum ``(step/2pi) * sum_j F_j exp(i d_j t)``
    exactly at the grid times, including the phase from the grid's start
    frequency.  The full unaliased time window is computed and then cut to
    ``window_ns`` around the packet maximum (None keeps everything).  With
    ``mirror_time`` the time axis is reversed, matching the convention where
    the roles of heralding and heralded photon are swapped; widths are
    unaffected.
    """
    n = f.delta_s.size
    h = f.step
    t_step = 2.0 * math.pi / (n * h)
    shift = n // 2
    j = np.arange(n)
    t = (j - shift) * t_step

    twiddle = np.exp(-2.0j * math.pi * j * shift / n)
    s = n * np.fft.ifft(f.values * twiddle)
    amplitude = (h / (2.0 * math.pi)) * np.exp(1j * f.delta_s[0] * t) * s
    g2 = np.abs(amplitude) ** 2

    energy_time = float(np.sum(g2) * t_step)
    energy_freq = float(np.sum(np.abs(f.values) ** 2) * h / (2.0 * math.pi))

    t_ns = t * NS_PER_TIME_UNIT
    if window_ns is not None:
        ipeak = int(np.argmax(g2))
        lo = np.searchsorted(t_ns, t_ns[ipeak] - 0.5 * window_ns, side="left")
        hi = np.searchsorted(t_ns, t_ns[ipeak] + 0.5 * window_ns, side="right")
        t_ns = t_ns[lo:hi]
        g2 = g2[lo:hi]

    if mirror_time:
        t_ns = -t_ns[::-1]
        g2 = g2[::-1]

    meta = dict(f.meta)
    meta.update(
        {
            "etalon": bool(f.meta.get("etalon", False)),
            "mirrored": bool(mirror_time),
            "window_ns": window_ns,
            "t_step_ns": t_step * NS_PER_TIME_UNIT,
            "energy_time_full": energy_time,
            "energy_freq": energy_freq,
        }
    )
    return WavePacket(t_ns=np.ascontiguousarray(t_ns), values=np.ascontiguousarray(g2), meta=meta)


def etalon_attenuation(f: ComplexSpectrum, etalon: EtalonModel) -> float:
    """Spectral-energy transmission of the etalon for an unfiltered spectrum.

    Ratio of the filtered to unfiltered spectral energies; for a spectrum
    concentrated at the etalon center this tends to the peak power
    transmission, and for a broadband spectrum it falls well below it.
    """
    power = f.power
    unfiltered = simpson(power, x=f.delta_s)
    if unfiltered <= 0.0:
        raise ValueError("spectrum carries no energy; attenuation undefined")
    resolved = etalon.resolved_for(f)
    filtered = simpson(power * resolved.power_transmission(f.delta_s), x=f.delta_s)
    return float(filtered / unfiltered)


def rate_proxy(f: ComplexSpectrum) -> float:
    """Time integral of the correlation packet, in Parseval form.

    Computed as ``(1/2pi) * sum |F|^2 * step`` so it matches the discrete
    time-domain integral of the synthesized packet exactly.  Proportional
    to, not equal to, a physical pair rate.
    """
    return float(np.sum(np.abs(f.values) ** 2) * f.step / (2.0 * math.pi))


def numeric_fwhm(x: np.ndarray, y: np.ndarray) -> float:
    """Half-maximum width of sampled data around its global maximum.

    Scans outward from the peak to the first half-crossings and interpolates
    linearly; raises if the curve never falls below half inside the grid.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ipk = int(np.argmax(y))
    half = y[ipk] / 2.0

    def crossing(direction: int) -> float:
        i = ipk
        while 0 <= i + direction < y.size and y[i + direction] >= half:
            i += direction
        if not 0 <= i + direction < y.size:
            raise ValueError("half-maximum not reached inside the grid")
        j = i + direction
        frac = (half - y[i]) / (y[j] - y[i])
        return float(x[i] + frac * (x[j] - x[i]))

    return abs(crossing(+1) - crossing(-1))


def write_spectrum_csv(path, spec: ComplexSpectrum, config_hash: str | None = None) -> None:
    """Emit spectrum rows ``delta_s_MHz, re, im, power``."""
    with open(path, "w", encoding="utf-8") as fh:
        if config_hash:
            fh.write(f"# config_hash={config_hash}\n")
        fh.write("delta_s_MHz,re,im,power\n")
        freq = spec.freq_mhz
        vals = spec.values
        power = spec.power
        for i in range(freq.size):
            fh.write(f"{float(freq[i])!r},{float(vals[i].real)!r},{float(vals[i].imag)!r},{float(power[i])!r}\n")


def write_wavepacket_csv(path, wp: WavePacket, config_hash: str | None = None) -> None:
    """Emit wave-packet rows ``t_ns, g2``."""
    with open(path, "w", encoding="utf-8") as fh:
        if config_hash:
            fh.write(f"# config_hash={config_hash}\n")
        fh.write("t_ns,g2\n")
        for i in range(wp.t_ns.size):
            fh.write(f"{float(wp.t_ns[i])!r},{float(wp.values[i])!r}\n")
