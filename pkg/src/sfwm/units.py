"""Frequency and time unit conventions.

Every rate, Rabi frequency, detuning, and frequency-like quantity inside the
package is a dimensionless multiple of the natural linewidth

    Gamma = 2*pi * 6 MHz  (angular frequency)

of the intermediate excited states.  Config files and reports may instead use
ordinary-frequency units: values tagged "MHz" or "GHz" are multiplied by 2*pi
on ingestion, values tagged "Gamma" pass through unchanged.  Times are kept in
units of 1/Gamma internally and converted to nanoseconds at the boundaries.
"""

from __future__ import annotations

import math

#: Ordinary frequency of the natural linewidth (Hz).
GAMMA_HZ = 6.0e6

#: The internal angular-frequency unit, in rad/s.
GAMMA_RAD_PER_S = 2.0 * math.pi * GAMMA_HZ

#: One internal time unit (1/Gamma) expressed in nanoseconds.
NS_PER_TIME_UNIT = 1.0e9 / GAMMA_RAD_PER_S

#: Ordinary megahertz per unit of Gamma.
MHZ_PER_GAMMA = GAMMA_HZ / 1.0e6

# Multiplicative factors taking a value in the named unit to Gamma units.
_TO_GAMMA = {
    "gamma": 1.0,
    "mhz": 1.0 / MHZ_PER_GAMMA,
    "ghz": 1000.0 / MHZ_PER_GAMMA,
}


def to_gamma(value: float, unit: str) -> float:
    """Convert ``value`` in ``unit`` ("Gamma", "MHz", or "GHz") to Gamma units."""
    try:
        factor = _TO_GAMMA[unit.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown frequency unit {unit!r}; use Gamma, MHz, or GHz") from None
    return value * factor


def from_gamma(value: float, unit: str) -> float:
    """Inverse of :func:`to_gamma`."""
    try:
        factor = _TO_GAMMA[unit.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown frequency unit {unit!r}; use Gamma, MHz, or GHz") from None
    return value / factor


def parse_quantity(raw, where: str = "value") -> float:
    """Parse a config quantity into Gamma units.

    Accepts a bare number (already in Gamma units) or a string of the form
    ``"<number> <unit>"``, e.g. ``"0.48 GHz"``, ``"59 MHz"``, ``"380 Gamma"``.
    """
    if isinstance(raw, bool):
        raise ValueError(f"{where}: expected a number or '<number> <unit>' string, got {raw!r}")
    if isinstance(raw, (int, float)):
        value = float(raw)
    elif isinstance(raw, str):
        parts = raw.split()
        if len(parts) != 2:
            raise ValueError(f"{where}: expected '<number> <unit>', got {raw!r}")
        try:
            number = float(parts[0])
        except ValueError:
            raise ValueError(f"{where}: bad number in {raw!r}") from None
        value = to_gamma(number, parts[1])
    else:
        raise ValueError(f"{where}: expected a number or '<number> <unit>' string, got {raw!r}")
    if not math.isfinite(value):
        raise ValueError(f"{where}: non-finite value {raw!r}")
    return value


def gamma_to_mhz(value: float) -> float:
    """Gamma units to ordinary MHz."""
    return value * MHZ_PER_GAMMA


def mhz_to_gamma(value: float) -> float:
    """Ordinary MHz to Gamma units."""
    return value / MHZ_PER_GAMMA


def time_to_ns(value: float) -> float:
    """Internal time (1/Gamma) to nanoseconds."""
    return value * NS_PER_TIME_UNIT


def ns_to_time(value: float) -> float:
    """Nanoseconds to internal time (1/Gamma)."""
    return value / NS_PER_TIME_UNIT
