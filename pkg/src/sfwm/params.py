"""Physical parameters and the detuning-frame algebra.

The four-level diamond scheme |1>-|2>-|4>-|3>-|1> is driven by a coupling
field on |1>->|2> and a pump field on |2>->|4>; the photon pair is emitted on
|4>->|3> (signal) and |3>->|1> (idler).  In a Doppler-broadened medium the
pair generation is dominated by the velocity group whose Doppler shift brings
the coupling+pump two-photon transition into resonance.  That group is
described by two derived quantities:

* ``omega_d0`` -- the coupling-transition Doppler shift of the dominant
  velocity group, ``(delta_c + delta_p) / (1 + k_p/k_c)``;
* ``delta_atom`` -- the one-photon detuning seen in that group's rest frame,
  ``delta_c - omega_d0``.

Both are bijective with the laser detunings at fixed wavenumber ratio, so
either pair may be used to specify an operating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

#: Vacuum wavelengths of the four fields (nm).
WAVELENGTH_COUPLING_NM = 795.0
WAVELENGTH_PUMP_NM = 1476.0
WAVELENGTH_SIGNAL_NM = 1529.0

#: Default wavenumber ratios k_p/k_c and k_s/k_c from the wavelengths above.
DEFAULT_K_RATIO_PC = WAVELENGTH_COUPLING_NM / WAVELENGTH_PUMP_NM
DEFAULT_K_RATIO_SC = WAVELENGTH_COUPLING_NM / WAVELENGTH_SIGNAL_NM

#: Default decay rates (Gamma units): states |2> and |3> decay at Gamma,
#: state |4> at Gamma/3.
DEFAULT_GAMMA2 = 1.0
DEFAULT_GAMMA3 = 1.0
DEFAULT_GAMMA4 = 1.0 / 3.0

#: Default Doppler width: the e^-1 half-width of the coupling transition for
#: the warm vapor, 0.32 GHz ordinary frequency, in Gamma units.
DEFAULT_GAMMA_DOPPLER = 2.0 * math.pi * 0.32e9 / (2.0 * math.pi * 6.0e6)


class ParameterError(ValueError):
    """A physical parameter violates its validity constraints."""


@dataclass(frozen=True)
class FrameParams:
    """Dominant-velocity-group frame: Doppler shift and one-photon detuning."""

    omega_d0: float
    delta_atom: float

    def __post_init__(self):
        for name in ("omega_d0", "delta_atom"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class PhysicalParams:
    """All rates, fields, detunings, and medium properties for one run.

    Every frequency-like field is in Gamma units (see :mod:`sfwm.units`);
    ``k_ratio_pc``/``k_ratio_sc`` are the dimensionless wavenumber ratios
    k_p/k_c and k_s/k_c, and ``alpha`` is the optical depth of the medium on
    the idler transition.
    """

    gamma2: float = DEFAULT_GAMMA2
    gamma3: float = DEFAULT_GAMMA3
    gamma4: float = DEFAULT_GAMMA4
    gamma_dec: float = 0.4
    omega_c: float = 17.0
    omega_p: float = 78.0
    delta_c: float = 380.0
    delta_p: float = -380.0
    k_ratio_pc: float = DEFAULT_K_RATIO_PC
    k_ratio_sc: float = DEFAULT_K_RATIO_SC
    gamma_doppler: float = DEFAULT_GAMMA_DOPPLER
    alpha: float = 420.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterError(f"{f.name} must be a finite number, got {value!r}")
        for name in ("gamma2", "gamma3", "gamma4", "gamma_dec", "omega_c", "omega_p", "alpha"):
            if getattr(self, name) < 0.0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.gamma_doppler <= 0.0:
            raise ParameterError(f"gamma_doppler must be > 0, got {self.gamma_doppler}")
        for name in ("k_ratio_pc", "k_ratio_sc"):
            ratio = getattr(self, name)
            if not 0.0 < ratio < 2.0:
                raise ParameterError(f"{name} must lie in (0, 2), got {ratio}")

    @property
    def frame(self) -> FrameParams:
        return frame_from_detunings(self.delta_c, self.delta_p, self.k_ratio_pc)

    def with_frame(self, frame: FrameParams) -> "PhysicalParams":
        """Return a copy whose detunings realize ``frame``."""
        delta_c, delta_p = detunings_from_frame(frame, self.k_ratio_pc)
        return self.replace(delta_c=delta_c, delta_p=delta_p)

    def replace(self, **changes) -> "PhysicalParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return PhysicalParams(**values)

    def as_dict(self) -> dict:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}


def frame_from_detunings(delta_c: float, delta_p: float, k_ratio_pc: float) -> FrameParams:
    """Map laser detunings to the dominant velocity group's frame."""
    for name, value in (("delta_c", delta_c), ("delta_p", delta_p), ("k_ratio_pc", k_ratio_pc)):
        if not math.isfinite(value):
            raise ParameterError(f"{name} must be finite, got {value!r}")
    if k_ratio_pc <= 0.0:
        raise ParameterError(f"k_ratio_pc must be > 0, got {k_ratio_pc}")
    omega_d0 = (delta_c + delta_p) / (1.0 + k_ratio_pc)
    return FrameParams(omega_d0=omega_d0, delta_atom=delta_c - omega_d0)


def detunings_from_frame(frame: FrameParams, k_ratio_pc: float) -> tuple[float, float]:
    """Inverse of :func:`frame_from_detunings`."""
    if not math.isfinite(k_ratio_pc) or k_ratio_pc <= 0.0:
        raise ParameterError(f"k_ratio_pc must be finite and > 0, got {k_ratio_pc!r}")
    delta_c = frame.delta_atom + frame.omega_d0
    delta_p = frame.omega_d0 * (1.0 + k_ratio_pc) - delta_c
    return delta_c, delta_p


def effective_rabi(omega_c: float, omega_p: float, delta_atom: float) -> float:
    """Two-photon effective Rabi frequency Omega_c*Omega_p / (2*delta_atom).

    Only meaningful in the far-detuned regime; ``delta_atom == 0`` is a
    domain error rather than a division blow-up.
    """
    for name, value in (("omega_c", omega_c), ("omega_p", omega_p), ("delta_atom", delta_atom)):
        if not math.isfinite(value):
            raise ParameterError(f"{name} must be finite, got {value!r}")
    if delta_atom == 0.0:
        raise ParameterError("effective_rabi requires delta_atom != 0")
    return omega_c * omega_p / (2.0 * delta_atom)
