"""Backend selection for the hot susceptibility kernel.

Two interchangeable implementations exist: a compiled Cython extension and a
pure-numpy fallback.  The compiled one is preferred when importable; the
environment variable ``SFWM_KERNEL`` (``auto``/``cython``/``numpy``) or
:func:`set_backend` overrides the choice.  Both produce the same numbers to
rounding; tests pin them against each other and against the dense reference
solver in :mod:`sfwm.obe`.
"""

from __future__ import annotations

import os

from . import _kernel_numpy

try:
    from . import _kernel_cy
except ImportError:  # extension not built; numpy fallback carries the load
    _kernel_cy = None

#: Bump when the kernel mathematics changes; part of every cache key.
KERNEL_VERSION = 1

_active: str | None = None


def available_backends() -> tuple[str, ...]:
    return ("cython", "numpy") if _kernel_cy is not None else ("numpy",)


def set_backend(name: str | None) -> str:
    """Pin the backend (``cython``/``numpy``), or reset to auto with None."""
    global _active
    if name is None:
        _active = None
        return active_backend()
    name = name.lower()
    if name not in ("cython", "numpy"):
        raise ValueError(f"unknown kernel backend {name!r}")
    if name == "cython" and _kernel_cy is None:
        raise RuntimeError("cython kernel requested but the extension is not built")
    _active = name
    return name


def active_backend() -> str:
    if _active is not None:
        return _active
    requested = os.environ.get("SFWM_KERNEL", "auto").lower()
    if requested == "numpy":
        return "numpy"
    if requested == "cython":
        if _kernel_cy is None:
            raise RuntimeError("SFWM_KERNEL=cython but the extension is not built")
        return "cython"
    return "cython" if _kernel_cy is not None else "numpy"


def susceptibility_sums(delta_s, omega_d, weights, zeroth, params, backend: str | None = None):
    """Dispatch to the chosen backend; see the backend modules for the math."""
    name = backend or active_backend()
    if name == "numpy":
        return _kernel_numpy.susceptibility_sums(delta_s, omega_d, weights, zeroth, params)
    if _kernel_cy is None:
        raise RuntimeError("cython kernel requested but the extension is not built")
    import numpy as np

    return _kernel_cy.susceptibility_sums(
        np.ascontiguousarray(delta_s, dtype=float),
        np.ascontiguousarray(omega_d, dtype=float),
        np.ascontiguousarray(weights, dtype=float),
        np.ascontiguousarray(zeroth["rho21"], dtype=complex),
        np.ascontiguousarray(zeroth["rho42"], dtype=complex),
        np.ascontiguousarray(zeroth["rho41"], dtype=complex),
        np.ascontiguousarray(zeroth["pop11_33"], dtype=float),
        np.ascontiguousarray(zeroth["pop33_44"], dtype=float),
        params.gamma2,
        params.gamma3,
        params.gamma4,
        params.gamma_dec,
        params.omega_c,
        params.omega_p,
        params.delta_c,
        params.delta_p,
        params.k_ratio_pc,
        params.k_ratio_sc,
    )
