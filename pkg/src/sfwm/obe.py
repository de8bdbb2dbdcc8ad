"""Steady-state optical Bloch equations for one velocity class.

The density-matrix equations split into a zeroth-order block driven only by
the coupling and pump fields (populations plus the coherences rho21, rho42,
rho41) and a first-order block linear in the signal/idler fields (rho43,
rho32, rho31).  Both blocks are assembled as dense real linear systems and
solved by direct factorization with partial pivoting; at these sizes (10x10
and 12x12) robustness near-resonance matters far more than speed, and the
hot grid evaluation lives in :mod:`sfwm.kernel` instead.

Sign and damping conventions follow the rotating-frame equations for a
velocity class with Doppler shift ``omega_d`` on the coupling transition:
co-propagating fields see shifts scaled by their wavenumber ratios, state
|4> decays half to |2> and half to |3>, states |2> and |3> decay only to
|1>, and the decoherence rate ``gamma_dec`` damps every optical coherence.

First-order responses treat the signal/idler Rabi frequencies and their
conjugates as four independent formal drives; the returned susceptibility
derivatives are the linear coefficients of the respective drives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .params import PhysicalParams

#: Condition-number threshold beyond which a solve is refused as singular.
CONDITION_LIMIT = 1.0e12

#: Names of the four formal first-order drives.
DRIVES = ("omega_s", "omega_s_conj", "omega_i", "omega_i_conj")


class SingularSystemError(RuntimeError):
    """The Bloch system for a velocity class is numerically singular."""

    def __init__(self, which: str, omega_d: float, cond: float):
        super().__init__(
            f"{which} Bloch system is singular for velocity class "
            f"omega_d={omega_d:g} Gamma (condition estimate {cond:.3g})"
        )
        self.omega_d = omega_d
        self.cond = cond


@dataclass(frozen=True)
class ZerothOrderSolution:
    """Steady-state populations and pump/coupling coherences."""

    rho11: float
    rho22: float
    rho33: float
    rho44: float
    rho21: complex
    rho42: complex
    rho41: complex

    @property
    def populations(self) -> tuple[float, float, float, float]:
        return (self.rho11, self.rho22, self.rho33, self.rho44)


@dataclass(frozen=True)
class SusceptibilityTriple:
    """Perturbative response coefficients at one (omega_d, delta_s) point.

    ``d_rho31_d_omega_s_conj`` is the cross-coupling generating the idler
    from the signal (the four-wave-mixing channel); ``d_rho43_d_omega_s``
    and ``d_rho31_d_omega_i`` are the signal and idler self-couplings.
    """

    d_rho31_d_omega_s_conj: complex
    d_rho43_d_omega_s: complex
    d_rho31_d_omega_i: complex


def _rates(params: PhysicalParams, omega_d: float):
    """Per-velocity detunings and damping rates shared by both blocks."""
    delta21 = params.delta_c - omega_d
    delta42 = params.delta_p - params.k_ratio_pc * omega_d
    g21 = 0.5 * params.gamma2 + params.gamma_dec
    g42 = 0.5 * (params.gamma2 + params.gamma4) + params.gamma_dec
    g41 = 0.5 * params.gamma4 + params.gamma_dec
    return delta21, delta42, g21, g42, g41


def zeroth_order_system(params: PhysicalParams, omega_d: float):
    """Real 10x10 system for the zeroth-order steady state.

    Unknown order: [rho11, rho22, rho33, rho44,
    Re rho21, Im rho21, Re rho42, Im rho42, Re rho41, Im rho41].
    The trace-normalization row replaces the redundant rho11 rate equation.
    """
    oc, op = params.omega_c, params.omega_p
    delta21, delta42, g21, g42, g41 = _rates(params, omega_d)
    delta41 = delta21 + delta42

    a = np.zeros((10, 10))
    b = np.zeros(10)

    a[0, 0:4] = 1.0
    b[0] = 1.0

    a[1, 1] = -params.gamma2
    a[1, 3] = 0.5 * params.gamma4
    a[1, 5] = oc
    a[1, 7] = -op

    a[2, 2] = -params.gamma3
    a[2, 3] = 0.5 * params.gamma4

    a[3, 3] = -params.gamma4
    a[3, 7] = op

    a[4, 4] = -g21
    a[4, 5] = -delta21
    a[4, 9] = -0.5 * op

    a[5, 4] = delta21
    a[5, 5] = -g21
    a[5, 0] = 0.5 * oc
    a[5, 1] = -0.5 * oc
    a[5, 8] = 0.5 * op

    a[6, 6] = -g42
    a[6, 7] = -delta42
    a[6, 9] = 0.5 * oc

    a[7, 6] = delta42
    a[7, 7] = -g42
    a[7, 1] = 0.5 * op
    a[7, 3] = -0.5 * op
    a[7, 8] = -0.5 * oc

    a[8, 8] = -g41
    a[8, 9] = -delta41
    a[8, 5] = -0.5 * op
    a[8, 7] = 0.5 * oc

    a[9, 8] = delta41
    a[9, 9] = -g41
    a[9, 4] = 0.5 * op
    a[9, 6] = -0.5 * oc

    return a, b


def solve_zeroth_order(params: PhysicalParams, omega_d: float) -> ZerothOrderSolution:
    """Solve the zeroth-order steady state for one velocity class."""
    if not math.isfinite(omega_d):
        raise ValueError(f"omega_d must be finite, got {omega_d!r}")
    a, b = zeroth_order_system(params, omega_d)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularSystemError("zeroth-order", omega_d, cond)
    x = scipy.linalg.solve(a, b)
    return ZerothOrderSolution(
        rho11=x[0],
        rho22=x[1],
        rho33=x[2],
        rho44=x[3],
        rho21=complex(x[4], x[5]),
        rho42=complex(x[6], x[7]),
        rho41=complex(x[8], x[9]),
    )


def zeroth_order_residual(sol: ZerothOrderSolution, params: PhysicalParams, omega_d: float) -> float:
    """Max-norm residual of the steady-state equations under back-substitution.

    Evaluates the rate and coherence equations term by term, independently of
    the matrix assembly used by the solver.
    """
    oc, op = params.omega_c, params.omega_p
    delta21, delta42, g21, g42, g41 = _rates(params, omega_d)
    r11, r22, r33, r44 = sol.populations
    r21, r42, r41 = sol.rho21, sol.rho42, sol.rho41

    res = [
        r11 + r22 + r33 + r44 - 1.0,
        -params.gamma2 * r22 + 0.5 * params.gamma4 * r44
        + 0.5j * (oc * r21.conjugate() - oc * r21 + op * r42 - op * r42.conjugate()),
        -params.gamma3 * r33 + 0.5 * params.gamma4 * r44,
        -params.gamma4 * r44 + 0.5j * (op * r42.conjugate() - op * r42),
        (1j * delta21 - g21) * r21 + 0.5j * (oc * (r11 - r22) + op * r41),
        (1j * delta42 - g42) * r42 + 0.5j * (op * (r22 - r44) - oc * r41),
        (1j * (delta21 + delta42) - g41) * r41 + 0.5j * (op * r21 - oc * r42),
    ]
    return max(abs(r) for r in res)


def solve_zeroth_order_batch(params: PhysicalParams, omega_d: np.ndarray) -> dict:
    """Vectorized zeroth-order solve over an array of velocity classes.

    Returns the zeroth-order quantities the first-order drives need, as
    arrays over ``omega_d``.  Used by the grid kernels; the per-class
    :func:`solve_zeroth_order` remains the reference path.
    """
    omega_d = np.asarray(omega_d, dtype=float)
    n = omega_d.size
    oc, op = params.omega_c, params.omega_p
    delta21 = params.delta_c - omega_d
    delta42 = params.delta_p - params.k_ratio_pc * omega_d
    delta41 = delta21 + delta42
    g21 = 0.5 * params.gamma2 + params.gamma_dec
    g42 = 0.5 * (params.gamma2 + params.gamma4) + params.gamma_dec
    g41 = 0.5 * params.gamma4 + params.gamma_dec

    a = np.zeros((n, 10, 10))
    b = np.zeros((n, 10))
    a[:, 0, 0:4] = 1.0
    b[:, 0] = 1.0
    a[:, 1, 1] = -params.gamma2
    a[:, 1, 3] = 0.5 * params.gamma4
    a[:, 1, 5] = oc
    a[:, 1, 7] = -op
    a[:, 2, 2] = -params.gamma3
    a[:, 2, 3] = 0.5 * params.gamma4
    a[:, 3, 3] = -params.gamma4
    a[:, 3, 7] = op
    a[:, 4, 4] = -g21
    a[:, 4, 5] = -delta21
    a[:, 4, 9] = -0.5 * op
    a[:, 5, 4] = delta21
    a[:, 5, 5] = -g21
    a[:, 5, 0] = 0.5 * oc
    a[:, 5, 1] = -0.5 * oc
    a[:, 5, 8] = 0.5 * op
    a[:, 6, 6] = -g42
    a[:, 6, 7] = -delta42
    a[:, 6, 9] = 0.5 * oc
    a[:, 7, 6] = delta42
    a[:, 7, 7] = -g42
    a[:, 7, 1] = 0.5 * op
    a[:, 7, 3] = -0.5 * op
    a[:, 7, 8] = -0.5 * oc
    a[:, 8, 8] = -g41
    a[:, 8, 9] = -delta41
    a[:, 8, 5] = -0.5 * op
    a[:, 8, 7] = 0.5 * oc
    a[:, 9, 8] = delta41
    a[:, 9, 9] = -g41
    a[:, 9, 4] = 0.5 * op
    a[:, 9, 6] = -0.5 * oc

    try:
        x = np.linalg.solve(a, b[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("zeroth-order (batched)", float("nan"), float("inf")) from exc

    trace_err = np.max(np.abs(x[:, 0] + x[:, 1] + x[:, 2] + x[:, 3] - 1.0))
    if not np.isfinite(trace_err) or trace_err > 1.0e-8:
        raise SingularSystemError("zeroth-order (batched)", float(omega_d.flat[0]), float("inf"))

    return {
        "rho21": x[:, 4] + 1j * x[:, 5],
        "rho42": x[:, 6] + 1j * x[:, 7],
        "rho41": x[:, 8] + 1j * x[:, 9],
        "pop11_33": x[:, 0] - x[:, 2],
        "pop33_44": x[:, 2] - x[:, 3],
        "rho44": x[:, 3],
    }


def first_order_detunings(params: PhysicalParams, omega_d: float, delta_s: float):
    """Complex diagonal coefficients d43, d32, d31 of the first-order block."""
    kp, ks = params.k_ratio_pc, params.k_ratio_sc
    g = params.gamma_dec
    d43 = 1j * (delta_s - ks * omega_d) - (0.5 * (params.gamma3 + params.gamma4) + g)
    d32 = 1j * (params.delta_p - kp * omega_d - delta_s + ks * omega_d) - (
        0.5 * (params.gamma2 + params.gamma3) + g
    )
    d31 = 1j * (
        params.delta_c - omega_d + params.delta_p - kp * omega_d - delta_s + ks * omega_d
    ) - (0.5 * params.gamma3 + g)
    return d43, d32, d31


def first_order_system(zeroth: ZerothOrderSolution, params: PhysicalParams, omega_d: float, delta_s: float):
    """Complex 6x6 first-order system and per-drive right-hand sides.

    Unknown order: [rho43, rho32, rho31, rho43*, rho32*, rho31*], with the
    starred entries treated as independent unknowns and the conjugate
    equations filling rows 3-5.  Returns ``(m, rhs)`` where ``rhs`` maps each
    formal drive name to its unit-drive right-hand side.
    """
    oc, op = params.omega_c, params.omega_p
    d43, d32, d31 = first_order_detunings(params, omega_d, delta_s)

    m = np.zeros((6, 6), dtype=complex)
    m[0, 0] = d43
    m[0, 4] = 0.5j * op
    m[1, 1] = d32
    m[1, 2] = -0.5j * oc
    m[1, 3] = -0.5j * op
    m[2, 2] = d31
    m[2, 1] = -0.5j * oc
    m[3, 3] = d43.conjugate()
    m[3, 1] = -0.5j * op
    m[4, 4] = d32.conjugate()
    m[4, 5] = 0.5j * oc
    m[4, 0] = 0.5j * op
    m[5, 5] = d31.conjugate()
    m[5, 4] = 0.5j * oc

    p34 = zeroth.rho33 - zeroth.rho44
    p13 = zeroth.rho11 - zeroth.rho33
    r21, r42, r41 = zeroth.rho21, zeroth.rho42, zeroth.rho41

    rhs = {
        "omega_s": np.array(
            [-0.5j * p34, 0.0, 0.0, 0.0, 0.5j * r42.conjugate(), 0.5j * r41.conjugate()],
            dtype=complex,
        ),
        "omega_s_conj": np.array(
            [0.0, -0.5j * r42, -0.5j * r41, 0.5j * p34, 0.0, 0.0], dtype=complex
        ),
        "omega_i": np.array(
            [0.0, -0.5j * r21.conjugate(), -0.5j * p13, -0.5j * r41.conjugate(), 0.0, 0.0],
            dtype=complex,
        ),
        "omega_i_conj": np.array(
            [0.5j * r41, 0.0, 0.0, 0.0, 0.5j * r21, 0.5j * p13], dtype=complex
        ),
    }
    return m, rhs


def _solve_complex_as_real(m: np.ndarray, b: np.ndarray, omega_d: float, which: str) -> np.ndarray:
    """Solve the complex system via its real 2n x 2n expansion, with a
    condition check to refuse near-singular classes loudly."""
    n = m.shape[0]
    a = np.zeros((2 * n, 2 * n))
    a[:n, :n] = m.real
    a[:n, n:] = -m.imag
    a[n:, :n] = m.imag
    a[n:, n:] = m.real
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularSystemError(which, omega_d, cond)
    b = np.atleast_2d(b.T).T  # (n, k)
    rb = np.vstack([b.real, b.imag])
    x = scipy.linalg.solve(a, rb)
    return x[:n] + 1j * x[n:]


def first_order_unit_responses(
    zeroth: ZerothOrderSolution, params: PhysicalParams, omega_d: float, delta_s: float
) -> dict:
    """Full 6-component response vector for each unit formal drive."""
    m, rhs = first_order_system(zeroth, params, omega_d, delta_s)
    b = np.stack([rhs[name] for name in DRIVES], axis=1)
    x = _solve_complex_as_real(m, b, omega_d, "first-order")
    return {name: x[:, i] for i, name in enumerate(DRIVES)}


def solve_first_order(
    zeroth: ZerothOrderSolution, params: PhysicalParams, omega_d: float, delta_s: float
) -> SusceptibilityTriple:
    """Susceptibility derivatives for one (omega_d, delta_s) point."""
    responses = first_order_unit_responses(zeroth, params, omega_d, delta_s)
    return SusceptibilityTriple(
        d_rho31_d_omega_s_conj=complex(responses["omega_s_conj"][2]),
        d_rho43_d_omega_s=complex(responses["omega_s"][0]),
        d_rho31_d_omega_i=complex(responses["omega_i"][2]),
    )


def first_order_residual(
    sol6: np.ndarray,
    drives: dict,
    zeroth: ZerothOrderSolution,
    params: PhysicalParams,
    omega_d: float,
    delta_s: float,
) -> float:
    """Max-norm residual of the first-order equations under back-substitution.

    ``sol6`` holds [rho43, rho32, rho31, rho43*, rho32*, rho31*] and
    ``drives`` the formal drive values {omega_s, omega_s_conj, omega_i,
    omega_i_conj}.  Terms are transcribed directly from the equations of
    motion rather than reusing the solver's matrix.
    """
    oc, op = params.omega_c, params.omega_p
    d43, d32, d31 = first_order_detunings(params, omega_d, delta_s)
    os_, osc = drives["omega_s"], drives["omega_s_conj"]
    oi, oic = drives["omega_i"], drives["omega_i_conj"]
    p34 = zeroth.rho33 - zeroth.rho44
    p13 = zeroth.rho11 - zeroth.rho33
    r21, r42, r41 = zeroth.rho21, zeroth.rho42, zeroth.rho41
    x43, x32, x31, c43, c32, c31 = sol6

    res = [
        d43 * x43 + 0.5j * (os_ * p34 + op * c32 - oic * r41),
        d32 * x32 + 0.5j * (osc * r42 + oi * r21.conjugate() - oc * x31 - op * c43),
        d31 * x31 + 0.5j * (oi * p13 - oc * x32 + osc * r41),
        d43.conjugate() * c43 - 0.5j * (osc * p34 + op * x32 - oi * r41.conjugate()),
        d32.conjugate() * c32 - 0.5j * (os_ * r42.conjugate() + oic * r21 - oc * c31 - op * x43),
        d31.conjugate() * c31 - 0.5j * (oic * p13 - oc * c32 + os_ * r41.conjugate()),
    ]
    return max(abs(r) for r in res)
