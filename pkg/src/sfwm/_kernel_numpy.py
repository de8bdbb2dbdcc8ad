"""Pure-numpy implementation of the hot susceptibility kernel.

For every velocity node the first-order block decouples into two conjugate
tridiagonal 3x3 complex systems, so the three response coefficients come
from one 3x3 solve with two right-hand sides:

* unknowns (rho43*, rho32, rho31) with matrix
  ``[[conj(d43), -i*Op/2, 0], [-i*Op/2, d32, -i*Oc/2], [0, -i*Oc/2, d31]]``;
* the signal-conjugate drive gives the cross-coupling (rho31 component) and,
  after conjugation, the signal self-coupling (rho43* component);
* the idler drive gives the idler self-coupling (rho31 component).

Cramer's rule on the tridiagonal matrix is used verbatim here and in the
compiled kernel; :mod:`sfwm.obe` provides the independent dense solver both
are tested against.  Summation runs over velocity nodes in ascending order
in fixed-size chunks, so results are reproducible run to run.
"""

from __future__ import annotations

import numpy as np

#: Velocity nodes per broadcast block (fixed: summation order is part of the
#: deterministic output contract).
CHUNK = 8


def susceptibility_sums(delta_s, omega_d, weights, zeroth, params):
    """Weighted sums of the three response coefficients over velocity nodes.

    Returns ``(kappa, zeta, xi)`` arrays over ``delta_s`` holding
    ``sum_w weights[w] * coefficient(w, delta_s)`` with no further prefactor.
    """
    delta_s = np.asarray(delta_s, dtype=float)
    omega_d = np.asarray(omega_d, dtype=float)
    weights = np.asarray(weights, dtype=float)
    nd = delta_s.size

    oc, op = params.omega_c, params.omega_p
    kp, ks = params.k_ratio_pc, params.k_ratio_sc
    g = params.gamma_dec
    c1 = 0.5 * (params.gamma3 + params.gamma4) + g
    c2 = 0.5 * (params.gamma2 + params.gamma3) + g
    c3 = 0.5 * params.gamma3 + g
    u = -0.5j * op  # off-diagonal pump coupling
    v = -0.5j * oc  # off-diagonal coupling-field coupling
    qc = 0.25 * oc * oc
    qp = 0.25 * op * op
    qpc = 0.25 * op * oc

    s1_all = ks * omega_d
    s2_all = params.delta_p - (kp - ks) * omega_d
    s3_all = params.delta_c + params.delta_p - (1.0 + kp - ks) * omega_d

    bs1_all = 0.5j * zeroth["pop33_44"]
    bs2_all = -0.5j * zeroth["rho42"]
    bs3_all = -0.5j * zeroth["rho41"]
    bi1_all = -0.5j * np.conj(zeroth["rho41"])
    bi2_all = -0.5j * np.conj(zeroth["rho21"])
    bi3_all = -0.5j * zeroth["pop11_33"]

    kappa = np.zeros(nd, dtype=complex)
    zeta_raw = np.zeros(nd, dtype=complex)
    xi = np.zeros(nd, dtype=complex)

    for start in range(0, omega_d.size, CHUNK):
        sl = slice(start, min(start + CHUNK, omega_d.size))
        w = weights[sl]
        col = np.s_[:, None]

        a1 = -1j * (delta_s - s1_all[sl][col]) - c1
        a2 = 1j * (s2_all[sl][col] - delta_s) - c2
        a3 = 1j * (s3_all[sl][col] - delta_s) - c3

        t1 = a2 * a3 + qc
        inv_det = 1.0 / (a1 * t1 + qp * a3)

        bs1 = bs1_all[sl][col]
        bs2 = bs2_all[sl][col]
        bs3 = bs3_all[sl][col]
        kappa_blk = (a1 * (a2 * bs3 - v * bs2) + qp * bs3 - qpc * bs1) * inv_det
        zeta_blk = (bs1 * t1 - u * (bs2 * a3 - v * bs3)) * inv_det

        bi1 = bi1_all[sl][col]
        bi2 = bi2_all[sl][col]
        bi3 = bi3_all[sl][col]
        xi_blk = (a1 * (a2 * bi3 - v * bi2) + qp * bi3 - qpc * bi1) * inv_det

        kappa += np.einsum("w,wd->d", w, kappa_blk)
        zeta_raw += np.einsum("w,wd->d", w, zeta_blk)
        xi += np.einsum("w,wd->d", w, xi_blk)

    return kappa, np.conj(zeta_raw), xi
