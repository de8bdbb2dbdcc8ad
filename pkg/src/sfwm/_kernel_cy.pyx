# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled susceptibility kernel.

Same mathematics as ``sfwm._kernel_numpy`` (two-right-hand-side Cramer solve
of the tridiagonal first-order block per velocity/frequency node), written as
plain C loops over the (velocity x frequency) grid.  Velocity nodes are
summed in ascending index order so the output is reproducible.
"""

import numpy as np


def susceptibility_sums(
    double[::1] delta_s,
    double[::1] omega_d,
    double[::1] weights,
    double complex[::1] rho21,
    double complex[::1] rho42,
    double complex[::1] rho41,
    double[::1] pop11_33,
    double[::1] pop33_44,
    double gamma2,
    double gamma3,
    double gamma4,
    double gamma_dec,
    double omega_c,
    double omega_p,
    double delta_c,
    double delta_p,
    double k_ratio_pc,
    double k_ratio_sc,
):
    """Weighted velocity sums of the three response coefficients."""
    cdef Py_ssize_t nd = delta_s.shape[0]
    cdef Py_ssize_t nw = omega_d.shape[0]

    kappa_arr = np.zeros(nd, dtype=np.complex128)
    zeta_arr = np.zeros(nd, dtype=np.complex128)
    xi_arr = np.zeros(nd, dtype=np.complex128)
    cdef double complex[::1] kappa = kappa_arr
    cdef double complex[::1] zeta = zeta_arr
    cdef double complex[::1] xi = xi_arr

    cdef double c1 = 0.5 * (gamma3 + gamma4) + gamma_dec
    cdef double c2 = 0.5 * (gamma2 + gamma3) + gamma_dec
    cdef double c3 = 0.5 * gamma3 + gamma_dec
    cdef double complex I = 1j
    cdef double complex u = -0.5j * omega_p
    cdef double complex v = -0.5j * omega_c
    cdef double qc = 0.25 * omega_c * omega_c
    cdef double qp = 0.25 * omega_p * omega_p
    cdef double qpc = 0.25 * omega_p * omega_c

    cdef Py_ssize_t iw, idx
    cdef double w, s1, s2, s3, ds
    cdef double complex bs1, bs2, bs3, bi1, bi2, bi3
    cdef double complex a1, a2, a3, t1, inv_det

    for iw in range(nw):
        w = weights[iw]
        s1 = k_ratio_sc * omega_d[iw]
        s2 = delta_p - (k_ratio_pc - k_ratio_sc) * omega_d[iw]
        s3 = delta_c + delta_p - (1.0 + k_ratio_pc - k_ratio_sc) * omega_d[iw]
        bs1 = 0.5 * I * pop33_44[iw]
        bs2 = -0.5 * I * rho42[iw]
        bs3 = -0.5 * I * rho41[iw]
        bi1 = -0.5 * I * rho41[iw].conjugate()
        bi2 = -0.5 * I * rho21[iw].conjugate()
        bi3 = -0.5 * I * pop11_33[iw]
        for idx in range(nd):
            ds = delta_s[idx]
            a1 = -I * (ds - s1) - c1
            a2 = I * (s2 - ds) - c2
            a3 = I * (s3 - ds) - c3
            t1 = a2 * a3 + qc
            inv_det = 1.0 / (a1 * t1 + qp * a3)
            kappa[idx] = kappa[idx] + w * ((a1 * (a2 * bs3 - v * bs2) + qp * bs3 - qpc * bs1) * inv_det)
            zeta[idx] = zeta[idx] + w * ((bs1 * t1 - u * (bs2 * a3 - v * bs3)) * inv_det)
            xi[idx] = xi[idx] + w * ((a1 * (a2 * bi3 - v * bi2) + qp * bi3 - qpc * bi1) * inv_det)

    return kappa_arr, np.conj(zeta_arr), xi_arr
