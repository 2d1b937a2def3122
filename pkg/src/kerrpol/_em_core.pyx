# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Euler-Maruyama kernel for the fluctuation trajectories.

Same call signature and operation order as the pure-Python twin in
``_em_fallback``; the recursion is contractive, so the two backends agree to
rounding noise over arbitrarily long runs.
"""

import numpy as np

from libc.math cimport sqrt


def integrate_em(double complex m11, double complex m12, double kappa,
                 double dt, double complex[::1] noise,
                 double[::1] cos_theta, double[::1] sin_theta,
                 double complex a0, bint store_field):
    """One Euler-Maruyama sweep over a block of noise increments.

    Returns (X, field, a_final): X[k, j] is the output quadrature sample
    2*Re(e^{-i theta_j} b_k) with b_k = sqrt(2 kappa)*a_k - noise_k/dt, field
    is the intracavity trajectory (empty unless requested), a_final seeds the
    next block.
    """
    cdef Py_ssize_t n = noise.shape[0]
    cdef Py_ssize_t n_theta = cos_theta.shape[0]
    x_arr = np.empty((n, n_theta), dtype=np.float64)
    field_arr = np.empty(n if store_field else 0, dtype=np.complex128)
    cdef double[:, ::1] x = x_arr
    cdef double complex[::1] field = field_arr
    cdef double complex a = a0
    cdef double complex b, dtm11 = dt * m11, dtm12 = dt * m12
    cdef double sq = sqrt(2.0 * kappa), inv_dt = 1.0 / dt
    cdef double br, bi
    cdef Py_ssize_t k, j
    for k in range(n):
        if store_field:
            field[k] = a
        b = sq * a - noise[k] * inv_dt
        br = b.real
        bi = b.imag
        for j in range(n_theta):
            x[k, j] = 2.0 * (br * cos_theta[j] + bi * sin_theta[j])
        a = a + (dtm11 * a + dtm12 * a.conjugate()) + sq * noise[k]
    return x_arr, field_arr, a
