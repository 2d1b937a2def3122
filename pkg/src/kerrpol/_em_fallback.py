"""Pure-Python twin of the compiled Euler-Maruyama kernel.

Selected automatically when the extension module is unavailable (or forced
via ``KERRPOL_PURE_PYTHON=1``).  Keeps the exact operation order of the
compiled loop; the quadrature projection is vectorized after the sequential
recursion, with elementwise operations matching the compiled path.
"""

from __future__ import annotations

import math

import numpy as np


def integrate_em(m11, m12, kappa, dt, noise, cos_theta, sin_theta,
                 a0, store_field):
    """One Euler-Maruyama sweep over a block of noise increments.

    Same contract as the compiled kernel: returns (X, field, a_final).
    """
    n = noise.shape[0]
    trajectory = np.empty(n, dtype=np.complex128)
    a = complex(a0)
    dtm11 = complex(dt * m11)
    dtm12 = complex(dt * m12)
    sq = math.sqrt(2.0 * kappa)
    for k in range(n):
        trajectory[k] = a
        xi = complex(noise[k])
        a = a + (dtm11 * a + dtm12 * a.conjugate()) + sq * xi
    b = sq * trajectory - noise * (1.0 / dt)
    x = 2.0 * (np.outer(b.real, cos_theta) + np.outer(b.imag, sin_theta))
    field = trajectory if store_field else np.empty(0, dtype=np.complex128)
    return x, field, a
