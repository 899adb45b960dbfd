"""Independent cross-checks shared by the test suite.

Everything here is built from first principles on top of scipy.special and
scipy.integrate only.  None of it goes through the package's own dispersion
relation or power normalization, so tests that compare against these helpers
are not circular.
"""

import numpy as np
from scipy import integrate, special

from fibertrap import modes


def boundary_determinant(fiber, wavelength_nm, nu, neff):
    """Determinant of the tangential continuity conditions at the interface.

    Interior fields carry J_nu(h r), exterior fields K_nu(q r); matching
    E_z, H_z, E_phi and H_phi at r = a for azimuthal order nu gives a 4x4
    homogeneous system whose determinant vanishes exactly at the effective
    index of a guided mode.  Written in the scaled variables u = h a and
    w = q a the determinant is real.
    """
    v = modes.v_parameter(fiber, wavelength_nm)
    n1 = fiber.n_core
    n2 = fiber.n_clad
    na = np.sqrt(n1 ** 2 - n2 ** 2)
    u = v * np.sqrt(n1 ** 2 - neff ** 2) / na
    w = v * np.sqrt(neff ** 2 - n2 ** 2) / na
    jn = special.jv(nu, u)
    jp = special.jvp(nu, u)
    kn = special.kv(nu, w)
    kp = special.kvp(nu, w)
    b = neff
    mat = np.array([
        [jn, 0.0, -kn, 0.0],
        [0.0, jn, 0.0, -kn],
        [nu * b * jn / u ** 2, -jp / u, nu * b * kn / w ** 2, -kp / w],
        [-n1 ** 2 * jp / u, nu * b * jn / u ** 2,
         -n2 ** 2 * kp / w, nu * b * kn / w ** 2],
    ])
    return float(np.linalg.det(mat))


def determinant_root(fiber, wavelength_nm, nu, lo, hi):
    """Root of the boundary determinant bracketed by (lo, hi) in n_eff."""
    from scipy.optimize import brentq
    return brentq(
        lambda n: boundary_determinant(fiber, wavelength_nm, nu, n),
        lo, hi, xtol=1e-13, rtol=8.9e-16)


def mode_power_quadrature(sol):
    """Axial Poynting flux of a solved mode by direct quadrature, in mW.

    Uniform trapezoid over phi (exact for the finite trigonometric content
    of |E x H*|_z) and adaptive radial quadrature split at the interface.
    The exterior integral is truncated where K_nu has decayed by e^-40.
    """
    phi = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)

    def ring(r_nm):
        e = modes.e_field(sol, r_nm, phi, 0.0)
        h = modes.h_field(sol, r_nm, phi, 0.0)
        sz = 0.5 * np.real(e[..., 0] * np.conj(h[..., 1])
                           - e[..., 1] * np.conj(h[..., 0]))
        return float(sz.mean()) * 2.0 * np.pi * r_nm

    a = sol.fiber.radius_nm
    outer = a + 40.0 / sol.q_per_nm
    core, _ = integrate.quad(ring, 0.0, a, epsabs=0.0, epsrel=1e-12, limit=200)
    clad, _ = integrate.quad(ring, a, outer, epsabs=0.0, epsrel=1e-12, limit=200)
    # fields are V/m and A/m on an nm^2 area element
    return (core + clad) * 1e-18 * 1e3
