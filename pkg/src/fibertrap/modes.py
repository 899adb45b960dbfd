"""Guided modes of a two-layer step-index cylindrical fiber.

Solves the exact vectorial eigenvalue problem for the propagation constant,
censuses which modes propagate at a given V parameter, and evaluates the full
complex E and H fields inside and outside the core. Conventions:

* harmonic dependence exp(i(omega t - beta z)), fields in V/m and A/m;
* lengths at the interface in nm, propagation constants available per nm
  and per m;
* each solution carries one real normalization constant ("amplitude"); power
  normalization rescales it so the axial Poynting flux equals a target power.

The hybrid-mode fields reduce, outside the core, to combinations
(1 -/+ nu s) K_{nu -/+ 1}(q r) with the usual dimensionless parameter
s = (1/u^2 + 1/w^2) / (J'_nu(u)/(u J_nu(u)) + K'_nu(w)/(w K_nu(w))),
which is what fixes the azimuthal polarization structure of the evanescent
field and therefore the interference pattern of two-mode superpositions.

Relative sign conventions between mode families are not physical on their
own (each mode carries a free normalization constant); they are chosen here
so that, at zero relative phase, two-mode trapping minima form at z = 0
modulo one beat length at the conventional azimuths: TE01+HE11 at
phi = pi/2, HE11+HE21 at phi = 0, TE01+HE21 at phi = 3 pi/4 and -pi/4.
Concretely the TE01 constant is taken negative relative to the textbook
closed form, and the HE21 axial amplitude is -i times the HE11 one.
"""

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.constants import c as _C0
from scipy.constants import epsilon_0 as _EPS0
from scipy.constants import mu_0 as _MU0

from . import numerics
from .errors import ConvergenceError, CutoffError

_SCAN_POINTS = 2000
_NEFF_MARGIN = 1e-9
# Mode census covers azimuthal orders 0..3: enough for every branch up to the
# seventh guided mode of this fiber family.
_HYBRID_ORDERS = (1, 2, 3)
_SWEEP_MODES = ("HE11", "TE01", "TM01", "HE21", "EH11", "HE31", "HE12")
# Clamp radii to avoid 0/0 in the nu/r interior terms; 1e-12 nm is far below
# any physical resolution of interest.
_R_FLOOR_NM = 1e-12


@dataclass(frozen=True)
class FiberSpec:
    """Step-index fiber geometry and materials."""

    radius_nm: float = 400.0
    n_core: float = 1.452
    n_clad: float = 1.0

    def __post_init__(self):
        if self.radius_nm <= 0.0:
            raise ValueError("fiber radius must be positive")
        if not self.n_core > self.n_clad > 0.0:
            raise ValueError("require n_core > n_clad > 0")


@dataclass(frozen=True)
class LightSpec:
    """Vacuum wavelength and total optical power of one trapping configuration."""

    wavelength_nm: float
    power_mw: float

    def __post_init__(self):
        if self.wavelength_nm <= 0.0:
            raise ValueError("wavelength must be positive")
        if self.power_mw < 0.0:
            raise ValueError("power must be non-negative")


@dataclass(frozen=True)
class ModeId:
    """Identifies one guided mode branch: family, azimuthal order, radial index.

    orientation is the azimuthal rotation angle phi0 of the mode pattern;
    it is meaningful for hybrid modes only and ignored for TE/TM.
    """

    family: str
    nu: int
    m: int
    orientation: float = 0.0

    def __post_init__(self):
        if self.family not in ("HE", "EH", "TE", "TM"):
            raise ValueError(f"unknown mode family {self.family!r}")
        if self.family in ("TE", "TM") and self.nu != 0:
            raise ValueError("TE/TM modes have azimuthal order 0")
        if self.family in ("HE", "EH") and self.nu < 1:
            raise ValueError("hybrid modes need azimuthal order >= 1")
        if self.m < 1:
            raise ValueError("radial index starts at 1")

    @property
    def name(self):
        return f"{self.family}{self.nu}{self.m}"


def parse_mode_name(name, orientation=0.0):
    """Parse a label like "HE11" or "TE01" into a ModeId."""
    text = name.strip().upper()
    if len(text) != 4 or text[:2] not in ("HE", "EH", "TE", "TM"):
        raise ValueError(f"unrecognized mode name {name!r}")
    try:
        nu, m = int(text[2]), int(text[3])
    except ValueError as exc:
        raise ValueError(f"unrecognized mode name {name!r}") from exc
    nu_ok = nu == 0 if text[:2] in ("TE", "TM") else 1 <= nu <= 3
    if not nu_ok or m < 1:
        raise ValueError(f"unsupported mode name {name!r}")
    return ModeId(text[:2], nu, m, orientation)


def v_parameter(fiber, wavelength_nm):
    """Normalized frequency V = (2 pi a / lambda) sqrt(n1^2 - n2^2)."""
    if wavelength_nm <= 0.0:
        raise ValueError("wavelength must be positive")
    na = np.sqrt(fiber.n_core ** 2 - fiber.n_clad ** 2)
    return 2.0 * np.pi * fiber.radius_nm / wavelength_nm * na


def _uw(v, n1, n2, neff):
    """Dimensionless core/cladding transverse arguments at the boundary."""
    nn = n1 * n1 - n2 * n2
    u = v * np.sqrt(np.maximum(n1 * n1 - neff * neff, 0.0) / nn)
    w = v * np.sqrt(np.maximum(neff * neff - n2 * n2, 0.0) / nn)
    return u, w


def _jp(nu, x):
    return numerics.bessel_j_deriv(nu, x)


def _kp(nu, x):
    return numerics.bessel_k_deriv(nu, x)


def _char_te(v, n1, n2, neff):
    """Rationalized TE0m characteristic function (pole-free in neff)."""
    u, w = _uw(v, n1, n2, neff)
    return (w * numerics.bessel_j(1, u) * numerics.bessel_k(0, w)
            + u * numerics.bessel_j(0, u) * numerics.bessel_k(1, w))


def _char_tm(v, n1, n2, neff):
    """Rationalized TM0m characteristic function."""
    u, w = _uw(v, n1, n2, neff)
    return (n1 * n1 * w * numerics.bessel_j(1, u) * numerics.bessel_k(0, w)
            + n2 * n2 * u * numerics.bessel_j(0, u) * numerics.bessel_k(1, w))


def _char_hybrid(nu, v, n1, n2, neff):
    """Rationalized hybrid characteristic function for azimuthal order nu.

    Both factors of the two-factor dispersion relation are multiplied by
    u J_nu(u) w K_nu(w); the right-hand side picks up the square of that, so
    roots of this function are exactly the hybrid eigenvalues and the poles at
    J_nu(u) = 0 are removed.
    """
    u, w = _uw(v, n1, n2, neff)
    jn = numerics.bessel_j(nu, u)
    kn = numerics.bessel_k(nu, w)
    jd = _jp(nu, u)
    kd = _kp(nu, w)
    t1 = jd * w * kn + kd * u * jn
    t2 = n1 * n1 * jd * w * kn + n2 * n2 * kd * u * jn
    rhs = (nu * neff * v * v * jn * kn) ** 2 / (u * w) ** 2
    return t1 * t2 - rhs


def _hybrid_s(nu, u, w):
    """Hybrid polarization parameter s for a solved (u, w) pair."""
    jterm = _jp(nu, u) / (u * numerics.bessel_j(nu, u))
    kterm = _kp(nu, w) / (w * numerics.bessel_k(nu, w))
    return (1.0 / u ** 2 + 1.0 / w ** 2) / (jterm + kterm)


def _classify_hybrid(nu, v, n1, n2, neff):
    """Label a hybrid root HE or EH via the completed-square branch sign."""
    u, w = _uw(v, n1, n2, neff)
    jterm = _jp(nu, u) / (u * numerics.bessel_j(nu, u))
    kterm = _kp(nu, w) / (w * numerics.bessel_k(nu, w))
    g = jterm + kterm * (n1 * n1 + n2 * n2) / (2.0 * n1 * n1)
    return "HE" if g < 0.0 else "EH"


@lru_cache(maxsize=512)
def _family_roots(v, n1, n2, family, nu):
    """All n_eff roots of one (family, nu) branch family at fixed V, descending.

    Dense sign scan over (n2 + margin, n1 - margin) followed by bracketed
    refinement; the rationalized characteristic functions are continuous, so
    every sign change brackets a genuine eigenvalue.
    """
    if family == "TE":
        f = lambda ne: _char_te(v, n1, n2, ne)
    elif family == "TM":
        f = lambda ne: _char_tm(v, n1, n2, ne)
    else:
        f = lambda ne: _char_hybrid(nu, v, n1, n2, ne)
    grid = np.linspace(n2 + _NEFF_MARGIN, n1 - _NEFF_MARGIN, _SCAN_POINTS)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = f(grid)
    roots = []
    for i in range(_SCAN_POINTS - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            roots.append(grid[i])
        elif a * b < 0.0:
            roots.append(numerics.find_root(f, grid[i], grid[i + 1], tol=1e-15))
    roots.sort(reverse=True)
    if family in ("HE", "EH"):
        roots = [r for r in roots if _classify_hybrid(nu, v, n1, n2, r) == family]
    return tuple(roots)


def _census(v, n1, n2):
    """All guided modes at V, as (name, family, nu, m, neff), descending in beta."""
    rows = []
    for fam in ("TE", "TM"):
        for m, ne in enumerate(_family_roots(v, n1, n2, fam, 0), start=1):
            rows.append((f"{fam}0{m}", fam, 0, m, ne))
    for nu in _HYBRID_ORDERS:
        for fam in ("HE", "EH"):
            for m, ne in enumerate(_family_roots(v, n1, n2, fam, nu), start=1):
                rows.append((f"{fam}{nu}{m}", fam, nu, m, ne))
    rows.sort(key=lambda row: -row[4])
    return rows


def supported_modes(fiber, wavelength_nm):
    """ModeIds of every guided mode at this wavelength, descending in beta."""
    v = v_parameter(fiber, wavelength_nm)
    return [ModeId(fam, nu, m)
            for _, fam, nu, m, _ in _census(v, fiber.n_core, fiber.n_clad)]


def cutoff_v(fiber, mode):
    """Cutoff V parameter of a mode branch, by bisection on existence.

    The fundamental HE11 branch has no cutoff and returns 0. The search
    brackets the smallest V at which the branch appears in the census.
    """
    mode = parse_mode_name(mode) if isinstance(mode, str) else mode
    if (mode.family, mode.nu, mode.m) == ("HE", 1, 1):
        return 0.0
    n1, n2 = fiber.n_core, fiber.n_clad

    def present(v):
        return len(_family_roots(v, n1, n2, mode.family, mode.nu)) >= mode.m

    lo, hi = 0.2, 6.5
    if present(lo):
        return lo
    if not present(hi):
        raise ConvergenceError(f"cutoff of {mode.name} not found below V = {hi}")
    while hi - lo > 1e-7:
        mid = 0.5 * (lo + hi)
        if present(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ModeSolution:
    """One solved guided mode, ready for field evaluation.

    neff is beta/k0; u and w are the transverse arguments at the core
    boundary; s is the hybrid polarization parameter (0 for TE/TM);
    amplitude is the real normalization constant multiplying the fields and
    power_mw records the power it was normalized to (None when unnormalized).
    """

    mode: ModeId
    fiber: FiberSpec
    wavelength_nm: float
    neff: float
    u: float
    w: float
    s: float
    amplitude: float = 1.0
    power_mw: float = None

    @property
    def name(self):
        return self.mode.name

    @property
    def v(self):
        return v_parameter(self.fiber, self.wavelength_nm)

    @property
    def k0_per_nm(self):
        return 2.0 * np.pi / self.wavelength_nm

    @property
    def beta_per_nm(self):
        return self.neff * self.k0_per_nm

    @property
    def beta_per_m(self):
        return self.beta_per_nm * 1e9

    @property
    def h_per_nm(self):
        """Interior transverse wavenumber (rad/nm)."""
        return self.u / self.fiber.radius_nm

    @property
    def q_per_nm(self):
        """Evanescent decay constant (rad/nm)."""
        return self.w / self.fiber.radius_nm

    @property
    def decay_length_nm(self):
        """1/e decay length of the evanescent field, 1/q."""
        return 1.0 / self.q_per_nm

    @property
    def omega(self):
        """Angular optical frequency (rad/s)."""
        return 2.0 * np.pi * _C0 / (self.wavelength_nm * 1e-9)


def solve_mode(fiber, wavelength_nm, mode, orientation=None):
    """Solve the eigenvalue problem for one mode at one wavelength.

    mode may be a ModeId or a name like "HE11"; orientation (rad) overrides
    the ModeId's stored pattern rotation. Raises CutoffError when the branch
    does not propagate at this V.
    """
    mode = parse_mode_name(mode) if isinstance(mode, str) else mode
    if orientation is not None:
        mode = replace(mode, orientation=float(orientation))
    v = v_parameter(fiber, wavelength_nm)
    roots = _family_roots(v, fiber.n_core, fiber.n_clad, mode.family, mode.nu)
    if len(roots) < mode.m:
        raise CutoffError(mode.name, v, cutoff_v(fiber, mode))
    neff = roots[mode.m - 1]
    u, w = _uw(v, fiber.n_core, fiber.n_clad, neff)
    s = 0.0 if mode.nu == 0 else float(_hybrid_s(mode.nu, u, w))
    return ModeSolution(mode=mode, fiber=fiber, wavelength_nm=wavelength_nm,
                        neff=float(neff), u=float(u), w=float(w), s=s)


def _z_amplitudes(sol):
    """Complex axial-field constants (Az interior E_z, Bz interior H_z).

    The phase conventions reproduce the standard quasi-linearly-polarized
    hybrid field expressions with a real positive normalization constant:
    HE(nu=1) uses Az = i amp with pattern angle -phi0, HE(nu=2) uses
    Az = -i amp with pattern angle +2 phi0.
    """
    amp = sol.amplitude
    nu = sol.mode.nu
    phi0 = sol.mode.orientation
    if sol.mode.family == "TE":
        return 0.0, 1j * amp, 0.0
    if sol.mode.family == "TM":
        return 1j * amp, 0.0, 0.0
    if (sol.mode.family, nu) == ("HE", 2):
        az = -1j * amp
        psi = 2.0 * phi0
    else:
        az = 1j * amp
        psi = -phi0
    bz = -(sol.beta_per_m * nu * sol.s / (sol.omega * _MU0)) * az
    return az, bz, psi


def _phase(sol, z_nm, t):
    return np.exp(1j * (sol.omega * t - sol.beta_per_nm * np.asarray(z_nm, dtype=float)))


def _fields_cyl(sol, r_nm, phi, z_nm, t, want_h):
    """Shared evaluator for e_field / h_field, vectorized over broadcastable inputs."""
    r = np.maximum(np.asarray(r_nm, dtype=float), _R_FLOOR_NM)
    phi = np.asarray(phi, dtype=float)
    z = np.asarray(z_nm, dtype=float)
    r, phi, z = np.broadcast_arrays(r, phi, z)
    shape = r.shape

    a = sol.fiber.radius_nm
    inner = r <= a
    outer = ~inner

    omega = sol.omega
    beta_m = sol.beta_per_m
    h_m = sol.h_per_nm * 1e9
    q_m = sol.q_per_nm * 1e9
    eps1 = _EPS0 * sol.fiber.n_core ** 2
    eps2 = _EPS0 * sol.fiber.n_clad ** 2

    out = np.zeros(shape + (3,), dtype=complex)
    nu = sol.mode.nu
    az, bz, psi = _z_amplitudes(sol)

    if sol.mode.family in ("TE", "TM"):
        rho = (numerics.bessel_j(0, sol.u) / numerics.bessel_k(0, sol.w))
        amp = sol.amplitude
        if np.any(inner):
            x = sol.h_per_nm * r[inner]
            j0, j1 = numerics.bessel_j(0, x), numerics.bessel_j(1, x)
            if sol.mode.family == "TE":
                ephi = (omega * _MU0 / h_m) * amp * j1
                hr = -(beta_m / h_m) * amp * j1
                hz = 1j * amp * j0
                er = np.zeros_like(j1)
                ez = np.zeros_like(j1)
                hphi = np.zeros_like(j1)
            else:
                er = -(beta_m / h_m) * amp * j1
                ez = 1j * amp * j0
                hphi = -(omega * eps1 / h_m) * amp * j1
                ephi = np.zeros_like(j1)
                hr = np.zeros_like(j1)
                hz = np.zeros_like(j1)
            vals = (hr, hphi, hz) if want_h else (er, ephi, ez)
            for k in range(3):
                out[inner, k] = vals[k]
        if np.any(outer):
            y = sol.q_per_nm * r[outer]
            k0_, k1_ = numerics.bessel_k(0, y), numerics.bessel_k(1, y)
            amp_o = sol.amplitude * rho
            if sol.mode.family == "TE":
                ephi = -(omega * _MU0 / q_m) * amp_o * k1_
                hr = (beta_m / q_m) * amp_o * k1_
                hz = 1j * amp_o * k0_
                er = np.zeros_like(k1_)
                ez = np.zeros_like(k1_)
                hphi = np.zeros_like(k1_)
            else:
                er = (beta_m / q_m) * amp_o * k1_
                ez = 1j * amp_o * k0_
                hphi = (omega * eps2 / q_m) * amp_o * k1_
                ephi = np.zeros_like(k1_)
                hr = np.zeros_like(k1_)
                hz = np.zeros_like(k1_)
            vals = (hr, hphi, hz) if want_h else (er, ephi, ez)
            for k in range(3):
                out[outer, k] = vals[k]
        return out * _phase(sol, z, t)[..., np.newaxis]

    # hybrid families
    chi = nu * phi + psi
    cosx, sinx = np.cos(chi), np.sin(chi)
    cz = az * numerics.bessel_j(nu, sol.u) / numerics.bessel_k(nu, sol.w)
    dz = bz * numerics.bessel_j(nu, sol.u) / numerics.bessel_k(nu, sol.w)
    if np.any(inner):
        x = sol.h_per_nm * r[inner]
        jn = numerics.bessel_j(nu, x)
        jd = numerics.bessel_j_deriv(nu, x)
        jox = jn / x
        cc, ss = cosx[inner], sinx[inner]
        if want_h:
            out[inner, 0] = -1j * ((beta_m / h_m) * bz * jd
                                   + (omega * eps1 / h_m) * nu * az * jox) * ss
            out[inner, 1] = -1j * ((beta_m / h_m) * nu * bz * jox
                                   + (omega * eps1 / h_m) * az * jd) * cc
            out[inner, 2] = bz * jn * ss
        else:
            out[inner, 0] = -1j * ((beta_m / h_m) * az * jd
                                   + (omega * _MU0 / h_m) * nu * bz * jox) * cc
            out[inner, 1] = 1j * ((beta_m / h_m) * nu * az * jox
                                  + (omega * _MU0 / h_m) * bz * jd) * ss
            out[inner, 2] = az * jn * cc
    if np.any(outer):
        y = sol.q_per_nm * r[outer]
        kn = numerics.bessel_k(nu, y)
        kd = numerics.bessel_k_deriv(nu, y)
        koy = kn / y
        cc, ss = cosx[outer], sinx[outer]
        if want_h:
            out[outer, 0] = 1j * ((beta_m / q_m) * dz * kd
                                  + (omega * eps2 / q_m) * nu * cz * koy) * ss
            out[outer, 1] = 1j * ((beta_m / q_m) * nu * dz * koy
                                  + (omega * eps2 / q_m) * cz * kd) * cc
            out[outer, 2] = dz * kn * ss
        else:
            out[outer, 0] = 1j * ((beta_m / q_m) * cz * kd
                                  + (omega * _MU0 / q_m) * nu * dz * koy) * cc
            out[outer, 1] = -1j * ((beta_m / q_m) * nu * cz * koy
                                   + (omega * _MU0 / q_m) * dz * kd) * ss
            out[outer, 2] = cz * kn * cc
    return out * _phase(sol, z, t)[..., np.newaxis]


def e_field(sol, r_nm, phi, z_nm, t=0.0):
    """Complex electric field in cylindrical components (E_r, E_phi, E_z), V/m.

    Inputs broadcast; the result has one trailing axis of length 3. Valid on
    both sides of the core boundary; on-axis points return the finite limit.
    """
    return _fields_cyl(sol, r_nm, phi, z_nm, t, want_h=False)


def h_field(sol, r_nm, phi, z_nm, t=0.0):
    """Complex magnetic field in cylindrical components (H_r, H_phi, H_z), A/m."""
    return _fields_cyl(sol, r_nm, phi, z_nm, t, want_h=True)


def e_field_exterior_jacobian(sol, r_nm, phi, z_nm, t=0.0):
    """Electric field and its first derivatives outside the core.

    Returns (e, de_dr, de_dphi, de_dz): each an array with a trailing axis of
    3 cylindrical components. Radial and axial derivatives are per nm, the
    azimuthal one per rad. Analytic, using K'' from the modified Bessel
    equation; valid only for r > a (raises ValueError otherwise).
    """
    r = np.asarray(r_nm, dtype=float)
    phi = np.asarray(phi, dtype=float)
    z = np.asarray(z_nm, dtype=float)
    if np.any(r <= sol.fiber.radius_nm):
        raise ValueError("exterior jacobian requires r > fiber radius")
    r, phi, z = np.broadcast_arrays(r, phi, z)
    shape = r.shape

    nu = sol.mode.nu
    q_nm = sol.q_per_nm
    q_m = q_nm * 1e9
    beta_nm = sol.beta_per_nm
    beta_m = sol.beta_per_m
    omega = sol.omega
    y = q_nm * r
    ph = _phase(sol, z, t)

    e = np.zeros(shape + (3,), dtype=complex)
    de_dr = np.zeros(shape + (3,), dtype=complex)
    de_dphi = np.zeros(shape + (3,), dtype=complex)

    if sol.mode.family in ("TE", "TM"):
        rho = numerics.bessel_j(0, sol.u) / numerics.bessel_k(0, sol.w)
        amp_o = sol.amplitude * rho
        k0_, k1_ = numerics.bessel_k(0, y), numerics.bessel_k(1, y)
        k1p = numerics.bessel_k_deriv(1, y)
        if sol.mode.family == "TE":
            c = -(omega * _MU0 / q_m) * amp_o
            e[..., 1] = c * k1_
            de_dr[..., 1] = q_nm * c * k1p
        else:
            cr = (beta_m / q_m) * amp_o
            e[..., 0] = cr * k1_
            de_dr[..., 0] = q_nm * cr * k1p
            e[..., 2] = 1j * amp_o * k0_
            de_dr[..., 2] = -q_nm * 1j * amp_o * k1_
        e = e * ph[..., np.newaxis]
        de_dr = de_dr * ph[..., np.newaxis]
        de_dz = -1j * beta_nm * e
        return e, de_dr, de_dphi, de_dz

    az, bz, psi = _z_amplitudes(sol)
    cz = az * numerics.bessel_j(nu, sol.u) / numerics.bessel_k(nu, sol.w)
    dz = bz * numerics.bessel_j(nu, sol.u) / numerics.bessel_k(nu, sol.w)
    chi = nu * phi + psi
    cosx, sinx = np.cos(chi), np.sin(chi)

    kn = numerics.bessel_k(nu, y)
    kd = numerics.bessel_k_deriv(nu, y)
    # modified Bessel equation: K'' = (1 + nu^2/y^2) K - K'/y
    kdd = (1.0 + (nu / y) ** 2) * kn - kd / y
    koy = kn / y
    koy_d = kd / y - kn / y ** 2

    c1 = 1j * (beta_m / q_m) * cz
    c2 = 1j * (omega * _MU0 * nu / q_m) * dz
    d1 = -1j * (beta_m * nu / q_m) * cz
    d2 = -1j * (omega * _MU0 / q_m) * dz

    e[..., 0] = (c1 * kd + c2 * koy) * cosx
    e[..., 1] = (d1 * koy + d2 * kd) * sinx
    e[..., 2] = cz * kn * cosx
    de_dr[..., 0] = q_nm * (c1 * kdd + c2 * koy_d) * cosx
    de_dr[..., 1] = q_nm * (d1 * koy_d + d2 * kdd) * sinx
    de_dr[..., 2] = q_nm * cz * kd * cosx
    de_dphi[..., 0] = -nu * (c1 * kd + c2 * koy) * sinx
    de_dphi[..., 1] = nu * (d1 * koy + d2 * kd) * cosx
    de_dphi[..., 2] = -nu * cz * kn * sinx

    e = e * ph[..., np.newaxis]
    de_dr = de_dr * ph[..., np.newaxis]
    de_dphi = de_dphi * ph[..., np.newaxis]
    de_dz = -1j * beta_nm * e
    return e, de_dr, de_dphi, de_dz


def cartesian_components(field_cyl, phi):
    """Convert cylindrical vector components to Cartesian at azimuth phi."""
    phi = np.asarray(phi, dtype=float)
    fr, fphi, fz = field_cyl[..., 0], field_cyl[..., 1], field_cyl[..., 2]
    fx = fr * np.cos(phi) - fphi * np.sin(phi)
    fy = fr * np.sin(phi) + fphi * np.cos(phi)
    return np.stack([fx, fy, fz], axis=-1)


def _axial_poynting(sol, r_nm, phi):
    """Time-averaged axial Poynting density (W/m^2) at (r, phi)."""
    e = e_field(sol, r_nm, phi, 0.0)
    h = h_field(sol, r_nm, phi, 0.0)
    return 0.5 * np.real(e[..., 0] * np.conj(h[..., 1])
                         - e[..., 1] * np.conj(h[..., 0]))


def mode_power(sol):
    """Total axial power of the mode (W), by radial quadrature.

    The azimuthal integral is exact: every component is cos or sin of
    (nu phi + psi), so the azimuthal average of the Poynting density is half
    the sum of its values at the two quadrature azimuths (all of it at one
    azimuth for nu = 0).
    """
    nu = sol.mode.nu
    if nu == 0:
        phis = (0.0,)
        weight = 2.0 * np.pi
    else:
        _, _, psi = _z_amplitudes(sol)
        phis = ((0.0 - psi) / nu, (0.5 * np.pi - psi) / nu)
        weight = np.pi

    def radial(r):
        total = 0.0
        for p in phis:
            total += float(_axial_poynting(sol, r, p))
        return total * r

    a = sol.fiber.radius_nm
    inner = numerics.integrate(radial, 0.0, a, tol=1e-12)
    outer = numerics.integrate(radial, a, np.inf, tol=1e-12)
    # r dr carries nm^2; fields are SI, so scale to m^2.
    return weight * (inner + outer) * 1e-18


def normalize_power(sol, power_mw):
    """Rescale the mode amplitude so its Poynting flux equals power_mw.

    Returns a new solution; zero power gives a zero field.
    """
    if power_mw < 0.0:
        raise ValueError("power must be non-negative")
    if power_mw == 0.0:
        return replace(sol, amplitude=0.0, power_mw=0.0)
    base = replace(sol, amplitude=1.0)
    p_unit = mode_power(base)
    if p_unit <= 0.0:
        raise ConvergenceError("mode power integral is not positive")
    amp = np.sqrt(power_mw * 1e-3 / p_unit)
    return replace(sol, amplitude=float(amp), power_mw=float(power_mw))


def dispersion_sweep(fiber, v_lo, v_hi, points):
    """(V, mode name, beta/k0) rows for the first seven mode branches.

    Rows are ordered by V, then by descending beta within each V. Branches
    below cutoff at a given V are simply absent there.
    """
    if not 0.0 < v_lo <= v_hi:
        raise ValueError("require 0 < v_lo <= v_hi")
    rows = []
    for v in np.linspace(v_lo, v_hi, points):
        for name, fam, nu, m, neff in _census(v, fiber.n_core, fiber.n_clad):
            if name in _SWEEP_MODES:
                rows.append((float(v), name, float(neff)))
    return rows
