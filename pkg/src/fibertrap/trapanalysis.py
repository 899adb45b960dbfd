"""Locate and characterize the interference microtraps of a two-mode field.

The trap minimum is found by a coarse grid scan over a seed region (keeping
only radial interior local minima, so the attractive surface run never wins),
followed by per-axis golden-section descent and a Newton polish with the
analytic gradient. Around the minimum the potential is characterized by its
Hessian in the local orthonormal frame (r-hat, arc length, z-hat), by 1-D
turning points at the reference thermal energy, and by a spherical fan of
straight escape rays whose lowest barrier defines the trap depth and the
escape direction l. Heating is modeled as two recoil energies per scattered
photon at the orbit-averaged scattering rate.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import k as _KB
from scipy.optimize import brentq, minimize_scalar

from . import numerics, potential, superposition
from .errors import NoTrapError, SaddleError

# Coarse seed-grid resolution per axis.
_GRID_R = 61
_GRID_PHI = 25
_GRID_Z = 49
# Escape fan: coarse full-sphere resolution and the refinement cap around the
# best coarse direction.
_FAN_COARSE_DEG = 3.0
_FAN_REFINE_DEG = 0.75
_FAN_REACH_NM = 2000.0
_FAN_STEP_NM = 4.0
_FAN_REFINE_STEP_NM = 1.0
# Straight rays that get this close to the surface are surface channels, not
# escape paths.
_SURFACE_PAD_NM = 0.5
# Newton polish: positional tolerance and step cap.
_POSITION_TOL_NM = 0.1
_NEWTON_STEP_CAP_NM = 5.0
# Orbit ensemble defaults.
_ORBIT_SAMPLES = 4096
_ORBIT_SEED = 20260822


@dataclass(frozen=True)
class ThermalState:
    """Reference atomic energy: initial kinetic energy k_B * T_init."""

    t_init_uk: float = 100.0

    def __post_init__(self):
        if self.t_init_uk <= 0.0:
            raise ValueError("T_init must be positive")

    @property
    def e_init(self):
        return _KB * self.t_init_uk * 1e-6


@dataclass(frozen=True)
class SeedRegion:
    """Search box (r in nm, phi in rad, z in nm) holding exactly one minimum."""

    r_nm: tuple
    phi: tuple
    z_nm: tuple

    def __post_init__(self):
        for lo, hi in (self.r_nm, self.phi, self.z_nm):
            if not hi > lo:
                raise ValueError("seed region bounds must satisfy lo < hi")


def _potential_on(field_, r, phi, z):
    return potential.total_potential(field_, r, phi, z)


def find_minimum(field_, seed, tol_nm=_POSITION_TOL_NM):
    """Locate the potential minimum inside the seed region.

    Returns (r_nm, phi, z_nm). Raises NoTrapError when the region holds no
    interior minimum (all candidate columns run monotonically into the
    surface or out of the evanescent field).
    """
    a = field_.fiber.radius_nm
    r_lo = max(seed.r_nm[0], a + 2.0)
    rr = np.linspace(r_lo, seed.r_nm[1], _GRID_R)
    pp = np.linspace(seed.phi[0], seed.phi[1], _GRID_PHI)
    zz = np.linspace(seed.z_nm[0], seed.z_nm[1], _GRID_Z)
    R, P, Z = np.meshgrid(rr, pp, zz, indexing="ij")
    u = _potential_on(field_, R, P, Z)
    # keep only radial interior local minima so the monotone van der Waals
    # descent toward the surface can never seed the search
    interior = (u[1:-1] < u[:-2]) & (u[1:-1] <= u[2:])
    masked = np.where(interior, u[1:-1], np.inf)
    if not np.isfinite(masked).any():
        raise NoTrapError("no interior potential minimum in the seed region")
    i, j, k = np.unravel_index(np.argmin(masked), masked.shape)
    r, p, z = float(rr[i + 1]), float(pp[j]), float(zz[k])

    dr = float(rr[1] - rr[0])
    dp = float(pp[1] - pp[0]) if pp.size > 1 else 0.2
    dz = float(zz[1] - zz[0])
    for _ in range(4):
        r = minimize_scalar(
            lambda x: _potential_on(field_, x, p, z),
            bounds=(max(a + 1.0, r - 2.0 * dr), r + 2.0 * dr),
            method="bounded", options=dict(xatol=1e-6)).x
        p = minimize_scalar(
            lambda x: _potential_on(field_, r, x, z),
            bounds=(p - 2.0 * dp, p + 2.0 * dp),
            method="bounded", options=dict(xatol=1e-8)).x
        z = minimize_scalar(
            lambda x: _potential_on(field_, r, p, x),
            bounds=(z - 2.0 * dz, z + 2.0 * dz),
            method="bounded", options=dict(xatol=1e-6)).x

    # Newton polish in the local orthonormal frame, analytic gradient
    for _ in range(40):
        g = np.array(potential.potential_gradient(field_, r, p, z))
        h = _local_hessian(field_, r, p, z)
        try:
            step = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError:
            break
        n = float(np.linalg.norm(step))
        if n > _NEWTON_STEP_CAP_NM:
            step *= _NEWTON_STEP_CAP_NM / n
        r_new = r + float(step[0])
        p_new = p + float(step[1]) / r
        z_new = z + float(step[2])
        if r_new <= a + 1.0:
            break
        if _potential_on(field_, r_new, p_new, z_new) > \
                _potential_on(field_, r, p, z) and n > tol_nm:
            # Newton overshot into a rising region; halve until it helps
            step *= 0.5
            r_new, p_new, z_new = r + step[0], p + step[1] / r, z + step[2]
        r, p, z = float(r_new), float(p_new), float(z_new)
        if n < 0.2 * tol_nm:
            break
    else:
        raise NoTrapError("minimum search did not converge")

    if not (r_lo <= r <= seed.r_nm[1]):
        raise NoTrapError("refined minimum left the seed region radially")
    return r, p, z


def _local_hessian(field_, r, p, z, step_nm=1.0):
    """Hessian of the potential in (r-hat, arc, z-hat) displacements, J/nm^2."""

    def f(q):
        return _potential_on(field_, q[0], p + (q[1] - 1000.0) / r, q[2])

    # the arc coordinate is offset so all three components are O(100..1000) nm
    # and the shared step size is meaningful on each axis
    return numerics.hessian(f, (r, 1000.0, z), (step_nm, step_nm, step_nm))


def trap_frequencies(field_, minimum, mass_kg):
    """Harmonic angular frequencies (omega_r, omega_phi, omega_z) in rad/s.

    Eigenvalues of the local-frame Hessian assigned to axes by the dominant
    eigenvector component; any non-positive eigenvalue raises SaddleError.
    """
    r, p, z = minimum
    h = _local_hessian(field_, r, p, z)
    evals, evecs = np.linalg.eigh(h)
    if np.any(evals <= 0.0):
        raise SaddleError(
            f"Hessian eigenvalues {evals} are not all positive: "
            "the stationary point is a saddle")
    omega = np.empty(3)
    taken = set()
    for k in np.argsort(evals)[::-1]:
        order = np.argsort(np.abs(evecs[:, k]))[::-1]
        axis = next(int(ax) for ax in order if int(ax) not in taken)
        taken.add(axis)
        omega[axis] = math.sqrt(evals[k] * 1e18 / mass_kg)
    return tuple(float(w) for w in omega)


def _axis_1d(field_, minimum, axis):
    """1-D potential profile through the minimum along one local axis.

    Returns (profile(s), inward_limit, outward_limit) with s a signed
    displacement in nm along r-hat, the azimuthal arc, or z-hat.
    """
    r, p, z = minimum
    a = field_.fiber.radius_nm
    if axis == 0:
        return (lambda s: _potential_on(field_, r + s, p, z),
                a + 0.8 - r, 900.0)
    if axis == 1:
        return (lambda s: _potential_on(field_, r, p + s / r, z),
                -1.4 * r, 1.4 * r)
    return (lambda s: _potential_on(field_, r, p, z + s), -9000.0, 9000.0)


def _crossing(f1d, target, lo_lim, hi_lim, sign):
    """First crossing of f1d(s) = target moving away from s = 0."""
    step = 1.0 * sign
    s_prev = 0.0
    val_prev = f1d(0.0) - target
    if val_prev >= 0.0:
        return None
    s_cur = step
    while abs(s_cur) <= abs(hi_lim if sign > 0 else lo_lim):
        val = f1d(s_cur) - target
        if val >= 0.0:
            return brentq(lambda s: f1d(s) - target,
                          min(s_prev, s_cur), max(s_prev, s_cur), xtol=1e-9)
        s_prev, val_prev = s_cur, val
        step *= 1.25
        s_cur += step
    return None


def turning_points(field_, minimum, energy_j):
    """Signed 1-D turning displacements at U_min + energy for each axis.

    Rows are (inward, outward) in nm along (r-hat, arc, z-hat); the radial
    pair is asymmetric because the inner light wall is much steeper than the
    evanescent tail outside.
    """
    u0 = _potential_on(field_, *minimum)
    target = u0 + energy_j
    out = np.empty((3, 2))
    for axis in range(3):
        f1d, lo, hi = _axis_1d(field_, minimum, axis)
        s_in = _crossing(f1d, target, lo, hi, -1.0)
        s_out = _crossing(f1d, target, lo, hi, +1.0)
        if s_in is None or s_out is None:
            raise NoTrapError(
                "thermal energy exceeds the trap barrier along axis "
                f"{('radial', 'azimuthal', 'axial')[axis]}")
        out[axis] = (s_in, s_out)
    return out


def thermal_extents(field_, minimum, state):
    """Trap volume widths (radial, azimuthal arc, axial) in nm at T_init."""
    turns = turning_points(field_, minimum, state.e_init)
    return tuple(float(t_out - t_in) for t_in, t_out in turns)


def harmonic_extents(omegas, state, mass_kg):
    """Harmonic-model widths 2*sqrt(2 k_B T / (m omega^2)) in nm."""
    return tuple(
        2.0 * math.sqrt(2.0 * state.e_init / (mass_kg * w * w)) * 1e9
        for w in omegas)


def _fib_sphere(n):
    k = np.arange(n) + 0.5
    theta = np.arccos(1.0 - 2.0 * k / n)
    golden = np.pi * (1.0 + 5.0 ** 0.5)
    return np.stack([np.sin(theta) * np.cos(golden * k),
                     np.sin(theta) * np.sin(golden * k),
                     np.cos(theta)], axis=-1)


def _march(field_, minimum, umin, d_local, reach_nm, step_nm):
    """Barrier height along straight rays; rays that enter the fiber are
    reported separately as surface channels."""
    r, p, z = minimum
    a = field_.fiber.radius_nm
    frame = np.array([[np.cos(p), np.sin(p), 0.0],
                      [-np.sin(p), np.cos(p), 0.0],
                      [0.0, 0.0, 1.0]])
    d_cart = d_local @ frame
    p0 = np.array([r * np.cos(p), r * np.sin(p), z])
    t = np.arange(1, int(reach_nm / step_nm) + 1) * step_nm
    pts = p0[None, None, :] + t[None, :, None] * d_cart[:, None, :]
    rr = np.hypot(pts[..., 0], pts[..., 1])
    pp = np.arctan2(pts[..., 1], pts[..., 0])
    uu = _potential_on(field_, np.maximum(rr, a + 2.0 * _SURFACE_PAD_NM), pp,
                       pts[..., 2])
    inside = rr <= a + _SURFACE_PAD_NM
    hit = inside.any(axis=1)
    first = np.where(hit, inside.argmax(axis=1), t.size)
    blocked = np.arange(t.size)[None, :] >= first[:, None]
    barrier = np.where(blocked, -np.inf, uu).max(axis=1) - umin
    return barrier, hit


def _refine_cap(center, half_deg, step_deg):
    c = np.asarray(center, dtype=float)
    c = c / np.linalg.norm(c)
    seed = np.array([1.0, 0.0, 0.0])
    if abs(float(c @ seed)) > 0.9:
        seed = np.array([0.0, 1.0, 0.0])
    e1 = np.cross(c, seed)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    g = np.radians(np.arange(-half_deg, half_deg + 1e-9, step_deg))
    A, B = np.meshgrid(g, g, indexing="ij")
    d = (c[None, :] + A.ravel()[:, None] * e1[None, :]
         + B.ravel()[:, None] * e2[None, :])
    return d / np.linalg.norm(d, axis=1, keepdims=True)


@dataclass(frozen=True)
class EscapeResult:
    depth_j: float
    direction: tuple
    inner_barrier_j: float
    inner_barrier_width_nm: float


def escape_barrier(field_, minimum):
    """Trap depth as the lowest barrier over a fan of straight escape rays.

    Returns an EscapeResult with the depth U_barrier - U_min, the local-frame
    unit escape direction l, and the height and thermal-level width of the
    inner (surface-side) barrier that an escaping atom would instead have to
    tunnel through.
    """
    umin = _potential_on(field_, *minimum)
    ndir = max(int(np.ceil(4.0 * np.pi / np.radians(_FAN_COARSE_DEG) ** 2)),
               16)
    dirs = _fib_sphere(ndir)
    barrier, hit = _march(field_, minimum, umin, dirs, _FAN_REACH_NM,
                          _FAN_STEP_NM)
    escape = np.where(hit, np.inf, barrier)
    if not np.isfinite(escape).any():
        raise NoTrapError("every sampled direction runs into the surface")
    k = int(np.argmin(escape))
    best_d, best_b = dirs[k], float(escape[k])
    cap = _refine_cap(best_d, 2.0 * _FAN_COARSE_DEG, _FAN_REFINE_DEG)
    fb, fh = _march(field_, minimum, umin, cap, _FAN_REACH_NM,
                    _FAN_REFINE_STEP_NM)
    fesc = np.where(fh, np.inf, fb)
    kk = int(np.argmin(fesc))
    if float(fesc[kk]) < best_b:
        best_d, best_b = cap[kk], float(fesc[kk])
    if best_b <= 0.0:
        raise NoTrapError("no positive escape barrier around the minimum")
    inner_h, inner_w = _inner_barrier(field_, minimum, umin)
    return EscapeResult(depth_j=best_b,
                        direction=tuple(float(x) for x in best_d),
                        inner_barrier_j=inner_h,
                        inner_barrier_width_nm=inner_w)


def _inner_barrier(field_, minimum, umin, probe_e=None):
    """Height and width of the light wall between the minimum and the surface.

    The width is measured at U_min + probe_e (default: the barrier midpoint
    energy is not used; the caller passes the thermal energy), i.e. the
    thickness an atom at that energy would have to tunnel through.
    """
    r, p, z = minimum
    a = field_.fiber.radius_nm
    s = np.linspace(a + _SURFACE_PAD_NM, r, 2048)
    u = _potential_on(field_, s, p, z)
    k = int(np.argmax(u))
    height = float(u[k] - umin)
    level = umin + (probe_e if probe_e is not None else _KB * 1e-4)
    above = u >= level
    if not above.any() or height <= 0.0:
        return height, 0.0
    width = float((above.sum() - 1) * (s[1] - s[0])) if above.sum() > 1 else 0.0
    return height, width


def orbit_averaged_scattering(field_, minimum, extents, state,
                              samples=_ORBIT_SAMPLES, seed=_ORBIT_SEED):
    """Mean photon scattering rate over a classical oscillation ensemble.

    The total energy k_B T_init is split uniformly over the three axes
    (flat Dirichlet over the energy simplex, covering all classical
    oscillation modes), each axis oscillates harmonically with the amplitude
    scaled from its turning-point extents by sqrt(E_axis / E_init), and the
    oscillation phases are uniform. Amplitudes stay asymmetric per side, so
    the radial bias between the steep inner wall and the soft outer tail is
    kept. Deterministic for a fixed seed.
    """
    r, p, z = minimum
    turns = np.asarray(extents, dtype=float)
    if turns.shape != (3, 2):
        raise ValueError("extents must be the (3, 2) signed turning points")
    rng = np.random.default_rng(seed)
    split = rng.dirichlet((1.0, 1.0, 1.0), size=samples)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(samples, 3))
    scale = np.sqrt(split)
    s = np.sin(phase)
    disp = np.where(s >= 0.0,
                    turns[None, :, 1] * scale * s,
                    -turns[None, :, 0] * scale * s)
    rates = potential.local_scattering_rate(
        field_, r + disp[:, 0], p + disp[:, 1] / r, z + disp[:, 2])
    return float(np.mean(rates))


def lifetime(depth_j, state, rate_per_s, e_rec_j):
    """Trapping lifetime: energy headroom over the recoil heating power.

    Two recoil energies per scattered photon (absorption plus emission).
    A non-positive scattering rate means no heating; the lifetime is then
    unbounded and reported as infinity.
    """
    headroom = depth_j - state.e_init
    if headroom <= 0.0:
        raise ValueError("initial energy exceeds the trap depth")
    if rate_per_s <= 0.0:
        return math.inf
    return headroom / (2.0 * e_rec_j * rate_per_s)


@dataclass(frozen=True)
class TrapReport:
    """Full characterization of one interference microtrap."""

    mode_a: str
    mode_b: str
    wavelength_nm: float
    power_mw: float
    tau: float
    sigma: float
    delta: float
    beat_length_nm: float
    minimum: tuple          # (r_nm, phi_rad, z_nm), z reported modulo z0
    u_min_mk: float
    depth_mk: float
    barrier_direction: tuple
    inner_barrier_mk: float
    inner_barrier_width_nm: float
    omega: tuple            # (omega_r, omega_phi, omega_z) rad/s
    extents_nm: tuple       # (radial, azimuthal arc, axial)
    harmonic_extents_nm: tuple
    scattering_rate: float  # photons/s
    lifetime_s: float       # math.inf encodes "exceeds cap"
    t_ref_uk: float
    min_intensity_w_m2: float
    cancellation: float     # I_min / (I_a + I_b) at the minimum
    recoil_energy_j: float

    @property
    def frequencies_hz(self):
        return tuple(w / (2.0 * math.pi) for w in self.omega)

    def to_dict(self):
        life = None if math.isinf(self.lifetime_s) else self.lifetime_s
        return {
            "schema_version": 1,
            "modes": [self.mode_a, self.mode_b],
            "wavelength_nm": self.wavelength_nm,
            "power_mw": self.power_mw,
            "tau": self.tau,
            "sigma": self.sigma,
            "delta": self.delta,
            "beat_length_nm": self.beat_length_nm,
            "beat_length_um": self.beat_length_nm * 1e-3,
            "minimum": {"r_nm": self.minimum[0], "phi_rad": self.minimum[1],
                        "z_nm": self.minimum[2]},
            "u_min_mk": self.u_min_mk,
            "depth_mk": self.depth_mk,
            "barrier_direction": list(self.barrier_direction),
            "inner_barrier_mk": self.inner_barrier_mk,
            "inner_barrier_width_nm": self.inner_barrier_width_nm,
            "omega_rad_s": list(self.omega),
            "frequencies_khz": [f / 1e3 for f in self.frequencies_hz],
            "extents_nm": list(self.extents_nm),
            "harmonic_extents_nm": list(self.harmonic_extents_nm),
            "scattering_rate_per_s": self.scattering_rate,
            "lifetime_s": life,
            "lifetime_exceeds_cap": math.isinf(self.lifetime_s),
            "t_ref_uk": self.t_ref_uk,
            "min_intensity_w_m2": self.min_intensity_w_m2,
            "cancellation_ratio": self.cancellation,
            "recoil_energy_j": self.recoil_energy_j,
        }


def power_split_sigma(tau):
    """Assumed experimental precision of the power split: 0.05 sqrt(tau(1-tau))."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    return 0.05 * math.sqrt(tau * (1.0 - tau))


def characterize_trap(field_, seed, state=None):
    """Full trap characterization; the one-stop entry behind the CLI report."""
    state = state if state is not None else ThermalState()
    pair = field_.pair
    r, p, z = find_minimum(field_, seed)
    umin = _potential_on(field_, r, p, z)
    esc = escape_barrier(field_, (r, p, z))
    if state.e_init >= esc.depth_j:
        raise NoTrapError("reference thermal energy exceeds the trap depth")
    omega = trap_frequencies(field_, (r, p, z), field_.atom.mass_kg)
    turns = turning_points(field_, (r, p, z), state.e_init)
    exts = tuple(float(t_out - t_in) for t_in, t_out in turns)
    rate = orbit_averaged_scattering(field_, (r, p, z), turns, state)
    e_rec = field_.atom.recoil_energy(pair.wavelength_nm)
    life = lifetime(esc.depth_j, state, rate, e_rec)
    _, inner_w = _inner_barrier(field_, (r, p, z), umin, probe_e=state.e_init)
    z0 = superposition.beat_length(pair)
    z_fold = z % z0
    if z0 - z_fold < 1e-6 * z0:
        z_fold = 0.0
    i_min = float(potential.intensity(field_, r, p, z))
    i_a = float(potential.single_mode_intensity(pair.sol_a, r, p, z))
    i_b = float(potential.single_mode_intensity(pair.sol_b, r, p, z))
    return TrapReport(
        mode_a=pair.sol_a.name, mode_b=pair.sol_b.name,
        wavelength_nm=pair.wavelength_nm, power_mw=pair.power_mw,
        tau=pair.tau, sigma=power_split_sigma(pair.tau), delta=pair.delta,
        beat_length_nm=z0,
        minimum=(r, p, z_fold),
        u_min_mk=potential.as_millikelvin(umin),
        depth_mk=potential.as_millikelvin(esc.depth_j),
        barrier_direction=esc.direction,
        inner_barrier_mk=potential.as_millikelvin(esc.inner_barrier_j),
        inner_barrier_width_nm=inner_w,
        omega=omega,
        extents_nm=exts,
        harmonic_extents_nm=harmonic_extents(omega, state,
                                             field_.atom.mass_kg),
        scattering_rate=rate,
        lifetime_s=life,
        t_ref_uk=state.t_init_uk,
        min_intensity_w_m2=i_min,
        cancellation=i_min / (i_a + i_b),
        recoil_energy_j=e_rec)


def tau_sensitivity(build_field, tau0, seed, state=None):
    """Depth and position response to the power-split precision sigma.

    build_field(tau) must return the PotentialField of the configuration at
    that split. Rows cover tau0 - sigma, tau0, tau0 + sigma; a perturbed
    split where the trap vanishes yields a flagged row instead of an error.
    """
    state = state if state is not None else ThermalState()
    sigma = power_split_sigma(tau0)
    rows = []
    base_depth = None
    for tau in (tau0 - sigma, tau0, tau0 + sigma):
        try:
            field_ = build_field(tau)
            m = find_minimum(field_, seed)
            esc = escape_barrier(field_, m)
            row = {"tau": tau, "trap": True,
                   "depth_mk": potential.as_millikelvin(esc.depth_j),
                   "minimum": {"r_nm": m[0], "phi_rad": m[1], "z_nm": m[2]}}
            if tau == tau0:
                base_depth = esc.depth_j
        except (NoTrapError, SaddleError) as err:
            row = {"tau": tau, "trap": False, "reason": str(err)}
        rows.append(row)
    for row in rows:
        if row["trap"] and base_depth:
            row["depth_change_pct"] = 100.0 * (
                row["depth_mk"] / potential.as_millikelvin(base_depth) - 1.0)
    return {"tau0": tau0, "sigma": sigma, "rows": rows}
