"""Run configuration: flat key=value files and the built-in trap presets.

The config format is a flat list of dotted keys, one assignment per line:

    # full-line comments and blank lines are ignored
    light.wavelength_nm = 850.5
    pair.tau = 0.72

Keys are typed against a fixed schema; unknown or duplicate keys and
malformed values are rejected with the offending line number. Every key has
a default, so a config file only states what it overrides; the defaults are
exactly the he11-te01 preset. All lengths are in nm, angles in rad.
"""

import math
from dataclasses import dataclass, field, replace

from . import modes, potential, superposition, trapanalysis
from .errors import ConfigError

_QUANTITIES = ("potential", "intensity", "field")
_PLANE_AXES = ("x", "y", "z", "d")

# key -> (type tag, default). Insertion order is the save order.
_SCHEMA = {
    "fiber.radius_nm": ("float", 400.0),
    "fiber.n_core": ("float", 1.452),
    "fiber.n_clad": ("float", 1.0),
    "light.wavelength_nm": ("float", 850.5),
    "light.power_mw": ("float", 50.0),
    "pair.mode_a": ("str", "HE11"),
    "pair.mode_b": ("str", "TE01"),
    "pair.tau": ("float", 0.72),
    "pair.orientation_a_rad": ("float", 0.0),
    "pair.orientation_b_rad": ("float", 0.0),
    "pair.delta_rad": ("float", 0.0),
    "atom.c3": ("float", 5.6e-49),
    "atom.t_init_uk": ("float", 100.0),
    "grid.plane": ("str", "z=trap"),
    "grid.resolution": ("int", 201),
    "grid.quantity": ("str", "potential"),
    "grid.halfwidth_nm": ("float", 1000.0),
    "dispersion.v_lo": ("float", 0.05),
    "dispersion.v_hi": ("float", 5.0),
    "seed.r_lo_nm": ("float", 430.0),
    "seed.r_hi_nm": ("float", 880.0),
    "seed.phi_lo_rad": ("float", math.pi / 2.0 - 0.6),
    "seed.phi_hi_rad": ("float", math.pi / 2.0 + 0.6),
    "seed.z_lo_nm": ("float", -2075.9),
    "seed.z_hi_nm": ("float", 2075.9),
}

# The three built-in trap configurations. Each entry only lists where it
# departs from the defaults; the seed boxes span +-0.6 rad around the trap
# azimuth and +-0.45 beat lengths, wide enough to catch the minimum at any
# split the tau sweep visits yet narrow enough to hold exactly one trap.
_PRESETS = {
    "he11-te01": {},
    "he11-he21": {
        "light.wavelength_nm": 849.0,
        "light.power_mw": 25.0,
        "pair.mode_b": "HE21",
        "pair.tau": 0.84,
        "seed.phi_lo_rad": -0.6,
        "seed.phi_hi_rad": 0.6,
        "seed.z_lo_nm": -1552.9,
        "seed.z_hi_nm": 1552.9,
    },
    "te01-he21": {
        "light.wavelength_nm": 851.0,
        "light.power_mw": 30.0,
        "pair.mode_a": "TE01",
        "pair.mode_b": "HE21",
        "pair.tau": 0.68,
        "seed.phi_lo_rad": 3.0 * math.pi / 4.0 - 0.6,
        "seed.phi_hi_rad": 3.0 * math.pi / 4.0 + 0.6,
        "seed.z_lo_nm": -6159.4,
        "seed.z_hi_nm": 6159.4,
    },
}

PRESET_NAMES = tuple(_PRESETS)


def parse_plane(token):
    """Parse a plane token like "z=1000", "z=trap", "x=0" or "d=0".

    The axis names the coordinate held fixed, except d: "d=<u_nm>" is the
    plane spanned by z and the diagonal d = (y - x)/sqrt(2), displaced by
    u_nm along the orthogonal diagonal u = (x + y)/sqrt(2). Returns
    (axis, value) where value is a float in nm, or the string "trap" for
    the z-plane through the trap minimum.
    """
    parts = str(token).split("=")
    if len(parts) != 2:
        raise ConfigError(f"plane {token!r} is not of the form axis=value",
                          key="grid.plane")
    axis, value = parts[0].strip().lower(), parts[1].strip()
    if axis not in _PLANE_AXES:
        raise ConfigError(f"unknown plane axis {axis!r}, expected one of "
                          f"{', '.join(_PLANE_AXES)}", key="grid.plane")
    if axis == "z" and value.lower() == "trap":
        return "z", "trap"
    try:
        return axis, float(value)
    except ValueError as exc:
        raise ConfigError(f"plane offset {value!r} is not a number",
                          key="grid.plane") from exc


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters of one run: fiber, light, pair, atom, grid, seed."""

    fiber: modes.FiberSpec = field(default_factory=modes.FiberSpec)
    light: modes.LightSpec = None
    mode_a: str = "HE11"
    mode_b: str = "TE01"
    tau: float = 0.72
    orientation_a: float = 0.0
    orientation_b: float = 0.0
    delta: float = 0.0
    c3: float = 5.6e-49
    t_init_uk: float = 100.0
    plane: str = "z=trap"
    resolution: int = 201
    quantity: str = "potential"
    halfwidth_nm: float = 1000.0
    v_lo: float = 0.05
    v_hi: float = 5.0
    seed: trapanalysis.SeedRegion = None

    def __post_init__(self):
        if self.light is None:
            object.__setattr__(self, "light",
                               modes.LightSpec(850.5, 50.0))
        if self.seed is None:
            object.__setattr__(self, "seed", trapanalysis.SeedRegion(
                r_nm=(430.0, 880.0),
                phi=(math.pi / 2.0 - 0.6, math.pi / 2.0 + 0.6),
                z_nm=(-2075.9, 2075.9)))
        for attr, key in (("mode_a", "pair.mode_a"), ("mode_b", "pair.mode_b")):
            try:
                mode = modes.parse_mode_name(getattr(self, attr))
            except ValueError as exc:
                raise ConfigError(str(exc), key=key) from exc
            if mode.family == "TM":
                raise ConfigError(
                    f"{mode.name} is transverse magnetic and unsupported for "
                    "two-mode traps", key=key)
            if mode.nu > 2:
                raise ConfigError(
                    f"{mode.name}: azimuthal orders above 2 are not "
                    "supported for two-mode traps", key=key)
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"power split tau = {self.tau} outside [0, 1]",
                              key="pair.tau")
        if self.c3 < 0.0:
            raise ConfigError("atom.c3 must be non-negative", key="atom.c3")
        if self.t_init_uk <= 0.0:
            raise ConfigError("atom.t_init_uk must be positive",
                              key="atom.t_init_uk")
        parse_plane(self.plane)
        if self.resolution < 2:
            raise ConfigError("grid.resolution must be at least 2 per axis",
                              key="grid.resolution")
        if self.quantity not in _QUANTITIES:
            raise ConfigError(
                f"unknown grid quantity {self.quantity!r}, expected one of "
                f"{', '.join(_QUANTITIES)}", key="grid.quantity")
        if self.halfwidth_nm <= 0.0:
            raise ConfigError("grid.halfwidth_nm must be positive",
                              key="grid.halfwidth_nm")
        if not 0.0 < self.v_lo <= self.v_hi:
            raise ConfigError("dispersion range must satisfy 0 < v_lo <= v_hi",
                              key="dispersion.v_lo")


def _build(values):
    """Assemble a RunConfig from a complete key -> value mapping."""
    def get(key):
        return values[key]

    try:
        fiber = modes.FiberSpec(radius_nm=get("fiber.radius_nm"),
                                n_core=get("fiber.n_core"),
                                n_clad=get("fiber.n_clad"))
    except ValueError as exc:
        raise ConfigError(str(exc), key="fiber") from exc
    try:
        light = modes.LightSpec(wavelength_nm=get("light.wavelength_nm"),
                                power_mw=get("light.power_mw"))
    except ValueError as exc:
        raise ConfigError(str(exc), key="light") from exc
    try:
        seed = trapanalysis.SeedRegion(
            r_nm=(get("seed.r_lo_nm"), get("seed.r_hi_nm")),
            phi=(get("seed.phi_lo_rad"), get("seed.phi_hi_rad")),
            z_nm=(get("seed.z_lo_nm"), get("seed.z_hi_nm")))
    except ValueError as exc:
        raise ConfigError(str(exc), key="seed") from exc
    return RunConfig(
        fiber=fiber, light=light,
        mode_a=get("pair.mode_a"), mode_b=get("pair.mode_b"),
        tau=get("pair.tau"),
        orientation_a=get("pair.orientation_a_rad"),
        orientation_b=get("pair.orientation_b_rad"),
        delta=get("pair.delta_rad"),
        c3=get("atom.c3"), t_init_uk=get("atom.t_init_uk"),
        plane=get("grid.plane"), resolution=get("grid.resolution"),
        quantity=get("grid.quantity"),
        halfwidth_nm=get("grid.halfwidth_nm"),
        v_lo=get("dispersion.v_lo"), v_hi=get("dispersion.v_hi"),
        seed=seed)


def preset(name):
    """One of the built-in trap configurations, by name."""
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}, expected one of "
                          f"{', '.join(PRESET_NAMES)}", key="preset")
    values = {key: default for key, (_, default) in _SCHEMA.items()}
    values.update(_PRESETS[name])
    return _build(values)


def _parse_value(kind, text, lineno, key):
    if kind == "str":
        return text
    try:
        return int(text) if kind == "int" else float(text)
    except ValueError as exc:
        raise ConfigError(f"value {text!r} for {key} is not a valid {kind}",
                          line=lineno, key=key) from exc


def parse_config(text):
    """Parse config text into a RunConfig; see the module docstring for grammar."""
    values = {key: default for key, (_, default) in _SCHEMA.items()}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}",
                              line=lineno, key=key or None)
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", line=lineno, key=key)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, key=key)
        if not value:
            raise ConfigError(f"empty value for {key!r}", line=lineno, key=key)
        seen.add(key)
        values[key] = _parse_value(_SCHEMA[key][0], value, lineno, key)
    return _build(values)


def load_config(path):
    """Load and validate a config file."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def as_values(cfg):
    """Flatten a RunConfig back into the schema's key -> value mapping."""
    return {
        "fiber.radius_nm": cfg.fiber.radius_nm,
        "fiber.n_core": cfg.fiber.n_core,
        "fiber.n_clad": cfg.fiber.n_clad,
        "light.wavelength_nm": cfg.light.wavelength_nm,
        "light.power_mw": cfg.light.power_mw,
        "pair.mode_a": cfg.mode_a,
        "pair.mode_b": cfg.mode_b,
        "pair.tau": cfg.tau,
        "pair.orientation_a_rad": cfg.orientation_a,
        "pair.orientation_b_rad": cfg.orientation_b,
        "pair.delta_rad": cfg.delta,
        "atom.c3": cfg.c3,
        "atom.t_init_uk": cfg.t_init_uk,
        "grid.plane": cfg.plane,
        "grid.resolution": cfg.resolution,
        "grid.quantity": cfg.quantity,
        "grid.halfwidth_nm": cfg.halfwidth_nm,
        "dispersion.v_lo": cfg.v_lo,
        "dispersion.v_hi": cfg.v_hi,
        "seed.r_lo_nm": cfg.seed.r_nm[0],
        "seed.r_hi_nm": cfg.seed.r_nm[1],
        "seed.phi_lo_rad": cfg.seed.phi[0],
        "seed.phi_hi_rad": cfg.seed.phi[1],
        "seed.z_lo_nm": cfg.seed.z_nm[0],
        "seed.z_hi_nm": cfg.seed.z_nm[1],
    }


def format_config(cfg):
    """Render a RunConfig as config text that parses back to an equal config.

    Floats are written with repr, which round-trips exactly.
    """
    lines = ["# fibertrap run configuration"]
    section = None
    for key, value in as_values(cfg).items():
        head = key.split(".", 1)[0]
        if head != section:
            lines.append("")
            section = head
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def save_config(cfg, path):
    """Write a RunConfig to a file; load_config(path) returns an equal config."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_config(cfg))


def make_pair(cfg, tau=None):
    """Solve and compose the configured mode pair (tau overridable)."""
    tau = cfg.tau if tau is None else tau
    return superposition.make_pair(
        cfg.fiber, cfg.light.wavelength_nm, cfg.mode_a, cfg.mode_b,
        cfg.light.power_mw, tau, delta=cfg.delta,
        orientation_a=cfg.orientation_a, orientation_b=cfg.orientation_b)


def make_field(cfg, tau=None):
    """Total potential field of the configured trap (tau overridable)."""
    return potential.PotentialField(pair=make_pair(cfg, tau=tau),
                                    atom=potential.cesium(c3=cfg.c3))


def field_builder(cfg):
    """tau -> PotentialField closure, as tau_sensitivity expects."""
    return lambda tau: make_field(cfg, tau=tau)


def thermal_state(cfg):
    """ThermalState at the configured reference temperature."""
    return trapanalysis.ThermalState(t_init_uk=cfg.t_init_uk)
