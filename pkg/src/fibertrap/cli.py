"""Command line surface: dispersion sweeps, plane grids, trap reports, tau sweeps.

One command per process. CSV output uses comma separators, dot decimals,
a header row and LF line ends; reports are JSON (with --out) or a terminal
table (without). Files are written atomically: a temp file in the target
directory is renamed over the destination. The FIBERTRAP_THREADS variable
sets how many worker threads fill grids; every split yields bit-identical
output because grid evaluation is elementwise.

Exit codes: 0 success, 1 I/O failure, 2 configuration or validation error,
3 no usable trap in the seeded region.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import config, modes, potential, superposition, trapanalysis
from .errors import (ConfigError, CutoffError, FibertrapError, NoTrapError,
                     SaddleError)

_SQRT2 = math.sqrt(2.0)


def _worker_count():
    raw = os.environ.get("FIBERTRAP_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"FIBERTRAP_THREADS = {raw!r} is not an integer",
                          key="FIBERTRAP_THREADS") from exc
    if n < 1:
        raise ConfigError("FIBERTRAP_THREADS must be at least 1",
                          key="FIBERTRAP_THREADS")
    return n


def _fmt(x):
    """Shortest round-tripping decimal form; nan is the in-fiber sentinel."""
    return repr(float(x))


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text, out_path):
    """Write to stdout, or atomically to out_path (temp file + rename)."""
    if out_path is None:
        sys.stdout.write(text)
        return
    out_path = os.path.abspath(out_path)
    fd, tmp = tempfile.mkstemp(prefix=".fibertrap-",
                               dir=os.path.dirname(out_path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_dispersion(cfg, args):
    """CSV sweep of beta/k0 against V for every branch up to the seventh mode."""
    rows = modes.dispersion_sweep(cfg.fiber, cfg.v_lo, cfg.v_hi,
                                  cfg.resolution)
    return _csv_text(["V", "mode", "beta_over_k0"],
                     [(_fmt(v), name, _fmt(neff)) for v, name, neff in rows])


def _plane_points(cfg, fieldobj):
    """Cartesian sample points of the configured plane, row-major.

    Planes holding z constant span x and y over +-halfwidth; the other
    planes span their transverse coordinate over +-halfwidth and z over one
    beat length. "z=trap" centers the z plane on the trap minimum, which
    costs a minimum search.
    """
    axis, value = config.parse_plane(cfg.plane)
    n = cfg.resolution
    hw = cfg.halfwidth_nm
    span = np.linspace(-hw, hw, n)
    if axis == "z":
        if value == "trap":
            value = trapanalysis.find_minimum(fieldobj, cfg.seed)[2]
        x = np.broadcast_to(span[:, None], (n, n))
        y = np.broadcast_to(span[None, :], (n, n))
        z = np.full((n, n), value)
    else:
        z0 = superposition.beat_length(fieldobj.pair)
        zline = np.linspace(0.0, z0, n)
        z = np.broadcast_to(zline[None, :], (n, n))
        if axis == "x":
            x = np.full((n, n), value)
            y = np.broadcast_to(span[:, None], (n, n))
        elif axis == "y":
            x = np.broadcast_to(span[:, None], (n, n))
            y = np.full((n, n), value)
        else:
            # d plane: u = (x + y)/sqrt(2) fixed, d = (y - x)/sqrt(2) sweeps
            d = span[:, None]
            x = np.broadcast_to((value - d) / _SQRT2, (n, n))
            y = np.broadcast_to((value + d) / _SQRT2, (n, n))
    return (np.ravel(x).copy(), np.ravel(y).copy(), np.ravel(z).copy())


def _grid_values(cfg, fieldobj, x, y, z):
    """Column arrays of the requested quantity at Cartesian points."""
    r = np.hypot(x, y)
    phi = np.arctan2(y, x)
    if cfg.quantity == "intensity":
        return [superposition.mean_intensity(fieldobj.pair, r, phi, z)]
    if cfg.quantity == "potential":
        # the vdW term is undefined inside the fiber: sentinel nan there
        vals = np.full(r.shape, np.nan)
        mask = r > cfg.fiber.radius_nm
        if np.any(mask):
            u = potential.total_potential(fieldobj, r[mask], phi[mask],
                                          z[mask])
            vals[mask] = potential.as_millikelvin(u)
        return [vals]
    e = superposition.total_e_field(fieldobj.pair, r, phi, z)
    cart = modes.cartesian_components(e, phi)
    cols = []
    for i in range(3):
        cols.append(np.real(cart[..., i]))
        cols.append(np.imag(cart[..., i]))
    return cols


_GRID_HEADERS = {
    "intensity": ["x_nm", "y_nm", "z_nm", "intensity"],
    "potential": ["x_nm", "y_nm", "z_nm", "U_mK"],
    "field": ["x_nm", "y_nm", "z_nm", "Ex_re", "Ex_im", "Ey_re", "Ey_im",
              "Ez_re", "Ez_im"],
}


def cmd_grid(cfg, args):
    """CSV grid of potential, intensity or the vector field on one plane."""
    fieldobj = config.make_field(cfg)
    x, y, z = _plane_points(cfg, fieldobj)
    workers = _worker_count()
    if workers == 1 or x.size < 2 * workers:
        cols = _grid_values(cfg, fieldobj, x, y, z)
    else:
        chunks = np.array_split(np.arange(x.size), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda idx: _grid_values(cfg, fieldobj, x[idx], y[idx], z[idx]),
                chunks))
        cols = [np.concatenate([p[i] for p in parts])
                for i in range(len(parts[0]))]
    rows = []
    for i in range(x.size):
        rows.append([_fmt(x[i]), _fmt(y[i]), _fmt(z[i])]
                    + [_fmt(c[i]) for c in cols])
    return _csv_text(_GRID_HEADERS[cfg.quantity], rows)


def _report_doc(cfg):
    fieldobj = config.make_field(cfg)
    state = config.thermal_state(cfg)
    report = trapanalysis.characterize_trap(fieldobj, cfg.seed, state)
    sens = trapanalysis.tau_sensitivity(config.field_builder(cfg), cfg.tau,
                                        cfg.seed, state)
    return report, sens


def _json_ready(obj):
    """Recursively coerce numpy scalars so json emits plain decimals."""
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _sens_row_text(row):
    if not row["trap"]:
        return f"  tau = {row['tau']:.4f}   no trap ({row['reason']})"
    text = (f"  tau = {row['tau']:.4f}   depth = {row['depth_mk']:.3f} mK"
            f"   r = {row['minimum']['r_nm']:.1f} nm")
    if "depth_change_pct" in row:
        text += f"   ({row['depth_change_pct']:+.1f}%)"
    return text


def _report_table(report, sens):
    freq = [f / 1e3 for f in report.frequencies_hz]
    r, p, z = report.minimum
    ldir = ", ".join(f"{c:+.3f}" for c in report.barrier_direction)
    life = ("exceeds cap" if math.isinf(report.lifetime_s)
            else f"{report.lifetime_s:.1f} s")
    lines = [
        "two-mode trap report",
        f"  modes          {report.mode_a} + {report.mode_b}",
        f"  wavelength     {report.wavelength_nm:g} nm",
        f"  power          {report.power_mw:g} mW   tau = {report.tau:g}"
        f"   delta = {report.delta:g} rad",
        f"  beat length    {report.beat_length_nm:.1f} nm",
        f"  minimum        r = {r:.2f} nm   phi = {p:.4f} rad   z = {z:.2f} nm",
        f"  U_min          {report.u_min_mk:+.4f} mK",
        f"  depth          {report.depth_mk:.4f} mK along l = [{ldir}]",
        f"  inner barrier  {report.inner_barrier_mk:.3f} mK,"
        f" width {report.inner_barrier_width_nm:.1f} nm",
        f"  frequencies    {freq[0]:.1f} / {freq[1]:.1f} / {freq[2]:.1f} kHz"
        " (radial / azimuthal / axial)",
        f"  extents        {report.extents_nm[0]:.1f} /"
        f" {report.extents_nm[1]:.1f} / {report.extents_nm[2]:.1f} nm"
        f" at {report.t_ref_uk:g} uK",
        f"  min intensity  {report.min_intensity_w_m2:.3e} W/m^2"
        f"   (cancellation {report.cancellation:.2e})",
        f"  scattering     {report.scattering_rate:.1f} photons/s",
        f"  lifetime       {life}",
        f"tau sensitivity (sigma = {report.sigma:.4f})",
    ]
    lines.extend(_sens_row_text(row) for row in sens["rows"])
    return "\n".join(lines) + "\n"


def cmd_report(cfg, args):
    """Full trap characterization: JSON with --out, a table without."""
    report, sens = _report_doc(cfg)
    if args.out is None:
        return _report_table(report, sens)
    doc = report.to_dict()
    doc["tau_sensitivity"] = sens
    return json.dumps(_json_ready(doc), indent=2) + "\n"


def cmd_sweep_tau(cfg, args):
    """CSV table of trap depth and position at tau0 and tau0 +- sigma."""
    sens = trapanalysis.tau_sensitivity(config.field_builder(cfg), cfg.tau,
                                        cfg.seed, config.thermal_state(cfg))
    rows = []
    for row in sens["rows"]:
        if row["trap"]:
            m = row["minimum"]
            change = row.get("depth_change_pct")
            rows.append([_fmt(row["tau"]), "1", _fmt(row["depth_mk"]),
                         "" if change is None else _fmt(change),
                         _fmt(m["r_nm"]), _fmt(m["phi_rad"]), _fmt(m["z_nm"]),
                         ""])
        else:
            rows.append([_fmt(row["tau"]), "0", "", "", "", "", "",
                         row["reason"]])
    return _csv_text(["tau", "trap", "depth_mk", "depth_change_pct", "r_nm",
                      "phi_rad", "z_nm", "reason"], rows)


def _resolve_config(args):
    if args.config is not None and args.preset is not None:
        raise ConfigError("choose either --preset or --config, not both")
    if args.config is not None:
        cfg = config.load_config(args.config)
    else:
        cfg = config.preset(args.preset or "he11-te01")
    overrides = {}
    if getattr(args, "tau", None) is not None:
        overrides["tau"] = args.tau
    if getattr(args, "plane", None) is not None:
        overrides["plane"] = args.plane
    if getattr(args, "resolution", None) is not None:
        overrides["resolution"] = args.resolution
    return replace(cfg, **overrides) if overrides else cfg


def _parser():
    parser = argparse.ArgumentParser(
        prog="fibertrap",
        description="Two-mode evanescent interference traps around an "
                    "ultra-thin optical fiber.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, doc, plane=False, resolution=False, tau=False):
        p = sub.add_parser(name, help=doc, description=doc)
        p.add_argument("--preset", choices=config.PRESET_NAMES,
                       help="built-in trap configuration "
                            "(default: he11-te01 when --config is absent)")
        p.add_argument("--config", metavar="PATH",
                       help="configuration file (see README for the grammar)")
        p.add_argument("--out", metavar="PATH",
                       help="output file, written atomically; stdout if absent")
        if plane:
            p.add_argument("--plane", metavar="AXIS=VALUE",
                           help="plane to sample, e.g. z=trap, z=0, x=0, "
                                "y=0, d=0 (overrides grid.plane)")
        if resolution:
            p.add_argument("--resolution", type=int, metavar="N",
                           help="samples per axis (overrides grid.resolution)")
        if tau:
            p.add_argument("--tau", type=float,
                           help="power split override (fraction in mode a)")
        p.set_defaults(func=fn)
        return p

    add("dispersion", cmd_dispersion,
        "sweep beta/k0 against V for all guided branches", resolution=True)
    add("grid", cmd_grid,
        "sample potential, intensity or the vector field on a plane",
        plane=True, resolution=True, tau=True)
    add("report", cmd_report,
        "characterize the configured trap (JSON with --out, table without)",
        tau=True)
    add("sweep-tau", cmd_sweep_tau,
        "trap depth and position at tau0 and tau0 +- sigma", tau=True)
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        try:
            text = args.func(cfg, args)
        except NoTrapError as err:
            raise NoTrapError(
                f"{err} (power split tau = {cfg.tau}; presets use "
                "0.72 / 0.84 / 0.68)") from err
        _emit(text, args.out)
    except (NoTrapError, SaddleError) as err:
        print(f"fibertrap: no trap: {err}", file=sys.stderr)
        return 3
    except (ConfigError, CutoffError) as err:
        print(f"fibertrap: configuration error: {err}", file=sys.stderr)
        return 2
    except FibertrapError as err:
        print(f"fibertrap: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"fibertrap: I/O error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
