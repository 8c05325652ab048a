"""Command-line driver: every computation as a deterministic CSV-emitting subcommand.

Units at this boundary are kHz (ordinary frequency) and microseconds; they are
converted to rad/s and seconds once, in ``RunConfig``.
"""
import argparse
import dataclasses
import io
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    Picture,
    closed_form_trajectory,
    ground_state,
    excited_state,
    propagate_expm,
    propagate_numeric,
    pure_state,
)
from .errors import NumericalDomainError
from .measurement import (
    Observable,
    fit_gamma,
    noiseless_records,
    reconstruct_pt_series,
    simulate_shots,
    write_shot_csv,
)
from .model import SystemParams, h_eigensystem, h_pt_eigenvalues, liouvillian_spectrum
from .order_params import find_gamma_min, order_param_sweep, population_sweep

EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_IO = 4

COMMANDS = ("spectrum", "evolve", "order-params", "turning-point", "experiment")

# per-command defaults for fields left unset; grids are relative to omega_khz
_COMMAND_DEFAULTS = {
    "spectrum": {"gamma_khz": "0:{2w}:201"},
    "evolve": {"gamma_khz": "1", "t_max_us": 50.0, "n_samples": 512},
    "order-params": {"gamma_khz": "{w/20}:{2w}:40"},
    "turning-point": {"gamma_khz": "0:{3w}:301"},
    "experiment": {"gamma_khz": "10", "t_max_us": 100.0, "n_samples": 20},
}


class ConfigError(Exception):
    pass


def _fmt(x):
    return f"{x + 0.0:.9g}"


@dataclass
class RunConfig:
    omega_khz: float = 32.0
    gamma_khz: str = None
    t_max_us: float = None
    n_samples: int = None
    initial_state: str = "KET0"
    seed: int = 1
    n_shots: int = 800
    output_path: str = "-"
    levels: int = 2
    picture: str = "both"
    t_periods: str = "1,2,5,10,50"
    n_points: int = 4096

    @property
    def omega(self):
        return 2e3 * math.pi * self.omega_khz

    def gammas(self):
        """Loss rates in rad/s from a number or a ``start:stop:count`` grid (kHz)."""
        return [2e3 * math.pi * g for g in parse_grid(self.gamma_khz)]

    def gamma(self):
        values = parse_grid(self.gamma_khz)
        if len(values) != 1:
            raise ConfigError(f"this command needs a single gamma_khz, got grid {self.gamma_khz!r}")
        return 2e3 * math.pi * values[0]

    def times(self):
        return np.linspace(0.0, self.t_max_us * 1e-6, self.n_samples)

    def periods(self):
        try:
            ks = [float(k) for k in self.t_periods.split(",")]
        except ValueError:
            raise ConfigError(f"bad t_periods {self.t_periods!r}") from None
        if not ks or any(not k > 0 for k in ks):
            raise ConfigError("t_periods must be positive numbers")
        return ks

    def initial(self):
        return parse_initial_state(self.initial_state)


def parse_grid(spec):
    text = str(spec).strip()
    parts = text.split(":")
    try:
        if len(parts) == 1:
            values = [float(parts[0])]
        elif len(parts) == 3:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 2:
                raise ConfigError(f"grid count must be >= 2 in {text!r}")
            if not stop > start:
                raise ConfigError(f"grid stop must exceed start in {text!r}")
            values = list(np.linspace(start, stop, count))
        else:
            raise ConfigError(f"bad grid spec {text!r}; expected a number or start:stop:count")
    except ValueError:
        raise ConfigError(f"bad grid spec {text!r}") from None
    if any(not math.isfinite(v) or v < 0 for v in values):
        raise ConfigError(f"loss rates must be finite and >= 0 in {text!r}")
    return values


def parse_initial_state(text):
    """``KET0``, ``KET1`` or ``CUSTOM:re0,im0,re1,im1`` (normalised on input)."""
    name, _, rest = str(text).partition(":")
    name = name.strip().upper()
    if name == "KET0" and not rest:
        return ground_state()
    if name == "KET1" and not rest:
        return excited_state()
    if name == "CUSTOM":
        try:
            re0, im0, re1, im1 = (float(x) for x in rest.split(","))
            return pure_state([complex(re0, im0), complex(re1, im1)])
        except ValueError:
            raise ConfigError(f"CUSTOM state needs 4 finite reals with non-zero norm, got {rest!r}") from None
    raise ConfigError(f"unknown initial_state {text!r}")


def _convert(field, raw):
    kind = {"omega_khz": float, "t_max_us": float, "n_samples": int, "seed": int, "n_shots": int, "levels": int,
            "n_points": int}.get(field.name, str)
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{field.name}: cannot parse {raw!r}") from None


def load_config_file(path):
    """``key = value`` lines, ``#`` comments; unknown keys are rejected with their line number."""
    known = {f.name: f for f in fields(RunConfig)}
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _convert(known[key], value.strip())
    return values


def resolve_config(command, file_values, flag_values):
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    cfg = RunConfig(**merged)
    w = cfg.omega_khz
    for key, default in _COMMAND_DEFAULTS[command].items():
        if getattr(cfg, key) is None:
            if isinstance(default, str):
                default = default.format(**{"2w": _fmt(2 * w), "3w": _fmt(3 * w), "w/20": _fmt(w / 20)})
            setattr(cfg, key, default)
    if cfg.t_max_us is None:
        cfg.t_max_us = 50.0
    if cfg.n_samples is None:
        cfg.n_samples = 512
    validate(cfg)
    return cfg


def validate(cfg):
    if not (math.isfinite(cfg.omega_khz) and cfg.omega_khz > 0):
        raise ConfigError("omega_khz must be > 0")
    if not (math.isfinite(cfg.t_max_us) and cfg.t_max_us > 0):
        raise ConfigError("t_max_us must be > 0")
    if cfg.n_samples < 2:
        raise ConfigError("n_samples must be >= 2")
    if cfg.n_shots < 0:
        raise ConfigError("n_shots must be >= 0 (0 selects exact probabilities)")
    if cfg.levels not in (2, 3):
        raise ConfigError("levels must be 2 or 3")
    if cfg.picture not in ("lossy", "pt", "both"):
        raise ConfigError("picture must be lossy, pt or both")
    if cfg.n_points < 64:
        raise ConfigError("n_points must be >= 64")
    parse_grid(cfg.gamma_khz)
    cfg.initial()
    cfg.periods()


def _header(command, cfg):
    lines = [f"# passive_pt {__version__} {command}"]
    lines += [f"# {k} = {v}" for k, v in dataclasses.asdict(cfg).items()]
    return "\n".join(lines) + "\n"


def _write_rows(buf, columns, rows):
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(cell if isinstance(cell, str) else _fmt(cell) for cell in row) + "\n")


def cmd_spectrum(cfg):
    """Eigenvalues of H_PT, H_eff and the Liouvillian across the loss-rate grid, in units of omega."""
    omega = cfg.omega
    cols = ["gamma_over_omega", "re_e1", "im_e1", "re_e2", "im_e2", "re_eff1", "im_eff1", "re_eff2", "im_eff2"]
    cols += [f"{part}_l{i}" for i in range(1, 5) for part in ("re", "im")]
    rows = []
    for gamma in cfg.gammas():
        p = SystemParams(omega, gamma)
        e1, e2 = h_pt_eigenvalues(p)
        h = h_eigensystem(p)
        lam = liouvillian_spectrum(p).lambdas
        vals = [e1, e2, h.e1, h.e2, *lam]
        row = [gamma / omega]
        for v in vals:
            row += [v.real / omega, v.imag / omega]
        rows.append(row)
    buf = io.StringIO()
    _write_rows(buf, cols, rows)
    return {"": buf.getvalue()}


TRAJECTORY_COLUMNS = ["t_us", "rho00", "rho11", "rho22", "re_rho01", "im_rho01", "trace", "sigma_z_norm",
                      "sigma_y_norm"]


def _trajectory_rows(traj):
    obs = traj.observables
    rows = []
    for i, t in enumerate(traj.times):
        rho22 = "" if traj.dim == 2 else obs["rho22"][i]
        rows.append([t * 1e6, obs["rho00"][i], obs["rho11"][i], rho22, obs["rho01"][i].real, obs["rho01"][i].imag,
                     obs["trace"][i], obs["sigma_z_norm"][i], obs["sigma_y_norm"][i]])
    return rows


def cmd_evolve(cfg):
    """RK4 trajectory in the requested picture(s); the footer reports the gap to an exact propagator."""
    if cfg.levels == 3 and cfg.picture != "lossy":
        raise ConfigError("the PT picture is defined on the 2-level block; use levels = 2 or picture = lossy")
    p = SystemParams(cfg.omega, cfg.gamma())
    rho0 = cfg.initial()
    t = cfg.times()
    numeric = propagate_numeric(p, rho0, t, levels=cfg.levels)
    if cfg.initial_state.upper() == "KET0":
        exact, label = closed_form_trajectory(p, t, Picture.LOSSY), "closed_form"
    else:
        exact, label = propagate_expm(p, rho0, t, Picture.LOSSY), "matrix_exponential"
    diff = float(np.abs(numeric.states[:, :2, :2] - exact.states).max())
    footer = f"# max_abs_diff_numeric_vs_{label} = {_fmt(diff)}\n"

    pictures = ["lossy", "pt"] if cfg.picture == "both" else [cfg.picture]
    out = {}
    for name in pictures:
        traj = numeric if name == "lossy" else numeric.to_picture(p.gamma, Picture.PT)
        buf = io.StringIO()
        buf.write(f"# picture = {name}\n")
        _write_rows(buf, TRAJECTORY_COLUMNS, _trajectory_rows(traj))
        buf.write(footer)
        out["" if name == pictures[0] else "_pt"] = buf.getvalue()
    return out


def cmd_order_params(cfg):
    rho0 = None if cfg.initial_state.upper() == "KET0" else cfg.initial()
    cols = ["gamma_over_omega", "sigma_z_analytic", "sigma_z_numeric", "sigma_y_analytic", "sigma_y_numeric"]
    omega = cfg.omega
    gammas = cfg.gammas()
    if rho0 is not None and any(g < omega for g in gammas):
        raise ConfigError("a custom initial state is only supported for PT-broken sweeps")
    rows = [[r.gamma / omega, r.sigma_z_analytic, r.sigma_z_numeric, r.sigma_y_analytic, r.sigma_y_numeric]
            for r in order_param_sweep(omega, gammas, cfg.n_points, rho0)]
    buf = io.StringIO()
    _write_rows(buf, cols, rows)
    return {"": buf.getvalue()}


def cmd_turning_point(cfg):
    omega = cfg.omega
    period = 2 * math.pi / omega
    ks = cfg.periods()
    gammas = cfg.gammas()
    columns = [[rho for _, rho in population_sweep(omega, gammas, k * period)] for k in ks]
    cols = ["gamma_over_omega"] + [f"rho00_t{_fmt(k)}T" for k in ks]
    rows = [[g / omega] + [c[i] for c in columns] for i, g in enumerate(gammas)]
    buf = io.StringIO()
    _write_rows(buf, cols, rows)
    for k in ks:
        g_min = find_gamma_min(omega, k * period)
        buf.write(f"# gamma_min_over_omega_t{_fmt(k)}T = {_fmt(g_min / omega)}\n")
    return {"": buf.getvalue()}


def cmd_experiment(cfg):
    """Shot records, the fitted loss rate and the PT-picture reconstruction."""
    p = SystemParams(cfg.omega, cfg.gamma())
    if cfg.initial_state.upper() != "KET0":
        raise ConfigError("the experiment starts in KET0")
    t = cfg.times()
    if cfg.n_shots == 0:
        records = noiseless_records(p, t, Observable.P0)
    else:
        records = simulate_shots(p, t, cfg.n_shots, cfg.seed, Observable.P0)
    fit = fit_gamma(records, p.omega)

    shots = io.StringIO()
    write_shot_csv(records, shots, {"seed": cfg.seed, "omega": _fmt(p.omega), "gamma_true": _fmt(p.gamma)})
    fit_line = (f"# gamma_hat_khz = {_fmt(fit.gamma_hat / (2e3 * math.pi))} +/- "
                f"{_fmt(fit.gamma_stderr / (2e3 * math.pi))} (sse = {_fmt(fit.sse)}, evaluations = {fit.n_iters})\n")
    shots.write(fit_line)

    pt = io.StringIO()
    _write_rows(pt, ["t_us", "rho00_pt", "std_err"],
                [[pt_point.t * 1e6, pt_point.rho00_pt, pt_point.std_err] for pt_point in reconstruct_pt_series(records, fit)])
    pt.write(fit_line)
    return {"": shots.getvalue(), "_pt": pt.getvalue(), "message": fit_line[2:]}


_HANDLERS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "order-params": cmd_order_params,
    "turning-point": cmd_turning_point,
    "experiment": cmd_experiment,
}


def run(command, cfg):
    """Execute ``command`` and return ``{suffix: csv_text}`` (header included)."""
    result = _HANDLERS[command](cfg)
    message = result.pop("message", None)
    outputs = {suffix: _header(command, cfg) + body for suffix, body in result.items()}
    if message:
        outputs["message"] = message
    return outputs


def _emit(outputs, output_path, stdout):
    message = outputs.pop("message", None)
    if output_path == "-":
        stdout.write("\n".join(outputs[k] for k in sorted(outputs)))
    else:
        base = Path(output_path)
        for suffix, text in outputs.items():
            target = base if not suffix else base.with_name(base.stem + suffix + (base.suffix or ".csv"))
            target.write_text(text)
    if message:
        sys.stderr.write(message)


def build_parser():
    parser = argparse.ArgumentParser(prog="passive-pt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=(_HANDLERS[name].__doc__ or name).splitlines()[0])
        cmd.add_argument("--config", help="file of 'key = value' lines; flags override it")
        cmd.add_argument("--omega-khz", type=float, dest="omega_khz")
        cmd.add_argument("--gamma-khz", dest="gamma_khz", help="value or start:stop:count grid, kHz")
        cmd.add_argument("--t-max-us", type=float, dest="t_max_us")
        cmd.add_argument("--n-samples", type=int, dest="n_samples")
        cmd.add_argument("--initial-state", dest="initial_state", help="KET0, KET1 or CUSTOM:re0,im0,re1,im1")
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--n-shots", type=int, dest="n_shots", help="0 gives exact probabilities")
        cmd.add_argument("--output", "-o", dest="output_path", help="CSV path, '-' for stdout")
        cmd.add_argument("--levels", type=int, choices=(2, 3))
        cmd.add_argument("--picture", choices=("lossy", "pt", "both"))
        cmd.add_argument("--t-periods", dest="t_periods", help="comma-separated multiples of the Rabi period")
        cmd.add_argument("--n-points", type=int, dest="n_points", help="samples per period for order parameters")
    return parser


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    flags = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = resolve_config(args.command, file_values, flags)
        outputs = run(args.command, cfg)
        _emit(outputs, cfg.output_path, stdout)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except NumericalDomainError as exc:
        sys.stderr.write(f"numerical domain error: {exc}\n")
        return EXIT_DOMAIN
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except ValueError as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
