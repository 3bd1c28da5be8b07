"""Command line front end: ``qfosc levels|trace|settle|lifetime|fh``.

Every subcommand writes a CSV whose first line is ``# qfosc <subcommand>``,
followed by ``# key=value`` lines holding the fully resolved configuration
(feed the file back with ``--config`` to re-run it), a header row and the
data.  Supplementary tables go next to ``--out`` as ``<stem>.<name>.csv``,
or follow the main table on stdout.

Values are taken from, in order of precedence: command line flags, the
``--config`` file (flat ``key=value`` lines, ``#`` comments allowed),
``QFOSC_SEED`` for the seed, built-in defaults.

Exit codes: 0 success, 2 invalid arguments, 3 numerical failure.
"""

import argparse
from decimal import Decimal, InvalidOperation
import math
import os
from pathlib import Path
import sys

from . import experiments as ex
from . import franckhertz as fh
from .errors import DegenerateInput, NonFiniteState
from .integrator import IntegratorConfig
from .model import ModelParams, stationary_level_energy

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(ValueError):
    pass


def fmt_energy(x):
    return f"{x:.17g}"


def fmt_time(x):
    return f"{x:.6g}"


def fmt_int(x):
    return str(int(x))


def fmt_flag(x):
    return "1" if x else "0"


class CsvTable:
    """Column names, per-column formatters and rows of raw values."""

    def __init__(self, columns, formats):
        if len(columns) != len(formats):
            raise ValueError("one formatter per column")
        self.columns = list(columns)
        self.formats = list(formats)
        self.rows = []

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(values)

    def render(self, title, meta):
        lines = [f"# qfosc {title}"]
        lines += [f"# {k}={v}" for k, v in meta.items()]
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(f(x) for f, x in zip(self.formats, row)))
        return "\n".join(lines) + "\n"


def parse_grid(spec):
    """``lo:hi:step`` -> list of floats from lo to hi inclusive.

    Points are generated in decimal arithmetic so ``3.0`` is exactly 3.0.
    """
    try:
        lo, hi, step = (Decimal(s.strip()) for s in str(spec).split(":"))
    except (ValueError, InvalidOperation):
        raise UsageError(f"grid must look like lo:hi:step, got {spec!r}") from None
    if step <= 0 or hi < lo:
        raise UsageError(f"grid needs step > 0 and hi >= lo, got {spec!r}")
    n = int((hi - lo) / step + Decimal("1e-9")) + 1
    return [float(lo + i * step) for i in range(n)]


def parse_config_file(path):
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip().lstrip("-").replace("_", "-")] = value.strip()
    return values


# name -> (type, default); names are the flag names without leading dashes
COMMON = {
    "h": (float, 1e-3),
    "sigma": (float, 0.0),
    "seed": (int, 0),
}
SPECS = {
    "levels": {"n-max": (int, 12)},
    "trace": {
        "alpha": (float, 0.1), "q0": (float, 0.0), "v0": (float, 1.6),
        "t-end": (float, 100.0), "tol": (float, ex.DEFAULT_TOL),
        "min-dwell": (float, ex.DEFAULT_MIN_DWELL), "sample-every": (int, 100),
        **COMMON,
    },
    "settle": {
        "alpha": (float, 0.1), "q0": (float, 0.0), "v0-grid": (str, "1.8:7.0:0.1"),
        "t-end": (float, 100.0), **COMMON,
    },
    "lifetime": {
        "alpha": (str, "5,7,10"), "start-level": (int, 12), "repeats": (int, 20),
        "t-max": (float, 1e5), "tol": (float, ex.DEFAULT_TOL),
        "min-dwell": (float, ex.DEFAULT_MIN_DWELL),
        **COMMON, "sigma": (float, ex.LIFETIME_SIGMA),
    },
    "fh": {
        "alpha": (float, 10.0), "e0-grid": (str, "0.1:4.0:0.1"), "trials": (int, 200),
        "window": (str, "stepwise"), "t-int": (float, 200.0), "rate": (float, None),
        **COMMON, "sigma": (float, 1e-8),
    },
}
HELP = {
    "levels": "stationary level energies",
    "trace": "single relaxation/cascade trajectory with residences",
    "settle": "energy at t_end over a grid of initial velocities",
    "lifetime": "excited-level lifetimes and power-law fits",
    "fh": "Franck-Hertz scattering sweep",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="qfosc", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, spec in SPECS.items():
        p = sub.add_parser(name, help=HELP[name])
        for key, (typ, _) in spec.items():
            p.add_argument(f"--{key}", type=typ, default=None)
        p.add_argument("--out", type=Path, default=None, help="output CSV (default stdout)")
        p.add_argument("--config", type=Path, default=None, help="key=value defaults file")
    return parser


def resolve(command, args, environ=os.environ):
    """Merge defaults, config file, env seed and flags into one dict."""
    spec = SPECS[command]
    resolved = {key: default for key, (_, default) in spec.items()}
    if "seed" in spec and environ.get("QFOSC_SEED"):
        resolved["seed"] = environ["QFOSC_SEED"]
    if args.config is not None:
        for key, value in parse_config_file(args.config).items():
            if key in ("out", "config"):
                continue
            if key not in spec:
                raise UsageError(f"unknown config key {key!r} for {command}")
            resolved[key] = value
    for key in spec:
        value = getattr(args, key.replace("-", "_"))
        if value is not None:
            resolved[key] = value
    for key, (typ, _) in spec.items():
        value = resolved[key]
        if value is None or value == "None":
            resolved[key] = None
            continue
        try:
            resolved[key] = typ(value)
        except (TypeError, ValueError):
            raise UsageError(f"bad value for {key}: {value!r}") from None
        if typ is float and not math.isfinite(resolved[key]):
            raise UsageError(f"{key} must be finite")
    return resolved


def _integrator(cfg, **extra):
    try:
        return IntegratorConfig(h=cfg["h"], noise_sigma=cfg["sigma"], seed=cfg["seed"], **extra)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _params(alpha):
    try:
        return ModelParams(alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_levels(cfg):
    if cfg["n-max"] < 0:
        raise UsageError("n-max must be >= 0")
    table = CsvTable(["n", "E_n"], [fmt_int, fmt_energy])
    for n in range(cfg["n-max"] + 1):
        table.add(n, stationary_level_energy(n))
    return table, {}


def cmd_trace(cfg):
    p = _params(cfg["alpha"])
    integ = _integrator(cfg, sample_every=cfg["sample-every"])
    if not cfg["t-end"] > 0:
        raise UsageError("t-end must be > 0")
    if not 0 < cfg["tol"] < 0.5 or not cfg["min-dwell"] > 0:
        raise UsageError("need 0 < tol < 0.5 and min-dwell > 0")
    result = ex.relax_trace(cfg["q0"], cfg["v0"], p, integ, cfg["t-end"],
                            cfg["tol"], cfg["min-dwell"])
    traj = result.trajectory
    table = CsvTable(["t", "q", "v", "E"], [fmt_time, fmt_energy, fmt_energy, fmt_energy])
    for row in zip(traj.t, traj.q, traj.v, traj.E):
        table.add(*row)
    res = CsvTable(["n", "E_n", "t_enter", "t_exit", "duration", "censored"],
                   [fmt_int, fmt_energy, fmt_time, fmt_time, fmt_time, fmt_flag])
    for seg in result.residences:
        res.add(seg.level.n, seg.level.energy, seg.t_enter, seg.t_exit, seg.duration,
                seg.censored)
    return table, {"residences": res}


def cmd_settle(cfg):
    p = _params(cfg["alpha"])
    integ = _integrator(cfg)
    grid = parse_grid(cfg["v0-grid"])
    if not cfg["t-end"] > 0:
        raise UsageError("t-end must be > 0")
    table = CsvTable(["v0", "E_final", "level", "classical_E"],
                     [fmt_energy, fmt_energy, fmt_int, fmt_energy])
    for row in ex.settle_sweep(grid, cfg["q0"], p, integ, cfg["t-end"]):
        table.add(row.v0, row.E_final, row.level, row.classical_E)
    return table, {}


def _parse_alphas(text):
    try:
        alphas = [float(a) for a in str(text).split(",") if a.strip()]
    except ValueError:
        raise UsageError(f"alpha must be a comma separated list, got {text!r}") from None
    if not alphas:
        raise UsageError("no alpha given")
    for a in alphas:
        _params(a)
    return alphas


def cmd_lifetime(cfg):
    alphas = _parse_alphas(cfg["alpha"])
    integ = _integrator(cfg)
    if not integ.noise_sigma > 0:
        raise UsageError("lifetime studies need sigma > 0")
    if cfg["start-level"] < 0 or cfg["repeats"] < 1 or not cfg["t-max"] > 0:
        raise UsageError("need start-level >= 0, repeats >= 1, t-max > 0")
    table = CsvTable(["alpha", "E_n", "tau_mean", "n_obs", "censored"],
                     [fmt_energy, fmt_energy, fmt_time, fmt_int, fmt_int])
    fits = CsvTable(["alpha", "ln_A", "beta", "r2", "n_points", "status"],
                    [fmt_energy, fmt_energy, fmt_energy, fmt_energy, fmt_int, str])
    good = []
    for alpha in alphas:
        records = ex.lifetime_study(ModelParams(alpha), cfg["start-level"], integ,
                                    cfg["t-max"], cfg["repeats"], cfg["tol"], cfg["min-dwell"])
        for r in records:
            table.add(alpha, r.E_n, r.tau, r.n_obs, r.censored)
        try:
            fit = ex.fit_power_law(ex.lifetime_points(records))
        except (DegenerateInput, ex.NoTransitions) as exc:
            fits.add(alpha, math.nan, math.nan, math.nan, 0, "refused: " + str(exc).replace(",", ";"))
            continue
        fits.add(alpha, fit.ln_A, fit.beta, fit.r2, fit.n_points, "ok")
        good.append((alpha, fit.ln_A))
    extras = {"fit": fits}
    if len({a for a, _ in good}) >= 3:
        sc = ex.fit_A_vs_alpha(good)
        scaling = CsvTable(["ln_A0", "exponent", "r2"], [fmt_energy] * 3)
        scaling.add(sc.ln_A0, sc.exponent, sc.r2)
        extras["alpha_scaling"] = scaling
    return table, extras


def cmd_fh(cfg):
    p = _params(cfg["alpha"])
    integ = _integrator(cfg)
    grid = parse_grid(cfg["e0-grid"])
    try:
        if cfg["window"] == "stepwise":
            window = fh.InteractionWindow("stepwise", t_int=cfg["t-int"])
        else:
            window = fh.InteractionWindow(cfg["window"], rate=cfg["rate"])
        scfg = fh.ScatterConfig(p, window, integ, cfg["trials"], cfg["seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    table = CsvTable(["E0", "mean_Ee", "mean_Ve", "stddev_Ee", "window_limited"],
                     [fmt_energy, fmt_energy, fmt_energy, fmt_energy, fmt_flag])
    for row in fh.fh_sweep(grid, scfg):
        table.add(*row)
    return table, {}


COMMANDS = {
    "levels": cmd_levels,
    "trace": cmd_trace,
    "settle": cmd_settle,
    "lifetime": cmd_lifetime,
    "fh": cmd_fh,
}


def write_output(command, meta, table, extras, out):
    if out is None:
        sys.stdout.write(table.render(command, meta))
        for name, extra in extras.items():
            sys.stdout.write("\n" + extra.render(f"{command}:{name}", meta))
        return
    out = Path(out)
    out.write_text(table.render(command, meta))
    for name, extra in extras.items():
        out.with_name(f"{out.stem}.{name}.csv").write_text(extra.render(f"{command}:{name}", meta))


def run(argv=None, environ=os.environ):
    """Run the CLI and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = resolve(args.command, args, environ)
        table, extras = COMMANDS[args.command](cfg)
    except NonFiniteState as exc:
        print(f"qfosc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"qfosc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    meta = {key: ("None" if value is None else value) for key, value in cfg.items()}
    write_output(args.command, meta, table, extras, args.out)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
