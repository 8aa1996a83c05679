"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile

import numpy as np

from . import observables as obs
from .config import KEYS, ConfigError, RunConfig, dump_config, load_config
from .dynamics_exact import PositivityError
from .dynamics_moments import ConjugacyError
from .hilbert import TruncationError, squeezed_vacuum_state
from .model import derive_params
from .numkernel import IntegrationError
from .scenarios import CSV_COLUMNS, SWEEP_AXES, default_sweep, run_scenario, sweep_min_squeezing

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3
NUMERICAL_ERRORS = (IntegrationError, PositivityError, ConjugacyError, TruncationError,
                    obs.ObservableError, FloatingPointError, np.linalg.LinAlgError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def format_number(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return ""
    return format(v, ".12g")


def csv_text(columns: dict, names=None) -> str:
    names = list(names or columns)
    n = max(len(c) for c in columns.values() if c is not None)
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(format_number(None if columns[k] is None else columns[k][i]) for k in names))
    return "\n".join(lines) + "\n"


def write_output(text: str, path: str) -> None:
    """Write ``text`` to ``path`` atomically (``-`` means standard output)."""
    if path in ("-", ""):
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- commands --------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, args) -> int:
    res = run_scenario(cfg.to_scenario())
    write_output(csv_text(res.columns(), CSV_COLUMNS), cfg.out)
    return EXIT_OK


def cmd_analytic(cfg: RunConfig, args) -> int:
    p = cfg.system_params()
    d = derive_params(p)
    t = np.linspace(0.0, cfg.t_max, cfg.points)
    xs, xb = obs.analytic_curves(p.N, d.G_n, d.r_n, t)
    cols = {k: None for k in CSV_COLUMNS}
    cols.update(Gt=t, xi_s2=xs, xi_b2=xb)
    write_output(csv_text(cols, CSV_COLUMNS), cfg.out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    base = cfg.to_scenario()
    axes = SWEEP_AXES if args.axis == "both" else (args.axis,)
    rows = {"axis": [], "value": [], "xi_s2_min": [], "Gt_min": []}
    for axis in axes:
        spec = default_sweep(axis, base.params, t_max=cfg.t_max, points=cfg.points)
        for pt in sweep_min_squeezing(base, spec, args.jobs):
            rows["axis"].append(axis)
            rows["value"].append(pt.value)
            rows["xi_s2_min"].append(pt.xi_min)
            rows["Gt_min"].append(pt.t_min)
    lines = ["axis,value,xi_s2_min,Gt_min"]
    for a, v, x, t in zip(rows["axis"], rows["value"], rows["xi_s2_min"], rows["Gt_min"]):
        lines.append(f"{a},{format_number(v)},{format_number(x)},{format_number(t)}")
    write_output("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


def cmd_wigner(cfg: RunConfig, args) -> int:
    d = derive_params(cfg.system_params())
    psi = squeezed_vacuum_state(d.r_n, d.theta, cfg.fock_cutoff).amplitudes
    rho = np.outer(psi, psi.conj())
    q, p = obs.default_wigner_axes(rho, args.n_sigma, args.grid)
    grid = obs.phonon_wigner(rho, q, p)
    Q, P = np.meshgrid(grid.q, grid.p, indexing="ij")
    text = csv_text({"Q": Q.ravel(), "P": P.ravel(), "W": grid.values.ravel()})
    write_output(text, cfg.out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    from .verification import LIGHT, run_checks

    numbers = LIGHT if args.quick else None
    if args.criteria:
        numbers = [int(x) for x in args.criteria.split(",") if x.strip()]

    def report(r):
        print(r.line(), flush=True)

    results = run_checks(numbers, jobs=args.jobs, report=report)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed"
          + (f"; failed: {', '.join(map(str, failed))}" if failed else ""))
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "wigner": cmd_wigner,
    "analytic": cmd_analytic,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dicke-squeeze", description="Phonon-to-spin squeezing transfer simulations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        sp.add_argument("--print-config", action="store_true",
                        help="print the resolved configuration and exit")
        for key in KEYS:
            sp.add_argument(f"--{key}", dest=f"key_{key}", metavar="VALUE", help=argparse.SUPPRESS)
        if name == "sweep":
            sp.add_argument("--axis", choices=SWEEP_AXES + ("both",), default="both")
        if name == "wigner":
            sp.add_argument("--grid", type=int, default=101, help="points per quadrature axis")
            sp.add_argument("--n-sigma", type=float, default=6.0, help="half-width in standard deviations")
        if name == "verify":
            sp.add_argument("--quick", action="store_true", help="skip the exact-solver criteria")
            sp.add_argument("--criteria", help="comma-separated criterion numbers")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        flags = [f"{k}={getattr(args, 'key_' + k)}" for k in KEYS if getattr(args, "key_" + k) is not None]
        cfg = load_config(args.config, flags + list(args.set))
        if args.print_config:
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
