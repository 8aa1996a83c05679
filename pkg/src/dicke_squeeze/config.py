"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored.  ``r_e`` and ``phi_e`` accept
``match``, which resolves to the phase-matched reservoir when the file is
loaded.  :func:`dump_config` writes text that reloads to an identical config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .model import SystemParams, derive_params
from .scenarios import SOLVERS, Scenario, get_scenario

KEYS = (
    "N", "n_photon", "Omega", "omega_b", "g_over_omega_b", "gamma", "kappa",
    "r_e", "phi_e", "solver", "rwa", "fock_cutoff", "t_max", "points",
    "abs_tol", "rel_tol", "scenario", "out",
)
MATCH = "match"
NO_SCENARIO = "none"
STDOUT = "-"


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


@dataclass(frozen=True)
class RunConfig:
    N: int = 100
    n_photon: int = 1
    Omega: float = 200.0
    omega_b: float = 2300.0
    g_over_omega_b: float = 0.2481
    gamma: float = 1.0
    kappa: float = 0.01
    r_e: float | str = MATCH
    phi_e: float | str = MATCH
    solver: str = "moments"
    rwa: bool = True
    fock_cutoff: int = 100
    t_max: float = 0.5
    points: int = 600
    abs_tol: float | None = None
    rel_tol: float | None = None
    scenario: str = NO_SCENARIO
    out: str = STDOUT

    def system_params(self) -> SystemParams:
        return SystemParams(
            N=self.N, n=self.n_photon, Omega=self.Omega, omega_b=self.omega_b,
            g_over_omega_b=self.g_over_omega_b, kappa=self.kappa, gamma=self.gamma,
            r_e=None if self.r_e == MATCH else float(self.r_e),
            phi_e=None if self.phi_e == MATCH else float(self.phi_e),
        )

    def to_scenario(self) -> Scenario:
        base = get_scenario(self.scenario) if self.scenario != NO_SCENARIO else Scenario("custom")
        return replace(
            base,
            params=self.system_params(),
            solver=self.solver,
            rwa=self.rwa,
            fock_cutoff=self.fock_cutoff,
            t_max=self.t_max,
            points=self.points,
            abs_tol=self.abs_tol,
            rel_tol=self.rel_tol,
        )


def _parse_int(v: str) -> int:
    x = float(v)
    if not x.is_integer():
        raise ValueError(f"expected an integer, got {v!r}")
    return int(x)


def _parse_float(v: str) -> float:
    x = float(v)
    if not math.isfinite(x):
        raise ValueError(f"expected a finite number, got {v!r}")
    return x


def _parse_bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _parse_match(v: str):
    return MATCH if v.strip().lower() == MATCH else _parse_float(v)


def _parse_solver(v: str) -> str:
    if v not in SOLVERS:
        raise ValueError(f"solver must be one of {SOLVERS}, got {v!r}")
    return v


def _parse_tol(v: str):
    if v.strip().lower() == "default":
        return None
    x = _parse_float(v)
    if x <= 0:
        raise ValueError("tolerances must be positive")
    return x


PARSERS = {
    "N": _parse_int, "n_photon": _parse_int, "Omega": _parse_float, "omega_b": _parse_float,
    "g_over_omega_b": _parse_float, "gamma": _parse_float, "kappa": _parse_float,
    "r_e": _parse_match, "phi_e": _parse_match, "solver": _parse_solver, "rwa": _parse_bool,
    "fock_cutoff": _parse_int, "t_max": _parse_float, "points": _parse_int,
    "abs_tol": _parse_tol, "rel_tol": _parse_tol, "scenario": str.strip, "out": str.strip,
}


def parse_pairs(text: str, origin: str = "config") -> list[tuple[str, str, str]]:
    """``(key, value, where)`` triples from config text."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin} line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{origin} line {lineno}: unknown key {key!r}")
        pairs.append((key, value, f"{origin} line {lineno}"))
    return pairs


def parse_override(item: str) -> tuple[str, str, str]:
    if "=" not in item:
        raise ConfigError(f"--set {item!r}: expected key=value")
    key, value = (s.strip() for s in item.split("=", 1))
    if key not in KEYS:
        raise ConfigError(f"--set {item!r}: unknown key {key!r}")
    return key, value, f"--set {key}"


def _from_scenario(name: str) -> RunConfig:
    if name == NO_SCENARIO:
        return RunConfig()
    s = get_scenario(name)
    p = s.params
    return RunConfig(
        N=p.N, n_photon=p.n, Omega=p.Omega, omega_b=p.omega_b, g_over_omega_b=p.g_over_omega_b,
        gamma=p.gamma, kappa=p.kappa,
        r_e=MATCH if p.r_e is None else p.r_e, phi_e=MATCH if p.phi_e is None else p.phi_e,
        solver=s.solver, rwa=s.rwa, fock_cutoff=s.fock_cutoff, t_max=s.t_max, points=s.points,
        abs_tol=s.abs_tol, rel_tol=s.rel_tol, scenario=name,
    )


def build_config(pairs) -> RunConfig:
    """Apply ``(key, value, where)`` pairs in order; a ``scenario`` entry seeds the defaults."""
    pairs = list(pairs)
    scen = NO_SCENARIO
    for key, value, _ in pairs:
        if key == "scenario":
            scen = value.strip() or NO_SCENARIO
    try:
        cfg = _from_scenario(scen)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    values = {}
    for key, value, where in pairs:
        try:
            values[key] = PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key}: {exc}") from None
    values["scenario"] = scen
    cfg = replace(cfg, **values)
    return resolve(cfg)


def resolve(cfg: RunConfig) -> RunConfig:
    """Validate physics inputs and turn ``match`` into numbers."""
    try:
        p = cfg.system_params()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    d = derive_params(p)
    if cfg.points < 2 or cfg.t_max <= 0:
        raise ConfigError("need t_max > 0 and points >= 2")
    if cfg.fock_cutoff < 2:
        raise ConfigError("fock_cutoff must be >= 2")
    return replace(cfg, r_e=d.r_e, phi_e=d.phi_e)


def load_config(path=None, overrides=()) -> RunConfig:
    pairs = []
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        pairs.extend(parse_pairs(text, str(path)))
    pairs.extend(parse_override(o) for o in overrides)
    return build_config(pairs)


def _fmt_value(v) -> str:
    if v is None:
        return "default"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_fmt_value(getattr(cfg, f.name))}\n" for f in fields(cfg))
