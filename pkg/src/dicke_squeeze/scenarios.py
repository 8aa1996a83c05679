"""Named experiment presets, traditional-Dicke baselines and reservoir-mismatch sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import observables as obs
from .dynamics_exact import LindbladModel, evolve_exact, initial_state
from .dynamics_moments import evolve_moments, moment_system, squeezed_vacuum_moments
from .hilbert import DEFAULT_TAIL_TOL, HilbertSpace
from .model import SystemParams, derive_params, reservoir_noise

SOLVERS = ("exact", "moments", "analytic")
MODELS = ("ours", "traditional")
RESERVOIRS = ("squeezed", "thermal", "vacuum")
DEFAULT_T_MAX = 0.5
DEFAULT_POINTS = 600
CSV_COLUMNS = ("Gt", "xi_s2", "xi_b2", "xi_R2", "Jz", "concurrence", "trace_err", "purity")


@dataclass(frozen=True)
class Scenario:
    """A runnable configuration.

    ``model="ours"`` uses the squeezed-frame parameters (``omega_n``, ``G_n``
    and the frame-transformed reservoir).  ``model="traditional"`` is the plain
    resonant Dicke model: coupling ``G``, phonon and spin frequency both
    ``Omega``, reservoir numbers taken without any frame transformation.
    ``resonant=True`` replaces ``Omega`` by ``omega_n`` for ``ours``.
    """

    name: str
    params: SystemParams = field(default_factory=SystemParams)
    solver: str = "moments"
    rwa: bool = True
    model: str = "ours"
    reservoir: str = "squeezed"
    n_th: float = 1.0
    closed: bool = False
    resonant: bool = False
    fock_cutoff: int = 100
    tail_tol: float = DEFAULT_TAIL_TOL
    t_max: float = DEFAULT_T_MAX
    points: int = DEFAULT_POINTS
    abs_tol: float | None = None
    rel_tol: float | None = None

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.reservoir not in RESERVOIRS:
            raise ValueError(f"unknown reservoir {self.reservoir!r}; expected one of {RESERVOIRS}")
        if self.model == "ours" and self.reservoir != "squeezed":
            raise ValueError("the squeezed-frame model is defined with a squeezed-vacuum reservoir only")
        if self.t_max <= 0 or self.points < 2:
            raise ValueError("need t_max > 0 and at least two points")
        if self.solver == "analytic" and not (self.closed and self.rwa):
            raise ValueError("the closed-form transfer applies to closed RWA runs only")

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.points)

    def tolerance(self) -> float:
        if self.abs_tol is not None:
            return self.abs_tol
        return 1e-11 if self.solver == "exact" else 1e-10


@dataclass(frozen=True)
class Coefficients:
    """Resolved frequencies, coupling and reservoir numbers of a scenario."""

    N: int
    Omega: float
    omega: float
    coupling: float
    kappa: float
    gamma: float
    N_s: float
    M_s: complex
    r_init: float


def coefficients(s: Scenario) -> Coefficients:
    p = s.params
    d = derive_params(p)
    kappa, gamma = (0.0, 0.0) if s.closed else (p.kappa, p.gamma)
    if s.model == "ours":
        return Coefficients(
            p.N, d.omega_n if s.resonant else p.Omega, d.omega_n, d.G_n,
            kappa, gamma, max(0.0, d.N_s), d.M_s, d.r_n,
        )
    if s.reservoir == "vacuum":
        N_s, M_s = 0.0, 0j
    elif s.reservoir == "thermal":
        N_s, M_s = float(s.n_th), 0j
    else:
        # bare squeezed vacuum: no frame transformation, so r_n = 0 in the noise formulas
        N_s, M_s = reservoir_noise(0.0, d.r_e, d.phi_e)
    return Coefficients(p.N, p.Omega, p.Omega, p.G, kappa, gamma, N_s, M_s, d.r_n)


def build_baseline(kind: str, p: SystemParams, **overrides) -> Scenario:
    """Traditional Dicke model in a squeezed (``SR``), thermal (``TR``) or vacuum (``VR``) reservoir."""
    kinds = {"SR": "squeezed", "TR": "thermal", "VR": "vacuum"}
    if kind not in kinds:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {tuple(kinds)}")
    base = dict(name=f"baseline-{kind.lower()}", params=p, model="traditional", reservoir=kinds[kind])
    base.update(overrides)
    return Scenario(**base)


@dataclass
class ScenarioResult:
    """Observable columns of one run; columns a solver cannot provide are ``None``."""

    scenario: Scenario
    times: np.ndarray
    xi_s2: np.ndarray
    xi_b2: np.ndarray
    xi_R2: np.ndarray | None = None
    jz: np.ndarray | None = None
    concurrence: np.ndarray | None = None
    trace_err: np.ndarray | None = None
    purity: np.ndarray | None = None
    trajectory: object = None

    @property
    def source(self) -> str:
        return self.scenario.solver

    def samples(self) -> list[obs.SqueezingSample]:
        def at(col, i):
            return None if col is None else float(col[i])

        return [
            obs.SqueezingSample(
                float(t), float(self.xi_b2[i]), float(self.xi_s2[i]),
                at(self.xi_R2, i), at(self.jz, i), at(self.concurrence, i), self.source,
            )
            for i, t in enumerate(self.times)
        ]

    def columns(self) -> dict:
        return {
            "Gt": self.times, "xi_s2": self.xi_s2, "xi_b2": self.xi_b2, "xi_R2": self.xi_R2,
            "Jz": self.jz, "concurrence": self.concurrence,
            "trace_err": self.trace_err, "purity": self.purity,
        }

    def min_squeezing(self) -> tuple[float, float]:
        return obs.min_squeezing(self.times, self.xi_s2)


def run_scenario(s: Scenario, times=None, backend: str | None = None) -> ScenarioResult:
    t = s.times() if times is None else np.asarray(times, dtype=float)
    c = coefficients(s)
    if s.solver == "analytic":
        xs, xb = obs.analytic_curves(c.N, c.coupling, c.r_init, t)
        return ScenarioResult(s, t, xs, xb)

    if s.solver == "moments":
        system = moment_system(c.N, c.Omega, c.omega, c.coupling, c.kappa, c.gamma, c.N_s, c.M_s, s.rwa)
        traj = evolve_moments(system, squeezed_vacuum_moments(c.N, c.r_init), t,
                              s.tolerance(), s.rel_tol, backend)
        return ScenarioResult(
            s, t, obs.xi_s2_from_moments(traj.moments, c.N), obs.xi_b2_from_moments(traj.moments),
            trajectory=traj,
        )

    model = LindbladModel(
        "rwa" if s.rwa else "effective", c.N, c.Omega, c.omega, c.coupling,
        c.kappa, c.gamma, c.N_s, c.M_s,
    )
    space = HilbertSpace(c.N, s.fock_cutoff)
    rho0 = initial_state(s.params, derive_params(s.params), space, tail_tol=s.tail_tol)
    traj = evolve_exact(rho0, model, t, s.tolerance(), s.rel_tol)
    xs = obs.xi_s2_from_moments(traj.moments, c.N)
    xb = obs.xi_b2_from_moments(traj.moments)
    conc = None
    if 2 <= c.N <= obs.MAX_CONCURRENCE_N:
        conc = np.array([obs.concurrence(r) for r in traj.spin_states])
    return ScenarioResult(
        s, t, xs, xb, obs.xi_R2(xs, traj.jz, c.N), traj.jz, conc,
        traj.trace_err, traj.purity, traj,
    )


# --- presets -----------------------------------------------------------------

def _presets() -> dict:
    p = SystemParams()
    small = {N: SystemParams(N=N) for N in (2, 4, 6, 10)}
    out = {
        "fig3g-analytic": Scenario("fig3g-analytic", p, "analytic", closed=True, resonant=True, t_max=0.3, points=601),
        "fig3g-moments": Scenario("fig3g-moments", p, "moments", closed=True, resonant=True, t_max=0.3, points=601),
        "fig5a-rwa": Scenario("fig5a-rwa", p, "moments", rwa=True, t_max=0.3, points=601),
        "fig5a-norwa": Scenario("fig5a-norwa", p, "moments", rwa=False, t_max=0.3, points=601),
        "fig5d-ours": Scenario("fig5d-ours", p, "moments", t_max=1.0, points=1001),
    }
    for kind in ("SR", "TR", "VR"):
        out[f"fig5d-{kind.lower()}"] = build_baseline(kind, p, name=f"fig5d-{kind.lower()}", t_max=1.0, points=1001)
    for N in (2, 6, 10):
        name = f"fig3-exact-N{N}"
        out[name] = Scenario(name, small[N], "exact", closed=True, fock_cutoff=40, tail_tol=1e-3,
                             t_max=1.0, points=401)
    for N in (2, 4):
        for closed in (True, False):
            name = f"fig3hi-N{N}-{'closed' if closed else 'open'}"
            out[name] = Scenario(name, small[N], "exact", closed=closed, fock_cutoff=100, t_max=1.0, points=401)
    for N in (2, 10):
        name = f"fig4-N{N}"
        out[name] = Scenario(name, small[N], "exact", closed=True, fock_cutoff=60, tail_tol=1e-5,
                             t_max=0.3, points=301)
    return out


PRESETS = _presets()


def get_scenario(name: str) -> Scenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; known: {', '.join(sorted(PRESETS))}") from None


# --- sweeps ------------------------------------------------------------------

SWEEP_AXES = ("phi_e", "r_e")
SWEEP_HALF_STEPS = 30


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: np.ndarray
    t_max: float = 0.3
    points: int = 601

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; expected one of {SWEEP_AXES}")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


def matched_value(axis: str, p: SystemParams) -> float:
    return math.pi if axis == "phi_e" else derive_params(p).r_n


def default_sweep(axis: str, p: SystemParams, t_max: float = 0.3, points: int = 601) -> SweepSpec:
    """61-point grid through the matched point: ``pi +- 0.3`` or ``r_n (1 +- 0.3)``."""
    center = matched_value(axis, p)
    step = 0.01 if axis == "phi_e" else 0.01 * center
    values = center + (np.arange(2 * SWEEP_HALF_STEPS + 1) - SWEEP_HALF_STEPS) * step
    values[SWEEP_HALF_STEPS] = center
    return SweepSpec(axis, values, t_max, points)


@dataclass(frozen=True)
class SweepPoint:
    value: float
    xi_min: float
    t_min: float


def sweep_scenario(base: Scenario, axis: str, value: float) -> Scenario:
    p = base.params
    d = derive_params(p)
    r_e = d.r_e if axis == "phi_e" else value
    phi_e = value if axis == "phi_e" else d.phi_e
    return replace(base, params=replace(p, r_e=float(r_e), phi_e=float(phi_e)))


def _sweep_point(args) -> SweepPoint:
    base, axis, value, times = args
    res = run_scenario(sweep_scenario(base, axis, value), times)
    v, tm = res.min_squeezing()
    return SweepPoint(float(value), v, tm)


def sweep_min_squeezing(base: Scenario, spec: SweepSpec, jobs: int = 1) -> list[SweepPoint]:
    """``(xi_s^2)_min`` at each grid value; results are ordered like ``spec.values``."""
    times = np.linspace(0.0, spec.t_max, spec.points)
    tasks = [(base, spec.axis, float(v), times) for v in spec.values]
    if jobs <= 1:
        return [_sweep_point(a) for a in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_point, tasks))


def sweep_grid_2d(base: Scenario, phi_values, r_values, t_max: float = 0.3, points: int = 101,
                  jobs: int = 1) -> np.ndarray:
    """Coarse ``(xi_s^2)_min`` surface, indexed ``[i_phi, i_r]``."""
    times = np.linspace(0.0, t_max, points)
    phi_values = np.asarray(phi_values, dtype=float)
    r_values = np.asarray(r_values, dtype=float)
    tasks = [(replace(base, params=replace(base.params, r_e=float(r), phi_e=float(ph))), times)
             for ph in phi_values for r in r_values]
    if jobs <= 1:
        vals = [_grid_point(a) for a in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            vals = list(pool.map(_grid_point, tasks))
    return np.array(vals).reshape(phi_values.size, r_values.size)


def _grid_point(args) -> float:
    s, times = args
    return run_scenario(s, times).min_squeezing()[0]
