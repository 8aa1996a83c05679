"""Numbered acceptance checks shared by the ``verify`` command and the test suite.

Each check returns a :class:`CheckResult` with the measured numbers.  Checks
that run the exact solver are marked ``heavy``; their trajectories are kept in
a :class:`RunCache` so the solver-hygiene check can reuse them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import observables as obs
from .dynamics_exact import ExactTrajectory, LindbladModel, evolve_exact, initial_state
from .dynamics_moments import (
    MOMENT_LABELS,
    assemble_moment_system,
    evolve_moments,
    initial_moments,
)
from .hilbert import HilbertSpace, squeezed_vacuum_state
from .model import SystemParams, derive_params, verify_diagonalization
from .scenarios import (
    SWEEP_HALF_STEPS,
    SWEEP_AXES,
    default_sweep,
    get_scenario,
    run_scenario,
    sweep_min_squeezing,
)


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    note: str = ""

    def line(self) -> str:
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d}: {self.title} ({vals})"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


@dataclass
class RunCache:
    """Exact trajectories produced by earlier checks, keyed by a label."""

    exact: dict = field(default_factory=dict)

    def add(self, label: str, traj: ExactTrajectory) -> ExactTrajectory:
        self.exact[label] = traj
        return traj


REFERENCE = SystemParams()


def check_parameters() -> CheckResult:
    d = derive_params(REFERENCE)
    ok = abs(d.r_n - 1.2199) < 1e-3 and abs(d.G_n - 3.3868) < 1e-3 and abs(d.omega_n - 200.6) < 0.5
    return CheckResult(1, "derived parameters", ok, {"r_1": d.r_n, "G_n": d.G_n, "omega_n": d.omega_n})


def check_noise_cancellation() -> CheckResult:
    d = derive_params(REFERENCE)
    ok = abs(d.N_s) < 1e-12 and abs(d.M_s) < 1e-12
    return CheckResult(2, "matched reservoir cancels noise", ok, {"N_s": abs(d.N_s), "M_s": abs(d.M_s)})


def check_analytic_transfer() -> CheckResult:
    mom = run_scenario(get_scenario("fig3g-moments"))
    ana = run_scenario(get_scenario("fig3g-analytic"), mom.times)
    dev = float(np.max(np.abs(mom.xi_s2 - ana.xi_s2)))
    v, t = mom.min_squeezing()
    ok = dev < 1e-6 and abs(v - 0.0872) < 1e-3 and abs(t - 0.0928) < 1e-3
    return CheckResult(3, "moment solver reproduces the closed-form transfer", ok,
                       {"max_dev": dev, "min_xi_s2": v, "Gt_min": t})


def _local_minima(y: np.ndarray, depth: float = 1e-3) -> list[int]:
    idx = np.nonzero((y[1:-1] < y[:-2]) & (y[1:-1] <= y[2:]))[0] + 1
    return [int(i) for i in idx if y[i] < 1 - depth]


def anti_phase(xs, xb) -> bool:
    """On every descent into a local minimum of ``xs``, ``xb`` rises and moves against ``xs``."""
    minima = _local_minima(xs)
    if not minima:
        return False
    maxima = _local_minima(-np.asarray(xs))
    for i in minima:
        j = max([m for m in maxima if m < i], default=0)
        if i - j < 3:
            return False
        seg_s, seg_b = xs[j:i + 1], xb[j:i + 1]
        if not (seg_b[-1] > seg_b[0] and np.corrcoef(seg_s, seg_b)[0, 1] < 0):
            return False
    return True


def check_transfer_trend(cache: RunCache | None = None) -> CheckResult:
    cache = cache or RunCache()
    mins, antiphase = [], True
    for N in (2, 6, 10):
        res = run_scenario(get_scenario(f"fig3-exact-N{N}"))
        cache.add(f"fig3-exact-N{N}", res.trajectory)
        mins.append(res.min_squeezing()[0])
        antiphase &= anti_phase(res.xi_s2, res.xi_b2)
    decreasing = all(a > b for a, b in zip(mins, mins[1:]))
    return CheckResult(4, "exact transfer improves with N, anti-phase oscillation", decreasing and antiphase,
                       {"min_xi_s2[N=2,6,10]": mins, "antiphase": antiphase})


CONSISTENCY_CUTOFF = 60
CONSISTENCY_TAIL_TOL = 1e-5
CONSISTENCY_T_MAX = 0.05
BOSON_LABELS = ("bb", "bdb", "bdbd")


def moment_gap(N: int, cache: RunCache | None = None, cutoff: int = CONSISTENCY_CUTOFF):
    """Exact vs moment solutions at reference rates for ``Gt <= 0.05``.

    Returns ``(max relative gap per moment over entries above 0.05 N,
    max absolute gap per moment)``.
    """
    p = replace(REFERENCE, N=N)
    d = derive_params(p)
    t = np.linspace(0, CONSISTENCY_T_MAX, 26)
    space = HilbertSpace(N, cutoff)
    rho0 = initial_state(p, d, space, tail_tol=CONSISTENCY_TAIL_TOL)
    ex = evolve_exact(rho0, LindbladModel.from_params(p, d), t, tol=1e-10)
    if cache is not None:
        cache.add(f"consistency-N{N}", ex)
    mo = evolve_moments(assemble_moment_system(p, d, True), initial_moments(p, d), t)
    rel, absg = {}, {}
    for j, label in enumerate(MOMENT_LABELS):
        e, m = ex.moments[:, j], mo.moments[:, j]
        mask = np.abs(e) > 0.05 * N
        rel[label] = float(np.max(np.abs(e[mask] - m[mask]) / np.abs(e[mask]))) if mask.any() else 0.0
        absg[label] = float(np.max(np.abs(e - m)))
    return rel, absg


def check_moment_consistency(cache: RunCache | None = None) -> CheckResult:
    rel10, abs10 = moment_gap(10, cache)
    _, abs20 = moment_gap(20, cache)
    worst = max(rel10, key=rel10.get)
    within = rel10[worst] < 0.10
    trend = all(abs10[k] > abs20[k] for k in BOSON_LABELS)
    return CheckResult(
        5, "moment and exact solvers agree at N=10, gap shrinks with N", within and trend,
        {"worst_rel_N10": rel10[worst], "worst_moment": worst,
         "boson_gap_N10": [abs10[k] for k in BOSON_LABELS],
         "boson_gap_N20": [abs20[k] for k in BOSON_LABELS]},
    )


def identity_residuals(res) -> tuple[float, float]:
    """``max |xi + (N-1)C - 1|`` where ``xi <= 1`` and ``max C`` where ``xi > 1``."""
    N = res.scenario.params.N
    xs, c = res.xi_s2, res.concurrence
    sq = xs <= 1
    resid = float(np.max(np.abs(obs.concurrence_residual(xs[sq], c[sq], N)))) if sq.any() else 0.0
    stray = float(np.max(c[~sq])) if (~sq).any() else 0.0
    return resid, stray


def check_concurrence_identity(cache: RunCache | None = None) -> CheckResult:
    cache = cache or RunCache()
    m = {}
    for N in (2, 4):
        for kind in ("closed", "open"):
            name = f"fig3hi-N{N}-{kind}"
            res = run_scenario(get_scenario(name))
            cache.add(name, res.trajectory)
            m[f"N{N}_{kind}"] = identity_residuals(res)
    ok = (
        m["N2_closed"][0] < 1e-8 and m["N2_closed"][1] == 0
        and m["N4_closed"][0] < 1e-6
        and m["N2_open"][0] <= 1e-3 and m["N4_open"][0] <= 1e-3
    )
    measured = {f"resid_{k}": v[0] for k, v in m.items()}
    measured.update({f"C_where_unsqueezed_{k}": v[1] for k, v in m.items()})
    return CheckResult(6, "squeezing-concurrence identity", ok, measured)


def check_baselines() -> CheckResult:
    ours = run_scenario(get_scenario("fig5d-ours"))
    v_ours = ours.min_squeezing()[0]
    base = {}
    x0 = math.exp(-2 * derive_params(REFERENCE).r_n)
    same_start = abs(ours.xi_b2[0] - x0) < 1e-12
    for kind in ("sr", "tr", "vr"):
        res = run_scenario(get_scenario(f"fig5d-{kind}"))
        base[kind] = res.min_squeezing()[0]
        same_start = same_start and abs(res.xi_b2[0] - x0) < 1e-12
    ok = same_start and all(v_ours < v for v in base.values())
    return CheckResult(7, "matched system beats traditional baselines", ok,
                       {"ours": v_ours, **{k.upper(): v for k, v in base.items()}, "same_start": same_start})


SWEEP_WINDOW = 0.1


def check_sweeps(jobs: int = 1) -> CheckResult:
    base = get_scenario("fig5a-rwa")
    measured, ok = {}, True
    for axis in SWEEP_AXES:
        spec = default_sweep(axis, base.params)
        pts = sweep_min_squeezing(base, spec, jobs)
        v = np.array([p.xi_min for p in pts])
        x = spec.values
        c = SWEEP_HALF_STEPS
        is_min = int(np.argmin(v)) == c
        right = (x >= x[c]) & (x <= x[c] + SWEEP_WINDOW + 1e-12)
        left = (x <= x[c]) & (x >= x[c] - SWEEP_WINDOW - 1e-12)
        mono = bool(np.all(np.diff(v[right]) > 0) and np.all(np.diff(v[left]) < 0))
        ok = ok and is_min and mono
        measured[f"{axis}_argmin_offset"] = int(np.argmin(v)) - c
        measured[f"{axis}_matched"] = float(v[c])
        measured[f"{axis}_grid_min"] = float(v.min())
        measured[f"{axis}_monotone"] = mono
    return CheckResult(8, "matched reservoir is the sweep optimum", ok, measured)


def check_rwa() -> CheckResult:
    a = run_scenario(get_scenario("fig5a-rwa"))
    b = run_scenario(get_scenario("fig5a-norwa"), a.times)
    diff = b.xi_s2 - a.xi_s2
    mean_dev = float(np.mean(np.abs(diff)))
    s = np.sign(diff[np.abs(diff) > 1e-12])
    crossings = int(np.sum(s[1:] != s[:-1]))
    ok = mean_dev < 0.05 and crossings >= 2
    return CheckResult(9, "counter-rotating terms only perturb the RWA curve", ok,
                       {"mean_abs_dev": mean_dev, "crossings": crossings})


def hygiene(traj: ExactTrajectory) -> dict:
    closed = traj.model.closed
    out = {
        "trace_err": float(np.max(traj.trace_err)),
        "herm_err": float(np.max(traj.herm_err)),
        "min_eig": float(np.min(traj.min_eigs)),
    }
    if closed:
        out["purity_drift"] = float(np.max(np.abs(traj.purity - traj.purity[0])))
        if traj.model.variant == "rwa":
            out["excitation_drift"] = float(np.max(np.abs(traj.excitation - traj.excitation[0])))
    return out


def hygiene_ok(h: dict) -> bool:
    return (
        h["trace_err"] < 1e-8 and h["herm_err"] < 1e-9 and h["min_eig"] > -1e-8
        and h.get("purity_drift", 0.0) < 1e-8 and h.get("excitation_drift", 0.0) < 1e-8
    )


def check_hygiene(cache: RunCache) -> CheckResult:
    if not cache.exact:
        # run on its own: audit a closed and an open run
        for name in ("fig3hi-N2-closed", "fig3hi-N2-open"):
            cache.add(name, run_scenario(get_scenario(name)).trajectory)
    worst = {"trace_err": 0.0, "herm_err": 0.0, "min_eig": 0.0, "purity_drift": 0.0, "excitation_drift": 0.0}
    ok = True
    failing = []
    for label, traj in cache.exact.items():
        h = hygiene(traj)
        if not hygiene_ok(h):
            ok = False
            failing.append(label)
        for k, v in h.items():
            worst[k] = min(worst[k], v) if k == "min_eig" else max(worst[k], v)
    measured = {"runs": len(cache.exact), **worst}
    if failing:
        measured["failing"] = failing
    return CheckResult(10, "exact-solver hygiene", ok, measured)


def check_wigner() -> CheckResult:
    vac = np.zeros((8, 8), complex)
    vac[0, 0] = 1
    w0 = float(obs.phonon_wigner(vac, [0.0], [0.0]).values[0, 0])
    d = derive_params(REFERENCE)
    psi = squeezed_vacuum_state(d.r_n, d.theta, 100).amplitudes
    grid = obs.phonon_wigner(np.outer(psi, psi.conj()))
    var_p = grid.variance_p()
    norm = grid.norm()
    ok = abs(w0 - 1 / (2 * math.pi)) < 1e-6 and abs(var_p - 0.0872) < 1e-3 and abs(norm - 1) < 1e-3
    return CheckResult(11, "phonon Wigner function", ok, {"W_vac(0,0)": w0, "var_P": var_p, "norm": norm})


def check_diagonalization() -> CheckResult:
    rep = verify_diagonalization(REFERENCE, cutoff=120)
    ok = rep.residual < 1e-6 * REFERENCE.omega_b and rep.number_relative_error < 1e-5
    return CheckResult(12, "squeezing transformation diagonalizes the phonon part", ok,
                       {"residual/omega_b": rep.residual / REFERENCE.omega_b,
                        "bdb_rel_err": rep.number_relative_error, "work_cutoff": rep.work_cutoff})


LIGHT = (1, 2, 3, 7, 8, 9, 11, 12)
HEAVY = (4, 5, 6, 10)


def run_checks(numbers=None, jobs: int = 1, cache: RunCache | None = None, report=None) -> list[CheckResult]:
    """Run the requested checks in numeric order; ``report`` receives each result as it completes."""
    numbers = sorted(set(numbers or LIGHT + HEAVY))
    cache = cache or RunCache()
    table = {
        1: check_parameters,
        2: check_noise_cancellation,
        3: check_analytic_transfer,
        4: lambda: check_transfer_trend(cache),
        5: lambda: check_moment_consistency(cache),
        6: lambda: check_concurrence_identity(cache),
        7: check_baselines,
        8: lambda: check_sweeps(jobs),
        9: check_rwa,
        10: lambda: check_hygiene(cache),
        11: check_wigner,
        12: check_diagonalization,
    }
    results = []
    for n in numbers:
        if n not in table:
            raise ValueError(f"unknown criterion {n}")
        r = table[n]()
        results.append(r)
        if report is not None:
            report(r)
    return results
