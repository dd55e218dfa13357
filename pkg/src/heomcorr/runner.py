"""Run orchestration: single runs, zeta sweeps, file emission.

A run is the pipeline propagate -> correlations -> event detection, plus a
small self-audit against the independent oracles. Outputs per run: a
trajectory CSV (plot-ready, 12 significant digits), a plain-text event list
and a JSON report with truncation, health and oracle metadata. Identical
configs produce byte-identical CSVs; wall-clock timings live only in the
JSON report.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__ as _version
from .bath import BathParameters, matsubara_expansion
from .config import SimulationConfig, build_initial_state, format_config
from .correlations import (
    CorrelationPoint,
    MeasurementAngles,
    OptimizerSettings,
    classical_correlation,
    correlation_trajectory,
    mutual_information,
    quantum_discord,
)
from .errors import HeomcorrError
from .events import find_crossings, find_sudden_changes, find_transitions
from .hierarchy import HierarchyRHS, HierarchyState, SolverSettings, build_hierarchy, converge, propagate, system_hamiltonian
from .oracles import OracleReport, closed_system_propagate, exhaustive_rhs, grid_classical_correlation, random_x_state
from .qmatrix import bell_even_state, bell_odd_state, trace_distance

__all__ = ["RunReport", "SweepReport", "run", "sweep", "read_trajectory_csv",
           "validation_suite", "CSV_COLUMNS"]

#: trajectory CSV schema; the X-form coherences are the (0,3) and (1,2)
#: entries, rho_01 is carried as the leading would-be X-violation monitor
CSV_COLUMNS = (
    "t", "I", "C", "Q", "theta_star", "phi_star", "lambda_lo", "lambda_hi",
    "rho_00", "rho_11", "rho_22", "rho_33",
    "re_rho_01", "im_rho_01", "re_rho_03", "im_rho_03", "re_rho_12", "im_rho_12",
)


def _fmt(x):
    return f"{float(x):.12g}"


@dataclass
class RunReport:
    """Everything one run produced, ready for serialization."""

    config: SimulationConfig
    truncation: dict
    diagnostics: dict
    oracles: list
    events: list
    points: list
    states: np.ndarray
    paths: dict

    def oracle_failures(self):
        return [r for r in self.oracles if not r.passed]


@dataclass
class SweepReport:
    """Per-zeta run reports plus the combined comparison data."""

    zeta_values: list
    reports: dict
    failures: dict
    comparison: list
    paths: dict


#: solver settings for oracle comparisons (tighter than run defaults)
_ORACLE_SOLVER = SolverSettings(atol=1e-12, rtol=1e-10)


def _evolving_probe_state():
    """A mixed state with dynamics in both parity sectors of the Hamiltonian."""
    return 0.5 * bell_even_state() + 0.5 * np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)


def _optimizer_settings(cfg):
    return OptimizerSettings(n_theta=cfg.n_theta, n_phi=cfg.n_phi,
                             refine_tol=cfg.refine_tol)


def _solver_settings(cfg):
    return SolverSettings(atol=cfg.atol, rtol=cfg.rtol, max_ados=cfg.max_ados)


def _standard_oracles(cfg, model, bath_params, rho0):
    """The per-run self-audit: cheap instances of each oracle family."""
    reports = []

    # hierarchy RHS vs naive dictionary evaluation on a small instance
    k_small, l_small = 1, 2
    baths = (matsubara_expansion(bath_params, k_small, cfg.terminator),) * 2
    hier = build_hierarchy(k_small, l_small)
    rhs = HierarchyRHS(hier, model, baths)
    rng = np.random.default_rng(20260208)
    dev = 0.0
    for _ in range(5):
        ados = rng.standard_normal((hier.size, 4, 4)) + 1j * rng.standard_normal((hier.size, 4, 4))
        state = HierarchyState(hierarchy=hier, ados=ados)
        dev = max(dev, float(np.max(np.abs(rhs(ados) - exhaustive_rhs(state, model, baths).ados))))
    reports.append(OracleReport.from_deviation(
        "rhs-agreement", dev, 1e-13,
        f"K={k_small}, L={l_small}, 5 random hierarchies"))

    # closed-system limit: decoupled propagation vs exact eigendecomposition,
    # on a probe state with nontrivial dynamics in both parity sectors; the
    # integrator runs tighter than the simulation default so its own error
    # stays subdominant to the 1e-8 disagreement budget
    free = BathParameters(eta=0.0, gamma=bath_params.gamma, beta=bath_params.beta)
    free_baths = (matsubara_expansion(free, 0, cfg.terminator),) * 2
    short_grid = np.array([0.0, 0.5 * cfg.t_max, cfg.t_max])
    probe = _evolving_probe_state()
    traj = propagate(probe, model, free_baths, short_grid, 0, _ORACLE_SOLVER)
    exact = closed_system_propagate(probe, model, cfg.t_max)
    reports.append(OracleReport.from_deviation(
        "closed-system", trace_distance(traj.states[-1], exact), 1e-8,
        f"eta=0 run to t={cfg.t_max:g}"))

    # measurement maximization vs an exhaustive grid on the initial state
    c_opt, _ = classical_correlation(rho0, _optimizer_settings(cfg))
    c_grid, _ = grid_classical_correlation(rho0, 128, 256)
    reports.append(OracleReport.from_deviation(
        "measurement-grid-lower", c_grid - c_opt, 1e-6,
        "optimizer must reach the 128x256 grid certificate"))
    reports.append(OracleReport.from_deviation(
        "measurement-grid-upper", c_opt - c_grid, 1e-4,
        "optimizer must stay near the 128x256 grid certificate"))
    return reports


def validation_suite(cfg, n_x_states=100, grid_shape=(512, 1024), seed=20260808):
    """The full oracle battery, as exposed by the ``validate`` CLI verb.

    Checks, at acceptance-grade sizes: hierarchy RHS against the naive
    evaluation at three truncations; decoupled propagation against the exact
    closed-system result for three qubit couplings; the measurement
    optimizer against exact Bell values, against the dense-grid value on the
    Werner mixture and against the dense-grid band on random X-states.
    """
    reports = []
    bath_params = BathParameters(eta=cfg.eta, gamma=cfg.gamma, beta=cfg.beta)
    rng = np.random.default_rng(seed)
    opt = _optimizer_settings(cfg)

    for k_small, l_small in ((0, 1), (1, 2), (1, 3)):
        baths = (matsubara_expansion(bath_params, k_small, cfg.terminator),) * 2
        hier = build_hierarchy(k_small, l_small)
        model = system_hamiltonian(cfg.epsilon, cfg.zeta)
        rhs = HierarchyRHS(hier, model, baths)
        dev = 0.0
        for _ in range(50):
            ados = rng.standard_normal((hier.size, 4, 4)) \
                + 1j * rng.standard_normal((hier.size, 4, 4))
            state = HierarchyState(hierarchy=hier, ados=ados)
            dev = max(dev, float(np.max(np.abs(
                rhs(ados) - exhaustive_rhs(state, model, baths).ados))))
        reports.append(OracleReport.from_deviation(
            f"rhs-agreement-K{k_small}-L{l_small}", dev, 1e-13,
            "50 random hierarchies"))

    free = BathParameters(eta=0.0, gamma=cfg.gamma, beta=cfg.beta)
    free_baths = (matsubara_expansion(free, 0, cfg.terminator),) * 2
    probe = _evolving_probe_state()
    grid3 = np.array([0.0, 0.5 * cfg.t_max, cfg.t_max])
    for zeta in (0.0, 0.3, 1.0):
        model = system_hamiltonian(cfg.epsilon, zeta)
        traj = propagate(probe, model, free_baths, grid3, 0, _ORACLE_SOLVER)
        exact = closed_system_propagate(probe, model, cfg.t_max)
        reports.append(OracleReport.from_deviation(
            f"closed-system-zeta{zeta:g}",
            trace_distance(traj.states[-1], exact), 1e-8,
            f"eta=0 run to t={cfg.t_max:g}"))

    bell = bell_odd_state()
    info = mutual_information(bell)
    q_bell, point = quantum_discord(bell, opt)
    dev = max(abs(info - 2.0), abs(point.classical - 1.0), abs(q_bell - 1.0))
    reports.append(OracleReport.from_deviation(
        "bell-exact", dev, 1e-6, "odd Bell state: I=2, C=1, Q=1"))

    werner = 0.5 * bell + 0.5 * np.eye(4) / 4
    c_grid, _ = grid_classical_correlation(werner, *grid_shape)
    q_w, point = quantum_discord(werner, opt)
    dev = max(abs(point.classical - c_grid),
              abs(q_w - (mutual_information(werner) - c_grid)))
    reports.append(OracleReport.from_deviation(
        "werner-grid", dev, 1e-4,
        f"Werner p=0.5 vs {grid_shape[0]}x{grid_shape[1]} grid"))

    dev_lower = dev_upper = 0.0
    for _ in range(n_x_states):
        rho = random_x_state(rng)
        c_opt, _ = classical_correlation(rho, opt)
        c_grid, _ = grid_classical_correlation(rho, *grid_shape)
        dev_lower = max(dev_lower, c_grid - c_opt)
        dev_upper = max(dev_upper, c_opt - c_grid)
    reports.append(OracleReport.from_deviation(
        "x-state-grid-lower", dev_lower, 1e-6,
        f"{n_x_states} random X-states vs {grid_shape[0]}x{grid_shape[1]} grid"))
    reports.append(OracleReport.from_deviation(
        "x-state-grid-upper", dev_upper, 1e-4,
        f"{n_x_states} random X-states vs {grid_shape[0]}x{grid_shape[1]} grid"))
    return reports


def _csv_text(points, states):
    lines = [",".join(CSV_COLUMNS)]
    for p, rho in zip(points, states):
        row = [p.t, p.mutual_info, p.classical, p.discord,
               p.angles.theta, p.angles.phi, p.lambda_lo, p.lambda_hi,
               rho[0, 0].real, rho[1, 1].real, rho[2, 2].real, rho[3, 3].real,
               rho[0, 1].real, rho[0, 1].imag,
               rho[0, 3].real, rho[0, 3].imag,
               rho[1, 2].real, rho[1, 2].imag]
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def _events_text(events):
    lines = [f"{e.kind} t={_fmt(e.t)} {e.detail}" for e in events]
    return "\n".join(lines) + ("\n" if lines else "")


def _atomic_write(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def detect_events(points, cfg):
    """All three detectors with the config's settings, one sorted list."""
    events = find_crossings(points, zero_tol=cfg.crossing_zero_tol)
    events += find_sudden_changes(points, window=cfg.event_window,
                                  threshold=cfg.event_threshold)
    events += find_transitions(points, plateau_tol=cfg.plateau_tol,
                               window=cfg.event_window,
                               threshold=cfg.event_threshold)
    events.sort(key=lambda e: (e.t, e.kind, e.series))
    return events


def run(cfg, write_outputs=True):
    """Execute one configured simulation; returns a :class:`RunReport`.

    The pipeline is propagate -> correlation trajectory -> event detection,
    followed by the oracle self-audit. With ``write_outputs`` the trajectory
    CSV, event list and JSON report land in ``cfg.output_dir``.
    """
    t_start = time.perf_counter()
    model = system_hamiltonian(cfg.epsilon, cfg.zeta)
    bath_params = BathParameters(eta=cfg.eta, gamma=cfg.gamma, beta=cfg.beta)
    rho0 = build_initial_state(cfg.initial_state)
    grid = cfg.grid()
    solver = _solver_settings(cfg)

    truncation = {}
    if cfg.auto_truncation:
        info, traj = converge(rho0, model, bath_params, grid, solver,
                              tol=cfg.converge_tol,
                              terminator_mode=cfg.terminator)
        truncation.update(stages=list(info.stages),
                          final_distance=info.final_distance,
                          tolerance=info.tolerance, auto=True)
    else:
        baths = (matsubara_expansion(bath_params, cfg.matsubara_cutoff,
                                     cfg.terminator),) * 2
        traj = propagate(rho0, model, baths, grid, cfg.depth, solver)
        truncation["auto"] = False
    truncation.update(cutoff=traj.cutoff, depth=traj.depth,
                      ado_count=traj.ado_count, n_rhs_evals=traj.n_rhs_evals)

    points = correlation_trajectory(traj.times, traj.states,
                                    _optimizer_settings(cfg))
    events = detect_events(points, cfg)
    oracles = _standard_oracles(cfg, model, bath_params, rho0)

    expansion = matsubara_expansion(bath_params, traj.cutoff, cfg.terminator)
    alt = matsubara_expansion(bath_params, traj.cutoff,
                              "tail-sum" if cfg.terminator == "closed-form" else "closed-form")
    diagnostics = {
        "max_trace_drift": traj.max_trace_drift,
        "max_hermiticity_residual": traj.max_hermiticity_residual,
        "min_eigenvalue": traj.min_eigenvalue,
        "negative_series_coefficients": bool(np.any(expansion.coeffs.real < 0)),
        "terminator_mode_gap": abs(expansion.terminator - alt.terminator),
        "wall_time_s": None,   # filled below
    }

    paths = {}
    report = RunReport(config=cfg, truncation=truncation, diagnostics=diagnostics,
                       oracles=oracles, events=events, points=points,
                       states=traj.states, paths=paths)
    diagnostics["wall_time_s"] = time.perf_counter() - t_start
    if write_outputs:
        os.makedirs(cfg.output_dir, exist_ok=True)
        paths["trajectory_csv"] = os.path.join(cfg.output_dir, "trajectory.csv")
        paths["events"] = os.path.join(cfg.output_dir, "events.txt")
        paths["report"] = os.path.join(cfg.output_dir, "report.json")
        paths["config"] = os.path.join(cfg.output_dir, "config.txt")
        _atomic_write(paths["trajectory_csv"], _csv_text(points, traj.states))
        _atomic_write(paths["events"], _events_text(events))
        _atomic_write(paths["config"], format_config(cfg))
        _atomic_write(paths["report"], json.dumps({
            "version": _version,
            "config": _jsonable(cfg),
            "truncation": _jsonable(truncation),
            "diagnostics": _jsonable(diagnostics),
            "oracles": _jsonable(oracles),
            "events": _jsonable(events),
        }, indent=2))
    return report


def _sweep_one(args):
    cfg, zeta, write_outputs = args
    sub = dataclasses.replace(
        cfg, zeta=zeta,
        output_dir=os.path.join(cfg.output_dir, f"zeta_{zeta:g}"))
    return zeta, run(sub, write_outputs=write_outputs)


def sweep(cfg, zeta_values, write_outputs=True):
    """One run per zeta plus a combined Q(t) table for curve comparison.

    Runs are independent; failures are isolated per zeta and recorded in the
    sweep report while the remaining runs continue. With ``sweep_workers``
    above 1 the runs execute in separate processes.
    """
    zeta_values = [float(z) for z in zeta_values]
    if not zeta_values:
        raise HeomcorrError("sweep needs at least one zeta value")
    jobs = [(cfg, z, write_outputs) for z in zeta_values]
    reports, failures = {}, {}
    if cfg.sweep_workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.sweep_workers) as pool:
            outcomes = list(pool.map(_sweep_one_safe, jobs))
    else:
        outcomes = [_sweep_one_safe(job) for job in jobs]
    for zeta, report, error in outcomes:
        if error is not None:
            failures[zeta] = error
        else:
            reports[zeta] = report

    grid = cfg.grid()
    comparison = []
    # the dip region is anchored on the sharpest run of the sweep (smallest
    # coupling): gentler couplings flatten the early minimum away entirely,
    # so their own "first local minimum" would wander off to late times and
    # make the slope comparison meaningless
    window = None
    anchored = [z for z in zeta_values if z in reports]
    if anchored:
        anchor = min(anchored, key=abs)
        q_anchor = np.array([p.discord for p in reports[anchor].points])
        t_dip = float(grid[_first_local_min(q_anchor)])
        window = (t_dip - 1.0, t_dip + 1.0)
    for zeta in zeta_values:
        if zeta not in reports:
            comparison.append({"zeta": zeta, "failed": failures[zeta]})
            continue
        points = reports[zeta].points
        q = np.array([p.discord for p in points])
        dq = np.gradient(q, grid)
        i_min = _first_local_min(q)
        near = (grid >= window[0]) & (grid <= window[1])
        comparison.append({
            "zeta": zeta,
            "q_min": float(q[i_min]),
            "t_q_min": float(grid[i_min]),
            "dip_window": [float(window[0]), float(window[1])],
            "max_dq_near_min": float(np.max(np.abs(dq[near]))),
            "n_crossings": sum(1 for e in reports[zeta].events if e.kind == "crossing"),
        })

    paths = {}
    if write_outputs:
        os.makedirs(cfg.output_dir, exist_ok=True)
        header = ["t"] + [f"Q_zeta_{z:g}" for z in zeta_values if z in reports]
        lines = [",".join(header)]
        cols = [grid] + [[p.discord for p in reports[z].points]
                         for z in zeta_values if z in reports]
        for row in zip(*cols):
            lines.append(",".join(_fmt(x) for x in row))
        paths["sweep_csv"] = os.path.join(cfg.output_dir, "sweep.csv")
        _atomic_write(paths["sweep_csv"], "\n".join(lines) + "\n")
        paths["sweep_report"] = os.path.join(cfg.output_dir, "sweep_report.json")
        _atomic_write(paths["sweep_report"], json.dumps({
            "version": _version,
            "zeta_values": zeta_values,
            "comparison": _jsonable(comparison),
            "failures": _jsonable(failures),
        }, indent=2))
    return SweepReport(zeta_values=zeta_values, reports=reports,
                       failures=failures, comparison=comparison, paths=paths)


def _sweep_one_safe(args):
    zeta = args[1]
    try:
        zeta, report = _sweep_one(args)
        return zeta, report, None
    except HeomcorrError as exc:
        return zeta, None, f"{type(exc).__name__}: {exc}"


def _first_local_min(q):
    """Index of the first interior local minimum; falls back to the argmin."""
    for i in range(1, len(q) - 1):
        if q[i] <= q[i - 1] and q[i] < q[i + 1]:
            return i
    return int(np.argmin(q))


def read_trajectory_csv(path):
    """Rebuild correlation points from a trajectory CSV (for offline event
    re-detection). Columns beyond the correlation block are ignored; the
    perpendicular-branch eigenvalues are not stored in the CSV and come back
    as nan."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        expected = list(CSV_COLUMNS[:8])
        if header[:8] != expected:
            raise HeomcorrError(
                f"unexpected CSV columns {header[:8]}, expected {expected}")
        points = []
        for line in fh:
            if not line.strip():
                continue
            vals = [float(x) for x in line.split(",")]
            points.append(CorrelationPoint(
                t=vals[0], mutual_info=vals[1], classical=vals[2], discord=vals[3],
                angles=MeasurementAngles(theta=vals[4], phi=vals[5]),
                lambda_lo=vals[6], lambda_hi=vals[7],
                lambda_lo_perp=float("nan"), lambda_hi_perp=float("nan")))
    return points
