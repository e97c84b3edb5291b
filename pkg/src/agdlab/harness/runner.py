"""Experiment execution: one validated config in, CSVs plus a summary out.

Kept separate from the CLI so the invariant checks can run experiments
through exactly the code path users exercise.  Method entries run
independently (no shared mutable state); a diverged method is recorded in
the summary with its step index and a header-only CSV, and the remaining
entries still run.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__
from ..analysis import check_sc_rate, detect_cycle
from ..exceptions import AgdlabError, DivergenceError
from ..flows import default_step, integrate
from ..geometry import ManifoldParams, PhaseState
from ..objectives import Objective, condition_number
from ..optimizers import run as run_method
from .config import (ExperimentConfig, build_flow, build_method,
                     build_objective, build_x0, config_sha256, is_flow_entry)
from .io import write_discrete_csv, write_flow_csv, write_summary


def _discrete_reports(traj, obj: Objective):
    """Best-effort rate/cycle reports; None where preconditions fail."""
    rate = None
    cycle = None
    if obj.mu > 0.0 and traj.f_gaps is not None and len(traj) >= 21:
        try:
            rate = check_sc_rate(traj, condition_number(obj)).to_json()
        except AgdlabError:
            rate = None
    if traj.f_gaps is not None and len(traj) >= 100:
        try:
            cycle = detect_cycle(traj).to_json()
        except AgdlabError:
            cycle = None
    return rate, cycle


def _flow_initial(resolved, x0: np.ndarray) -> PhaseState:
    # rest start in the velocity coordinate; time-varying flows begin at
    # their smallest admissible time
    t_start = resolved.t0 if resolved.variant == "HighResConvex" else 0.0
    return PhaseState(x1=x0, x2=np.zeros_like(x0), t=float(t_start))


def run_experiment(cfg: ExperimentConfig,
                   out_dir: Optional[str] = None) -> dict:
    """Execute every method entry, write one CSV each plus summary.json.

    Returns the summary dict (already written and schema-validated).
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    obj = build_objective(cfg)
    x0 = build_x0(cfg, obj)

    results = []
    for i, entry in enumerate(cfg.methods):
        kind = entry["kind"]
        csv_name = f"{i:02d}_{kind}.csv"
        csv_path = out / csv_name
        if is_flow_entry(entry):
            spec = build_flow(entry)
            resolved = spec.resolve(obj)
            h = cfg.budgets["flow_h"]
            h = default_step(obj) if h is None else float(h)
            params = ManifoldParams(alpha=resolved.alpha, beta=resolved.beta)
            try:
                ftraj = integrate(spec, obj, _flow_initial(resolved, x0), h,
                                  cfg.budgets["flow_steps"], params)
                write_flow_csv(csv_path, ftraj)
                iterations, diverged = len(ftraj), None
            except DivergenceError as e:
                csv_path.write_text(
                    "t,f_gap,grad_norm,m0_residual_norm,mp_residual_norm,"
                    "storage\n", encoding="utf-8")
                iterations, diverged = 0, e.step
            results.append({
                "name": kind, "kind": "flow", "csv": csv_name,
                "iterations": iterations, "monotone_violations": None,
                "diverged_at": diverged, "rate_report": None,
                "cycle_report": None,
            })
        else:
            method = build_method(entry)
            try:
                traj = run_method(method, obj, x0,
                                  max_iters=cfg.budgets["max_iters"],
                                  grad_tol=float(cfg.budgets["grad_tol"]))
                write_discrete_csv(csv_path, traj)
                rate, cycle = _discrete_reports(traj, obj)
                results.append({
                    "name": kind, "kind": "discrete", "csv": csv_name,
                    "iterations": len(traj),
                    "monotone_violations": traj.monotone_violations,
                    "diverged_at": None, "rate_report": rate,
                    "cycle_report": cycle,
                })
            except DivergenceError as e:
                csv_path.write_text("k,f_gap,grad_norm,monotone_flag\n",
                                    encoding="utf-8")
                results.append({
                    "name": kind, "kind": "discrete", "csv": csv_name,
                    "iterations": 0, "monotone_violations": None,
                    "diverged_at": e.step, "rate_report": None,
                    "cycle_report": None,
                })

    summary = {
        "version": 1,
        "manifest": {
            "config_sha256": config_sha256(cfg),
            "library_version": __version__,
        },
        "seed": cfg.seed,
        "objective": dict(cfg.objective),
        "results": results,
    }
    write_summary(out / "summary.json", summary)
    return summary
