"""Result serialization: CSV trajectory files and the summary JSON.

Formats are part of the reproducibility contract:

* CSVs are UTF-8, LF line endings, with a mandatory header row.  Floats
  print with 17 significant digits, enough for a bit-exact round trip.
* Column orders are fixed: discrete trajectories (k, f_gap, grad_norm,
  monotone_flag), flows (t, f_gap, grad_norm, m0_residual_norm,
  mp_residual_norm, storage), estimation histories (k, phi_star, lambda,
  gap_phi_minus_f), sweeps (kappa, method, fitted_contraction, theoretical,
  pass), comparisons (k, t, deviation).
* The summary JSON is validated against the schema file shipped with the
  package before anything touches disk, then written to a temp file and
  atomically renamed into place, so readers never see a torn summary.
"""

from __future__ import annotations

import json
import os
import tempfile
from importlib import resources
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import jsonschema
import numpy as np

from ..estimation import EstimationState
from ..flows import FlowTrajectory
from ..optimizers import MONOTONE_EPS, Trajectory


def fmt(x) -> str:
    """17-significant-digit decimal rendering (round-trips binary64)."""
    return format(float(x), ".17g")


def _open_lf(path):
    return open(path, "w", encoding="utf-8", newline="\n")


def write_discrete_csv(path, traj: Trajectory) -> None:
    gaps = traj.f_gaps
    with _open_lf(path) as f:
        f.write("k,f_gap,grad_norm,monotone_flag\n")
        for k in range(len(traj)):
            gap = gaps[k] if gaps is not None else float("nan")
            flag = int(k > 0 and traj.f_vals[k] > traj.f_vals[k - 1]
                       + MONOTONE_EPS)
            f.write(f"{k},{fmt(gap)},{fmt(traj.grad_norms[k])},{flag}\n")


def write_flow_csv(path, ftraj: FlowTrajectory) -> None:
    with _open_lf(path) as f:
        f.write("t,f_gap,grad_norm,m0_residual_norm,mp_residual_norm,"
                "storage\n")
        for i in range(len(ftraj)):
            f.write(",".join([
                fmt(ftraj.t[i]),
                fmt(ftraj.f_gap[i]),
                fmt(ftraj.grad_norm[i]),
                fmt(ftraj.m0_residual_norm[i]),
                fmt(ftraj.mp_residual_norm[i]),
                fmt(ftraj.storage[i]),
            ]) + "\n")


def write_estimation_csv(path, history: Sequence[EstimationState],
                         f_vals: Sequence[float]) -> None:
    """history[k] pairs with f_vals[k] = f(x_k) from the coupled run."""
    if len(history) != len(f_vals):
        raise ValueError("history and f_vals lengths differ")
    with _open_lf(path) as f:
        f.write("k,phi_star,lambda,gap_phi_minus_f\n")
        for k, s in enumerate(history):
            f.write(f"{k},{fmt(s.phi_star)},{fmt(s.lam)},"
                    f"{fmt(s.phi_star - f_vals[k])}\n")


def write_sweep_csv(path, rows: Iterable[dict]) -> None:
    """rows: dicts with kappa, method, fitted_contraction, theoretical, pass."""
    with _open_lf(path) as f:
        f.write("kappa,method,fitted_contraction,theoretical,pass\n")
        for r in rows:
            f.write(f"{fmt(r['kappa'])},{r['method']},"
                    f"{fmt(r['fitted_contraction'])},{fmt(r['theoretical'])},"
                    f"{int(bool(r['pass']))}\n")


def write_compare_csv(path, ts: Sequence[float],
                      deviations: Sequence[float]) -> None:
    with _open_lf(path) as f:
        f.write("k,t,deviation\n")
        for k, (t, d) in enumerate(zip(ts, deviations)):
            f.write(f"{k},{fmt(t)},{fmt(d)}\n")


# ---------------------------------------------------------------------------
# summary JSON


def load_summary_schema() -> dict:
    ref = resources.files("agdlab.harness").joinpath("summary_schema.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def validate_summary(summary: dict) -> None:
    """Raises jsonschema.ValidationError when the summary is malformed."""
    jsonschema.validate(instance=summary, schema=load_summary_schema())


def write_summary(path, summary: dict) -> None:
    """Validate, then write atomically (temp file + rename, same directory)."""
    validate_summary(summary)
    path = Path(path)
    text = json.dumps(summary, indent=2, sort_keys=True, allow_nan=False)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".summary-",
                               suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
