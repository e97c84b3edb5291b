"""Experiment configuration: strict JSON parsing and canonical serialization.

The config format is JSON with a required "version": 1 field.  Parsing is
fail-closed: unknown fields anywhere raise ConfigValidationError listing
every offending path, so typos cannot silently change an experiment.
Canonical serialization (sorted keys, defaults filled, compact separators)
gives a hash-stable form: parse -> serialize -> parse is the identity, and
the sha256 of the canonical bytes goes into the result manifest.

Shape:

{
  "version": 1,
  "seed": 7,
  "objective": {"kind": "canonical_quadratic", "kappa": 100.0},
  "x0": {"kind": "sphere", "radius": 3.0},
  "methods": [{"kind": "GD"}, {"kind": "NagSC"}, {"kind": "GradientFlow"}],
  "budgets": {"max_iters": 300, "grad_tol": 0.0,
              "flow_steps": 1000, "flow_h": null},
  "out_dir": "results",
  "compare": {"discrete": "GD", "flow": "GradientFlow", "delta": null}
}

Method entries mix discrete methods and flows; flows start from
(x0, x2 = 0) at their initial time.  "compare" is optional and names one
discrete entry and one flow entry from "methods" (used by cmd_compare;
delta defaults to 1 for GradientFlow pairs and sqrt(1/L) otherwise).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..exceptions import ConfigValidationError
from ..flows import VARIANTS as FLOW_VARIANTS
from ..flows import FlowSpec
from ..objectives import (Objective, PiecewiseGradient1DSpec, QuadraticSpec,
                          canonical_log_sum_exp, canonical_quadratic,
                          ill_scaled_quadratic, locate_minimizer,
                          make_counterexample_1d, make_log_sum_exp,
                          make_piecewise_gradient_1d, make_quadratic)
from ..optimizers import DISCRETE_VARIANTS, MethodSpec
from ..rng import Lcg64

_BUDGET_DEFAULTS = {
    "max_iters": 300,
    "grad_tol": 0.0,
    "flow_steps": 1000,
    "flow_h": None,
}

_OBJECTIVE_FIELDS = {
    "quadratic": ({"eigenvalues", "rotation_seed"}, {"offset"}),
    "canonical_quadratic": ({"kappa"}, {"dim", "rotation_seed"}),
    "log_sum_exp": ({"rows", "shifts"}, {"smoothing"}),
    "canonical_log_sum_exp": (set(), set()),
    "counterexample_1d": (set(), set()),
    "ill_scaled_quadratic": (set(), set()),
    "piecewise_1d": ({"breakpoints", "slopes"}, set()),
}

_X0_FIELDS = {
    "explicit": ({"values"}, set()),
    "sphere": ({"radius"}, set()),
}

_DISCRETE_OPTIONAL = {
    "GD": {"step"},
    "NagSC": {"beta", "momentum_sign"},
    "NagC": set(),
    "HeavyBall": {"alpha", "beta"},
    "TripleMomentum": {"alpha", "beta", "nu"},
}

_FLOW_OPTIONAL = {"alpha", "beta", "gamma", "rate", "t0"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description (normalized, defaults filled)."""

    version: int
    seed: int
    objective: dict
    x0: dict
    methods: List[dict]
    budgets: dict
    out_dir: str
    compare: Optional[dict]

    def to_dict(self) -> dict:
        d = {
            "version": self.version,
            "seed": self.seed,
            "objective": dict(self.objective),
            "x0": dict(self.x0),
            "methods": [dict(m) for m in self.methods],
            "budgets": dict(self.budgets),
            "out_dir": self.out_dir,
        }
        if self.compare is not None:
            d["compare"] = dict(self.compare)
        return d


def _check_keys(d: dict, path: str, required: set, optional: set,
                errors: List[str]) -> None:
    for k in d:
        if k not in required and k not in optional:
            errors.append(f"{path}.{k}" if path else k)
    for k in required:
        if k not in d:
            errors.append(f"{path}.{k} (missing)" if path else f"{k} (missing)")


def _reject_constant(s: str):
    raise ConfigValidationError([s], f"non-finite JSON constant {s!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text; raises ConfigValidationError."""
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise ConfigValidationError(["<json>"], f"config is not valid JSON: {e}")
    if not isinstance(raw, dict):
        raise ConfigValidationError(["<root>"], "config root must be an object")

    errors: List[str] = []
    _check_keys(raw, "", {"version", "seed", "objective", "x0", "methods"},
                {"budgets", "out_dir", "compare"}, errors)
    if errors:
        raise ConfigValidationError(errors)

    if raw["version"] != 1:
        raise ConfigValidationError(
            ["version"], f"unsupported config version {raw['version']!r}")
    seed = raw["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) \
            or not 0 <= seed < 2**64:
        errors.append("seed (must be an integer in [0, 2^64))")

    obj = raw["objective"]
    if not isinstance(obj, dict) or "kind" not in obj:
        errors.append("objective.kind (missing)")
    elif obj["kind"] not in _OBJECTIVE_FIELDS:
        errors.append(f"objective.kind (unknown {obj['kind']!r})")
    else:
        req, opt = _OBJECTIVE_FIELDS[obj["kind"]]
        _check_keys(obj, "objective", req | {"kind"}, opt, errors)

    x0 = raw["x0"]
    if not isinstance(x0, dict) or "kind" not in x0:
        errors.append("x0.kind (missing)")
    elif x0["kind"] not in _X0_FIELDS:
        errors.append(f"x0.kind (unknown {x0['kind']!r})")
    else:
        req, opt = _X0_FIELDS[x0["kind"]]
        _check_keys(x0, "x0", req | {"kind"}, opt, errors)

    methods = raw["methods"]
    if not isinstance(methods, list) or not methods:
        errors.append("methods (need a non-empty list)")
        methods = []
    for i, m in enumerate(methods):
        path = f"methods[{i}]"
        if not isinstance(m, dict) or "kind" not in m:
            errors.append(f"{path}.kind (missing)")
            continue
        kind = m["kind"]
        if kind in _DISCRETE_OPTIONAL:
            _check_keys(m, path, {"kind"}, _DISCRETE_OPTIONAL[kind], errors)
        elif kind in FLOW_VARIANTS:
            _check_keys(m, path, {"kind"}, _FLOW_OPTIONAL, errors)
        else:
            errors.append(f"{path}.kind (unknown {kind!r})")

    budgets = dict(_BUDGET_DEFAULTS)
    if "budgets" in raw:
        b = raw["budgets"]
        if not isinstance(b, dict):
            errors.append("budgets (must be an object)")
        else:
            _check_keys(b, "budgets", set(), set(_BUDGET_DEFAULTS), errors)
            budgets.update({k: v for k, v in b.items() if k in _BUDGET_DEFAULTS})
    if not (isinstance(budgets["max_iters"], int)
            and not isinstance(budgets["max_iters"], bool)
            and budgets["max_iters"] >= 1):
        errors.append("budgets.max_iters (must be an integer >= 1)")
    if not (isinstance(budgets["flow_steps"], int)
            and not isinstance(budgets["flow_steps"], bool)
            and budgets["flow_steps"] >= 1):
        errors.append("budgets.flow_steps (must be an integer >= 1)")

    compare = raw.get("compare")
    if compare is not None:
        if not isinstance(compare, dict):
            errors.append("compare (must be an object)")
        else:
            _check_keys(compare, "compare", {"discrete", "flow"}, {"delta"},
                        errors)
            kinds = {m.get("kind") for m in methods if isinstance(m, dict)}
            if isinstance(compare, dict):
                if compare.get("discrete") not in kinds:
                    errors.append("compare.discrete (not among methods)")
                if compare.get("flow") not in kinds:
                    errors.append("compare.flow (not among methods)")

    if errors:
        raise ConfigValidationError(errors)

    return ExperimentConfig(
        version=1,
        seed=seed,
        objective=dict(obj),
        x0=dict(x0),
        methods=[dict(m) for m in methods],
        budgets=budgets,
        out_dir=raw.get("out_dir", "results"),
        compare=dict(compare) if compare is not None else None,
    )


def canonical_json(cfg: ExperimentConfig) -> str:
    """Hash-stable serialization: sorted keys, defaults filled, compact."""
    return json.dumps(cfg.to_dict(), sort_keys=True,
                      separators=(",", ":"), allow_nan=False)


def config_sha256(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# builders: config dicts -> library objects


def build_objective(cfg: ExperimentConfig) -> Objective:
    o = cfg.objective
    kind = o["kind"]
    if kind == "quadratic":
        spec = QuadraticSpec(
            eigenvalues=tuple(float(v) for v in o["eigenvalues"]),
            rotation_seed=int(o["rotation_seed"]),
            offset=tuple(float(v) for v in o["offset"]) if "offset" in o else None,
        )
        return make_quadratic(spec)
    if kind == "canonical_quadratic":
        return canonical_quadratic(
            float(o["kappa"]), dim=int(o.get("dim", 8)),
            rotation_seed=(int(o["rotation_seed"])
                           if "rotation_seed" in o else None))
    if kind == "log_sum_exp":
        obj = make_log_sum_exp(np.array(o["rows"], dtype=float),
                               np.array(o["shifts"], dtype=float),
                               smoothing=float(o.get("smoothing", 1.0)))
        # custom instances carry no cached minimizer; locate one so gap
        # columns and rate reports are well defined
        return locate_minimizer(obj)
    if kind == "canonical_log_sum_exp":
        return canonical_log_sum_exp()
    if kind == "counterexample_1d":
        return make_counterexample_1d()
    if kind == "ill_scaled_quadratic":
        return ill_scaled_quadratic()
    if kind == "piecewise_1d":
        return make_piecewise_gradient_1d(PiecewiseGradient1DSpec(
            breakpoints=tuple(float(b) for b in o["breakpoints"]),
            slopes=tuple(float(s) for s in o["slopes"])))
    raise ConfigValidationError(["objective.kind"], f"unknown kind {kind!r}")


def build_x0(cfg: ExperimentConfig, obj: Objective) -> np.ndarray:
    x0 = cfg.x0
    if x0["kind"] == "explicit":
        v = np.array(x0["values"], dtype=float)
        if v.shape != (obj.dim,):
            raise ConfigValidationError(
                ["x0.values"],
                f"x0 has shape {v.shape}, objective dimension is {obj.dim}")
        return v
    rng = Lcg64(cfg.seed)
    return rng.on_sphere(obj.dim, float(x0["radius"]))


def build_method(entry: dict) -> MethodSpec:
    kind = entry["kind"]
    if kind not in DISCRETE_VARIANTS:
        raise ConfigValidationError(["methods.kind"], f"{kind!r} is not discrete")
    kwargs = {k: v for k, v in entry.items() if k != "kind"}
    return MethodSpec(variant=kind, **kwargs)


def build_flow(entry: dict) -> FlowSpec:
    kind = entry["kind"]
    if kind not in FLOW_VARIANTS:
        raise ConfigValidationError(["methods.kind"], f"{kind!r} is not a flow")
    kwargs = {k: v for k, v in entry.items() if k != "kind"}
    return FlowSpec(variant=kind, **kwargs)


def is_flow_entry(entry: dict) -> bool:
    return entry.get("kind") in FLOW_VARIANTS
