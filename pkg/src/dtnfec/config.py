"""Scenario configuration documents and sweep expansion.

A configuration is one JSON or YAML mapping.  Sweep axes accept a scalar or
a nonempty list; every combination becomes one sweep point.

Sweep axes::

    n_nodes, lam, tau, x, k, h, policy (static | threshold),
    coding (erasure | fountain | none)

Leaving out ``x`` removes the energy budget: static policies forward with
probability one and threshold policies never stop before ``tau``.

Scalars::

    z = 0, epsilon = 1, q = 0, q_prime = 0, delta = 0.02, u_min = 0,
    replications = 1000, seed = 0, pair_rule = random (or fixed),
    source = 0, dest = 1, direct_delivery = false, max_copies = null,
    trace = {kind: exponential}
          | {kind: file, path: PATH}
          | {kind: rwp, side: M, range: M, speed: M/S, step: S}

With a trace file, ``n_nodes`` defaults to the trace's node count minus one
and ``lam`` to the rate estimated from the trace.  With an RWP trace,
``lam`` defaults to the analytic RWP meeting rate.  ``coding: none`` sends
K uncoded frames and ignores ``h``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .model import NetworkParams

SWEEP_AXES = ("n_nodes", "lam", "tau", "x", "k", "h", "policy", "coding")
POLICIES = ("static", "threshold")
CODINGS = ("erasure", "fountain", "none")
TRACE_KINDS = ("exponential", "file", "rwp")

SCALAR_DEFAULTS = {
    "z": 0.0,
    "epsilon": 1.0,
    "q": 0.0,
    "q_prime": 0.0,
    "delta": 0.02,
    "u_min": 0.0,
    "replications": 1000,
    "seed": 0,
    "pair_rule": "random",
    "source": 0,
    "dest": 1,
    "direct_delivery": False,
    "max_copies": None,
    "trace": None,
}
AXIS_DEFAULTS = {"h": [0], "policy": ["static"], "coding": ["erasure"], "x": None, "lam": None, "n_nodes": None}


@dataclass(frozen=True)
class SweepPoint:
    params: NetworkParams
    k: int
    h: int
    policy: str
    coding: str
    constrained: bool = True


@dataclass
class ScenarioConfig:
    axes: dict
    scalars: dict
    trace: dict = field(default_factory=lambda: {"kind": "exponential"})

    @property
    def replications(self) -> int:
        return self.scalars["replications"]

    @property
    def seed(self) -> int:
        return self.scalars["seed"]

    def points(self, n_nodes_default=None, lam_default=None) -> list[SweepPoint]:
        """Expand the sweep.  Values missing from the document use the defaults given."""
        axes = dict(self.axes)
        for key, fallback in (("n_nodes", n_nodes_default), ("lam", lam_default)):
            if axes.get(key) is None:
                if fallback is None:
                    raise ConfigError(f"{key}: required")
                axes[key] = [fallback]
        constrained = axes.get("x") is not None
        if not constrained:
            axes["x"] = [0.0]
        out = []
        seen = set()
        for combo in itertools.product(*(axes[a] for a in SWEEP_AXES)):
            row = dict(zip(SWEEP_AXES, combo))
            if row["coding"] != "erasure":
                row["h"] = 0
            key = tuple(row.values())
            if key in seen:
                continue
            seen.add(key)
            try:
                params = NetworkParams(
                    n_nodes=row["n_nodes"],
                    lam=row["lam"],
                    tau=row["tau"],
                    z=self.scalars["z"],
                    x=row["x"],
                    epsilon=self.scalars["epsilon"],
                    q=self.scalars["q"],
                    q_prime=self.scalars["q_prime"],
                )
            except ValueError as exc:
                raise ConfigError(f"invalid network parameters at {row}: {exc}") from None
            out.append(
                SweepPoint(params, int(row["k"]), int(row["h"]), row["policy"], row["coding"], constrained)
            )
        return out


def _as_list(key, value):
    values = value if isinstance(value, list) else [value]
    if not values:
        raise ConfigError(f"{key}: sweep list is empty")
    return values


def _check_number(key, value, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return int(value) if integer else float(value)


def _check_choice(key, value, choices):
    if value not in choices:
        raise ConfigError(f"{key}: expected one of {', '.join(choices)}, got {value!r}")
    return value


def _parse_trace(doc) -> dict:
    if doc is None:
        return {"kind": "exponential"}
    if not isinstance(doc, dict):
        raise ConfigError("trace: expected a mapping")
    kind = _check_choice("trace.kind", doc.get("kind", "exponential"), TRACE_KINDS)
    out = {"kind": kind}
    if kind == "file":
        if "path" not in doc:
            raise ConfigError("trace.path: required for kind 'file'")
        out["path"] = str(doc["path"])
    elif kind == "rwp":
        for key in ("side", "range", "speed", "step"):
            if key not in doc:
                raise ConfigError(f"trace.{key}: required for kind 'rwp'")
            out[key] = _check_number(f"trace.{key}", doc[key])
    unknown = set(doc) - set(out) - {"kind"}
    if unknown:
        raise ConfigError(f"trace.{sorted(unknown)[0]}: unknown key")
    return out


def parse_config(doc) -> ScenarioConfig:
    """Validate a decoded document; errors name the offending key."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(doc) - set(SWEEP_AXES) - set(SCALAR_DEFAULTS)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key")
    if "tau" not in doc:
        raise ConfigError("tau: required")
    if "k" not in doc:
        raise ConfigError("k: required")

    axes = {}
    for key in SWEEP_AXES:
        if key not in doc:
            default = AXIS_DEFAULTS.get(key)
            axes[key] = None if default is None else list(default)
            continue
        values = _as_list(key, doc[key])
        if key == "policy":
            values = [_check_choice(key, v, POLICIES) for v in values]
        elif key == "coding":
            values = [_check_choice(key, v, CODINGS) for v in values]
        elif key in ("k", "h"):
            values = [_check_number(key, v, integer=True) for v in values]
            lo = 1 if key == "k" else 0
            if any(v < lo for v in values):
                raise ConfigError(f"{key}: values must be >= {lo}")
        else:
            values = [_check_number(key, v) for v in values]
        axes[key] = values

    scalars = dict(SCALAR_DEFAULTS)
    for key, value in doc.items():
        if key in SWEEP_AXES:
            continue
        scalars[key] = value
    for key in ("z", "epsilon", "q", "q_prime", "delta", "u_min"):
        scalars[key] = _check_number(key, scalars[key])
    for key in ("replications", "seed", "source", "dest"):
        scalars[key] = _check_number(key, scalars[key], integer=True)
    if scalars["replications"] < 1:
        raise ConfigError(f"replications: must be >= 1, got {scalars['replications']}")
    if not 0 <= scalars["seed"] < 2**64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")
    if not 0.0 < scalars["delta"] < 1.0:
        raise ConfigError("delta: must lie in (0, 1)")
    if not 0.0 <= scalars["u_min"] <= 1.0:
        raise ConfigError("u_min: must lie in [0, 1]")
    _check_choice("pair_rule", scalars["pair_rule"], ("random", "fixed"))
    if not isinstance(scalars["direct_delivery"], bool):
        raise ConfigError("direct_delivery: expected true or false")
    if scalars["max_copies"] is not None:
        scalars["max_copies"] = _check_number("max_copies", scalars["max_copies"], integer=True)
    trace = _parse_trace(scalars.pop("trace"))
    return ScenarioConfig(axes=axes, scalars=scalars, trace=trace)


def load_document(path) -> dict:
    """Decode a ``.json`` document, or YAML for any other suffix."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: malformed document: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: configuration must be a mapping")
    return doc


def load_config(path) -> ScenarioConfig:
    return parse_config(load_document(path))
