"""YAML run configuration.

Schema (every section optional; missing values fall back to the defaults
below)::

    params:
      lambda: 1.0        # energy arrival rate, > 0
      pe: 0.2            # erasure probability, [0, 1)
      D: 1.0             # transmission time, > 0
    dist:                # exactly one of the three forms
      theta: 10          #   two-point family m1=1, m2=10+theta, p2=4/(9+theta)
      # m1: 1, m2: 20, p2: 0.2     explicit two-point law
      # samples_file: c.txt        newline-separated durations (simulation only)
    policy:
      scheme: window-fb  # threshold-fb | window-fb | prob-fb | threshold-nofb | window-nofb | prob-nofb
      W: 8               # age threshold; "inf" allowed for feedback schemes
      B: 3               # window schemes
      pTx: 0.6           # probabilistic schemes
    simulation:
      cycles: 1000000
      seed: 42
      workers: 1

A relative ``samples_file`` is resolved against the config file's directory.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import Any, Optional

import yaml

from .errors import AoiError, ConfigError
from .model import EmpiricalSc, ScDistribution, SystemParams, make_policy

DEFAULTS = {
    "params": {"lambda": 1.0, "pe": 0.2, "D": 1.0},
    "dist": {"theta": 10.0},
    "simulation": {"cycles": 10**6, "seed": 42, "workers": None},
}

_SECTIONS = {
    "params": {"lambda", "pe", "D"},
    "dist": {"theta", "m1", "m2", "p2", "samples_file"},
    "policy": {"scheme", "W", "B", "pTx"},
    "simulation": {"cycles", "seed", "workers"},
}


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    dist: Any
    policy: Optional[Any]
    cycles: int
    seed: int
    workers: Optional[int]


def _number(section, key, value):
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, got {value!r}")
    return float(value)


def _integer(section, key, value):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ConfigError(f"{section}.{key}: expected an integer, got {value!r}")
    return value


def load_raw(path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    for section, body in raw.items():
        if section not in _SECTIONS:
            raise ConfigError(f"{section}: unknown section")
        if not isinstance(body, dict):
            raise ConfigError(f"{section}: must be a mapping")
        for key in body:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"{section}.{key}: unknown key")
    return raw


def build(raw: dict, base_dir: str = ".") -> RunConfig:
    """Turn a (possibly partial) nested mapping into validated objects."""
    p = {**DEFAULTS["params"], **raw.get("params", {})}
    values = {k: _number("params", k, p[k]) for k in ("lambda", "pe", "D")}
    try:
        params = SystemParams(lam=values["lambda"], pe=values["pe"], D=values["D"])
    except AoiError as exc:
        raise ConfigError(f"params: {exc}") from None

    d = raw.get("dist") or DEFAULTS["dist"]
    forms = [k for k in ("theta", "samples_file") if k in d] + (
        ["m1/m2/p2"] if {"m1", "m2", "p2"} & set(d) else []
    )
    if len(forms) != 1:
        raise ConfigError(
            "dist: give exactly one of theta, m1/m2/p2 or samples_file "
            f"(got {', '.join(forms) or 'none'})"
        )
    try:
        if "theta" in d:
            dist = ScDistribution.from_theta(_number("dist", "theta", d["theta"]))
        elif "samples_file" in d:
            path = d["samples_file"]
            if not isinstance(path, str):
                raise ConfigError(f"dist.samples_file: expected a path, got {path!r}")
            dist = EmpiricalSc.from_file(os.path.join(base_dir, path))
        else:
            missing = {"m1", "m2", "p2"} - set(d)
            if missing:
                raise ConfigError(f"dist.{sorted(missing)[0]}: missing")
            dist = ScDistribution(*(_number("dist", k, d[k]) for k in ("m1", "m2", "p2")))
    except ConfigError:
        raise
    except AoiError as exc:
        raise ConfigError(f"dist: {exc}") from None

    policy = None
    pol = raw.get("policy")
    if pol:
        if "scheme" not in pol:
            raise ConfigError("policy.scheme: missing")
        W = _number("policy", "W", pol.get("W", math.inf))
        B = _integer("policy", "B", pol["B"]) if "B" in pol else None
        pTx = _number("policy", "pTx", pol["pTx"]) if "pTx" in pol else None
        try:
            policy = make_policy(str(pol["scheme"]), W=W, B=B, pTx=pTx)
        except AoiError as exc:
            raise ConfigError(f"policy: {exc}") from None

    s = {**DEFAULTS["simulation"], **raw.get("simulation", {})}
    cycles = _integer("simulation", "cycles", s["cycles"])
    seed = _integer("simulation", "seed", s["seed"])
    workers = s["workers"]
    if workers is not None:
        workers = _integer("simulation", "workers", workers)
        if workers < 1:
            raise ConfigError("simulation.workers: must be >= 1")
    if cycles < 1:
        raise ConfigError("simulation.cycles: must be >= 1")
    return RunConfig(params, dist, policy, cycles, seed, workers)


def load_config(path) -> RunConfig:
    return build(load_raw(path), os.path.dirname(os.path.abspath(path)))


def with_policy(cfg: RunConfig, policy) -> RunConfig:
    return replace(cfg, policy=policy)
