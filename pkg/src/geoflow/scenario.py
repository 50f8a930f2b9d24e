"""Scenario configuration: JSON schema with explicit field-path diagnostics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .charts import load_group, UnknownGroupError

__all__ = ["Scenario", "ScenarioError", "load_scenario", "scenario_from_dict"]

DEFAULTS = {
    "seed": 42,
    "zeta": 0.0,
    "mass": 1.0,
    "tolerances": {"ode": 1e-10, "quadrature": 1e-11, "validation": 1e-8},
    "samples": 100,
    "T": 5.0,
}


class ScenarioError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class Scenario:
    group: str
    metric: np.ndarray
    x0: np.ndarray | None = None
    p0: np.ndarray | None = None
    mass: float = 1.0
    zeta: float = 0.0
    lam: np.ndarray | None = None
    seed: int = 42
    samples: int = 100
    T: float = 5.0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULTS["tolerances"]))
    checks: list = field(default_factory=list)


def scenario_from_dict(doc):
    if not isinstance(doc, dict):
        raise ScenarioError("$", "scenario must be a JSON object")
    if "group" not in doc:
        raise ScenarioError("group", "missing required field")
    name = doc["group"]
    try:
        chart = load_group(name)
    except UnknownGroupError:
        raise ScenarioError("group", f"unknown group {name!r}") from None
    n = chart.dim

    if "metric" not in doc:
        raise ScenarioError("metric", "missing required field")
    try:
        G = np.asarray(doc["metric"], dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError("metric", "must be a numeric matrix") from None
    if G.shape != (n, n):
        raise ScenarioError("metric", f"must be {n}x{n} for group {name}")
    if np.max(np.abs(G - G.T)) > 1e-12:
        raise ScenarioError("metric", "must be symmetric")
    if abs(np.linalg.det(G)) < 1e-12:
        raise ScenarioError("metric", "must be non-degenerate (det != 0)")

    sc = Scenario(group=name, metric=G)
    for key, length in (("x0", n), ("p0", n)):
        if key in doc:
            v = np.asarray(doc[key], dtype=float)
            if v.shape != (length,):
                raise ScenarioError(key, f"must have length {length}")
            setattr(sc, key, v)
    if "lambda" in doc:
        sc.lam = np.asarray(doc["lambda"], dtype=float)
    for key in ("mass", "zeta", "T"):
        if key in doc:
            try:
                setattr(sc, key, float(doc[key]))
            except (TypeError, ValueError):
                raise ScenarioError(key, "must be a number") from None
    if sc.mass <= 0:
        raise ScenarioError("mass", "must be positive")
    if "seed" in doc:
        sc.seed = int(doc["seed"])
    if "samples" in doc:
        sc.samples = int(doc["samples"])
        if sc.samples < 1:
            raise ScenarioError("samples", "must be at least 1")
    if "tolerances" in doc:
        tols = doc["tolerances"]
        if not isinstance(tols, dict):
            raise ScenarioError("tolerances", "must be an object")
        for k, v in tols.items():
            if k not in sc.tolerances:
                raise ScenarioError(f"tolerances.{k}", "unknown tolerance")
            sc.tolerances[k] = float(v)
    if "checks" in doc:
        if not isinstance(doc["checks"], list):
            raise ScenarioError("checks", "must be a list of check names")
        sc.checks = list(doc["checks"])
    return sc


def load_scenario(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError("$", f"invalid JSON: {exc}") from None
    return scenario_from_dict(doc)
