"""Scenario and controller files (JSON).

Scenario layout::

    {
      "robots": [
        {
          "footprint": {"type": "disk", "radius": 12.0},
          "v_min": 0.2,                       # m/s, scalar or table
          "v_max": {"theta": [0, 0.5], "values": [2.0, 1.0]},
          "consumption": null,                # per robot (multi-robot tasks)
          "path": [[x, y], ...],              # closed polyline, meters
          "basis_size": 150
        }
      ],
      "points": [{"position": [x, y], "production": 0.15, "consumption": 1.0}],
      "grid": {"nx": 32, "ny": 32, "bounds": [xmin, ymin, xmax, ymax],
               "production": 0.2 or [[...ny rows of nx...]], "consumption": 5.0},
      "lp": {"delta": null, "delta_f": 1e-9, "samples": null}
    }

A robot may give ``"intervals"`` (one entry per point: ``"full"`` or a list
of ``[x, y]`` pairs) plus ``"length"`` instead of ``path`` and
``footprint``; coverage is then taken as given.

Controller layout::

    {"robots": [{"n": 4, "alpha": [...], "normalized": false,
                 "frequency": null, "period_s": 1.0}],
     "diagnostics": {...}}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .controller import ReciprocalProfile, cycle_time
from .coverage import CoveredTask, CoverageSet, prepare
from .task_model import (
    DiskFootprint,
    InterestPoint,
    PathSpec,
    PersistentTask,
    PolygonFootprint,
    RobotModel,
    collapse_speed_table,
    validate,
)


class ScenarioError(ValueError):
    """Malformed scenario or controller file."""


def _speed(spec, n, kind):
    if isinstance(spec, dict):
        try:
            return collapse_speed_table(spec["theta"], spec["values"], n, kind)
        except (KeyError, ValueError) as exc:
            raise ScenarioError(f"bad speed table: {exc}") from exc
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    if arr.shape != (n,):
        raise ScenarioError(f"speed limit needs a scalar, a table or {n} per-cell values")
    return arr


def _footprint(spec):
    kind = spec.get("type", "disk")
    if kind == "disk":
        return DiskFootprint(float(spec["radius"]))
    if kind == "polygon":
        return PolygonFootprint(spec["vertices"])
    raise ScenarioError(f"unknown footprint type {kind!r}")


def _grid_field(value, ny, nx, name):
    arr = np.asarray(np.nan if value is None else value, dtype=float)
    if arr.ndim == 0:
        return np.full((ny, nx), float(arr))
    if arr.size != ny * nx:
        raise ScenarioError(f"grid.{name}: need a scalar or {ny} x {nx} values")
    return arr.reshape(ny, nx)


def _grid_points(grid):
    """Cell-center points of the grid, row-major in y."""
    nx, ny = int(grid["nx"]), int(grid["ny"])
    xmin, ymin, xmax, ymax = map(float, grid["bounds"])
    xs = xmin + (np.arange(nx) + 0.5) * (xmax - xmin) / nx
    ys = ymin + (np.arange(ny) + 0.5) * (ymax - ymin) / ny
    X, Y = np.meshgrid(xs, ys)
    P = _grid_field(grid["production"], ny, nx, "production")
    C = _grid_field(grid.get("consumption"), ny, nx, "consumption")
    return [
        InterestPoint((float(x), float(y)), float(p), float(c))
        for x, y, p, c in zip(X.ravel(), Y.ravel(), P.ravel(), C.ravel())
    ]


@dataclass
class Scenario:
    raw: dict
    task: Optional[PersistentTask]
    direct: Optional[CoveredTask]
    delta: Optional[float] = None
    delta_f: float = 1e-9
    samples: Optional[int] = None
    extra: dict = field(default_factory=dict)

    @property
    def n_robots(self):
        return self.task.n_robots if self.task is not None else self.direct.n_robots

    @cached_property
    def covered(self) -> CoveredTask:
        if self.direct is not None:
            return self.direct
        return prepare(self.task, samples=self.samples)


def parse_scenario(raw: dict) -> Scenario:
    """Build a :class:`Scenario` from parsed JSON, validating it."""
    try:
        robots = raw["robots"]
        lp = raw.get("lp", {}) or {}
        points = [
            InterestPoint(tuple(map(float, pt["position"])) if "position" in pt else (0.0, 0.0),
                          float(pt["production"]),
                          float(pt["consumption"]) if pt.get("consumption") is not None else float("nan"))
            for pt in raw.get("points", [])
        ]
        if raw.get("grid"):
            points += _grid_points(raw["grid"])
        if not robots:
            raise ScenarioError("robots: at least one robot required")
        direct = all("intervals" in r for r in robots)
        if direct:
            cov_task = _direct_task(robots, points)
            bad = [v for v in _direct_violations(cov_task)]
            if bad:
                raise ScenarioError("; ".join(bad))
            return Scenario(raw, None, cov_task, lp.get("delta"), float(lp.get("delta_f", 1e-9)),
                            lp.get("samples"))
        models, paths, sizes = [], [], []
        for r in robots:
            n = int(r["basis_size"])
            cons = r.get("consumption")
            models.append(RobotModel(_footprint(r["footprint"]), _speed(r["v_min"], n, "min"),
                                     _speed(r["v_max"], n, "max"), cons))
            paths.append(PathSpec(r["path"]))
            sizes.append(n)
        task = PersistentTask(models, paths, points, sizes)
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario: {exc!r}") from exc
    bad = validate(task)
    if bad:
        raise ScenarioError("; ".join(bad))
    return Scenario(raw, task, None, lp.get("delta"), float(lp.get("delta_f", 1e-9)), lp.get("samples"))


def _direct_task(robots, points):
    cov, lo, hi, cons, lengths = [], [], [], [], []
    m = len(points)
    for r in robots:
        n = int(r["basis_size"])
        L = float(r.get("length", 1.0))
        ivs = r["intervals"]
        if len(ivs) != m:
            raise ScenarioError(f"intervals: need one entry per point ({m})")
        cov.append([CoverageSet(full=True) if iv == "full" else CoverageSet(tuple(map(tuple, iv)))
                    for iv in ivs])
        vmin = np.broadcast_to(np.asarray(_speed(r["v_min"], n, "min")), (n,))
        vmax = np.broadcast_to(np.asarray(_speed(r["v_max"], n, "max")), (n,))
        if not (np.all(vmin > 0) and np.all(vmin <= vmax)):
            raise ScenarioError("v_min/v_max: 0 < v_min(j) <= v_max(j) violated")
        lo.append(L / vmax)
        hi.append(L / vmin)
        c = r.get("consumption")
        cons.append(np.array([pt.consumption for pt in points]) if c is None
                    else np.broadcast_to(np.asarray(c, float), (m,)).copy())
        lengths.append(L)
    return CoveredTask(tuple(cov), [pt.production for pt in points], tuple(cons), tuple(lo), tuple(hi),
                       lengths=tuple(lengths))


def _direct_violations(data: CoveredTask):
    out = []
    if data.n_points < 1:
        out.append("points: at least one interest point required")
    for r in range(data.n_robots):
        for i, cov in enumerate(data.coverage[r]):
            out += [f"robots[{r}].intervals[{i}]: {v}" for v in cov.violations()]
    p = data.production
    if data.n_robots == 1:
        c = data.consumption[0]
        for i in np.flatnonzero(~(c > p) | ~(p > 0)):
            out.append(f"points[{i}]: c > p > 0 violated (p={p[i]}, c={c[i]})")
    else:
        for i in np.flatnonzero(~(p > 0)):
            out.append(f"points[{i}]: p > 0 violated (p={p[i]})")
        for r, c in enumerate(data.consumption):
            if not np.all(np.isfinite(c)) or np.any(c < 0):
                out.append(f"robots[{r}].consumption: finite values >= 0 required")
    return out


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(raw)


def task_to_dict(task: PersistentTask, delta=None, samples=None):
    """Serialize a :class:`PersistentTask` to the scenario layout."""
    robots = []
    for rob, path, n in zip(task.robots, task.paths, task.basis_sizes):
        fp = rob.footprint
        fp_d = {"type": "disk", "radius": fp.radius} if isinstance(fp, DiskFootprint) else {
            "type": "polygon", "vertices": [list(v) for v in fp.vertices]}
        robots.append({
            "footprint": fp_d,
            "v_min": np.asarray(rob.v_min, float).tolist(),
            "v_max": np.asarray(rob.v_max, float).tolist(),
            "consumption": None if rob.consumption is None else np.asarray(rob.consumption, float).tolist(),
            "path": path.vertices.tolist(),
            "basis_size": int(n),
        })
    points = [{"position": list(map(float, pt.position)), "production": pt.production,
               "consumption": None if np.isnan(pt.consumption) else pt.consumption}
              for pt in task.points]
    return {"robots": robots, "points": points, "lp": {"delta": delta, "samples": samples}}


# --------------------------------------------------------------------------
# controllers


def controller_to_dict(profiles, diagnostics=None):
    robots = []
    for p in profiles:
        robots.append({
            "n": p.n,
            "alpha": [float(a) for a in p.alpha],
            "normalized": bool(p.normalized),
            "frequency": None if p.frequency is None else float(p.frequency),
            "period_s": cycle_time(p),
        })
    return {"robots": robots, "diagnostics": diagnostics or {}}


def controller_from_dict(raw):
    try:
        out = []
        for r in raw["robots"]:
            alpha = np.asarray(r["alpha"], dtype=float)
            if alpha.ndim != 1 or len(alpha) != int(r.get("n", len(alpha))):
                raise ScenarioError("controller: alpha length must equal n")
            norm = bool(r.get("normalized", r.get("frequency") is not None))
            out.append(ReciprocalProfile(alpha, normalized=norm, frequency=r.get("frequency")))
        return out
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed controller: {exc!r}") from exc


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_controller(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read controller {path}: {exc}") from exc
    return controller_from_dict(raw)
