"""Problem files: a YAML document with ``space``, ``mapping`` and ``task`` blocks.

Parsing is total or fails with a ``ConfigError`` that names the file, line and
column of the offending node.  Unknown keys are rejected.

Example::

    space:
      norm: {kind: euclidean}
      domain: {kind: box, lo: [0.5], hi: [2.0]}
    mapping:
      kind: reciprocal
    task:
      command: certify
      class: ENRICHED_NONEXPANSIVE
      constants: {b: 1.5}
      plan: {samples: 100000, seed: 0}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .certify import SCHEMAS, ClassId, validate_constants
from .comparison import CComparisonCert, ComparisonFn, PsiFn, SummableSequence
from .errors import InputError
from .mappings import (Affine, Mapping, NegateScale1D, PiecewiseAffine1D, PresicMapping, Reciprocal1D,
                       Reflection1D, ex_ac2, translation)
from .regions import LabeledUnion, Region, region_from_dict
from .sampling import SamplingPlan
from .solver import SolveConfig
from .spaces import ConvexStructure, Metric, Norm, Space


class ConfigError(InputError):
    def __init__(self, message: str, source: str = "<config>", line: int | None = None, column: int | None = None):
        self.source, self.line, self.column = source, line, column
        where = source if line is None else f"{source}:{line}:{column}"
        super().__init__(f"{where}: {message}")


TOP_KEYS = {"space", "mapping", "task"}
SPACE_KEYS = {"dimension", "norm", "metric", "structure", "domain", "regions"}
NORM_KEYS = {"kind", "p", "weights"}
METRIC_KEYS = {"kind", "factor", "cap"}
REGION_KEYS = {
    "box": {"kind", "lo", "hi"},
    "ball": {"kind", "center", "radius"},
    "finite-set": {"kind", "points"},
    "whole": {"kind", "dimension"},
}
MAPPING_KEYS = {
    "reflection": {"kind", "fixed_points"},
    "reciprocal": {"kind", "fixed_points"},
    "negate-scale": {"kind", "fixed_points"},
    "ex-ac2": {"kind", "fixed_points"},
    "affine": {"kind", "A", "c", "fixed_points"},
    "translation": {"kind", "shift", "dimension"},
    "piecewise": {"kind", "breakpoints", "pieces", "fixed_points"},
    "presic": {"kind", "arity", "weights", "scale", "offset"},
}
TASK_KEYS = {"command", "class", "constants", "plan", "solve", "fix_set", "b_grid", "ccert"}
PLAN_KEYS = {"samples", "seed", "distribution", "tol"}
SOLVE_KEYS = {"x0", "lambda", "max_iter", "tol", "stop", "method", "weights"}
SOLVE_METHODS = ("krasnoselskij", "convex-metric", "maia", "cyclic", "presic-diagonal", "presic-k-step")
CCERT_KEYS = {"delta", "k0", "v"}
COMMANDS = ("certify", "solve", "atlas", "bench")


@dataclass
class ProblemConfig:
    space: Space
    mapping: object
    command: str = "certify"
    class_id: ClassId | None = None
    constants: dict | None = None
    plan: SamplingPlan = field(default_factory=SamplingPlan)
    solve: SolveConfig = field(default_factory=SolveConfig)
    method: str = "krasnoselskij"
    x0: np.ndarray | None = None
    weights: list | None = None
    fix_set: np.ndarray | None = None
    b_grid: np.ndarray | None = None
    ccert: CComparisonCert | None = None
    source: str = "<config>"


class _Doc:
    """Parsed YAML plus a path -> node index for line-anchored errors."""

    def __init__(self, text: str, source: str):
        self.source = source
        try:
            root = yaml.compose(text, Loader=yaml.SafeLoader)
            self.data = yaml.safe_load(text)
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark
            raise ConfigError(f"YAML syntax error: {exc.problem}", source,
                              mark.line + 1 if mark else None, mark.column + 1 if mark else None) from None
        self.marks = {}
        if root is not None:
            self._index(root, ())

    def _index(self, node, path):
        self.marks[path] = node.start_mark
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                self.marks[path + (k.value, "#key")] = k.start_mark
                self._index(v, path + (k.value,))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._index(v, path + (i,))

    def error(self, path, message):
        p = tuple(path)
        while p not in self.marks and p:
            p = p[:-1]
        mark = self.marks.get(p)
        dotted = ".".join(str(s) for s in path if s != "#key") or "<root>"
        line, col = (mark.line + 1, mark.column + 1) if mark else (None, None)
        return ConfigError(f"{dotted}: {message}", self.source, line, col)


class _Reader:
    def __init__(self, doc: _Doc):
        self.doc = doc

    def block(self, obj, path, allowed, required=()):
        if not isinstance(obj, dict):
            raise self.doc.error(path, "expected a mapping block")
        for key in obj:
            if key not in allowed:
                raise self.doc.error(tuple(path) + (key, "#key"), f"unknown key {key!r}")
        for key in required:
            if key not in obj:
                raise self.doc.error(path, f"missing required key {key!r}")
        return obj

    def number(self, obj, path):
        if isinstance(obj, bool) or not isinstance(obj, (int, float)):
            raise self.doc.error(path, f"expected a number, got {obj!r}")
        return float(obj)

    def integer(self, obj, path, low=None):
        if isinstance(obj, bool) or not isinstance(obj, int):
            raise self.doc.error(path, f"expected an integer, got {obj!r}")
        if low is not None and obj < low:
            raise self.doc.error(path, f"must be >= {low}")
        return obj

    def array(self, obj, path, ndim=None):
        try:
            arr = np.asarray(obj, dtype=float)
        except (TypeError, ValueError):
            raise self.doc.error(path, f"expected a numeric array, got {obj!r}") from None
        if ndim is not None and arr.ndim != ndim:
            raise self.doc.error(path, f"expected a {ndim}-d array")
        if not np.all(np.isfinite(arr)):
            raise self.doc.error(path, "array entries must be finite")
        return arr

    def choice(self, obj, path, options):
        if obj not in options:
            raise self.doc.error(path, f"expected one of {list(options)}, got {obj!r}")
        return obj

    def guarded(self, path, fn, *args, **kw):
        """Run a constructor, re-raising its validation error at ``path``."""
        try:
            return fn(*args, **kw)
        except ConfigError:
            raise
        except (InputError, ValueError, TypeError, KeyError) as exc:
            raise self.doc.error(path, str(exc)) from None


def _region(r: _Reader, obj, path) -> Region:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise r.doc.error(path, "region needs a 'kind'")
    kind = r.choice(obj["kind"], tuple(path) + ("kind",), tuple(REGION_KEYS))
    r.block(obj, path, REGION_KEYS[kind], REGION_KEYS[kind])
    return r.guarded(path, region_from_dict, obj)


def _space(r: _Reader, obj, path=("space",)) -> Space:
    r.block(obj, path, SPACE_KEYS)
    norm = Norm()
    if "norm" in obj:
        nb = r.block(obj["norm"], path + ("norm",), NORM_KEYS, ("kind",))
        kind = r.choice(nb["kind"], path + ("norm", "kind"), ("euclidean", "p", "quasi-p", "weighted-sup"))
        kw = {"kind": kind}
        if "p" in nb:
            kw["p"] = r.number(nb["p"], path + ("norm", "p"))
        if "weights" in nb:
            kw["weights"] = tuple(r.array(nb["weights"], path + ("norm", "weights"), 1))
        norm = r.guarded(path + ("norm",), Norm, **kw)
    metric = None
    if "metric" in obj:
        mb = r.block(obj["metric"], path + ("metric",), METRIC_KEYS, ("kind",))
        kind = r.choice(mb["kind"], path + ("metric", "kind"), ("norm", "scaled", "truncated"))
        kw = {k: r.number(mb[k], path + ("metric", k)) for k in ("factor", "cap") if k in mb}
        metric = r.guarded(path + ("metric",), Metric, kind, norm, **kw)
    structure = ConvexStructure()
    if "structure" in obj:
        r.choice(obj["structure"], path + ("structure",), ("linear",))
    if "domain" in obj and "regions" in obj:
        raise r.doc.error(path, "give either 'domain' or 'regions', not both")
    region = None
    if "domain" in obj:
        region = _region(r, obj["domain"], path + ("domain",))
    elif "regions" in obj:
        parts = obj["regions"]
        if not isinstance(parts, list) or not parts:
            raise r.doc.error(path + ("regions",), "expected a non-empty list of regions")
        region = r.guarded(path + ("regions",), LabeledUnion,
                           [_region(r, p, path + ("regions", i)) for i, p in enumerate(parts)])
    if "dimension" in obj:
        dim = r.integer(obj["dimension"], path + ("dimension",), 1)
        if region is not None and region.dim != dim:
            raise r.doc.error(path + ("dimension",), f"dimension {dim} does not match the domain ({region.dim})")
    return Space(norm=norm, region=region, metric=metric, structure=structure)


def _mapping(r: _Reader, obj, space: Space, path=("mapping",)):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise r.doc.error(path, "mapping needs a 'kind'")
    kind = r.choice(obj["kind"], path + ("kind",), tuple(MAPPING_KEYS))
    r.block(obj, path, MAPPING_KEYS[kind])
    kw = {}
    if "fixed_points" in obj:
        kw["fixed_points"] = r.array(obj["fixed_points"], path + ("fixed_points",))
    g = lambda fn, *a, **k: r.guarded(path, fn, *a, **k)
    if kind == "reflection":
        return g(Reflection1D, **kw)
    if kind == "reciprocal":
        return g(Reciprocal1D, **kw)
    if kind == "negate-scale":
        return g(NegateScale1D, space.region if space.region is not None else None, **kw)
    if kind == "ex-ac2":
        return g(ex_ac2)
    if kind == "affine":
        if "A" not in obj:
            raise r.doc.error(path, "affine mapping needs 'A'")
        A = r.array(obj["A"], path + ("A",))
        c = r.array(obj["c"], path + ("c",)) if "c" in obj else None
        return g(Affine, A, c, **kw)
    if kind == "translation":
        dim = r.integer(obj.get("dimension", 1), path + ("dimension",), 1)
        return g(translation, dim, r.number(obj.get("shift", 1.0), path + ("shift",)))
    if kind == "piecewise":
        for key in ("breakpoints", "pieces"):
            if key not in obj:
                raise r.doc.error(path, f"piecewise mapping needs {key!r}")
        return g(PiecewiseAffine1D, r.array(obj["breakpoints"], path + ("breakpoints",), 1),
                 r.array(obj["pieces"], path + ("pieces",), 2), **kw)
    # presic
    arity = r.integer(obj.get("arity", 2), path + ("arity",), 1)
    if "weights" not in obj:
        raise r.doc.error(path, "presic mapping needs 'weights'")
    weights = r.array(obj["weights"], path + ("weights",), 1)
    scale = r.number(obj.get("scale", 1.0), path + ("scale",))
    offset = r.array(obj["offset"], path + ("offset",), 1) if "offset" in obj else None
    return g(PresicMapping, arity, weights, scale, offset, space.region)


def _constants(r: _Reader, obj, class_id: ClassId, path):
    r.block(obj, path, set(SCHEMAS[class_id]))
    out = {}
    for key, val in obj.items():
        p = path + (key,)
        if key == "phi":
            b = r.block(val, p, {"kind", "c"}, ("kind",))
            out[key] = r.guarded(p, ComparisonFn, **b)
        elif key == "psi":
            b = r.block(val, p, {"kind"}, ("kind",))
            out[key] = r.guarded(p, PsiFn, **b)
        elif isinstance(val, list):
            out[key] = r.array(val, p, 1).tolist()
        else:
            out[key] = r.number(val, p)
    r.guarded(path, validate_constants, class_id, out)
    return out


def _task(r: _Reader, obj, cfg: ProblemConfig, path=("task",)):
    r.block(obj, path, TASK_KEYS)
    cfg.command = r.choice(obj.get("command", "certify"), path + ("command",), COMMANDS)
    if "class" in obj:
        try:
            cfg.class_id = ClassId(obj["class"])
        except ValueError:
            raise r.doc.error(path + ("class",), f"unknown class {obj['class']!r}") from None
    if "constants" in obj:
        if cfg.class_id is None:
            raise r.doc.error(path + ("constants",), "constants given without a class")
        cfg.constants = _constants(r, obj["constants"], cfg.class_id, path + ("constants",))
    if "plan" in obj:
        pb = r.block(obj["plan"], path + ("plan",), PLAN_KEYS)
        kw = {}
        if "samples" in pb:
            kw["n_samples"] = r.integer(pb["samples"], path + ("plan", "samples"), 1)
        if "seed" in pb:
            kw["seed"] = r.integer(pb["seed"], path + ("plan", "seed"), 0)
        if "distribution" in pb:
            kw["distribution"] = pb["distribution"]
        if "tol" in pb:
            kw["tol"] = r.number(pb["tol"], path + ("plan", "tol"))
        cfg.plan = r.guarded(path + ("plan",), SamplingPlan, **kw)
    if "solve" in obj:
        sb = r.block(obj["solve"], path + ("solve",), SOLVE_KEYS)
        sp = path + ("solve",)
        kw = {}
        if "max_iter" in sb:
            kw["max_iter"] = r.integer(sb["max_iter"], sp + ("max_iter",), 1)
        if "tol" in sb:
            kw["tol"] = r.number(sb["tol"], sp + ("tol",))
        if "lambda" in sb:
            kw["lam"] = r.number(sb["lambda"], sp + ("lambda",))
        if "stop" in sb:
            kw["stop"] = sb["stop"]
        cfg.solve = r.guarded(sp, SolveConfig, **kw)
        if "method" in sb:
            cfg.method = r.choice(sb["method"], sp + ("method",), SOLVE_METHODS)
        if "x0" in sb:
            cfg.x0 = r.array(sb["x0"], sp + ("x0",))
        if "weights" in sb:
            cfg.weights = r.array(sb["weights"], sp + ("weights",), 1).tolist()
    if "fix_set" in obj:
        cfg.fix_set = np.atleast_2d(r.array(obj["fix_set"], path + ("fix_set",)))
    if "b_grid" in obj:
        cfg.b_grid = r.array(obj["b_grid"], path + ("b_grid",), 1)
    if "ccert" in obj:
        cb = r.block(obj["ccert"], path + ("ccert",), CCERT_KEYS, ("delta",))
        kw = {"delta": r.number(cb["delta"], path + ("ccert", "delta"))}
        if "k0" in cb:
            kw["k0"] = r.integer(cb["k0"], path + ("ccert", "k0"), 0)
        if "v" in cb:
            vb = r.block(cb["v"], path + ("ccert", "v"), {"scale", "ratio"})
            kw["v"] = r.guarded(path + ("ccert", "v"), SummableSequence, **vb)
        cfg.ccert = r.guarded(path + ("ccert",), CComparisonCert, **kw)


def parse_config(text: str, source: str = "<config>") -> ProblemConfig:
    doc = _Doc(text, source)
    r = _Reader(doc)
    data = doc.data
    if data is None:
        raise ConfigError("empty config", source)
    r.block(data, (), TOP_KEYS, ("space", "mapping"))
    space = _space(r, data["space"])
    mapping = _mapping(r, data["mapping"], space)
    if space.region is None:
        space = Space(space.norm, mapping.domain, space.metric, space.structure)
    if space.region.dim != mapping.dim:
        raise doc.error(("mapping",), f"mapping acts on R^{mapping.dim} but the space has dimension {space.region.dim}")
    cfg = ProblemConfig(space=space, mapping=mapping, source=source)
    if "task" in data:
        _task(r, data["task"], cfg)
    return cfg


def load_config(path) -> ProblemConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path))
