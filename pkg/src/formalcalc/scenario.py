"""Scenario files: a JSON vocabulary for spaces, named objects, checks.

A scenario fixes one base space and holds named open sets, functions,
densities, operators, distributions, and covers that the command line
resolves by name. The format is versioned through a required "schema"
field so fixtures stay readable as the package evolves.

Top-level fields:

    schema     int, must equal SCHEMA_VERSION (currently 1)
    backend    "discrete" | "smoothline"
    points     list of labels (discrete backend only)
    k          number of formal directions (default 1)
    trunc      default truncation order (default 2)
    E_dim      coefficient dimension for distributions (default 1)
    tol        default tolerance for checks (default 1e-8)
    seed       default seed for randomized suites (default 0)
    opensets   name -> open-set JSON ("M" is always the whole space)
    functions  name -> formal function JSON (+"domain", +"support")
    densities  name -> formal density JSON (+"domain")
    operators  name -> density operator JSON (+"domain")
    distributions  name -> {"kind": "distribution"|"compact"|
                            "generalized"|"point", "domain": ..., ...}
    covers     name -> {"whole": openset name, "parts": [names]}
    tasks      optional declared work, e.g. {"glue": {"cover": name,
               "locals": [distribution names]}}
"""

from __future__ import annotations

import json

from .densities import FormalDensity
from .diffops import DensityDiffOp
from .distributions import (CompactFormalDistribution, FormalDistribution,
                            GeneralizedFunction, PointDistribution)
from .errors import FormalcalcError, ScenarioError
from .functions import FormalFunction, SupportedFormalFunction
from .sheaf import Cover
from .spaces import Discrete, OpenSet, SmoothLine

SCHEMA_VERSION = 1

_DIST_KINDS = ("distribution", "compact", "generalized", "point")


def _int_field(data, key, default, least):
    v = data.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool) or v < least:
        raise ScenarioError("field %r must be an integer >= %d" % (key, least))
    return v


class Scenario:
    """A parsed scenario; all object references resolved and validated."""

    def __init__(self, data, trunc_override=None):
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a JSON object")
        if data.get("schema") != SCHEMA_VERSION:
            raise ScenarioError("unsupported schema %r (this build reads %d)"
                                % (data.get("schema"), SCHEMA_VERSION))
        backend = data.get("backend")
        if backend == "discrete":
            pts = data.get("points")
            if not isinstance(pts, list) or not pts:
                raise ScenarioError("discrete backend needs a nonempty "
                                    "'points' list")
            self.space = Discrete(pts)
        elif backend == "smoothline":
            self.space = SmoothLine()
        else:
            raise ScenarioError("backend must be 'discrete' or 'smoothline'")
        self.k = _int_field(data, "k", 1, 0)
        self.trunc = _int_field(data, "trunc", 2, 0)
        if trunc_override is not None:
            if trunc_override < 0:
                raise ScenarioError("trunc override must be nonnegative")
            self.trunc = trunc_override
        self.e_dim = _int_field(data, "E_dim", 1, 1)
        try:
            self.tol = float(data.get("tol", 1e-8))
        except (TypeError, ValueError):
            raise ScenarioError("field 'tol' must be a number")
        self.seed = _int_field(data, "seed", 0, 0)

        self.opensets = {"M": self.space.whole()}
        for name, v in self._section(data, "opensets").items():
            self.opensets[name] = self._build(name, OpenSet.from_json,
                                              self.space, v)

        self.functions = {}
        for name, v in self._section(data, "functions").items():
            dom = self.openset(self._domain_name(name, v))
            cls = SupportedFormalFunction if "support" in v else FormalFunction
            self.functions[name] = self._build(name, cls.from_json,
                                               self.space, dom, self.k, v)

        self.densities = {}
        for name, v in self._section(data, "densities").items():
            dom = self.openset(self._domain_name(name, v))
            self.densities[name] = self._build(name, FormalDensity.from_json,
                                               self.space, dom, self.k, v)

        self.operators = {}
        for name, v in self._section(data, "operators").items():
            dom = self.openset(self._domain_name(name, v))
            self.operators[name] = self._build(name, DensityDiffOp.from_json,
                                               self.space, dom, self.k, v)

        self.distributions = {}
        for name, v in self._section(data, "distributions").items():
            dom = self.openset(self._domain_name(name, v))
            kind = v.get("kind", "distribution")
            if kind not in _DIST_KINDS:
                raise ScenarioError("distribution %r has unknown kind %r "
                                    "(one of %s)" % (name, kind,
                                                     ", ".join(_DIST_KINDS)))
            cls = {"distribution": FormalDistribution,
                   "compact": CompactFormalDistribution,
                   "generalized": GeneralizedFunction,
                   "point": PointDistribution}[kind]
            self.distributions[name] = self._build(name, cls.from_json,
                                                   self.space, dom, self.k, v)

        self.covers = {}
        for name, v in self._section(data, "covers").items():
            if not isinstance(v, dict) or "whole" not in v or "parts" not in v:
                raise ScenarioError("cover %r needs 'whole' and 'parts'" % name)
            whole = self.openset(v["whole"])
            parts = [self.openset(p) for p in v["parts"]]
            self.covers[name] = self._build(name, Cover, whole, parts)

        self.tasks = data.get("tasks", {})
        if not isinstance(self.tasks, dict):
            raise ScenarioError("field 'tasks' must be an object")

    @staticmethod
    def _section(data, key):
        v = data.get(key, {})
        if not isinstance(v, dict):
            raise ScenarioError("field %r must be a name->object map" % key)
        return v

    @staticmethod
    def _domain_name(name, v):
        if not isinstance(v, dict):
            raise ScenarioError("object %r must be a JSON object" % name)
        return v.get("domain", "M")

    @staticmethod
    def _build(name, builder, *args):
        try:
            return builder(*args)
        except FormalcalcError as e:
            raise ScenarioError("invalid object %r: %s" % (name, e))
        except (ValueError, KeyError, TypeError) as e:
            raise ScenarioError("invalid object %r: %s" % (name, e))

    # -- name resolution ---------------------------------------------------

    def _get(self, table, kind, name):
        if name not in table:
            raise ScenarioError("no %s named %r (have: %s)"
                                % (kind, name, ", ".join(sorted(table)) or "none"))
        return table[name]

    def openset(self, name) -> OpenSet:
        return self._get(self.opensets, "open set", name)

    def function(self, name):
        return self._get(self.functions, "function", name)

    def density(self, name):
        return self._get(self.densities, "density", name)

    def operator(self, name):
        return self._get(self.operators, "operator", name)

    def distribution(self, name):
        return self._get(self.distributions, "distribution", name)

    def cover(self, name) -> Cover:
        return self._get(self.covers, "cover", name)

    @classmethod
    def load(cls, path, trunc_override=None) -> "Scenario":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as e:
            raise ScenarioError("cannot read scenario %s: %s" % (path, e))
        except json.JSONDecodeError as e:
            raise ScenarioError("scenario %s is not valid JSON: %s" % (path, e))
        return cls(data, trunc_override=trunc_override)
