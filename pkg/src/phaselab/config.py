"""Run configuration: a single JSON tree, validated field by field.

The config is the archival record of an experiment, so it round-trips
through serialisation unchanged and every validation failure names the
offending field.
"""

from __future__ import annotations

import copy
import json
from fractions import Fraction

from .critpoints import FinderSettings
from .errors import ConfigError
from .exprtext import parse_field
from .fields import Box
from .irrational import make_problem
from .lagrangian import (BUILDER_NAMES, build_algebraic_lagrangian,
                         build_coupled_lagrangian,
                         build_integer_points_lagrangian,
                         build_irrationality_lagrangian,
                         build_norm_lagrangian,
                         build_rational_points_lagrangian)
from .quadrature import QuadratureSettings

SCHEMA_VERSION = 1


class RunConfig:
    """Validated wrapper around the canonical config dict."""

    def __init__(self, data):
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        self.data = copy.deepcopy(data)
        version = self.data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError("schema_version",
                              f"expected {SCHEMA_VERSION}, got {version!r}")
        tols = self.data.get("tolerances", {})
        if not isinstance(tols, dict):
            raise ConfigError("tolerances", "must be an object")
        for key, val in tols.items():
            if not isinstance(val, (int, float)) or val <= 0:
                raise ConfigError(f"tolerances.{key}", "must be positive")

    # -- plumbing ----------------------------------------------------------

    @classmethod
    def from_file(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError("<file>", f"cannot read {path}: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON in {path}: {exc}")
        return cls(data)

    def to_dict(self):
        return copy.deepcopy(self.data)

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data

    def _get(self, key, default=None, required=False):
        if key not in self.data:
            if required:
                raise ConfigError(key, "missing required field")
            return default
        return self.data[key]

    # -- typed accessors ----------------------------------------------------

    @property
    def seed(self):
        v = self._get("seed", 0)
        if not isinstance(v, int):
            raise ConfigError("seed", "must be an integer")
        return v

    @property
    def threads(self):
        v = self._get("threads", 1)
        if not isinstance(v, int) or v < 1:
            raise ConfigError("threads", "must be a positive integer")
        return v

    def a_interval(self):
        a = self._get("A", [1.0, 2.0])
        if (not isinstance(a, (list, tuple)) or len(a) != 2
                or not all(isinstance(v, (int, float)) for v in a)):
            raise ConfigError("A", "must be [lo, hi]")
        lo, hi = float(a[0]), float(a[1])
        if not lo < hi:
            raise ConfigError("A", "interval empty")
        if lo <= 0.0 <= hi:
            raise ConfigError("A", "must not contain 0")
        return lo, hi

    def tolerance(self, name, default):
        return float(self.data.get("tolerances", {}).get(name, default))

    def h_value(self, override=None):
        if override is not None:
            return float(override)
        v = self._get("h", required=True)
        if not isinstance(v, (int, float)) or v <= 0:
            raise ConfigError("h", "must be a positive number")
        return float(v)

    def h_schedule(self):
        spec = self._get("h_schedule",
                         {"start": 100.0, "ratio": 2.0 ** 0.5, "count": 16})
        if isinstance(spec, list):
            if len(spec) < 8:
                raise ConfigError("h_schedule", "needs at least 8 points")
            return [float(v) for v in spec]
        if not isinstance(spec, dict):
            raise ConfigError("h_schedule", "must be a list or an object")
        try:
            start = float(spec["start"])
            ratio = float(spec["ratio"])
            count = int(spec["count"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("h_schedule", f"bad ladder spec: {exc}")
        if start <= 0 or ratio <= 1 or count < 8:
            raise ConfigError("h_schedule",
                              "need start > 0, ratio > 1, count >= 8")
        return [start * ratio ** k for k in range(count)]

    def finder_settings(self):
        spec = self._get("finder", {})
        if not isinstance(spec, dict):
            raise ConfigError("finder", "must be an object")
        try:
            return FinderSettings(**spec)
        except TypeError as exc:
            raise ConfigError("finder", str(exc))

    def quadrature_settings(self):
        spec = dict(self._get("quadrature", {}))
        if not isinstance(spec, dict):
            raise ConfigError("quadrature", "must be an object")
        spec.setdefault("seed", self.seed)
        spec.setdefault("threads", self.threads)
        try:
            return QuadratureSettings(**spec)
        except TypeError as exc:
            raise ConfigError("quadrature", str(exc))

    # -- model construction --------------------------------------------------

    def _lag_spec(self):
        spec = self._get("lagrangian", required=True)
        if not isinstance(spec, dict):
            raise ConfigError("lagrangian", "must be an object")
        return spec

    def _box_from(self, spec, names, field_name):
        raw = spec.get("box")
        if not isinstance(raw, dict):
            raise ConfigError(f"{field_name}.box", "must map names to [lo, hi]")
        lows, highs = [], []
        for n in names:
            if n not in raw:
                raise ConfigError(f"{field_name}.box", f"missing interval for {n!r}")
            iv = raw[n]
            if not isinstance(iv, (list, tuple)) or len(iv) != 2:
                raise ConfigError(f"{field_name}.box.{n}", "must be [lo, hi]")
            lows.append(float(iv[0]))
            highs.append(float(iv[1]))
        try:
            return Box(lows=tuple(lows), highs=tuple(highs))
        except ValueError as exc:
            raise ConfigError(f"{field_name}.box", str(exc))

    def _scalar_field(self, spec, key, names, field_name):
        text = spec.get(key)
        if not isinstance(text, str):
            raise ConfigError(f"{field_name}.{key}", "must be an expression string")
        try:
            return parse_field(text, names)
        except Exception as exc:
            raise ConfigError(f"{field_name}.{key}", str(exc))

    def build_lagrangian(self):
        spec = self._lag_spec()
        builder = spec.get("builder")
        if builder not in BUILDER_NAMES:
            raise ConfigError("lagrangian.builder",
                              f"must be one of {BUILDER_NAMES}, got {builder!r}")
        names = spec.get("variables")
        if (not isinstance(names, list) or not names
                or not all(isinstance(n, str) for n in names)):
            raise ConfigError("lagrangian.variables", "must be a list of names")
        names = tuple(names)
        lag = "lagrangian"
        try:
            if builder == "norm":
                system = spec.get("system")
                if not isinstance(system, list) or not system:
                    raise ConfigError("lagrangian.system",
                                      "must be a non-empty list of expressions")
                fields = [self._scalar_field({"e": e}, "e", names, lag)
                          for e in system]
                return build_norm_lagrangian(fields, self._box_from(spec, names, lag))
            if builder in ("irrational", "coupled"):
                f = self._scalar_field(spec, "f", names, lag)
                x0 = float(spec.get("x0"))
                delta = float(spec.get("delta", 0.05))
                m_cut = float(spec.get("M", 0.2))
                n_cut = float(spec.get("N", 0.1))
                if builder == "irrational":
                    return build_irrationality_lagrangian(f, x0, delta, m_cut, n_cut)
                beta = float(spec.get("beta", 1.0))
                return build_coupled_lagrangian(f, x0, delta, m_cut, n_cut, beta)
            f = self._scalar_field(spec, "f", names, lag)
            box = self._box_from(spec, names, lag)
            if builder == "rational-points":
                return build_rational_points_lagrangian(
                    f, box, spec.get("M", 0.2), spec.get("N", 0.1))
            if builder == "integer-points":
                return build_integer_points_lagrangian(f, box, spec.get("M", 0.2))
            return build_algebraic_lagrangian(
                f, int(spec.get("degree", 1)), box,
                spec.get("M", 0.2), spec.get("N", 0.1))
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError("lagrangian", str(exc))

    def build_problem(self):
        """Irrationality problem from the lagrangian spec (irrational/coupled)."""
        spec = self._lag_spec()
        names = tuple(spec.get("variables", ["x"]))
        f = self._scalar_field(spec, "f", names, "lagrangian")
        x0 = spec.get("x0")
        if not isinstance(x0, (int, float)):
            raise ConfigError("lagrangian.x0", "must be a number")
        target = self._get("exact_target")
        if target is not None:
            try:
                target = Fraction(target)
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError("exact_target", f"not a rational: {exc}")
        try:
            return make_problem(
                f, float(x0), delta=float(spec.get("delta", 0.05)),
                a_interval=self.a_interval(), exact_target=target)
        except ValueError as exc:
            raise ConfigError("exact_target", str(exc))
