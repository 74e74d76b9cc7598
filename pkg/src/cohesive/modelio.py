"""Model files (YAML) and JSON reports.

A model file describes one instance::

    schema: 1
    space:
      uniform: 3              # or  weights: ["1/2", "1/4", "1/4"]
    scenario:
      kind: band              # band | avar | vertices
      H: "3/2"                # scalar or one value per atom
      L: 0                    # band only, optional
      # level: "1/2"          # avar
      # densities: [[3, 0, 0], [0, 3, 0]]   # vertices
    liabilities:
      - [4, 0, 0]
      - [0, 2, 0]
    xi: [1, 2, 3]             # optional, used by ``eval``
    Z: [4, 2, 0]              # optional, fixed total liability for ``certify``
    options: {mode: exact, tol: 1e-9, seed: 0, trials: 20}
    expected: {...}           # optional pinned values, ignored by the loader

Numbers are YAML numbers, decimal strings or ``"p/q"`` strings. Any ``p/q``
fraction forces exact mode. Decimals are read as exact decimals in exact mode.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from .errors import CohesiveError, ValidationError
from .group import CapitalReport, LiabilityVector
from .measure import ProbSpace, to_fraction
from .risk import AVaR, Band, ScenarioSet, Vertices

SCHEMA_VERSION = 1
MODES = ("exact", "float")


class ModelError(ValidationError):
    """Problem with a model file, located by line and dotted field path when known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        self.reason = message
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass
class Options:
    mode: str | None = None
    tol: float = 1e-9
    seed: int = 0
    trials: int = 20


@dataclass
class Model:
    space: ProbSpace
    sset: ScenarioSet
    X: LiabilityVector | None = None
    xi: np.ndarray | None = None
    Z: np.ndarray | None = None
    options: Options = field(default_factory=Options)
    expected: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# reading
# ---------------------------------------------------------------------------

def _line_map(node, path: str = "", out: dict | None = None) -> dict:
    """Dotted path -> 1-based line number for every node of a composed YAML tree."""
    out = {} if out is None else out
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            sub = f"{path}.{key.value}" if path else str(key.value)
            out[sub] = key.start_mark.line + 1
            _line_map(value, sub, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            _line_map(value, f"{path}[{i}]", out)
    return out


class _Reader:
    def __init__(self, data: dict, lines: dict):
        self.data = data
        self.lines = lines
        self.has_fraction = False

    def line(self, path: str) -> int | None:
        # fall back to the nearest enclosing field that has a position
        while True:
            if path in self.lines:
                return self.lines[path]
            if not path:
                return None
            cut = max(path.rfind("."), path.rfind("["))
            path = path[:cut] if cut > 0 else ""

    def fail(self, message: str, path: str):
        raise ModelError(message, field=path or None, line=self.line(path))

    def section(self, key: str, required: bool = True):
        if key not in self.data or self.data[key] is None:
            if required:
                self.fail(f"missing required field '{key}'", key)
            return None
        return self.data[key]

    def number(self, value, path: str):
        if isinstance(value, bool) or value is None:
            self.fail(f"expected a number, got {value!r}", path)
        if isinstance(value, str):
            text = value.strip()
            try:
                return Fraction(text)
            except (ValueError, ZeroDivisionError):
                self.fail(f"cannot read {value!r} as a number", path)
        if isinstance(value, (int, float)):
            if isinstance(value, float) and not np.isfinite(value):
                self.fail(f"non-finite value {value!r}", path)
            return to_fraction(value)
        self.fail(f"expected a number, got {type(value).__name__}", path)

    def vector(self, value, path: str, n: int | None = None, scalar_ok: bool = False):
        if not isinstance(value, list):
            if scalar_ok and n is not None:
                return [self.number(value, path)] * n
            self.fail("expected a list of numbers", path)
        if n is not None and len(value) != n:
            self.fail(f"expected {n} values (one per atom), got {len(value)}", path)
        return [self.number(v, f"{path}[{i}]") for i, v in enumerate(value)]

    def matrix(self, value, path: str, n: int):
        if not isinstance(value, list) or not value:
            self.fail("expected a non-empty list of rows", path)
        return [self.vector(row, f"{path}[{i}]", n) for i, row in enumerate(value)]


def _read_options(r: _Reader) -> Options:
    raw = r.section("options", required=False) or {}
    if not isinstance(raw, dict):
        r.fail("expected a mapping", "options")
    unknown = set(raw) - {"mode", "tol", "seed", "trials"}
    if unknown:
        r.fail(f"unknown option(s) {sorted(unknown)}", "options")
    opts = Options()
    if "mode" in raw:
        if raw["mode"] not in MODES:
            r.fail(f"mode must be one of {MODES}, got {raw['mode']!r}", "options.mode")
        opts.mode = raw["mode"]
    if "tol" in raw:
        tol = float(r.number(raw["tol"], "options.tol"))
        if not tol > 0:
            r.fail("invariant 'tol > 0' violated", "options.tol")
        opts.tol = tol
    for key in ("seed", "trials"):
        if key in raw:
            v = raw[key]
            if isinstance(v, bool) or not isinstance(v, int):
                r.fail("expected an integer", f"options.{key}")
            setattr(opts, key, v)
    if opts.trials < 1:
        r.fail("invariant 'trials >= 1' violated", "options.trials")
    return opts


def _read_weights(r: _Reader) -> list:
    sp = r.section("space")
    if not isinstance(sp, dict):
        r.fail("expected a mapping with 'weights' or 'uniform'", "space")
    if ("weights" in sp) == ("uniform" in sp):
        r.fail("give exactly one of 'weights' or 'uniform'", "space")
    if "uniform" in sp:
        n = sp["uniform"]
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            r.fail("invariant 'atom count >= 1' violated", "space.uniform")
        return [Fraction(1, n)] * n
    return r.vector(sp["weights"], "space.weights")


def _read_scenario(r: _Reader, space: ProbSpace) -> ScenarioSet:
    sc = r.section("scenario")
    if not isinstance(sc, dict):
        r.fail("expected a mapping", "scenario")
    kind = sc.get("kind")
    n = space.n_atoms
    try:
        if kind == "band":
            if "H" not in sc:
                r.fail("missing required field 'H'", "scenario")
            H = r.vector(sc["H"], "scenario.H", n, scalar_ok=True)
            L = r.vector(sc.get("L", 0), "scenario.L", n, scalar_ok=True)
            return Band(space, L, H)
        if kind == "avar":
            if "level" not in sc:
                r.fail("missing required field 'level'", "scenario")
            return AVaR(space, r.number(sc["level"], "scenario.level"))
        if kind == "vertices":
            if "densities" not in sc:
                r.fail("missing required field 'densities'", "scenario")
            return Vertices(space, r.matrix(sc["densities"], "scenario.densities", n))
    except ModelError:
        raise
    except CohesiveError as exc:
        r.fail(str(exc), "scenario")
    r.fail(f"kind must be one of band, avar, vertices; got {kind!r}", "scenario.kind")


def _has_fraction(node) -> bool:
    if isinstance(node, str):
        return "/" in node
    if isinstance(node, dict):
        return any(_has_fraction(v) for v in node.values())
    if isinstance(node, list):
        return any(_has_fraction(v) for v in node)
    return False


def parse_model(text: str, mode: str | None = None, tol: float | None = None) -> Model:
    """Build a :class:`Model` from YAML text. ``mode``/``tol`` override the file's options."""
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ModelError(f"malformed YAML: {exc.problem or exc}", line=line) from None
    except yaml.YAMLError as exc:
        raise ModelError(f"malformed YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ModelError("model file must be a YAML mapping", line=1)
    r = _Reader(data, _line_map(root) if root is not None else {})
    r.has_fraction = _has_fraction({k: v for k, v in data.items() if k != "expected"})

    schema = data.get("schema")
    if schema != SCHEMA_VERSION:
        r.fail(f"unsupported schema {schema!r}; expected {SCHEMA_VERSION}", "schema")
    opts = _read_options(r)
    weights = _read_weights(r)
    raw_liab = r.section("liabilities", required=False)
    liab = r.matrix(raw_liab, "liabilities", len(weights)) if raw_liab is not None else None
    xi = r.vector(data["xi"], "xi", len(weights)) if data.get("xi") is not None else None
    Z = r.vector(data["Z"], "Z", len(weights)) if data.get("Z") is not None else None

    notes = []
    if mode is not None and mode not in MODES:
        raise ModelError(f"mode must be one of {MODES}, got {mode!r}")
    chosen = mode or opts.mode
    if r.has_fraction and chosen == "float":
        notes.append("exact fractions in the model force exact mode")
        chosen = "exact"
    elif r.has_fraction:
        chosen = "exact"
    opts.mode = chosen
    if tol is not None:
        opts.tol = tol

    try:
        space = ProbSpace(weights, exact=None if chosen is None else chosen == "exact",
                          tol=opts.tol)
    except CohesiveError as exc:
        r.fail(str(exc), "space")
    opts.mode = "exact" if space.exact else "float"
    sset = _read_scenario(r, space)
    X = None
    if liab is not None:
        try:
            X = LiabilityVector(space, liab)
        except CohesiveError as exc:
            r.fail(str(exc), "liabilities")
    if Z is not None and any(z < 0 for z in Z):
        r.fail("invariant 'Z >= 0' violated", "Z")
    expected = data.get("expected") or {}
    if not isinstance(expected, dict):
        r.fail("expected a mapping", "expected")
    return Model(space=space, sset=sset, X=X,
                 xi=None if xi is None else space.var(xi),
                 Z=None if Z is None else space.var(Z),
                 options=opts, expected=expected, notes=notes)


def load_model(path, mode: str | None = None, tol: float | None = None) -> Model:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelError(f"cannot read model file: {exc.strerror or exc}") from None
    return parse_model(text, mode=mode, tol=tol)


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------

def encode(value):
    """JSON/YAML-safe form: fractions become ``"p/q"`` strings (integers stay
    integers), arrays become lists. Floats stay floats, so exact and float
    values remain distinguishable after a round trip."""
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [encode(v) for v in value.tolist()] if value.dtype != object else [
            encode(v) for v in value]
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    return value


def decode_number(value):
    """Inverse of :func:`encode` for one number."""
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    return value


def _decode_array(values) -> np.ndarray:
    def walk(v):
        return [walk(x) for x in v] if isinstance(v, list) else decode_number(v)

    out = walk(values)
    flat = np.array(out, dtype=object)
    if all(isinstance(v, Fraction) for v in flat.ravel()):
        return flat
    return np.array(out, dtype=float)


def instance_to_dict(space: ProbSpace, sset: ScenarioSet, X=None, **extra) -> dict:
    """A model-file mapping that reproduces ``(space, sset, X)``."""
    doc = {"schema": SCHEMA_VERSION, "space": {"weights": encode(space.weights)}}
    if isinstance(sset, Band):
        doc["scenario"] = {"kind": "band", "L": encode(sset.L), "H": encode(sset.H)}
    elif isinstance(sset, AVaR):
        doc["scenario"] = {"kind": "avar", "level": encode(sset.level)}
    else:
        doc["scenario"] = {"kind": "vertices", "densities": encode(sset.densities)}
    if X is not None:
        doc["liabilities"] = encode(X.X if isinstance(X, LiabilityVector) else X)
    doc["options"] = {"mode": "exact" if space.exact else "float"}
    for key, value in extra.items():
        if value is not None:
            doc[key] = encode(value)
    return doc


def dump_yaml(doc: dict) -> str:
    return yaml.safe_dump(encode(doc), sort_keys=False, default_flow_style=None)


REPORT_FIELDS = ("K_aggregate", "K_group", "alphas", "witness", "cohesion_holds", "residuals",
                 "payoff", "payoff_kind", "cohesion_condition", "comonotonic_set", "lp_solves")


def capital_report_to_dict(report: CapitalReport) -> dict:
    out = {name: encode(getattr(report, name)) for name in REPORT_FIELDS}
    out["gap"] = encode(report.gap)
    return out


def capital_report_from_dict(doc: dict) -> CapitalReport:
    missing = [name for name in REPORT_FIELDS if name not in doc]
    if missing:
        raise ValidationError(f"report is missing field(s) {missing}")
    return CapitalReport(
        K_aggregate=decode_number(doc["K_aggregate"]),
        K_group=decode_number(doc["K_group"]),
        alphas=_decode_array(doc["alphas"]),
        witness=_decode_array(doc["witness"]),
        cohesion_holds=bool(doc["cohesion_holds"]),
        residuals=_decode_array(doc["residuals"]),
        payoff=_decode_array(doc["payoff"]),
        payoff_kind=str(doc["payoff_kind"]),
        cohesion_condition=bool(doc["cohesion_condition"]),
        comonotonic_set=bool(doc["comonotonic_set"]),
        lp_solves=int(doc["lp_solves"]),
    )


def to_json(doc) -> str:
    return json.dumps(encode(doc), indent=2)
