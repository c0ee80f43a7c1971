"""Instance documents and seeded instance generators.

An instance is one JSON document holding a filtered space, named weights,
named functions, optional per-level coefficients ``alpha`` and exponents.
Rationals are written as ``"n/d"`` strings so exact fixtures round-trip.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import numeric as nm
from .operators import AlphaSequence
from .space import FilteredSpace, SpaceError

MAX_ATOMS = 4096
WEIGHT_LAWS = ("lognormal", "power", "two-point")
KINDS = ("dyadic", "random-tree")


class InstanceError(ValueError):
    """Malformed instance document; the message starts with the offending key."""


@dataclass
class Instance:
    space: FilteredSpace
    weights: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    alpha: AlphaSequence | None = None
    p: object = 2
    q: object = None
    name: str = ""

    @property
    def exact(self) -> bool:
        return self.space.exact

    def weight(self, key: str, default: str | None = None):
        if key in self.weights:
            return self.weights[key]
        if default is not None and default in self.weights:
            return self.weights[default]
        raise InstanceError(f"weights.{key}: missing")

    def function(self, key: str):
        if key not in self.functions:
            raise InstanceError(f"functions.{key}: missing")
        return self.functions[key]

    def with_backend(self, exact: bool) -> "Instance":
        if exact == self.exact:
            return self
        space = self.space.with_backend(exact)
        conv = (lambda a: nm.as_array(a, exact))
        alpha = None
        if self.alpha is not None:
            alpha = AlphaSequence.from_levels(space, [conv(v) for v in self.alpha.values])
        return Instance(
            space,
            {k: conv(v) for k, v in self.weights.items()},
            {k: conv(v) for k, v in self.functions.items()},
            alpha,
            self.p,
            self.q,
            self.name,
        )


# -- number encoding ------------------------------------------------------------


def encode_number(x):
    if isinstance(x, (bool, np.bool_)):
        raise InstanceError(f"cannot encode boolean {x!r} as a number")
    if isinstance(x, (Fraction, int, np.integer)):
        x = Fraction(x)
        return int(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return float(x)
    return x


def decode_number(raw, key: str):
    if isinstance(raw, bool):
        raise InstanceError(f"{key}: expected a number, got {raw!r}")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        if not math.isfinite(raw):
            raise InstanceError(f"{key}: must be finite")
        return raw
    if isinstance(raw, str):
        try:
            return Fraction(raw)
        except (ValueError, ZeroDivisionError):
            raise InstanceError(f"{key}: cannot parse {raw!r} as a rational") from None
    raise InstanceError(f"{key}: expected a number, got {type(raw).__name__}")


def _numbers(raw, key: str, positive: bool = False, nonneg: bool = False) -> list:
    if not isinstance(raw, list):
        raise InstanceError(f"{key}: expected a list")
    out = []
    for idx, r in enumerate(raw):
        x = decode_number(r, f"{key}[{idx}]")
        if positive and not x > 0:
            raise InstanceError(f"{key}[{idx}]: must be > 0, got {r!r}")
        if nonneg and x < 0:
            raise InstanceError(f"{key}[{idx}]: must be >= 0, got {r!r}")
        out.append(x)
    return out


def _all_exact(*groups) -> bool:
    return all(isinstance(x, Fraction) for g in groups for x in g)


# -- documents --------------------------------------------------------------------


def instance_from_dict(doc: dict, exact: bool | None = None) -> Instance:
    """Validate a decoded document; ``exact=None`` picks rational mode when no float appears."""
    if not isinstance(doc, dict):
        raise InstanceError("<root>: expected an object")
    unknown = set(doc) - {"space", "weights", "functions", "alpha", "parameters", "name"}
    if unknown:
        raise InstanceError(f"{sorted(unknown)[0]}: unknown key")
    sp = doc.get("space")
    if not isinstance(sp, dict):
        raise InstanceError("space: missing or not an object")
    if "levels" not in sp:
        raise InstanceError("space.levels: missing")
    if "mu" not in sp:
        raise InstanceError("space.mu: missing")
    levels = sp["levels"]
    if not isinstance(levels, list) or not levels:
        raise InstanceError("space.levels: expected a non-empty list")
    for i, lv in enumerate(levels):
        if not isinstance(lv, list):
            raise InstanceError(f"space.levels[{i}]: expected a list of atoms")
        for a, atom in enumerate(lv):
            if not isinstance(atom, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in atom):
                raise InstanceError(f"space.levels[{i}][{a}]: expected a list of atom indices")
    mu = _numbers(sp["mu"], "space.mu", positive=True)

    raw_w = doc.get("weights", {})
    raw_f = doc.get("functions", {})
    for key, group in (("weights", raw_w), ("functions", raw_f)):
        if not isinstance(group, dict):
            raise InstanceError(f"{key}: expected an object")
    weights = {k: _numbers(v, f"weights.{k}", positive=True) for k, v in sorted(raw_w.items())}
    functions = {k: _numbers(v, f"functions.{k}") for k, v in sorted(raw_f.items())}
    alpha_raw = doc.get("alpha")
    alpha_vals = None
    if alpha_raw is not None:
        if not isinstance(alpha_raw, list):
            raise InstanceError("alpha: expected a list of per-level lists")
        alpha_vals = [_numbers(v, f"alpha[{i}]", nonneg=True) for i, v in enumerate(alpha_raw)]
    params = doc.get("parameters", {})
    if not isinstance(params, dict):
        raise InstanceError("parameters: expected an object")
    p = decode_number(params["p"], "parameters.p") if "p" in params else Fraction(2)
    q = decode_number(params["q"], "parameters.q") if "q" in params else None
    if not p > 1:
        raise InstanceError(f"parameters.p: must be > 1, got {params.get('p')!r}")
    if q is not None and not q >= p:
        raise InstanceError(f"parameters.q: must be >= p, got {params.get('q')!r}")

    if exact is None:
        exact = _all_exact(mu, *weights.values(), *functions.values(), *(alpha_vals or []))
    try:
        space = FilteredSpace(levels, mu, exact=exact)
    except SpaceError as e:
        raise InstanceError(f"space.levels: {e}") from None
    conv = (lambda xs: nm.as_array(xs, exact))
    for key, group in (("weights", weights), ("functions", functions)):
        for k, v in group.items():
            if len(v) != space.n:
                raise InstanceError(f"{key}.{k}: has {len(v)} values, space has {space.n} atoms")
    alpha = None
    if alpha_vals is not None:
        try:
            alpha = AlphaSequence.from_levels(space, [conv(v) for v in alpha_vals])
        except SpaceError as e:
            raise InstanceError(f"alpha: {e}") from None
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise InstanceError("name: expected a string")
    return Instance(
        space,
        {k: conv(v) for k, v in weights.items()},
        {k: conv(v) for k, v in functions.items()},
        alpha,
        _param(p),
        None if q is None else _param(q),
        name,
    )


def _param(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


def instance_to_dict(inst: Instance) -> dict:
    enc = lambda arr: [encode_number(x) for x in arr]  # noqa: E731
    doc = {
        "space": {"levels": [[list(a) for a in part] for part in inst.space.partitions], "mu": enc(inst.space.mu)},
        "weights": {k: enc(v) for k, v in inst.weights.items()},
        "functions": {k: enc(v) for k, v in inst.functions.items()},
        "parameters": {"p": encode_number(inst.p)},
    }
    if inst.q is not None:
        doc["parameters"]["q"] = encode_number(inst.q)
    if inst.alpha is not None:
        doc["alpha"] = [enc(v) for v in inst.alpha.values]
    if inst.name:
        doc["name"] = inst.name
    return doc


def dumps_instance(inst: Instance) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(instance_to_dict(inst), sort_keys=True, indent=2) + "\n"


def loads_instance(text: str, exact: bool | None = None) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceError(f"<document>: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    return instance_from_dict(doc, exact)


def load_instance(path, exact: bool | None = None) -> Instance:
    return loads_instance(Path(path).read_text(), exact)


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps_instance(inst))


# -- generators ---------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for a random instance; equal specs give equal instances.

    ``law_params`` is ``(mean, std)`` for ``lognormal``, ``(exponent,)`` for
    ``power`` (``w(x) = t_x^exponent`` at atom midpoints ``t_x`` in (0, 1))
    and ``(a, b)`` for ``two-point``.
    """

    kind: str = "dyadic"
    depth: int = 3
    branching: int = 2
    weight_law: str = "lognormal"
    law_params: tuple = (0.0, 1.0)
    seed: int = 0
    exact: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InstanceError(f"kind: must be one of {KINDS}, got {self.kind!r}")
        if self.weight_law not in WEIGHT_LAWS:
            raise InstanceError(f"weight_law: must be one of {WEIGHT_LAWS}, got {self.weight_law!r}")
        if self.depth < 0 or self.branching < 1:
            raise InstanceError("depth/branching: need depth >= 0 and branching >= 1")
        if self.branching**self.depth > MAX_ATOMS:
            raise InstanceError(f"depth/branching: {self.branching}^{self.depth} atoms exceeds the cap of {MAX_ATOMS}")


def _tree(spec: GeneratorSpec, rng: np.random.Generator) -> list:
    if spec.kind == "dyadic":
        n = spec.branching**spec.depth
        return [
            [list(range(a * size, (a + 1) * size)) for a in range(n // size)]
            for size in (spec.branching ** (spec.depth - i) for i in range(spec.depth + 1))
        ]
    # random tree: each atom splits into 1..branching children; the last level is discrete
    sizes = [[1]]
    for _ in range(spec.depth):
        sizes.append([int(rng.integers(1, spec.branching + 1)) for _ in range(sum(sizes[-1]))])
    n = sum(sizes[-1])
    # build bottom-up: children of each node are consecutive
    bounds = [list(range(n + 1))]
    for counts in reversed(sizes[1:]):
        prev = bounds[-1]
        cuts, pos = [0], 0
        for c in counts:
            pos += c
            cuts.append(prev[pos])
        bounds.append(cuts)
    levels = [[list(range(b[a], b[a + 1])) for a in range(len(b) - 1)] for b in reversed(bounds)]
    return levels


def _weights(spec: GeneratorSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    if spec.weight_law == "lognormal":
        m, s = (list(spec.law_params) + [0.0, 1.0])[:2]
        return np.exp(rng.normal(m, s, size=n))
    if spec.weight_law == "power":
        (e,) = spec.law_params[:1] or (0.5,)
        t = (np.arange(n) + 0.5) / n
        return t**e
    a, b = (list(spec.law_params) + [1.0, 4.0])[:2]
    if not (a > 0 and b > 0):
        raise InstanceError("law_params: two-point values must be > 0")
    return np.where(rng.random(n) < 0.5, a, b)


def _rational(values: np.ndarray, limit: int = 1000) -> list:
    return [Fraction(float(x)).limit_denominator(limit) or Fraction(1, limit) for x in values]


def generate(spec: GeneratorSpec) -> Instance:
    """Instance with weights ``w``, ``v``, ``sigma``, function ``h`` and coefficients ``alpha``."""
    rng = np.random.default_rng(spec.seed)
    levels = _tree(spec, rng)
    n = len(levels[-1])
    if spec.kind == "dyadic":
        mu = [Fraction(1, n)] * n if spec.exact else [1.0 / n] * n
    else:
        raw = rng.exponential(size=n) + 0.05
        if spec.exact:
            fr = _rational(raw / raw.sum())
            total = sum(fr)
            mu = [x / total for x in fr]
        else:
            mu = list(raw / raw.sum())
    ws = {name: _weights(spec, rng, n) for name in ("w", "v", "sigma")}
    h = np.exp(rng.normal(0.0, 1.5, size=n))
    alpha = [rng.exponential(size=len(lv)) for lv in levels]
    conv = _rational if spec.exact else (lambda a: [float(x) for x in a])
    space = FilteredSpace(levels, mu, exact=spec.exact)
    return Instance(
        space,
        {k: nm.as_array(conv(v), spec.exact) for k, v in ws.items()},
        {"h": nm.as_array(conv(h), spec.exact)},
        AlphaSequence.from_levels(space, [conv(a) for a in alpha]),
        2,
        2,
        f"{spec.kind}-d{spec.depth}-b{spec.branching}-{spec.weight_law}-s{spec.seed}",
    )


def trial_seed(seed: int, trial: int) -> int:
    """Independent per-trial seed derived from the run seed."""
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1)[0])
