"""Martingale operators on a finite filtered space."""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from . import numeric as nm
from .space import FilteredSpace, SpaceError, cond_exp_pointwise, weighted_cond_exp


@dataclass(frozen=True)
class AlphaSequence:
    """Nonnegative coefficients ``alpha_i``, one value per level-``i`` atom.

    On a finite space every coefficient is bounded, so boundedness is not
    checked separately.
    """

    values: tuple

    @classmethod
    def from_levels(cls, space: FilteredSpace, levels) -> "AlphaSequence":
        if len(levels) != space.level_count:
            raise SpaceError(f"alpha has {len(levels)} levels, space has {space.level_count}")
        vals = []
        for i, lv in enumerate(levels):
            arr = nm.as_array(lv, space.exact)
            if len(arr) != space.n_atoms(i):
                raise SpaceError(f"alpha[{i}] has {len(arr)} values, level {i} has {space.n_atoms(i)} atoms")
            if any(a < 0 for a in arr):
                raise SpaceError(f"alpha[{i}] has a negative entry")
            arr.flags.writeable = False
            vals.append(arr)
        return cls(tuple(vals))

    @classmethod
    def zero(cls, space: FilteredSpace) -> "AlphaSequence":
        return cls.from_levels(space, [[0] * space.n_atoms(i) for i in range(space.level_count)])

    @classmethod
    def single(cls, space: FilteredSpace, level: int, value=1) -> "AlphaSequence":
        """``alpha_level == value`` everywhere and every other level zero."""
        return cls.from_levels(
            space,
            [[value if i == level else 0] * space.n_atoms(i) for i in range(space.level_count)],
        )

    def scaled(self, c) -> "AlphaSequence":
        return AlphaSequence(tuple(v * c for v in self.values))

    def pointwise(self, space: FilteredSpace) -> list[np.ndarray]:
        return [space.asarray(self.values[i][space.labels(i)]) for i in range(space.level_count)]

    def is_zero(self) -> bool:
        return all(all(a == 0 for a in v) for v in self.values)


@dataclass(frozen=True)
class StoppingTime:
    """Level-valued function on finest atoms; ``inf`` encodes never stopping."""

    values: np.ndarray

    def is_valid(self, space: FilteredSpace) -> bool:
        """``{tau == i}`` is a union of level-``i`` atoms for every ``i``."""
        for i in range(space.level_count):
            mask = self.values == i
            lab = space.labels(i)
            if set(lab[mask].tolist()) & set(lab[~mask].tolist()):
                return False
        finite = self.values[np.isfinite(self.values)]
        return bool(np.all((finite >= 0) & (finite <= space.L) & (finite == np.round(finite))))

    def level_set(self, j: int) -> np.ndarray:
        return self.values == j


def _pointwise_max(arrays):
    return functools.reduce(np.maximum, arrays)


def all_cond_exps(space: FilteredSpace, f, levels=None) -> list[np.ndarray]:
    levels = range(space.level_count) if levels is None else levels
    return [cond_exp_pointwise(space, f, j) for j in levels]


def doob_maximal(space: FilteredSpace, f) -> np.ndarray:
    """``Mf = max_i |E_i f|`` pointwise."""
    return tailed_maximal(space, f, 0)


def tailed_maximal(space: FilteredSpace, f, i: int) -> np.ndarray:
    """``max_{j >= i} |E_j f|`` pointwise."""
    space.check_level(i)
    return _pointwise_max([np.abs(e) for e in all_cond_exps(space, f, range(i, space.level_count))])


def weighted_tailed_maximal(space: FilteredSpace, f, w, i: int) -> np.ndarray:
    """Tailed maximal function built from ``w dmu`` conditional expectations."""
    space.check_level(i)
    return _pointwise_max(
        [np.abs(weighted_cond_exp(space, f, w, j).pointwise()) for j in range(i, space.level_count)]
    )


def first_passage(space: FilteredSpace, f, i: int, threshold, w=None) -> StoppingTime:
    """First level ``j >= i`` where ``E_j f > threshold`` (strict), else ``inf``.

    With ``w`` given the conditional expectations are taken for ``w dmu``.
    """
    space.check_level(i)
    tau = np.full(space.n, np.inf)
    for j in range(i, space.level_count):
        e = cond_exp_pointwise(space, f, j) if w is None else weighted_cond_exp(space, f, w, j).pointwise()
        hit = np.array([v > threshold for v in e], dtype=bool) & ~np.isfinite(tau)
        tau[hit] = j
    return StoppingTime(tau)


def positive_op(space: FilteredSpace, alpha: AlphaSequence, f) -> np.ndarray:
    """``T_alpha f = sum_i alpha_i E_i f``."""
    f = space.asarray(f)
    out = nm.zeros(space.n, space.exact)
    for a, e in zip(alpha.pointwise(space), all_cond_exps(space, f)):
        out = out + a * e
    return out


def bilinear_op(space: FilteredSpace, alpha: AlphaSequence, f, g):
    """Pointwise ``sum_i alpha_i E_i f E_i g`` and its integral."""
    ef = all_cond_exps(space, f)
    eg = all_cond_exps(space, g)
    out = nm.zeros(space.n, space.exact)
    for a, x, y in zip(alpha.pointwise(space), ef, eg):
        out = out + a * x * y
    return out, (out * space.mu).sum()


def weak_norm(space: FilteredSpace, g, q, w=None):
    """``sup_t t * w(|g| >= t)^(1/q)`` over the values ``t`` of ``|g|``.

    This equals ``sup_lambda lambda * w(|g| > lambda)^(1/q)`` since the
    distribution function is a right-continuous step function.
    """
    if nm.to_float(q) < 1:
        raise ValueError(f"weak_norm needs q >= 1, got {q}")
    g = np.abs(space.asarray(g))
    mass = space.mu if w is None else space.asarray(w) * space.mu
    inv_q = 1 / nm.to_fraction(q)
    best = 0.0
    for t in sorted(set(g.tolist())):
        if t == 0:
            continue
        val = t * nm.scalar_power(mass[g >= t].sum(), inv_q)
        if val > best:
            best = val
    return best


def doob_constant(p) -> float:
    """Doob's L^p constant p'."""
    return float(nm.conjugate(nm.to_float(p)))
