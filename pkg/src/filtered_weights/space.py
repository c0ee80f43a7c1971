"""Finite filtered measure spaces.

A space is a finite set of finest atoms with positive masses together with a
tower of refining partitions, one per level ``0..L``.  Level ``L`` is the
discrete partition.  Functions are numpy arrays indexed by finest atom; the
arithmetic backend (float or exact rational) is chosen per space.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import numeric as nm

EXHAUSTIVE_CAP = 20


class SpaceError(ValueError):
    """Invalid filtered space or an operation that does not fit the space."""


class FilteredSpace:
    """Immutable tower of partitions of ``n`` finest atoms.

    Parameters
    ----------
    partitions
        ``partitions[i]`` lists the level-``i`` atoms, each as a sequence of
        finest-atom indices.  The last level must be discrete.
    mu
        Positive masses of the finest atoms.
    exact
        Use Fraction arithmetic instead of float64.
    """

    def __init__(self, partitions: Sequence[Sequence[Sequence[int]]], mu, exact: bool = False, names=None):
        if len(partitions) == 0:
            raise SpaceError("a filtered space needs at least one level")
        mu_arr = nm.as_array(mu, exact)
        n = len(mu_arr)
        if n == 0:
            raise SpaceError("a filtered space needs at least one atom")
        for x, m in enumerate(mu_arr):
            if not m > 0:
                raise SpaceError(f"mu[{x}] must be > 0, got {m}")

        labels = []
        members = []
        for i, part in enumerate(partitions):
            lab = np.full(n, -1, dtype=np.int64)
            mem = []
            for a, atom in enumerate(part):
                idx = np.array(sorted(int(x) for x in atom), dtype=np.int64)
                if idx.size == 0:
                    raise SpaceError(f"level {i} atom {a} is empty")
                if idx[0] < 0 or idx[-1] >= n:
                    raise SpaceError(f"level {i} atom {a} references an atom outside 0..{n - 1}")
                if np.any(lab[idx] >= 0) or len(set(idx.tolist())) != idx.size:
                    raise SpaceError(f"level {i} atoms overlap (atom {a})")
                lab[idx] = a
                mem.append(idx)
            if np.any(lab < 0):
                missing = int(np.flatnonzero(lab < 0)[0])
                raise SpaceError(f"level {i} does not cover atom {missing}")
            labels.append(lab)
            members.append(mem)
        for i in range(len(labels) - 1):
            for a, idx in enumerate(members[i + 1]):
                parents = np.unique(labels[i][idx])
                if parents.size != 1:
                    raise SpaceError(f"level {i + 1} atom {a} is not contained in a single level-{i} atom")
        if len(members[-1]) != n:
            raise SpaceError("the finest level must be the discrete partition")

        for lab in labels:
            lab.flags.writeable = False
        mu_arr.flags.writeable = False
        self._mu = mu_arr
        self._labels = tuple(labels)
        self._members = tuple(tuple(m) for m in members)
        self._exact = bool(exact)
        self._names = tuple(names) if names is not None else tuple(str(x) for x in range(n))
        self._partitions = tuple(tuple(tuple(int(x) for x in idx) for idx in mem) for mem in members)
        self._mass = tuple(self._level_sum_raw(mu_arr, i) for i in range(len(labels)))
        self._lock = threading.Lock()
        self._proj: dict[int, np.ndarray] = {}

    # -- structure ---------------------------------------------------------
    @property
    def exact(self) -> bool:
        return self._exact

    @property
    def mu(self) -> np.ndarray:
        return self._mu

    @property
    def n(self) -> int:
        return len(self._mu)

    @property
    def L(self) -> int:
        """Index of the finest level."""
        return len(self._labels) - 1

    @property
    def level_count(self) -> int:
        return len(self._labels)

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def partitions(self) -> tuple:
        return self._partitions

    def labels(self, i: int) -> np.ndarray:
        self.check_level(i)
        return self._labels[i]

    def atoms(self, i: int) -> tuple[np.ndarray, ...]:
        self.check_level(i)
        return self._members[i]

    def n_atoms(self, i: int) -> int:
        return len(self.atoms(i))

    def atom_mass(self, i: int) -> np.ndarray:
        self.check_level(i)
        return self._mass[i]

    def check_level(self, i: int) -> None:
        if not (isinstance(i, (int, np.integer)) and 0 <= i <= self.L):
            raise SpaceError(f"level {i!r} out of range 0..{self.L}")

    def total_mass(self):
        return self._mass[0].sum()

    # -- backend -----------------------------------------------------------
    def asarray(self, f) -> np.ndarray:
        """Convert ``f`` to this space's backend, checking its length."""
        if isinstance(f, np.ndarray) and f.ndim == 1 and len(f) == self.n:
            if self._exact == nm.is_exact(f) and (self._exact or f.dtype == float):
                return f
        arr = nm.as_array(f, self._exact)
        if len(arr) != self.n:
            raise SpaceError(f"function has {len(arr)} values, space has {self.n} atoms")
        return arr

    def with_backend(self, exact: bool) -> "FilteredSpace":
        if exact == self._exact:
            return self
        mu = self._mu if exact else nm.floatify(self._mu)
        return FilteredSpace(self._partitions, mu, exact=exact, names=self._names)

    def ones(self) -> np.ndarray:
        return nm.ones(self.n, self._exact)

    def indicator(self, mask) -> np.ndarray:
        out = nm.zeros(self.n, self._exact)
        out[np.asarray(mask, dtype=bool)] = 1 if not self._exact else Fraction(1)
        return out

    # -- level sums --------------------------------------------------------
    def _level_sum_raw(self, values: np.ndarray, i: int) -> np.ndarray:
        k = len(self._members[i])
        if nm.is_exact(values):
            out = nm.zeros(k, True)
            np.add.at(out, self._labels[i], values)
            return out
        return np.bincount(self._labels[i], weights=values, minlength=k)

    def level_sum(self, values, i: int) -> np.ndarray:
        """Sum of ``values`` over each level-``i`` atom."""
        self.check_level(i)
        return self._level_sum_raw(self.asarray(values), i)

    def projection(self, i: int) -> np.ndarray:
        """Dense float matrix of the level-``i`` averaging operator."""
        self.check_level(i)
        with self._lock:
            P = self._proj.get(i)
            if P is None:
                lab = self._labels[i]
                mu = nm.floatify(self._mu)
                mass = nm.floatify(self._mass[i])
                P = (lab[:, None] == lab[None, :]) * (mu[None, :] / mass[lab][:, None])
                P.flags.writeable = False
                self._proj[i] = P
        return P

    def __repr__(self) -> str:
        sizes = [len(m) for m in self._members]
        return f"FilteredSpace(n={self.n}, atoms_per_level={sizes}, exact={self._exact})"


@dataclass(frozen=True)
class LevelFunction:
    """A function constant on the atoms of one level (one value per atom)."""

    level: int
    values: np.ndarray
    labels: np.ndarray

    def pointwise(self) -> np.ndarray:
        return self.values[self.labels]


@dataclass(frozen=True)
class MeasurableSet:
    """A union of level-``level`` atoms."""

    level: int
    atoms: frozenset

    def mask(self, space: FilteredSpace) -> np.ndarray:
        return np.isin(space.labels(self.level), list(self.atoms))

    def finest(self, space: FilteredSpace) -> tuple[int, ...]:
        return tuple(int(x) for x in np.flatnonzero(self.mask(space)))

    def key(self) -> tuple:
        return (self.level, tuple(sorted(self.atoms)))

    @classmethod
    def whole(cls, space: FilteredSpace, level: int = 0) -> "MeasurableSet":
        return cls(level, frozenset(range(space.n_atoms(level))))

    @classmethod
    def from_mask(cls, space: FilteredSpace, level: int, mask) -> "MeasurableSet":
        """The set given by a boolean mask on finest atoms; must be level-measurable."""
        mask = np.asarray(mask, dtype=bool)
        lab = space.labels(level)
        inside = set(np.unique(lab[mask]).tolist())
        outside = set(np.unique(lab[~mask]).tolist())
        if inside & outside:
            raise SpaceError(f"set is not measurable at level {level}")
        return cls(level, frozenset(int(a) for a in inside))


def cond_exp(space: FilteredSpace, f, i: int) -> LevelFunction:
    """Conditional expectation of ``f`` given the level-``i`` partition."""
    space.check_level(i)
    f = space.asarray(f)
    sums = space._level_sum_raw(f * space.mu, i)
    return LevelFunction(i, sums / space.atom_mass(i), space.labels(i))


def cond_exp_pointwise(space: FilteredSpace, f, i: int) -> np.ndarray:
    return cond_exp(space, f, i).pointwise()


def weighted_cond_exp(space: FilteredSpace, f, w, i: int) -> LevelFunction:
    """Conditional expectation of ``f`` with respect to the measure ``w dmu``."""
    space.check_level(i)
    f = space.asarray(f)
    w = space.asarray(w)
    num = space._level_sum_raw(f * w * space.mu, i)
    den = space._level_sum_raw(w * space.mu, i)
    return LevelFunction(i, num / den, space.labels(i))


def integrate(space: FilteredSpace, f, E: MeasurableSet | None = None, w=None):
    """``sum_{x in E} f(x) w(x) mu(x)``; ``E=None`` means the whole space."""
    f = space.asarray(f)
    vals = f * space.mu
    if w is not None:
        vals = vals * space.asarray(w)
    if E is None:
        return vals.sum()
    return vals[E.mask(space)].sum()


def lp_norm(space: FilteredSpace, f, p, w=None):
    """``(int |f|^p w dmu)^(1/p)``."""
    if nm.to_float(p) < 1:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    f = space.asarray(f)
    g = nm.power(np.abs(f), p)
    if nm.is_exact(g):
        vals = g * space.mu
        if w is not None:
            vals = vals * space.asarray(w)
    else:
        vals = g * nm.floatify(space.mu)
        if w is not None:
            vals = vals * nm.floatify(space.asarray(w))
    return nm.scalar_power(vals.sum(), 1 / nm.to_fraction(p))


def enumerate_sets(space: FilteredSpace, i: int, mode: str = "atoms", cap: int = EXHAUSTIVE_CAP) -> Iterator[MeasurableSet]:
    """Yield candidate level-``i`` sets.

    ``atoms`` yields each level-``i`` atom; ``exhaustive`` yields every
    nonempty union of level-``i`` atoms and refuses above ``cap`` atoms.
    """
    space.check_level(i)
    k = space.n_atoms(i)
    if mode == "atoms":
        for a in range(k):
            yield MeasurableSet(i, frozenset((a,)))
    elif mode == "exhaustive":
        if k > cap:
            raise SpaceError(f"exhaustive enumeration refused: level {i} has {k} atoms (2^{k}-1 sets), cap is {cap}")
        for r in range(1, k + 1):
            for combo in itertools.combinations(range(k), r):
                yield MeasurableSet(i, frozenset(combo))
    else:
        raise ValueError(f"unknown enumeration mode {mode!r}")


def set_masks(space: FilteredSpace, i: int, mode: str = "atoms", cap: int = EXHAUSTIVE_CAP) -> tuple[list[MeasurableSet], np.ndarray]:
    """Candidate sets together with their boolean masks over finest atoms (rows)."""
    sets = list(enumerate_sets(space, i, mode, cap))
    lab = space.labels(i)
    atom_rows = np.zeros((len(sets), space.n_atoms(i)), dtype=bool)
    for r, E in enumerate(sets):
        atom_rows[r, list(E.atoms)] = True
    return sets, atom_rows[:, lab]


def dyadic_space(depth: int, branching: int = 2, exact: bool = False) -> FilteredSpace:
    """Uniform probability space with ``branching**depth`` atoms and ``depth+1`` levels."""
    n = branching**depth
    partitions = []
    for i in range(depth + 1):
        size = branching ** (depth - i)
        partitions.append([list(range(a * size, (a + 1) * size)) for a in range(n // size)])
    mu = [Fraction(1, n)] * n if exact else [1.0 / n] * n
    return FilteredSpace(partitions, mu, exact=exact)
