"""Principal sets: the stopping-time tree behind conditional sparsity.

All conditional expectations inside the construction are taken with respect
to a base measure ``w dmu`` (``w == 1`` gives the plain construction).  A
node ``P`` carries its level ``k1``, its dyadic height ``k2`` (so that
``2^(k2-1) < E^w_{k1}(h) <= 2^k2`` on ``P``), its stopping time ``tau_P``
and its exceptional part ``E(P) = P & {tau_P = inf}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import numeric as nm
from .operators import StoppingTime, weighted_tailed_maximal
from .space import FilteredSpace, MeasurableSet, weighted_cond_exp


class PrincipalSetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PrincipalSet:
    atoms: tuple[int, ...]
    k1: int
    k2: int
    exceptional: tuple[int, ...]
    children: tuple["PrincipalSet", ...]
    stopping: StoppingTime

    def walk(self) -> Iterator["PrincipalSet"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        m[list(self.atoms)] = True
        return m

    def exceptional_mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        m[list(self.exceptional)] = True
        return m

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)

    def to_dict(self) -> dict:
        return {
            "k1": self.k1,
            "k2": self.k2,
            "atoms": list(self.atoms),
            "exceptional": list(self.exceptional),
            "children": [c.to_dict() for c in self.children],
        }


@dataclass(frozen=True, eq=False)
class PrincipalFamily:
    root: PrincipalSet
    space: FilteredSpace
    base_weight: np.ndarray
    source: np.ndarray
    origin_level: int
    origin_scale: int
    cond_exps: tuple = field(repr=False, default=())

    def nodes(self) -> list[PrincipalSet]:
        return list(self.root.walk())

    def to_dict(self) -> dict:
        return {
            "origin_level": self.origin_level,
            "origin_scale": self.origin_scale,
            "node_count": len(self.nodes()),
            "depth": self.root.depth(),
            "root": self.root.to_dict(),
        }


def _exceeds(values, threshold) -> np.ndarray:
    return np.array([v > threshold for v in values], dtype=bool)


def build_principal_family(space: FilteredSpace, h, w=None, i: int = 0, k: int = 0, omega0: MeasurableSet | None = None) -> PrincipalFamily:
    """Run the principal-set construction from level ``i`` and dyadic scale ``k``.

    The root is ``{2^(k-1) < E^w_i(h) <= 2^k} & omega0``; it must be nonempty.
    """
    space.check_level(i)
    h = space.asarray(h)
    if any(x < 0 for x in h):
        raise PrincipalSetError("the source function must be nonnegative")
    w = space.ones() if w is None else space.asarray(w)
    if omega0 is None:
        omega0 = MeasurableSet.whole(space, i)
    if omega0.level != i:
        raise PrincipalSetError(f"omega0 must be measurable at level {i}, got level {omega0.level}")
    exact = space.exact
    eh = tuple(weighted_cond_exp(space, h, w, j).pointwise() for j in range(space.level_count))

    lo, hi = nm.two_pow(k - 1, exact), nm.two_pow(k, exact)
    root_mask = _exceeds(eh[i], lo) & ~_exceeds(eh[i], hi) & omega0.mask(space)
    if not root_mask.any():
        raise PrincipalSetError(f"empty principal root: no mass with 2^{k - 1} < E_{i}(h) <= 2^{k} on omega0")

    def build(mask: np.ndarray, j0: int, k0: int) -> PrincipalSet:
        threshold = nm.two_pow(k0 + 1, exact)
        tau = np.full(space.n, np.inf)
        for j in range(j0, space.level_count):
            hit = mask & ~np.isfinite(tau) & _exceeds(eh[j], threshold)
            tau[hit] = j
        groups: dict[tuple[int, int], list[int]] = {}
        for x in np.flatnonzero(mask & np.isfinite(tau)):
            j = int(tau[x])
            groups.setdefault((j, nm.dyadic_exponent(eh[j][x])), []).append(int(x))
        children = []
        for (j, l), members in sorted(groups.items()):
            child_mask = np.zeros(space.n, dtype=bool)
            child_mask[members] = True
            children.append(build(child_mask, j, l))
        exceptional = tuple(int(x) for x in np.flatnonzero(mask & ~np.isfinite(tau)))
        tau.flags.writeable = False
        return PrincipalSet(
            atoms=tuple(int(x) for x in np.flatnonzero(mask)),
            k1=j0,
            k2=k0,
            exceptional=exceptional,
            children=tuple(children),
            stopping=StoppingTime(tau),
        )

    root = build(root_mask, i, k)
    return PrincipalFamily(root, space, w, h, i, k, eh)


def principal_cover(space: FilteredSpace, h, w=None, i: int = 0) -> list[PrincipalFamily]:
    """One family per nonempty dyadic shell ``{2^(k-1) < E^w_i(h) <= 2^k}``."""
    h = space.asarray(h)
    w = space.ones() if w is None else space.asarray(w)
    level_vals = weighted_cond_exp(space, h, w, i).values
    scales = sorted({nm.dyadic_exponent(v) for v in level_vals if v > 0})
    return [build_principal_family(space, h, w, i, k) for k in scales]


# -- verification ------------------------------------------------------------


@dataclass
class PropertyResult:
    name: str
    passed: bool = True
    worst: float = 0.0
    detail: str = ""

    def fail(self, detail: str) -> None:
        if self.passed:
            self.detail = detail
        self.passed = False

    def observe(self, lhs, rhs, rtol: float, where: str) -> None:
        """Record ``lhs <= rhs``; ``worst`` tracks the largest ``lhs/rhs``."""
        if rhs:
            self.worst = max(self.worst, float(lhs) / float(rhs))
        if not nm.leq(lhs, rhs, rtol):
            self.fail(f"{where}: {float(lhs)!r} > {float(rhs)!r}")

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "worst_ratio": self.worst, "detail": self.detail}


def _w_measure(space: FilteredSpace, w: np.ndarray, mask: np.ndarray):
    return (w * space.mu)[mask].sum()


def check_properties(family: PrincipalFamily, rtol: float = nm.DEFAULT_RTOL) -> dict[str, PropertyResult]:
    """Check the six structural properties plus the sparsity bound on every node."""
    space, w, h = family.space, family.base_weight, family.source
    exact = space.exact
    n = space.n
    eh = family.cond_exps
    nodes = family.nodes()
    res = {name: PropertyResult(name) for name in ("P1", "P2", "P3", "P4", "P5", "P6", "sparsity", "structure")}

    # P1: exceptional parts are disjoint and cover the root.
    cover = np.zeros(n, dtype=int)
    for P in nodes:
        cover[list(P.exceptional)] += 1
    root_mask = family.root.mask(n)
    if np.any(cover > 1):
        res["P1"].fail(f"atom {int(np.flatnonzero(cover > 1)[0])} lies in two exceptional parts")
    if not np.array_equal(cover > 0, root_mask):
        res["P1"].fail("exceptional parts do not cover the root exactly")

    for P in nodes:
        where = f"node(k1={P.k1}, k2={P.k2}, atoms={list(P.atoms)[:6]})"
        pm = P.mask(n)
        em = P.exceptional_mask(n)
        lab = space.labels(P.k1)

        # structure: E(P) in P, children nested with larger indices, tau_P a stopping time
        if np.any(em & ~pm):
            res["structure"].fail(f"{where}: E(P) not contained in P")
        if not P.stopping.is_valid(space):
            res["structure"].fail(f"{where}: tau_P is not a stopping time")
        for c in P.children:
            if c.k1 <= P.k1 or c.k2 < P.k2 + 2 or np.any(c.mask(n) & ~pm):
                res["structure"].fail(f"{where}: child (k1={c.k1}, k2={c.k2}) violates nesting")

        # P2: P is a union of level-k1 atoms.
        if set(lab[pm].tolist()) & set(lab[~pm].tolist()):
            res["P2"].fail(f"{where}: not measurable at level {P.k1}")

        # P3: 1 <= 2 E^w(1_E(P) | F_k1) on P.
        e = weighted_cond_exp(space, space.indicator(em), w, P.k1).pointwise()
        for x in np.flatnonzero(pm):
            res["P3"].observe(1, 2 * e[x], rtol, f"{where} atom {x}")

        # P4: 2^(k2-1) < E^w_k1(h) <= 2^k2 on P.
        lo, hi = nm.two_pow(P.k2 - 1, exact), nm.two_pow(P.k2, exact)
        for x in np.flatnonzero(pm):
            val = eh[P.k1][x]
            if not val > lo:
                res["P4"].fail(f"{where} atom {x}: {float(val)!r} <= 2^{P.k2 - 1}")
            res["P4"].observe(val, hi, rtol, f"{where} atom {x}")

        # P5: max_{j >= origin} E^w_j(h 1_P) <= 2^(k2+1) on E(P).
        top = nm.two_pow(P.k2 + 1, exact)
        if em.any():
            hp = h * space.indicator(pm)
            m = weighted_tailed_maximal(space, hp, w, family.origin_level)
            for x in np.flatnonzero(em):
                res["P5"].observe(m[x], top, rtol, f"{where} atom {x}")

        # P6: E^w_j(h) <= 2^(k2+1) for k1 <= j < tau_P on P.
        tau = P.stopping.values
        for x in np.flatnonzero(pm):
            stop = space.level_count if not np.isfinite(tau[x]) else int(tau[x])
            for j in range(P.k1, stop):
                res["P6"].observe(eh[j][x], top, rtol, f"{where} atom {x} level {j}")

        # sparsity: w(P) <= 2 w(E(P)).
        res["sparsity"].observe(_w_measure(space, w, pm), 2 * _w_measure(space, w, em), rtol, where)
    return res


@dataclass
class RepresentationResult:
    localization_equal: bool
    decomposition_equal: bool
    bound_passed: bool
    max_ratio: float
    constant: int = 4

    @property
    def passed(self) -> bool:
        return self.localization_equal and self.decomposition_equal and self.bound_passed

    def as_dict(self) -> dict:
        return {
            "localization_equal": self.localization_equal,
            "decomposition_equal": self.decomposition_equal,
            "bound_passed": self.bound_passed,
            "max_ratio": self.max_ratio,
            "constant": self.constant,
        }


def maximal_representation_check(family: PrincipalFamily, rtol: float = nm.DEFAULT_RTOL) -> RepresentationResult:
    """Represent the tailed maximal function through exceptional parts.

    On the root ``P0``:
    ``*M_i(h) = *M_i(h 1_P0) = sum_P *M_i(h 1_P0) 1_E(P) <= 4 sum_P 2^(k2(P)-1) 1_E(P)``.
    The equalities are compared exactly in rational mode.
    """
    space, w, h, i = family.space, family.base_weight, family.source, family.origin_level
    n = space.n
    exact = space.exact
    p0 = family.root.mask(n)
    chi0 = space.indicator(p0)
    m_full = weighted_tailed_maximal(space, h, w, i) * chi0
    m_loc = weighted_tailed_maximal(space, h * chi0, w, i) * chi0
    decomposed = nm.zeros(n, exact)
    envelope = nm.zeros(n, exact)
    for P in family.nodes():
        em = space.indicator(P.exceptional_mask(n))
        decomposed = decomposed + weighted_tailed_maximal(space, h * chi0, w, i) * em
        envelope = envelope + 4 * nm.two_pow(P.k2 - 1, exact) * em

    ratio = 0.0
    for x in np.flatnonzero(p0):
        ratio = max(ratio, float(m_loc[x]) / float(envelope[x]))
    return RepresentationResult(
        localization_equal=nm.all_close(m_full, m_loc, rtol),
        decomposition_equal=nm.all_close(m_loc, decomposed, rtol),
        bound_passed=nm.all_leq(m_loc[p0], envelope[p0], rtol),
        max_ratio=ratio,
    )


@dataclass
class CarlesonResult:
    lhs: float
    rhs: float
    norm_p: float
    constant: float
    passed: bool

    @property
    def ratio(self) -> float:
        """``lhs / ||h 1_P0||_p^p``, to be compared with ``2 (p')^p``."""
        return float(self.lhs) / float(self.norm_p) if self.norm_p else 0.0

    def as_dict(self) -> dict:
        return {
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "norm_p": float(self.norm_p),
            "constant": float(self.constant),
            "ratio": self.ratio,
            "passed": self.passed,
        }


def carleson_constant(p):
    """``2 (p')^p``."""
    pp = nm.conjugate(p)
    return 2 * nm.scalar_power(pp, p)


def carleson_check(family: PrincipalFamily, p, rtol: float = nm.DEFAULT_RTOL) -> CarlesonResult:
    """``sum_P w(P) 2^(p(k2-1)) <= 2 (p')^p int_P0 h^p w dmu``."""
    if not nm.to_float(p) > 1:
        raise ValueError(f"carleson_check needs p > 1, got {p}")
    space, w, h = family.space, family.base_weight, family.source
    exact = space.exact
    p = nm.exponent_value(p, exact)
    n = space.n
    lhs = 0
    for P in family.nodes():
        lhs = lhs + _w_measure(space, w, P.mask(n)) * nm.scalar_power(nm.two_pow(P.k2 - 1, exact), p)
    p0 = family.root.mask(n)
    norm_p = (nm.power(h, p) * (w * space.mu if nm.is_exact(nm.power(h, p)) else nm.floatify(w * space.mu)))[p0].sum()
    const = carleson_constant(p)
    rhs = const * norm_p
    return CarlesonResult(lhs, rhs, norm_p, const, nm.leq(lhs, rhs, rtol))
