"""Weight characteristics and Sawyer-type testing constants.

Level-wise characteristics (``A_1``, ``A_p``, ``A_inf^exp``, ``B_p``) are
maxima over levels and atoms.  The set-indexed ones (``S*_p``, ``A*_inf``,
the mixed ``A_p'``-``A*_inf`` characteristic and the two testing constants)
are suprema over a level ``i`` and a level-``i`` measurable set ``E``; the
candidate sets come from :func:`~filtered_weights.space.enumerate_sets`, and
every result records the enumeration mode and a witness ``(i, E)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import numeric as nm
from .operators import AlphaSequence
from .space import EXHAUSTIVE_CAP, FilteredSpace, MeasurableSet, cond_exp, set_masks


@dataclass(frozen=True)
class ConstantsReport:
    name: str
    value: float
    mode: str
    witness: MeasurableSet | None
    parameters: dict = field(default_factory=dict)

    @property
    def level(self) -> int | None:
        return None if self.witness is None else self.witness.level

    def __float__(self) -> float:
        return float(self.value)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": float(self.value),
            "mode": self.mode,
            "witness": None if self.witness is None else {"level": self.witness.level, "atoms": sorted(self.witness.atoms)},
            "parameters": {k: float(v) for k, v in self.parameters.items()},
        }


def _exponent(space: FilteredSpace, p):
    return nm.exponent_value(p, space.exact)


def _check_p(p) -> None:
    if not nm.to_float(p) > 1:
        raise ValueError(f"exponent p must be > 1, got {p}")


def _check_pq(p, q) -> None:
    _check_p(p)
    if not nm.to_float(p) <= nm.to_float(q):
        raise ValueError(f"need 1 < p <= q < inf, got p={p}, q={q}")


def dual_weight(space: FilteredSpace, w, p) -> np.ndarray:
    """``sigma = w^(-1/(p-1))``."""
    _check_p(p)
    p = _exponent(space, p)
    return nm.power(space.asarray(w), -1 / (p - 1))


# -- level-wise characteristics ---------------------------------------------


def _level_values(space: FilteredSpace, fn: Callable[[int], np.ndarray]):
    best = None
    for j in range(space.level_count):
        vals = fn(j)
        m = max(vals)
        if best is None or m > best:
            best = m
    return best


def a1_const(space: FilteredSpace, v):
    """Smallest ``C`` with ``max_j E_j v <= C v`` pointwise."""
    v = space.asarray(v)
    sup = np.maximum.reduce([cond_exp(space, v, j).pointwise() for j in range(space.level_count)])
    return max(sup / v)


def ap_two_weight(space: FilteredSpace, v, w, p):
    """``max_j E_j(v) E_j(w^(1-p'))^(p/p')`` over levels and atoms."""
    _check_p(p)
    p = _exponent(space, p)
    pp = nm.conjugate(p)
    space, v, s = _common_backend(space, v, nm.power(space.asarray(w), 1 - pp))
    return _level_values(
        space, lambda j: cond_exp(space, v, j).values * nm.power(cond_exp(space, s, j).values, p / pp)
    )


def ap_one_weight(space: FilteredSpace, w, p):
    return ap_two_weight(space, w, w, p)


def ainf_exp(space: FilteredSpace, w) -> float:
    """``max_j E_j(w) exp(E_j(log 1/w))``."""
    w = space.asarray(w)
    neg_log = -nm.log(w)
    fspace = space.with_backend(False)
    return float(
        _level_values(
            space,
            lambda j: nm.floatify(cond_exp(space, w, j).values) * np.exp(cond_exp(fspace, neg_log, j).values),
        )
    )


def bp_const(space: FilteredSpace, v, w, p) -> float:
    """``max_i E_i(v) E_i(sigma)^p / exp(E_i(log sigma))`` with ``sigma = w^(-1/(p-1))``."""
    sigma = dual_weight(space, w, p)
    p = _exponent(space, p)
    space, v, sigma = _common_backend(space, v, sigma)
    log_sigma = nm.log(sigma)
    fspace = space.with_backend(False)
    return float(
        _level_values(
            space,
            lambda j: nm.floatify(cond_exp(space, v, j).values * nm.power(cond_exp(space, sigma, j).values, p))
            / np.exp(cond_exp(fspace, log_sigma, j).values),
        )
    )


# -- batched set evaluation --------------------------------------------------


def batch_cond_exp(space: FilteredSpace, F: np.ndarray, j: int) -> np.ndarray:
    """Row-wise ``E_j`` of the functions stored in the rows of ``F``."""
    lab = space.labels(j)
    k = space.n_atoms(j)
    exact = F.dtype == object
    onehot = np.zeros((space.n, k), dtype=object if exact else float)
    onehot[np.arange(space.n), lab] = 1
    mu = space.mu if exact else nm.floatify(space.mu)
    mass = space.atom_mass(j) if exact else nm.floatify(space.atom_mass(j))
    sums = (F * mu) @ onehot
    return (sums / mass)[:, lab]


def batch_tailed_maximal(space: FilteredSpace, F: np.ndarray, i: int) -> np.ndarray:
    out = None
    for j in range(i, space.level_count):
        e = np.abs(batch_cond_exp(space, F, j))
        out = e if out is None else np.maximum(out, e)
    return out


def _rows(space: FilteredSpace, masks: np.ndarray) -> np.ndarray:
    if space.exact:
        X = np.empty(masks.shape, dtype=object)
        X[:] = 0
        X[masks] = 1
        return X
    return masks.astype(float)


def _row_integral(space: FilteredSpace, F: np.ndarray):
    mu = space.mu if F.dtype == object else nm.floatify(space.mu)
    return (F * mu).sum(axis=1)


def _sup_over_sets(space: FilteredSpace, mode: str, cap: int, evaluate, chunk: int = 4096):
    """Maximize ``evaluate(i, X)`` (one value per indicator row) over levels and sets.

    Ties go to the lexicographically smallest ``(level, sorted atoms)``.
    """
    best_val = None
    best_sets: list[MeasurableSet] = []
    for i in range(space.level_count):
        sets, masks = set_masks(space, i, mode, cap)
        for start in range(0, len(sets), chunk):
            vals = evaluate(i, _rows(space, masks[start : start + chunk]))
            for r, val in enumerate(vals):
                if best_val is None or val > best_val:
                    best_val, best_sets = val, [sets[start + r]]
                elif val == best_val:
                    best_sets.append(sets[start + r])
    witness = min(best_sets, key=MeasurableSet.key)
    return best_val, witness


def _finish(name, val, witness, mode, root, **params) -> ConstantsReport:
    value = val if root is None else nm.scalar_power(val, root)
    if not isinstance(value, Fraction):
        value = float(value)
    return ConstantsReport(name, value, mode, witness, params)


def _common_backend(space: FilteredSpace, *arrays):
    """Drop to float when any input already lost exactness."""
    arrays = [a if isinstance(a, np.ndarray) else space.asarray(a) for a in arrays]
    if space.exact and not all(nm.is_exact(a) for a in arrays):
        space = space.with_backend(False)
    return (space, *[space.asarray(a) for a in arrays])


def sp_star(space: FilteredSpace, v, w, p, mode: str = "atoms", cap: int = EXHAUSTIVE_CAP) -> ConstantsReport:
    """``sup (int_E (*M_i(sigma 1_E))^p v / sigma(E))^(1/p)``, ``sigma = w^(-1/(p-1))``."""
    sigma = dual_weight(space, w, p)
    p = _exponent(space, p)
    space, sigma, v = _common_backend(space, sigma, v)

    def evaluate(i, X):
        G = X * sigma
        num = _row_integral(space, X * _power_rows(batch_tailed_maximal(space, G, i), p) * v)
        return num / _row_integral(space, G)

    val, witness = _sup_over_sets(space, mode, cap, evaluate)
    return _finish("sp_star", val, witness, mode, 1 / p, p=p)


def ainf_star(space: FilteredSpace, w, mode: str = "atoms", cap: int = EXHAUSTIVE_CAP) -> ConstantsReport:
    """``sup int_E *M_i(w 1_E) / w(E)``."""
    w = space.asarray(w)

    def evaluate(i, X):
        G = X * w
        return _row_integral(space, X * batch_tailed_maximal(space, G, i)) / _row_integral(space, G)

    val, witness = _sup_over_sets(space, mode, cap, evaluate)
    return _finish("ainf_star", val, witness, mode, None)


def mixed_const(space: FilteredSpace, w, p, mode: str = "atoms", cap: int = EXHAUSTIVE_CAP) -> ConstantsReport:
    """Mixed ``A_p'``/``A*_inf`` characteristic of ``sigma = w^(-1/(p-1))``.

    ``sup (esssup_Q(E_i(w) E_i(sigma)^(p-1)) * int_Q *M_i(sigma 1_Q) / sigma(Q))^(1/p)``.
    """
    sigma = dual_weight(space, w, p)
    p = _exponent(space, p)
    space, sigma, w = _common_backend(space, sigma, w)
    local = [
        cond_exp(space, w, i).values * nm.power(cond_exp(space, sigma, i).values, p - 1) for i in range(space.level_count)
    ]

    def evaluate(i, X):
        g = local[i][space.labels(i)]
        G = X * sigma
        num = _row_integral(space, X * batch_tailed_maximal(space, G, i))
        masks = X != 0
        ess = np.array([max(g[row]) for row in masks], dtype=object if nm.is_exact(g) else float)
        return ess * num / _row_integral(space, G)

    val, witness = _sup_over_sets(space, mode, cap, evaluate)
    return _finish("mixed_const", val, witness, mode, 1 / p, p=p)


def _power_rows(A: np.ndarray, e) -> np.ndarray:
    if A.dtype == object:
        return nm.power(A.ravel(), e).reshape(A.shape)
    return A ** float(e)


def _tail_sums(space: FilteredSpace, alpha: AlphaSequence, u) -> list[np.ndarray]:
    """``S_i = sum_{j >= i} E_j(u) alpha_j`` for every level ``i``."""
    u = space.asarray(u)
    terms = [a * cond_exp(space, u, j).pointwise() for j, a in enumerate(alpha.pointwise(space))]
    out = [None] * space.level_count
    acc = nm.zeros(space.n, space.exact)
    for i in reversed(range(space.level_count)):
        acc = acc + terms[i]
        out[i] = acc
    return out


def _testing(space, alpha, integrand_weight, measure_weight, inner_exp, outer_exp, set_exp, mode, cap, name, params):
    space, iweight, mweight = _common_backend(space, integrand_weight, measure_weight)
    tails = _tail_sums(space, alpha, iweight)

    def evaluate(i, X):
        num = _row_integral(space, X * nm.power(tails[i], inner_exp) * mweight)
        den = _row_integral(space, X * iweight)
        return np.array(
            [nm.to_float(nm.scalar_power(a, outer_exp)) / nm.to_float(nm.scalar_power(b, set_exp)) for a, b in zip(num, den)]
        )

    val, witness = _sup_over_sets(space, mode, cap, evaluate)
    return _finish(name, val, witness, mode, None, **params)


def testing_forward(space, alpha, sigma, w, p, q, mode: str = "atoms", cap: int = EXHAUSTIVE_CAP) -> ConstantsReport:
    """``sup (int_E (sum_{j>=i} E_j(w) alpha_j)^p' sigma)^(1/p') / w(E)^(1/q')``."""
    _check_pq(p, q)
    p, q = _exponent(space, p), _exponent(space, q)
    pp, qq = nm.conjugate(p), nm.conjugate(q)
    return _testing(space, alpha, w, sigma, pp, 1 / pp, 1 / qq, mode, cap, "testing_forward", {"p": p, "q": q})


def testing_backward(space, alpha, sigma, w, p, q, mode: str = "atoms", cap: int = EXHAUSTIVE_CAP) -> ConstantsReport:
    """``sup (int_E (sum_{j>=i} E_j(sigma) alpha_j)^q w)^(1/q) / sigma(E)^(1/p)``."""
    _check_pq(p, q)
    p, q = _exponent(space, p), _exponent(space, q)
    return _testing(space, alpha, sigma, w, q, 1 / q, 1 / p, mode, cap, "testing_backward", {"p": p, "q": q})


def all_constants(space: FilteredSpace, w, v=None, p=2, mode: str = "atoms", cap: int = EXHAUSTIVE_CAP) -> dict:
    """Every weight characteristic for ``w`` (and the pair ``(v, w)``)."""
    v = w if v is None else v
    sigma = dual_weight(space, w, p)
    pp = nm.conjugate(_exponent(space, p))
    return {
        "a1_w": a1_const(space, w),
        "a1_v": a1_const(space, v),
        "a1_sigma": a1_const(space, sigma),
        "ap_two_weight": ap_two_weight(space, v, w, p),
        "ap_w": ap_one_weight(space, w, p),
        "ap_sigma_dual": ap_one_weight(space, sigma, pp),
        "ainf_exp_w": ainf_exp(space, w),
        "ainf_exp_sigma": ainf_exp(space, sigma),
        "bp": bp_const(space, v, w, p),
        "sp_star": sp_star(space, v, w, p, mode, cap),
        "ainf_star_w": ainf_star(space, w, mode, cap),
        "ainf_star_sigma": ainf_star(space, sigma, mode, cap),
        "mixed": mixed_const(space, w, p, mode, cap),
    }
