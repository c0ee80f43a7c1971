"""Lower bounds for operator norms by extremal search.

Every estimator works on nonnegative inputs, scores a candidate pool
(level-set indicators, testing witnesses, log-normal draws), improves the
best candidates by alternating best responses and multiplicative coordinate
ascent, and finally re-evaluates its witness through the library operators so
the reported value is reproducible from the witness alone.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import numeric as nm
from .constants import dual_weight
from .operators import AlphaSequence, bilinear_op, doob_maximal, positive_op, weak_norm
from .space import FilteredSpace, lp_norm, set_masks

RANDOM_DRAWS = 1000
ASCENT_FACTORS = (2.0, 1.1, 1.01)
TINY_SPACE = 6


@dataclass
class NormEstimate:
    value: float
    witness: dict
    method: str
    iterations: int = 0

    def as_dict(self) -> dict:
        return {
            "value": float(self.value),
            "method": self.method,
            "iterations": self.iterations,
            "witness": {k: [float(x) for x in v] for k, v in self.witness.items()},
        }


# -- dense float representations ---------------------------------------------


def positive_matrix(space: FilteredSpace, alpha: AlphaSequence) -> np.ndarray:
    """Matrix ``K`` with ``T_alpha f = K f``."""
    K = np.zeros((space.n, space.n))
    for i, a in enumerate(alpha.pointwise(space)):
        K += nm.floatify(a)[:, None] * space.projection(i)
    return K


def _projections(space: FilteredSpace) -> np.ndarray:
    return np.stack([space.projection(i) for i in range(space.level_count)])


def _fl(space: FilteredSpace, x) -> np.ndarray:
    return nm.floatify(space.asarray(x))


def _lp_rows(F: np.ndarray, p: float, dm: np.ndarray) -> np.ndarray:
    """Row-wise ``(sum |F|^p dm)^(1/p)``."""
    return (np.abs(F) ** p @ dm) ** (1.0 / p)


def _weak_rows(G: np.ndarray, q: float, dm: np.ndarray) -> np.ndarray:
    """Row-wise ``sup_t t * m(|G| >= t)^(1/q)``."""
    G = np.abs(G)
    order = np.argsort(-G, axis=1, kind="stable")
    vals = np.take_along_axis(G, order, axis=1)
    mass = np.cumsum(dm[order], axis=1)
    return np.max(vals * mass ** (1.0 / q), axis=1)


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


# -- candidate pools ---------------------------------------------------------


def indicator_pool(space: FilteredSpace, exhaustive_below: int = TINY_SPACE) -> np.ndarray:
    """Indicators of every level atom, plus every level-measurable set on tiny spaces."""
    rows = []
    for i in range(space.level_count):
        mode = "exhaustive" if space.n_atoms(i) <= exhaustive_below else "atoms"
        _, masks = set_masks(space, i, mode)
        rows.append(masks)
    pool = np.unique(np.concatenate(rows).astype(float), axis=0)
    return pool


def random_pool(n: int, rng: np.random.Generator, draws: int = RANDOM_DRAWS) -> np.ndarray:
    return np.exp(rng.normal(0.0, 1.0, size=(draws, n)) * rng.uniform(0.2, 3.0, size=(draws, 1)))


# -- generic ascent ------------------------------------------------------------


def coordinate_ascent(objective, f: np.ndarray, factors=ASCENT_FACTORS, max_rounds: int = 400):
    """Greedy multiplicative coordinate ascent on a scale-invariant objective.

    ``objective`` maps a batch of rows to scores.  Each round scores every
    single-coordinate move ``f_x *= c`` or ``f_x /= c`` and takes the best
    strict improvement; the step factor shrinks when none improves.
    """
    f = np.array(f, dtype=float)
    best = float(objective(f[None, :])[0])
    n = len(f)
    rounds = 0
    for c in factors:
        while rounds < max_rounds:
            rounds += 1
            cand = np.repeat(f[None, :], 2 * n, axis=0)
            idx = np.arange(n)
            cand[idx, idx] *= c
            cand[n + idx, idx] /= c
            scores = objective(cand)
            k = int(np.argmax(scores))
            if scores[k] > best * (1 + 1e-13):
                best = float(scores[k])
                f = cand[k] / np.max(cand[k])
            else:
                break
    return f, best, rounds


def _top_rows(F: np.ndarray, scores: np.ndarray, k: int) -> np.ndarray:
    order = np.argsort(-scores, kind="stable")[:k]
    return F[order]


# -- strong type (bilinear) norm ----------------------------------------------


@dataclass
class _StrongProblem:
    K: np.ndarray
    sigma: np.ndarray
    w: np.ndarray
    mu: np.ndarray
    p: float
    q: float

    def __post_init__(self):
        self.pp = self.p / (self.p - 1)
        self.qq = self.q / (self.q - 1)
        self.dm_sigma = self.sigma * self.mu
        self.dm_w = self.w * self.mu

    def score_f(self, F: np.ndarray) -> np.ndarray:
        """``||T(f sigma)||_{L^q(w)} / ||f||_{L^p(sigma)}`` per row."""
        return _safe_ratio(_lp_rows((F * self.sigma) @ self.K.T, self.q, self.dm_w), _lp_rows(F, self.p, self.dm_sigma))

    def score_g(self, G: np.ndarray) -> np.ndarray:
        """``||T(g w)||_{L^p'(sigma)} / ||g||_{L^q'(w)}`` per row (adjoint side)."""
        return _safe_ratio(_lp_rows((G * self.w) @ self.K.T, self.pp, self.dm_sigma), _lp_rows(G, self.qq, self.dm_w))

    def best_g(self, f: np.ndarray) -> np.ndarray:
        return (self.K @ (self.sigma * f)) ** (self.q - 1)

    def best_f(self, g: np.ndarray) -> np.ndarray:
        return (self.K @ (self.w * g)) ** (self.pp - 1)

    def alternate(self, f: np.ndarray, max_iter: int = 300, tol: float = 1e-13):
        best = float(self.score_f(f[None, :])[0])
        it = 0
        for it in range(1, max_iter + 1):
            g = self.best_g(f)
            if not np.any(g > 0):
                break
            f_new = self.best_f(g)
            if not np.any(f_new > 0):
                break
            f_new = f_new / np.max(f_new)
            val = float(self.score_f(f_new[None, :])[0])
            if val <= best * (1 + tol):
                if val >= best:
                    f = f_new
                break
            f, best = f_new, val
        return f, best, it


def strong_ratio(space: FilteredSpace, alpha, sigma, w, p, q, f, g) -> float:
    """``int T(f sigma, g w) dmu / (||f||_{L^p(sigma)} ||g||_{L^q'(w)})``."""
    fs = space.with_backend(False)
    sigma, w = _fl(fs, sigma), _fl(fs, w)
    f, g = np.asarray(f, dtype=float), np.asarray(g, dtype=float)
    _, mass = bilinear_op(fs, alpha_float(fs, alpha), f * sigma, g * w)
    qq = nm.conjugate(float(q))
    den = lp_norm(fs, f, float(p), sigma) * lp_norm(fs, g, qq, w)
    return float(mass) / den if den > 0 else 0.0


def alpha_float(space: FilteredSpace, alpha: AlphaSequence) -> AlphaSequence:
    return AlphaSequence(tuple(nm.floatify(v) for v in alpha.values))


def estimate_strong_norm(
    space: FilteredSpace,
    alpha: AlphaSequence,
    sigma,
    w,
    p,
    q,
    budget: int = 8,
    seed: int = 0,
    extra_f=(),
    extra_g=(),
    draws: int = RANDOM_DRAWS,
) -> NormEstimate:
    """Lower bound for the best constant in the two-weight bilinear inequality.

    The pool is scored on both sides: an ``f`` is scored with its optimal
    dual ``g`` and vice versa, so level-set indicators on either side
    realize the corresponding testing ratio.
    """
    if not 1 < float(p) <= float(q):
        raise ValueError(f"need 1 < p <= q, got p={p}, q={q}")
    fs = space.with_backend(False)
    n = space.n
    if alpha.is_zero():
        return NormEstimate(0.0, {"f": np.ones(n), "g": np.ones(n)}, "candidate-pool", 0)
    rng = np.random.default_rng(seed)
    prob = _StrongProblem(positive_matrix(fs, alpha), _fl(fs, sigma), _fl(fs, w), nm.floatify(fs.mu), float(p), float(q))

    base = indicator_pool(fs)
    rand = random_pool(n, rng, draws)
    F = np.vstack([base, rand] + [np.atleast_2d(np.asarray(x, dtype=float)) for x in extra_f])
    G = np.vstack([base, rand] + [np.atleast_2d(np.asarray(x, dtype=float)) for x in extra_g])
    sf, sg = prob.score_f(F), prob.score_g(G)
    # move the best g-side candidates to the f-side through their best response
    g_starts = _top_rows(G, sg, budget)
    f_from_g = np.array([prob.best_f(g) for g in g_starts])
    starts = np.vstack([_top_rows(F, sf, budget), f_from_g, rand[:budget]])

    best_f, best_val, method, iters = None, -1.0, "candidate-pool", 0
    pool_best = max(float(sf.max()), float(sg.max()))
    for f0 in starts:
        if not np.any(f0 > 0):
            continue
        f1, _, it1 = prob.alternate(f0 / np.max(f0))
        f2, val, it2 = coordinate_ascent(prob.score_f, np.maximum(f1, 1e-300))
        iters += it1 + it2
        if val > best_val:
            best_f, best_val = f2, val
    if pool_best > best_val:
        if sg.max() >= sf.max():
            g = G[int(np.argmax(sg))]
            f = prob.best_f(g)
        else:
            f = F[int(np.argmax(sf))]
            g = prob.best_g(f)
    else:
        f, g, method = best_f, prob.best_g(best_f), "ascent"
    value = strong_ratio(fs, alpha, sigma, w, p, q, f, g)
    return NormEstimate(value, {"f": f, "g": g}, method, iters)


# -- weak type norm -------------------------------------------------------------


def weak_ratio(space: FilteredSpace, alpha, sigma, w, p, q, f) -> float:
    """``||T(f sigma)||_{L^{q,inf}(w)} / ||f||_{L^p(sigma)}``."""
    fs = space.with_backend(False)
    sigma, w = _fl(fs, sigma), _fl(fs, w)
    f = np.asarray(f, dtype=float)
    den = lp_norm(fs, f, float(p), sigma)
    return float(weak_norm(fs, positive_op(fs, alpha_float(fs, alpha), f * sigma), float(q), w)) / den if den > 0 else 0.0


def testing_dual_pool(space: FilteredSpace, alpha: AlphaSequence, sigma, w, p) -> np.ndarray:
    """``f = (1_E sum_{j>=i} E_j(w) alpha_j)^(p'-1)`` for every level atom ``E``.

    Pairing ``T(f sigma)`` with ``1_E w`` realizes the forward testing ratio
    of ``E`` exactly (Hölder equality case).
    """
    fs = space.with_backend(False)
    w = _fl(fs, w)
    pp = nm.conjugate(float(p))
    K = positive_matrix(fs, alpha)
    rows = []
    for i in range(fs.level_count):
        _, masks = set_masks(fs, i, "atoms")
        for m in masks:
            phi = m * (K @ (m * w))
            if np.any(phi > 0):
                rows.append(phi ** (pp - 1))
    return np.array(rows) if rows else np.zeros((0, fs.n))


def estimate_weak_norm(
    space: FilteredSpace,
    alpha: AlphaSequence,
    sigma,
    w,
    p,
    q,
    budget: int = 8,
    seed: int = 0,
    extra_f=(),
    draws: int = RANDOM_DRAWS,
) -> NormEstimate:
    """Lower bound for ``||T(. sigma)||: L^p(sigma) -> L^{q,inf}(w)``."""
    fs = space.with_backend(False)
    n = space.n
    if alpha.is_zero():
        return NormEstimate(0.0, {"f": np.ones(n)}, "candidate-pool", 0)
    rng = np.random.default_rng(seed)
    K = positive_matrix(fs, alpha)
    s, ww, mu = _fl(fs, sigma), _fl(fs, w), nm.floatify(fs.mu)
    dm_s, dm_w = s * mu, ww * mu
    pf, qf = float(p), float(q)

    def score(F):
        return _safe_ratio(_weak_rows((F * s) @ K.T, qf, dm_w), _lp_rows(F, pf, dm_s))

    strong = _StrongProblem(K, s, ww, mu, pf, qf)
    rand = random_pool(n, rng, draws)
    F = np.vstack(
        [indicator_pool(fs), testing_dual_pool(fs, alpha, s, ww, p), rand]
        + [np.atleast_2d(np.asarray(x, dtype=float)) for x in extra_f]
    )
    sc = score(F)
    starts = list(_top_rows(F, sc, budget))
    # strong-type maximizers are natural weak-type candidates too
    for f0 in _top_rows(F, strong.score_f(F), max(1, budget // 2)):
        starts.append(strong.alternate(f0 / np.max(f0))[0])
    best_f, best_val, iters = F[int(np.argmax(sc))], float(sc.max()), 0
    method = "candidate-pool"
    for f0 in starts:
        if not np.any(f0 > 0):
            continue
        f1, val, it = coordinate_ascent(score, np.maximum(f0 / np.max(f0), 1e-300))
        iters += it
        if val > best_val:
            best_f, best_val, method = f1, val, "ascent"
    return NormEstimate(weak_ratio(fs, alpha, sigma, w, p, q, best_f), {"f": best_f}, method, iters)


# -- Doob maximal operator ------------------------------------------------------


def maximal_ratio(space: FilteredSpace, v, w, p, f) -> float:
    """``||M f||_{L^p(v)} / ||f||_{L^p(w)}``."""
    fs = space.with_backend(False)
    f = np.asarray(f, dtype=float)
    den = lp_norm(fs, f, float(p), _fl(fs, w))
    return float(lp_norm(fs, doob_maximal(fs, f), float(p), _fl(fs, v))) / den if den > 0 else 0.0


def estimate_maximal_norm(
    space: FilteredSpace,
    v,
    w,
    p,
    budget: int = 8,
    seed: int = 0,
    extra_f=(),
    draws: int = RANDOM_DRAWS,
) -> NormEstimate:
    """Lower bound for ``||M||: L^p(w) -> L^p(v)``.

    The pool contains ``sigma 1_E`` for every level atom ``E``
    (``sigma = w^(-1/(p-1))``), the inputs that realize the ``S*_p`` ratios.
    """
    if not float(p) > 1:
        raise ValueError(f"need p > 1, got {p}")
    fs = space.with_backend(False)
    n = space.n
    rng = np.random.default_rng(seed)
    P = _projections(fs)
    vv, ww, mu = _fl(fs, v), _fl(fs, w), nm.floatify(fs.mu)
    sigma = nm.floatify(dual_weight(fs, ww, float(p)))
    pf = float(p)
    dm_v, dm_w = vv * mu, ww * mu

    def maxop(F):
        return np.max(np.einsum("lxy,my->lmx", P, F), axis=0)

    def score(F):
        return _safe_ratio(_lp_rows(maxop(F), pf, dm_v), _lp_rows(F, pf, dm_w))

    def alternate(f, max_iter=200):
        best = float(score(f[None, :])[0])
        it = 0
        for it in range(1, max_iter + 1):
            sel = np.argmax(P @ f, axis=0)
            A = P[sel, np.arange(n), :]
            g = (A @ f) ** (pf - 1)
            c = (mu * vv * g) @ A
            f_new = (c / (mu * ww)) ** (1.0 / (pf - 1))
            if not np.any(f_new > 0):
                break
            f_new = f_new / np.max(f_new)
            val = float(score(f_new[None, :])[0])
            if val <= best * (1 + 1e-13):
                break
            f, best = f_new, val
        return f, best, it

    ind = indicator_pool(fs)
    rand = random_pool(n, rng, draws)
    F = np.vstack([ind, ind * sigma, rand] + [np.atleast_2d(np.asarray(x, dtype=float)) for x in extra_f])
    sc = score(F)
    best_f, best_val, method, iters = F[int(np.argmax(sc))], float(sc.max()), "candidate-pool", 0
    for f0 in np.vstack([_top_rows(F, sc, budget), rand[:budget]]):
        f1, _, it1 = alternate(f0 / np.max(f0))
        f2, val, it2 = coordinate_ascent(score, np.maximum(f1, 1e-300))
        iters += it1 + it2
        if val > best_val:
            best_f, best_val, method = f2, val, "ascent"
    return NormEstimate(maximal_ratio(fs, v, w, p, best_f), {"f": best_f}, method, iters)


# -- independent brute-force oracle ---------------------------------------------


@dataclass(frozen=True)
class OperatorSpec:
    """Which norm objective the oracle evaluates.

    ``kind`` is one of ``identity``, ``strong``, ``weak`` or ``maximal``.
    For ``strong`` the supremum over the dual function is taken in closed
    form by Hölder duality, leaving a search over ``f`` only.
    """

    kind: str
    alpha: AlphaSequence | None = None
    sigma: object = None
    w: object = None
    v: object = None


ORACLE_MAX_ATOMS = 6


def _oracle_averages(space: FilteredSpace) -> list[np.ndarray]:
    mu = [float(m) for m in space.mu]
    mats = []
    for part in space.partitions:
        A = np.zeros((space.n, space.n))
        for atom in part:
            mass = sum(mu[y] for y in atom)
            for x in atom:
                for y in atom:
                    A[x, y] = mu[y] / mass
        mats.append(A)
    return mats


def oracle_exhaustive_norm(space: FilteredSpace, op: OperatorSpec, p, q=None, grid: int = 8, low: float = 1e-3) -> float:
    """Maximize the norm ratio over the full tensor grid ``({0} u G)^n``.

    ``G`` holds ``grid`` log-spaced points in ``[low, 1]``.  Builds its own
    averaging matrices from the partitions, independent of the estimators.
    """
    n = space.n
    if n > ORACLE_MAX_ATOMS:
        raise ValueError(f"oracle refused: {n} atoms exceeds {ORACLE_MAX_ATOMS}")
    if grid < 8:
        raise ValueError("oracle grid needs at least 8 points per atom")
    q = p if q is None else q
    p, q = float(p), float(q)
    mu = np.array([float(m) for m in space.mu])
    levels = np.concatenate([[0.0], np.logspace(np.log10(low), 0.0, grid)])
    F = np.array(list(itertools.product(levels, repeat=n)))[1:]
    mats = _oracle_averages(space)

    def norm(rows, e, dm):
        return (np.abs(rows) ** e @ dm) ** (1.0 / e)

    if op.kind == "identity":
        w = np.ones(n) if op.w is None else np.array([float(x) for x in op.w])
        return float(np.max(norm(F, q, w * mu) / norm(F, p, w * mu)))
    if op.kind in ("strong", "weak"):
        sigma = np.array([float(x) for x in op.sigma])
        w = np.array([float(x) for x in op.w])
        K = sum(np.diag(_alpha_on_atoms(space, op.alpha, i)) @ A for i, A in enumerate(mats))
        TF = (F * sigma) @ K.T
        den = norm(F, p, sigma * mu)
        if op.kind == "strong":
            return float(np.max(norm(TF, q, w * mu) / den))
        return float(np.max(_weak_rows(TF, q, w * mu) / den))
    if op.kind == "maximal":
        v = np.array([float(x) for x in op.v])
        w = np.array([float(x) for x in op.w])
        MF = np.max(np.stack([F @ A.T for A in mats]), axis=0)
        return float(np.max(norm(MF, p, v * mu) / norm(F, p, w * mu)))
    raise ValueError(f"unknown operator kind {op.kind!r}")


def _alpha_on_atoms(space: FilteredSpace, alpha: AlphaSequence, i: int) -> np.ndarray:
    out = np.zeros(space.n)
    for a, atom in enumerate(space.partitions[i]):
        out[list(atom)] = float(alpha.values[i][a])
    return out
